#pragma once
#include <array>
#include <compare>
#include <cstdlib>
#include <vector>

#include "kam/errors.hpp"

namespace kam {

constexpr int kMaxDim = 4;

// Lattice index; unused trailing components stay zero.
struct Index {
  std::array<int, kMaxDim> v{};
  auto operator<=>(const Index&) const = default;
  int& operator[](int i) { return v[i]; }
  int operator[](int i) const { return v[i]; }
};

inline Index negate(const Index& h) {
  Index r;
  for (int i = 0; i < kMaxDim; ++i) r.v[i] = -h.v[i];
  return r;
}

inline Index add(const Index& a, const Index& b) {
  Index r;
  for (int i = 0; i < kMaxDim; ++i) r.v[i] = a.v[i] + b.v[i];
  return r;
}

inline Index scaled(const Index& a, int s) {
  Index r;
  for (int i = 0; i < kMaxDim; ++i) r.v[i] = a.v[i] * s;
  return r;
}

inline int l1(const Index& h) {
  int s = 0;
  for (int x : h.v) s += std::abs(x);
  return s;
}

inline bool is_zero(const Index& h) { return l1(h) == 0; }

// first nonzero component positive
inline bool canonical_half(const Index& h) {
  for (int x : h.v) {
    if (x > 0) return true;
    if (x < 0) return false;
  }
  return false;
}

inline Index make_index(const std::vector<int>& c) {
  if (c.size() > static_cast<size_t>(kMaxDim))
    throw InputError("dim", "dimension above supported maximum");
  Index h;
  for (size_t i = 0; i < c.size(); ++i) h.v[i] = c[i];
  return h;
}

inline std::vector<int> to_vector(const Index& h, int d) {
  return std::vector<int>(h.v.begin(), h.v.begin() + d);
}

inline double dot(const Index& h, const std::vector<double>& w) {
  double s = 0;
  for (size_t i = 0; i < w.size(); ++i) s += h.v[i] * w[i];
  return s;
}

// Visit every k in Z^d with 0 < |k|_1 <= K in lexicographic order.
template <class F>
void for_each_l1_ball(int d, int K, F&& f) {
  Index k;
  // recursive fill of component i with remaining budget
  auto rec = [&](auto&& self, int i, int budget) -> void {
    if (i == d) {
      if (!is_zero(k)) f(static_cast<const Index&>(k));
      return;
    }
    for (int x = -budget; x <= budget; ++x) {
      k.v[i] = x;
      self(self, i + 1, budget - std::abs(x));
    }
    k.v[i] = 0;
  };
  rec(rec, 0, K);
}

// Number of lattice points with |k|_1 <= K (including 0), used for cost limits.
inline double l1_ball_size(int d, double K) {
  double s = 1;
  for (int i = 0; i < d; ++i) s *= (2 * K + 1);
  return s;
}

}  // namespace kam
