#pragma once
// Independent reference computations shared by the unit and acceptance tests.
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "kam/fourier.hpp"
#include "kam/spectral.hpp"

namespace oracle {

using kam::cd;
using kam::Index;
using kam::Mat2;
using kam::MatrixSeries;
using kam::RMat2;
constexpr double pi = std::numbers::pi;

// Values frozen from 60-digit mpmath runs.
namespace frozen {
// step R at Lambda=id, Psi=t^2, zeta=1/1728, eps=e^-pi, r=1: exp(pi zeta/2)/150
constexpr double R_eps_pi = 0.006672729592940793837847291;
// loss sum of the schedule with delta=1e5, zeta=1/1728, log eps0=-1e6, r0=1
constexpr double loss_sum_1e6 = 1.035210810538420386817412e-113;
// integral of 2 ln t / t^2 over [e, inf)
constexpr double br_4_over_e = 1.4715177646857692864;
// int_e^inf (ln t + t/ln^2(t+2)) / t^2 dt, and the same integral cut at t = 4000
constexpr double br_subexp = 1.494281850180922082;
constexpr double br_subexp_to_4000 = 1.3811932321366313768;
// (sqrt5-1)/2
constexpr double golden = 0.6180339887498948482;
}  // namespace frozen

struct Rng {
  std::mt19937_64 g;
  explicit Rng(uint64_t seed) : g(seed) {}
  double uni(double a = 0, double b = 1) { return std::uniform_real_distribution<double>(a, b)(g); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(g); }
  double normal() { return std::normal_distribution<double>(0, 1)(g); }
};

inline RMat2 random_traceless(Rng& rng, double scale = 1) {
  RMat2 M;
  double a = rng.normal(), b = rng.normal(), c = rng.normal();
  M << a, b, c, -a;
  return scale * M;
}

inline Mat2 random_complex_traceless(Rng& rng, double scale = 1) {
  Mat2 M;
  cd a(rng.normal(), rng.normal()), b(rng.normal(), rng.normal()), c(rng.normal(), rng.normal());
  M << a, b, c, -a;
  return scale * M;
}

inline Index random_index(Rng& rng, int d, int max_l1) {
  for (;;) {
    Index h;
    int budget = max_l1;
    for (int i = 0; i < d; ++i) {
      int x = rng.integer(-budget, budget);
      h[i] = x;
      budget -= std::abs(x);
    }
    if (!kam::is_zero(h) || max_l1 == 0) return h;
  }
}

// Real traceless series with up to `modes` conjugate pairs (plus an optional mean).
inline MatrixSeries random_series(Rng& rng, int d, int modes, int max_l1, double scale = 1,
                                  bool mean = true, int denom = 1) {
  MatrixSeries F(d, denom);
  if (mean) F.set(Index{}, Mat2(random_traceless(rng, scale).cast<cd>()));
  for (int i = 0; i < modes; ++i) {
    Index h = random_index(rng, d, max_l1);
    if (!kam::canonical_half(h)) h = kam::negate(h);
    double decay = std::exp(-0.3 * kam::l1(h));
    Mat2 M = random_complex_traceless(rng, scale * decay);
    F.set(h, M);
    F.set(kam::negate(h), M.conjugate());
  }
  return F;
}

inline RMat2 rot(double a) {
  RMat2 A;
  A << 0, -a, a, 0;
  return A;
}

// Random sl2 matrix of a given class and norm scale.
inline RMat2 random_sl2(Rng& rng, kam::SpectralClass c) {
  using kam::SpectralClass;
  RMat2 P;
  do {
    P << rng.normal(), rng.normal(), rng.normal(), rng.normal();
  } while (std::abs(P.determinant()) < 0.3);
  RMat2 D;
  double s = rng.uni(0.2, 1.0);
  switch (c) {
    case SpectralClass::elliptic: D << 0, -s, s, 0; break;
    case SpectralClass::hyperbolic: D << s, 0, 0, -s; break;
    case SpectralClass::nilpotent: D << 0, s, 0, 0; break;
    case SpectralClass::zero: return RMat2::Zero();
  }
  RMat2 A = P * D * P.inverse();
  A(1, 1) = -A(0, 0);
  return A;
}

// Plain sum with long double accumulators.
inline Mat2 eval_ld(const MatrixSeries& F, const std::vector<double>& th) {
  std::complex<long double> acc[2][2] = {};
  for (const auto& [h, M] : F.coeffs()) {
    long double ph = 0;
    for (int i = 0; i < F.dim(); ++i) ph += (long double)h[i] * th[i] / F.denom();
    ph *= 2 * std::numbers::pi_v<long double>;
    std::complex<long double> e(std::cos(ph), std::sin(ph));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        acc[i][j] += e * std::complex<long double>(M(i, j).real(), M(i, j).imag());
  }
  Mat2 R;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) R(i, j) = cd((double)acc[i][j].real(), (double)acc[i][j].imag());
  return R;
}

// Coefficients of a function from samples on an n^d grid of the (denom-scaled) torus.
// Exact for trigonometric polynomials with |h_i| < n/2.
template <class Fn>
MatrixSeries grid_transform(int d, int denom, int n, Fn&& f, double drop = 1e-14) {
  std::vector<std::vector<double>> pts;
  std::vector<int> idx(d, 0);
  int total = 1;
  for (int i = 0; i < d; ++i) total *= n;
  std::vector<Mat2> vals(total);
  for (int p = 0; p < total; ++p) {
    std::vector<double> th(d);
    int q = p;
    for (int i = 0; i < d; ++i) {
      th[i] = denom * double(q % n) / n;
      q /= n;
    }
    vals[p] = f(th);
  }
  MatrixSeries out(d, denom);
  int half = n / 2;
  int ntot = 1;
  for (int i = 0; i < d; ++i) ntot *= n;
  for (int hq = 0; hq < ntot; ++hq) {
    Index h;
    int q = hq;
    for (int i = 0; i < d; ++i) {
      h[i] = q % n - half;
      q /= n;
    }
    Mat2 acc = Mat2::Zero();
    for (int p = 0; p < total; ++p) {
      int pp = p;
      double ph = 0;
      for (int i = 0; i < d; ++i) {
        ph += h[i] * double(pp % n) / n;
        pp /= n;
      }
      acc += std::exp(cd(0, -2 * pi * ph)) * vals[p];
    }
    acc /= double(total);
    if (acc.cwiseAbs().maxCoeff() > drop) out.set(h, acc);
  }
  return out;
}

inline double coeff_distance(const MatrixSeries& a, const MatrixSeries& b) {
  double m = 0;
  for (const auto& [h, M] : a.coeffs()) m = std::max(m, (M - b.at(h)).cwiseAbs().maxCoeff());
  for (const auto& [h, M] : b.coeffs()) m = std::max(m, (M - a.at(h)).cwiseAbs().maxCoeff());
  return m;
}

// 4x4 matrix of X -> zX - (AX - XA) assembled from the images of the basis E_ij.
inline Eigen::Matrix4cd dense_operator(const Mat2& A, cd z) {
  Eigen::Matrix4cd T;
  for (int col = 0; col < 4; ++col) {
    Mat2 E = Mat2::Zero();
    E(col % 2, col / 2) = 1;
    Mat2 img = z * E - (A * E - E * A);
    for (int row = 0; row < 4; ++row) T(row, col) = img(row % 2, row / 2);
  }
  return T;
}

inline Mat2 dense_mode_solve(const Mat2& A, cd z, const Mat2& F) {
  Eigen::Vector4cd b;
  for (int i = 0; i < 4; ++i) b(i) = F(i % 2, i / 2);
  Eigen::Vector4cd x = dense_operator(A, z).fullPivLu().solve(b);
  Mat2 X;
  for (int i = 0; i < 4; ++i) X(i % 2, i / 2) = x(i);
  return X;
}

// Same dense solve carried out in long double; inputs are the double values.
inline Mat2 dense_mode_solve_ld(const Mat2& A, cd z, const Mat2& F) {
  using cl = std::complex<long double>;
  using M4 = Eigen::Matrix<cl, 4, 4>;
  using V4 = Eigen::Matrix<cl, 4, 1>;
  Eigen::Matrix<cl, 2, 2> Al = A.cast<cl>();
  cl zl(z.real(), z.imag());
  M4 T;
  for (int col = 0; col < 4; ++col) {
    Eigen::Matrix<cl, 2, 2> E = Eigen::Matrix<cl, 2, 2>::Zero();
    E(col % 2, col / 2) = 1;
    Eigen::Matrix<cl, 2, 2> img = zl * E - (Al * E - E * Al);
    for (int row = 0; row < 4; ++row) T(row, col) = img(row % 2, row / 2);
  }
  V4 b;
  for (int i = 0; i < 4; ++i) b(i) = cl(F(i % 2, i / 2).real(), F(i % 2, i / 2).imag());
  V4 x = T.fullPivLu().solve(b);
  Mat2 X;
  for (int i = 0; i < 4; ++i) X(i % 2, i / 2) = cd(double(x(i).real()), double(x(i).imag()));
  return X;
}

// Exhaustive BR scan: min over 0<|k|_1<=N of |z - 2 pi i <k,w>| Psi(|k|) / kappa - 1.
template <class Psi>
double br_margin(cd z, const std::vector<double>& w, Psi&& psi, double kappa, int N) {
  int d = (int)w.size();
  double best = INFINITY;
  std::vector<int> k(d, -N);
  for (;;) {
    int s = 0;
    for (int x : k) s += std::abs(x);
    if (s > 0 && s <= N) {
      double dot = 0;
      for (int i = 0; i < d; ++i) dot += k[i] * w[i];
      double v = std::abs(z - cd(0, 2 * pi * dot)) * psi(double(s)) / kappa - 1;
      best = std::min(best, v);
    }
    int i = 0;
    while (i < d && ++k[i] > N) k[i++] = -N;
    if (i == d) break;
  }
  return best;
}

}  // namespace oracle
