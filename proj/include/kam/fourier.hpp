#pragma once
#include <Eigen/Dense>
#include <complex>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "kam/lattice.hpp"
#include "kam/weights.hpp"

namespace kam {

using cd = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using RMat2 = Eigen::Matrix2d;

// max_abs is the default entry norm; scaled_max = 2*max_abs is submultiplicative.
enum class MatrixNorm { max_abs, scaled_max };

double mat_norm(const Mat2& M, MatrixNorm n = MatrixNorm::max_abs);
double mat_norm(const RMat2& M, MatrixNorm n = MatrixNorm::max_abs);

constexpr double kPruneAbs = 1e-300;

// Finitely supported Fourier series of 2x2 complex matrices. Index h stands for the
// frequency h/denom, so denom=2 series live on the doubled torus.
class MatrixSeries {
 public:
  using Map = std::map<Index, Mat2>;

  MatrixSeries() = default;
  explicit MatrixSeries(int dim, int denom = 1);

  static MatrixSeries constant(int dim, const Mat2& M, int denom = 1);
  static MatrixSeries identity(int dim, int denom = 1);
  // M cos(2 pi <k,theta>): M/2 at +k and -k
  static MatrixSeries cosine_mode(int dim, const Index& k, const RMat2& M);

  int dim() const { return dim_; }
  int denom() const { return denom_; }
  const Map& coeffs() const { return c_; }
  size_t size() const { return c_.size(); }
  bool empty() const { return c_.empty(); }

  Mat2 at(const Index& h) const;
  Mat2 mean() const { return at(Index{}); }
  void set(const Index& h, const Mat2& M);
  void add_to(const Index& h, const Mat2& M);
  void erase(const Index& h) { c_.erase(h); }

  double frequency_l1(const Index& h) const { return static_cast<double>(l1(h)) / denom_; }
  int max_order_l1() const;  // max l1(h) over support, in index units

  double error_budget() const { return budget_; }
  void add_error(double e) { budget_ += e; }

  // Re-express on a finer lattice (1 -> 2) or back (2 -> 1, requires even support).
  MatrixSeries with_denom(int d) const;
  // Drop to denom 1 when every index is even.
  MatrixSeries reduced() const;

  bool is_real(double tol = 0.0) const;
  double max_trace() const;
  // Make coefficient(-h) = conj(coefficient(h)) hold bit-exactly.
  void symmetrize();
  // Remove coefficients with max-abs entry below thr; returns removed mass.
  double prune(double thr = kPruneAbs);

  MatrixSeries& operator+=(const MatrixSeries& o);
  MatrixSeries& operator-=(const MatrixSeries& o);
  MatrixSeries& operator*=(cd s);
  friend MatrixSeries operator+(MatrixSeries a, const MatrixSeries& b) { return a += b; }
  friend MatrixSeries operator-(MatrixSeries a, const MatrixSeries& b) { return a -= b; }
  friend MatrixSeries operator*(cd s, MatrixSeries a) { return a *= s; }

  MatrixSeries left(const Mat2& M) const;   // M * F
  MatrixSeries right(const Mat2& M) const;  // F * M

 private:
  int dim_ = 1;
  int denom_ = 1;
  Map c_;
  double budget_ = 0.0;
};

double weighted_norm(const MatrixSeries& F, const WeightSpec& L, double r,
                     MatrixNorm n = MatrixNorm::max_abs);

MatrixSeries multiply(const MatrixSeries& F, const MatrixSeries& G);
MatrixSeries truncate(const MatrixSeries& F, double N);
MatrixSeries derive_omega(const MatrixSeries& F, const std::vector<double>& omega);

// theta -> e^{2 pi i <m,theta>} P1 + e^{-2 pi i <m,theta>} P2 with m = m2/2.
struct TrivialMap {
  int dim = 1;
  Mat2 P1 = Mat2::Identity();
  Mat2 P2 = Mat2::Zero();
  Index m2{};          // doubled m
  double order = 0.0;  // order bound the map was built for

  static TrivialMap identity(int dim);
  bool is_identity() const { return is_zero(m2); }
  double m_l1() const { return l1(m2) / 2.0; }
  // throws InputError when the projection identities fail
  void validate(double tol = 1e-12) const;
  MatrixSeries as_series() const;
  MatrixSeries inverse_series() const;
};

// Phi F Phi^{-1}, or Phi^{-1} F Phi when inverse_side.
MatrixSeries conj_by_trivial(const TrivialMap& phi, const MatrixSeries& F, bool inverse_side);

// Partial exponential sum; the tail bound and pruning losses land in error_budget().
MatrixSeries exp_series(const MatrixSeries& X, const WeightSpec& L, double r, double tol);

RMat2 evaluate(const MatrixSeries& F, const std::vector<double>& theta);
Mat2 evaluate_complex(const MatrixSeries& F, const std::vector<double>& theta);

void write_series(std::ostream& os, const MatrixSeries& F);
MatrixSeries read_series(std::istream& is);
void save_series(const std::string& path, const MatrixSeries& F);
MatrixSeries load_series(const std::string& path);

}  // namespace kam
