#include "kam/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace kam {

namespace {
constexpr double kTwoPi = 2 * std::numbers::pi;

void check_same_dim(const MatrixSeries& a, const MatrixSeries& b) {
  if (a.dim() != b.dim()) throw InputError("dim", "series dimension mismatch");
}

int unify(int a, int b) { return std::max(a, b); }
}  // namespace

double mat_norm(const Mat2& M, MatrixNorm n) {
  double m = M.cwiseAbs().maxCoeff();
  return n == MatrixNorm::scaled_max ? 2 * m : m;
}

double mat_norm(const RMat2& M, MatrixNorm n) {
  double m = M.cwiseAbs().maxCoeff();
  return n == MatrixNorm::scaled_max ? 2 * m : m;
}

MatrixSeries::MatrixSeries(int dim, int denom) : dim_(dim), denom_(denom) {
  if (dim < 1 || dim > kMaxDim) throw InputError("dim", "series dimension out of range");
  if (denom != 1 && denom != 2) throw InputError("denom", "denominator must be 1 or 2");
}

MatrixSeries MatrixSeries::constant(int dim, const Mat2& M, int denom) {
  MatrixSeries s(dim, denom);
  s.set(Index{}, M);
  return s;
}

MatrixSeries MatrixSeries::identity(int dim, int denom) { return constant(dim, Mat2::Identity(), denom); }

MatrixSeries MatrixSeries::cosine_mode(int dim, const Index& k, const RMat2& M) {
  MatrixSeries s(dim);
  Mat2 half = M.cast<cd>() * 0.5;
  if (is_zero(k)) {
    s.set(k, M.cast<cd>());
  } else {
    s.set(k, half);
    s.set(negate(k), half);
  }
  return s;
}

Mat2 MatrixSeries::at(const Index& h) const {
  auto it = c_.find(h);
  return it == c_.end() ? Mat2::Zero().eval() : it->second;
}

void MatrixSeries::set(const Index& h, const Mat2& M) {
  for (int i = dim_; i < kMaxDim; ++i)
    if (h[i] != 0) throw InputError("dim", "index has components beyond the series dimension");
  c_[h] = M;
}

void MatrixSeries::add_to(const Index& h, const Mat2& M) {
  auto [it, fresh] = c_.try_emplace(h, M);
  if (!fresh) it->second += M;
}

int MatrixSeries::max_order_l1() const {
  int m = 0;
  for (auto& [h, M] : c_) m = std::max(m, l1(h));
  return m;
}

MatrixSeries MatrixSeries::with_denom(int d) const {
  if (d == denom_) return *this;
  MatrixSeries out(dim_, d);
  out.budget_ = budget_;
  if (d == 2) {
    for (auto& [h, M] : c_) out.c_.emplace(scaled(h, 2), M);
    return out;
  }
  for (auto& [h, M] : c_) {
    Index g;
    for (int i = 0; i < kMaxDim; ++i) {
      if (h[i] % 2 != 0) throw NumericalError("denom", "series has half-integer frequencies");
      g[i] = h[i] / 2;
    }
    out.c_.emplace(g, M);
  }
  return out;
}

MatrixSeries MatrixSeries::reduced() const {
  if (denom_ == 1) return *this;
  for (auto& [h, M] : c_)
    for (int x : h.v)
      if (x % 2 != 0) return *this;
  return with_denom(1);
}

bool MatrixSeries::is_real(double tol) const {
  for (auto& [h, M] : c_) {
    Mat2 other = at(negate(h));
    if ((M - other.conjugate()).cwiseAbs().maxCoeff() > tol) return false;
  }
  return true;
}

double MatrixSeries::max_trace() const {
  double t = 0;
  for (auto& [h, M] : c_) t = std::max(t, std::abs(M.trace()));
  return t;
}

void MatrixSeries::symmetrize() {
  std::vector<std::pair<Index, Mat2>> upd;
  for (auto& [h, M] : c_) {
    if (is_zero(h)) {
      upd.emplace_back(h, M.real().cast<cd>());
      continue;
    }
    if (!canonical_half(h)) {
      if (!c_.count(negate(h))) upd.emplace_back(h, M * 0.5);  // partner missing
      continue;
    }
    Mat2 avg = 0.5 * (M + at(negate(h)).conjugate());
    upd.emplace_back(h, avg);
  }
  for (auto& [h, M] : upd) {
    if (is_zero(h)) {
      c_[h] = M;
    } else if (canonical_half(h)) {
      c_[h] = M;
      c_[negate(h)] = M.conjugate();
    } else {
      // only the non-canonical side was present
      c_[h] = M;
      c_[negate(h)] = M.conjugate();
    }
  }
}

double MatrixSeries::prune(double thr) {
  double removed = 0;
  for (auto it = c_.begin(); it != c_.end();) {
    double n = it->second.cwiseAbs().maxCoeff();
    if (n < thr) {
      removed += n;
      it = c_.erase(it);
    } else {
      ++it;
    }
  }
  budget_ += removed;
  return removed;
}

MatrixSeries& MatrixSeries::operator+=(const MatrixSeries& o) {
  check_same_dim(*this, o);
  int d = unify(denom_, o.denom_);
  if (d != denom_) *this = with_denom(d);
  const MatrixSeries& rhs = o.denom_ == d ? o : o.with_denom(d);
  for (auto& [h, M] : rhs.c_) add_to(h, M);
  budget_ += o.budget_;
  return *this;
}

MatrixSeries& MatrixSeries::operator-=(const MatrixSeries& o) {
  check_same_dim(*this, o);
  int d = unify(denom_, o.denom_);
  if (d != denom_) *this = with_denom(d);
  const MatrixSeries& rhs = o.denom_ == d ? o : o.with_denom(d);
  for (auto& [h, M] : rhs.c_) add_to(h, -M);
  budget_ += o.budget_;
  return *this;
}

MatrixSeries& MatrixSeries::operator*=(cd s) {
  for (auto& [h, M] : c_) M *= s;
  budget_ *= std::abs(s);
  return *this;
}

MatrixSeries MatrixSeries::left(const Mat2& A) const {
  MatrixSeries out(dim_, denom_);
  for (auto& [h, M] : c_) out.c_.emplace_hint(out.c_.end(), h, A * M);
  out.budget_ = budget_ * 2 * A.cwiseAbs().maxCoeff();
  return out;
}

MatrixSeries MatrixSeries::right(const Mat2& A) const {
  MatrixSeries out(dim_, denom_);
  for (auto& [h, M] : c_) out.c_.emplace_hint(out.c_.end(), h, M * A);
  out.budget_ = budget_ * 2 * A.cwiseAbs().maxCoeff();
  return out;
}

double weighted_norm(const MatrixSeries& F, const WeightSpec& L, double r, MatrixNorm n) {
  if (r < 0) throw InputError("radius", "radius must be nonnegative");
  std::unordered_map<int, double> wcache;
  double s = 0;
  for (auto& [h, M] : F.coeffs()) {
    double c = mat_norm(M, n);
    if (c == 0) continue;
    int o = l1(h);
    auto it = wcache.find(o);
    if (it == wcache.end()) {
      double k = static_cast<double>(o) / F.denom();
      it = wcache.emplace(o, kTwoPi * L(k) * r).first;
    }
    s += std::exp(std::log(c) + it->second);
  }
  return s;
}

MatrixSeries multiply(const MatrixSeries& F, const MatrixSeries& G) {
  check_same_dim(F, G);
  int d = unify(F.denom(), G.denom());
  const MatrixSeries& a = F.denom() == d ? F : F.with_denom(d);
  const MatrixSeries& b = G.denom() == d ? G : G.with_denom(d);
  MatrixSeries out(F.dim(), d);
  for (auto& [h1, M1] : a.coeffs())
    for (auto& [h2, M2] : b.coeffs()) out.add_to(add(h1, h2), M1 * M2);
  out.prune(kPruneAbs);
  if (F.is_real() && G.is_real()) out.symmetrize();
  // error propagated to first order
  double nf = 0, ng = 0;
  for (auto& [h, M] : a.coeffs()) nf += M.cwiseAbs().maxCoeff();
  for (auto& [h, M] : b.coeffs()) ng += M.cwiseAbs().maxCoeff();
  out.add_error(2 * (F.error_budget() * ng + G.error_budget() * nf));
  return out;
}

MatrixSeries truncate(const MatrixSeries& F, double N) {
  if (N < 0) throw InputError("order", "truncation order must be nonnegative");
  MatrixSeries out(F.dim(), F.denom());
  double lim = N * F.denom();
  for (auto& [h, M] : F.coeffs())
    if (l1(h) <= lim) out.set(h, M);
  out.add_error(F.error_budget());
  return out;
}

MatrixSeries derive_omega(const MatrixSeries& F, const std::vector<double>& omega) {
  if (static_cast<int>(omega.size()) != F.dim()) throw InputError("dim", "frequency dimension mismatch");
  MatrixSeries out(F.dim(), F.denom());
  for (auto& [h, M] : F.coeffs()) {
    double w = dot(h, omega) / F.denom();
    if (is_zero(h)) continue;
    out.set(h, cd(0, kTwoPi * w) * M);
  }
  return out;
}

TrivialMap TrivialMap::identity(int dim) {
  TrivialMap t;
  t.dim = dim;
  return t;
}

void TrivialMap::validate(double tol) const {
  Mat2 I = Mat2::Identity();
  double e = std::max({(P1 + P2 - I).cwiseAbs().maxCoeff(), (P1 * P2).cwiseAbs().maxCoeff(),
                       (P2 * P1).cwiseAbs().maxCoeff(), (P1 * P1 - P1).cwiseAbs().maxCoeff(),
                       (P2 * P2 - P2).cwiseAbs().maxCoeff()});
  double scale = std::max(1.0, std::max(P1.cwiseAbs().maxCoeff(), P2.cwiseAbs().maxCoeff()));
  if (e > tol * scale * scale) throw InputError("projection", "projection identities violated");
}

MatrixSeries TrivialMap::as_series() const {
  MatrixSeries s(dim, 2);
  s.add_to(m2, P1);
  s.add_to(negate(m2), P2);
  return s;
}

MatrixSeries TrivialMap::inverse_series() const {
  MatrixSeries s(dim, 2);
  s.add_to(negate(m2), P1);
  s.add_to(m2, P2);
  return s;
}

MatrixSeries conj_by_trivial(const TrivialMap& phi, const MatrixSeries& F, bool inverse_side) {
  if (phi.dim != F.dim()) throw InputError("dim", "trivial map dimension mismatch");
  phi.validate();
  const int D = F.denom();
  Index up = scaled(phi.m2, D);  // frequency shift 2m in index units
  if (inverse_side) up = negate(up);
  Index down = negate(up);
  MatrixSeries out(F.dim(), D);
  const Mat2 &P1 = phi.P1, &P2 = phi.P2;
  for (auto& [h, M] : F.coeffs()) {
    Mat2 diag = P1 * M * P1 + P2 * M * P2;
    out.add_to(h, diag);
    out.add_to(add(h, up), P1 * M * P2);
    out.add_to(add(h, down), P2 * M * P1);
  }
  out.prune(kPruneAbs);
  if (F.is_real() && (phi.P2 - phi.P1.conjugate()).cwiseAbs().maxCoeff() == 0) out.symmetrize();
  out.add_error(F.error_budget() * 4 * std::pow(std::max(P1.cwiseAbs().maxCoeff(), P2.cwiseAbs().maxCoeff()), 2));
  return out;
}

MatrixSeries exp_series(const MatrixSeries& X, const WeightSpec& L, double r, double tol) {
  if (!(tol > 0)) throw InputError("tol", "exp tolerance must be positive");
  double n_max = weighted_norm(X, L, r, MatrixNorm::max_abs);
  if (!std::isfinite(n_max) || n_max >= 50) throw NumericalError("exp", "series too large for the exponential");
  double n = weighted_norm(X, L, r, MatrixNorm::scaled_max);
  double target = tol * std::max(1.0, n);
  // smallest J with n^{J+1}/(J+1)! e^n <= target
  int J = 0;
  double term = n * std::exp(n);  // n^{J+1}/(J+1)! e^n at J=0
  while (term > target && J < 400) {
    ++J;
    term *= n / (J + 1);
  }
  MatrixSeries S = MatrixSeries::identity(X.dim(), X.denom());
  MatrixSeries P = S;
  for (int j = 1; j <= J; ++j) {
    P = multiply(P, X);
    P *= cd(1.0 / j);
    if (P.empty()) break;
    S += P;
  }
  S.add_error(term);
  // prune by weighted size
  size_t modes = std::max<size_t>(1, S.size());
  double thr = tol / (10.0 * modes);
  double lost = 0;
  MatrixSeries out(S.dim(), S.denom());
  for (auto& [h, M] : S.coeffs()) {
    double w = M.cwiseAbs().maxCoeff() * std::exp(kTwoPi * L(S.frequency_l1(h)) * r);
    if (w < thr && !is_zero(h))
      lost += w;
    else
      out.set(h, M);
  }
  out.add_error(S.error_budget() + lost);
  if (X.is_real()) out.symmetrize();
  return out;
}

Mat2 evaluate_complex(const MatrixSeries& F, const std::vector<double>& theta) {
  if (static_cast<int>(theta.size()) != F.dim()) throw InputError("dim", "point dimension mismatch");
  Mat2 s = Mat2::Zero();
  for (auto& [h, M] : F.coeffs()) {
    double ph = kTwoPi * dot(h, theta) / F.denom();
    s += cd(std::cos(ph), std::sin(ph)) * M;
  }
  return s;
}

RMat2 evaluate(const MatrixSeries& F, const std::vector<double>& theta) {
  Mat2 s = evaluate_complex(F, theta);
  double mass = 0;
  for (auto& [h, M] : F.coeffs()) mass += M.cwiseAbs().maxCoeff();
  double im = s.imag().cwiseAbs().maxCoeff();
  if (im > 1e-12 * mass + 1e-300) throw NumericalError("reality", "series evaluates to a non-real matrix");
  return s.real();
}

void write_series(std::ostream& os, const MatrixSeries& F) {
  os << "dim=" << F.dim() << " denom=" << F.denom() << "\n";
  char buf[64];
  for (auto& [h, M] : F.coeffs()) {
    for (int i = 0; i < F.dim(); ++i) os << h[i] << ' ';
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        std::snprintf(buf, sizeof buf, " %.17g %.17g", M(a, b).real(), M(a, b).imag());
        os << buf;
      }
    os << "\n";
  }
}

MatrixSeries read_series(std::istream& is) {
  std::string line;
  int dim = 0, denom = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (std::sscanf(line.c_str(), "dim=%d denom=%d", &dim, &denom) != 2)
      throw InputError("series", "bad series header: " + line);
    break;
  }
  if (dim == 0) throw InputError("series", "missing series header");
  MatrixSeries F(dim, denom);
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<int> h(dim);
    for (int i = 0; i < dim; ++i)
      if (!(ls >> h[i])) throw InputError("series", "bad index on line " + std::to_string(lineno));
    double v[8];
    for (double& x : v)
      if (!(ls >> x)) throw InputError("series", "bad coefficient on line " + std::to_string(lineno));
    Mat2 M;
    M << cd(v[0], v[1]), cd(v[2], v[3]), cd(v[4], v[5]), cd(v[6], v[7]);
    F.add_to(make_index(h), M);
  }
  return F;
}

void save_series(const std::string& path, const MatrixSeries& F) {
  std::ofstream out(path);
  if (!out) throw InputError("io", "cannot write " + path);
  write_series(out, F);
}

MatrixSeries load_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("io", "cannot open " + path);
  return read_series(in);
}

}  // namespace kam
