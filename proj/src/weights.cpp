#include "kam/weights.hpp"

#include <algorithm>
#include <cmath>
// this Boost pchip header calls unqualified isnan
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>

namespace kam {

namespace {
using Pchip = boost::math::interpolators::pchip<std::vector<double>>;
}  // namespace

// Only the knot slopes are kept; evaluation is plain cubic Hermite on them.
static std::shared_ptr<const Pchip> make_pchip(const std::vector<double>& t,
                                               const std::vector<double>& v) {
  std::vector<double> x = t, y = v;
  return std::make_shared<const Pchip>(std::move(x), std::move(y));
}

MonotoneFn MonotoneFn::power(double p) {
  if (!(p > 0) || !std::isfinite(p)) throw InputError("weight", "power exponent must be positive");
  MonotoneFn f;
  f.kind_ = Kind::power;
  f.p_ = p;
  return f;
}

MonotoneFn MonotoneFn::table(std::vector<double> t, std::vector<double> v) {
  if (t.size() != v.size()) throw InputError("table", "table columns differ in length");
  if (t.size() < 4) throw InputError("table", "table needs at least 4 rows");
  for (size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i]) || !std::isfinite(v[i]) || t[i] < 0 || v[i] < 0)
      throw InputError("table", "table entries must be finite and nonnegative");
    if (i > 0 && !(t[i] > t[i - 1])) throw InputError("table", "t column must strictly increase");
    if (i > 0 && !(v[i] > v[i - 1])) throw InputError("table", "value column must strictly increase");
  }
  size_t n = t.size();
  if (!(t[n - 2] > 0 && v[n - 2] > 0)) throw InputError("table", "table too short for tail slope");
  MonotoneFn f;
  f.kind_ = Kind::tabulated;
  f.t_ = std::move(t);
  f.v_ = std::move(v);
  f.hi_slope_ = std::log(f.v_[n - 1] / f.v_[n - 2]) / std::log(f.t_[n - 1] / f.t_[n - 2]);
  if (f.t_[0] > 0 && f.v_[0] > 0)
    f.lo_slope_ = std::log(f.v_[1] / f.v_[0]) / std::log(f.t_[1] / f.t_[0]);
  else
    f.lo_slope_ = 0;  // table starts at the origin, nothing below it
  auto p = make_pchip(f.t_, f.v_);
  f.m_.resize(n);
  for (size_t i = 0; i < n; ++i) f.m_[i] = p->prime(f.t_[i]);
  return f;
}

// Cubic Hermite evaluation with the stored slopes (same values boost computed).
double MonotoneFn::interp(double t) const {
  size_t i = std::upper_bound(t_.begin(), t_.end(), t) - t_.begin();
  if (i == 0) i = 1;
  if (i >= t_.size()) i = t_.size() - 1;
  double x0 = t_[i - 1], x1 = t_[i], h = x1 - x0, s = (t - x0) / h;
  double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  return h00 * v_[i - 1] + h10 * h * m_[i - 1] + h01 * v_[i] + h11 * h * m_[i];
}

double MonotoneFn::interp_prime(double t) const {
  size_t i = std::upper_bound(t_.begin(), t_.end(), t) - t_.begin();
  if (i == 0) i = 1;
  if (i >= t_.size()) i = t_.size() - 1;
  double x0 = t_[i - 1], x1 = t_[i], h = x1 - x0, s = (t - x0) / h;
  double d00 = 6 * s * s - 6 * s, d10 = 3 * s * s - 4 * s + 1;
  double d01 = -6 * s * s + 6 * s, d11 = 3 * s * s - 2 * s;
  return (d00 * v_[i - 1] + d01 * v_[i]) / h + d10 * m_[i - 1] + d11 * m_[i];
}

double MonotoneFn::operator()(double t) const {
  if (kind_ == Kind::power) return t <= 0 ? 0.0 : std::pow(t, p_);
  if (t < t_.front()) return v_.front() * std::pow(t / t_.front(), lo_slope_);
  if (t > t_.back()) return v_.back() * std::pow(t / t_.back(), hi_slope_);
  return interp(t);
}

double MonotoneFn::derivative(double t) const {
  if (kind_ == Kind::power) return p_ * std::pow(t, p_ - 1);
  if (t < t_.front() || t > t_.back()) {
    double s = t < t_.front() ? lo_slope_ : hi_slope_;
    return s * (*this)(t) / t;
  }
  return interp_prime(t);
}

double MonotoneFn::inverse(double y) const {
  if (kind_ == Kind::power) return y <= 0 ? 0.0 : std::pow(y, 1.0 / p_);
  if (y < v_.front()) return t_.front() * std::pow(y / v_.front(), 1.0 / lo_slope_);
  if (y > v_.back()) return t_.back() * std::pow(y / v_.back(), 1.0 / hi_slope_);
  size_t i = std::upper_bound(v_.begin(), v_.end(), y) - v_.begin();
  if (i == 0) i = 1;
  if (i >= v_.size()) i = v_.size() - 1;
  double a = t_[i - 1], b = t_[i];
  for (int it = 0; it < 200 && b - a > 1e-16 * std::max(1.0, b); ++it) {
    double c = 0.5 * (a + b);
    if (interp(c) < y)
      a = c;
    else
      b = c;
  }
  return 0.5 * (a + b);
}

double MonotoneFn::log_at_log(double u) const {
  if (kind_ == Kind::power) return p_ * u;
  double lt0 = std::log(t_.front()), ltn = std::log(t_.back());
  if (u > ltn) return std::log(v_.back()) + hi_slope_ * (u - ltn);
  if (t_.front() > 0 && u < lt0) return std::log(v_.front()) + lo_slope_ * (u - lt0);
  return std::log((*this)(std::exp(u)));
}

double MonotoneFn::log_inverse_at_log(double L) const {
  if (kind_ == Kind::power) return L / p_;
  double lvn = std::log(v_.back());
  if (L > lvn) return std::log(t_.back()) + (L - lvn) / hi_slope_;
  if (v_.front() > 0 && L < std::log(v_.front()))
    return std::log(t_.front()) + (L - std::log(v_.front())) / lo_slope_;
  return std::log(inverse(std::exp(L)));
}

double MonotoneFn::elasticity(double u) const {
  if (kind_ == Kind::power) return p_;
  double t = std::exp(u);
  if (t > t_.back()) return hi_slope_;
  if (t < t_.front()) return lo_slope_;
  double f = (*this)(t);
  return f > 0 ? t * derivative(t) / f : std::numeric_limits<double>::infinity();
}

WeightSpec WeightSpec::analytic() { return WeightSpec{}; }

WeightSpec WeightSpec::gevrey(double s) {
  if (!(s > 1)) throw InputError("weight", "gevrey exponent s must exceed 1");
  WeightSpec w;
  w.kind_ = Kind::gevrey;
  w.s_ = s;
  w.f_ = MonotoneFn::power(1.0 / s);
  return w;
}

WeightSpec WeightSpec::tabulated(std::vector<double> t, std::vector<double> v) {
  WeightSpec w;
  w.kind_ = Kind::tabulated;
  w.f_ = MonotoneFn::table(std::move(t), std::move(v));
  return w;
}

std::string WeightSpec::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::analytic: os << "analytic"; break;
    case Kind::gevrey: os << "gevrey:" << s_; break;
    case Kind::tabulated: os << "table(" << f_.knots().size() << " rows)"; break;
  }
  return os.str();
}

ApproxSpec ApproxSpec::power(double tau) {
  if (!(tau >= 1)) throw InputError("approx", "power exponent tau must be >= 1");
  ApproxSpec a;
  a.f_ = MonotoneFn::power(tau);
  return a;
}

ApproxSpec ApproxSpec::tabulated(std::vector<double> t, std::vector<double> v) {
  ApproxSpec a;
  a.kind_ = Kind::tabulated;
  a.f_ = MonotoneFn::table(std::move(t), std::move(v));
  return a;
}

std::string ApproxSpec::describe() const {
  std::ostringstream os;
  if (kind_ == Kind::power)
    os << "power:" << f_.exponent();
  else
    os << "table(" << f_.knots().size() << " rows)";
  return os.str();
}

std::pair<std::vector<double>, std::vector<double>> read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("table", "cannot open table file " + path);
  std::vector<double> t, v;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    double a, b;
    if (!(ls >> a)) continue;
    if (!(ls >> b)) throw InputError("table", path + ":" + std::to_string(lineno) + ": expected two columns");
    std::string extra;
    if (ls >> extra) throw InputError("table", path + ":" + std::to_string(lineno) + ": trailing data");
    t.push_back(a);
    v.push_back(b);
  }
  return {t, v};
}

namespace {
std::vector<double> sample_points(double lo, double hi, int n) {
  std::vector<double> s;
  double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i) s.push_back(std::exp(a + (b - a) * i / (n - 1)));
  return s;
}
}  // namespace

std::string check_weight_properties(const WeightSpec& L, double t_max) {
  auto s = sample_points(1e-3, t_max, 60);
  for (size_t i = 1; i < s.size(); ++i)
    if (!(L(s[i]) > L(s[i - 1]))) return "weight not increasing near t=" + std::to_string(s[i]);
  for (double x : s)
    for (double y : s)
      if (L(x + y) > (L(x) + L(y)) * (1 + 1e-12) + 1e-300)
        return "weight not subadditive at x=" + std::to_string(x) + " y=" + std::to_string(y);
  for (double t : s) {
    double back = L.inverse(L(t));
    if (std::abs(back - t) > 1e-10 * t) return "weight inverse round trip fails at t=" + std::to_string(t);
  }
  return {};
}

std::string check_approx_properties(const ApproxSpec& P, double t_max) {
  // Psi is only ever evaluated at lattice norms |k| >= 1
  auto s = sample_points(1.0, t_max, 60);
  for (size_t i = 1; i < s.size(); ++i)
    if (!(P(s[i]) > P(s[i - 1]))) return "approx not increasing near t=" + std::to_string(s[i]);
  for (double t : s)
    if (P(t) < t * (1 - 1e-12)) return "approx below identity at t=" + std::to_string(t);
  for (double x : s)
    for (double y : s)
      if (P(x + y) < (P(x) + P(y)) * (1 - 1e-12))
        return "approx not superadditive at x=" + std::to_string(x) + " y=" + std::to_string(y);
  return {};
}

void validate_frequency(const Frequency& w) {
  if (w.dim() < 1) throw InputError("omega", "frequency vector is empty");
  if (w.dim() > kMaxDim) throw InputError("omega", "frequency dimension above supported maximum");
  for (double x : w.omega)
    if (!std::isfinite(x) || std::abs(x) > 1) throw InputError("omega", "frequency entries must satisfy |w_i| <= 1");
  if (w.kappa && !(*w.kappa > 0 && *w.kappa < 1)) throw InputError("omega", "kappa must lie in (0,1)");
}

FrequencyCheck check_frequency(const Frequency& w, const ApproxSpec& psi, int K) {
  validate_frequency(w);
  if (K < 1) throw InputError("order", "order K must be >= 1");
  if (l1_ball_size(w.dim(), K) > 1e9) throw InputError("order", "lattice scan too large");
  std::vector<double> psi_n(K + 1);
  for (int n = 1; n <= K; ++n) psi_n[n] = psi(n);
  FrequencyCheck best{std::numeric_limits<double>::infinity(), {}};
  Index arg;
  for_each_l1_ball(w.dim(), K, [&](const Index& k) {
    if (!canonical_half(k)) return;
    double v = std::abs(dot(k, w.omega)) * psi_n[l1(k)];
    if (v < best.kappa_max) {
      best.kappa_max = v;
      arg = k;
    }
  });
  best.worst_k = to_vector(arg, w.dim());
  return best;
}

double brjuno_russmann_integral(const WeightSpec& L, const ApproxSpec& psi, double lower, double tol) {
  if (!(lower >= 1)) throw InputError("integral", "lower bound must be >= 1");
  return brjuno_russmann_integral_log(L, psi, std::log(lower), tol);
}

// In u = ln t the integrand becomes elasticity_L(u) * ln Psi(e^u) / L(e^u), which
// can be evaluated for any u without forming e^u.
double brjuno_russmann_integral_log(const WeightSpec& L, const ApproxSpec& psi, double u0, double tol) {
  if (!(tol > 0)) throw InputError("integral", "tolerance must be positive");
  if (!(u0 >= 0) || !std::isfinite(u0)) throw InputError("integral", "lower bound must be >= 1");
  auto g = [&](double u) {
    double lp = psi.log_at_log(u);
    double ll = L.log_at_log(u);
    return L.elasticity(u) * lp * std::exp(-ll);
  };
  double g0 = g(u0);
  if (!std::isfinite(g0) || !std::isfinite(L.log_at_log(u0)))
    throw NumericalError("integral", "integrand not finite at the lower bound");

  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  auto piece = [&](double a, double b) {
    double err = 0;
    return GK::integrate(g, a, b, 20, tol * 1e-2, &err);
  };

  // cutoffs at u0 + 2^j: each doubling of the log-distance squares t/lower
  double total = 0, prev_inc = -1;
  int stalled = 0;
  double a = u0, width = 1.0;
  for (int j = 0; j < 80; ++j) {
    double b = u0 + width;
    double inc = piece(a, b);
    total += inc;
    if (!std::isfinite(total)) return std::numeric_limits<double>::infinity();
    if (prev_inc > 0) {
      double q = inc / prev_inc;
      bool big = inc > tol * total;
      if (big && q >= 0.9)
        ++stalled;
      else
        stalled = 0;
      if (stalled >= 6) return std::numeric_limits<double>::infinity();
      // geometric tail estimate once increments decay
      if (q < 0.9 && inc * q / (1 - q) <= tol * total) return total + inc * q / (1 - q);
    }
    if (inc == 0 && j > 0) return total;
    prev_inc = inc;
    a = b;
    width *= 2;
  }
  return std::numeric_limits<double>::infinity();
}

StepParams step_parameters(double r, double log_eps, const WeightSpec& L, const ApproxSpec& psi,
                           double delta, double zeta, double kappa) {
  if (!(r > 0)) throw InputError("schedule", "radius must be positive");
  if (!(log_eps < 0) || !std::isfinite(log_eps)) throw InputError("schedule", "epsilon must lie in (0,1)");
  if (!(delta > 0) || !(zeta > 0)) throw InputError("schedule", "delta and zeta must be positive");
  const double pi = std::numbers::pi;
  double a = std::abs(log_eps);
  StepParams p;
  p.log_N = L.log_inverse_at_log(std::log(50 / (pi * r)) + std::log(a));
  p.N = std::exp(p.log_N);
  double log_psi_inv = psi.log_inverse_at_log(zeta * a);  // Psi^{-1}(eps^{-zeta})
  p.log_RN = log_psi_inv - std::log(3.0);
  p.log_R = p.log_RN - p.log_N;
  p.R = std::exp(p.log_R);
  p.log_kappa2 = std::log(kappa) + zeta * log_eps;
  p.r_loss = std::exp(std::log(50 * delta / pi) + std::log(a) - L.log_at_log(p.log_RN));
  p.r_next = r - p.r_loss;
  p.exhausted = !(p.r_next > 0);
  p.R_below_2 = p.log_R < std::log(2.0);
  return p;
}

namespace {
double loss_term(double log_eps, const WeightSpec& L, const ApproxSpec& psi, double delta, double zeta) {
  const double pi = std::numbers::pi;
  double a = std::abs(log_eps);
  double log_RN = psi.log_inverse_at_log(zeta * a) - std::log(3.0);
  return std::exp(std::log(50 * delta / pi) + std::log(a) - L.log_at_log(log_RN));
}

// Bound from comparing the sum with an integral; `sharp` keeps the boundary term of the integration by parts.
double loss_bound_impl(double log_eps, const WeightSpec& L, const ApproxSpec& psi, double delta,
                       double zeta, bool sharp) {
  const double pi = std::numbers::pi;
  double a = std::abs(log_eps);
  double logT = psi.log_inverse_at_log(zeta * a);  // T = Psi^{-1}(eps^{-zeta})
  if (!(logT >= 0)) return std::numeric_limits<double>::infinity();
  double LT = L.log_at_log(logT);
  double first = std::exp(std::log(150 * delta / pi) + std::log(a) - LT);
  double I = brjuno_russmann_integral_log(L, psi, logT, 1e-12);
  if (!std::isfinite(I)) return I;
  double bracket = I;
  if (sharp) bracket -= std::exp(std::log(zeta) + std::log(a) - LT);
  return first + 150 * delta / (pi * zeta * std::log(2 * delta)) * bracket;
}
}  // namespace

double loss_integral_bound(double log_eps, const WeightSpec& L, const ApproxSpec& psi, double delta,
                           double zeta) {
  return loss_bound_impl(log_eps, L, psi, delta, zeta, false);
}

double loss_integral_bound_sharp(double log_eps, const WeightSpec& L, const ApproxSpec& psi,
                                 double delta, double zeta) {
  return loss_bound_impl(log_eps, L, psi, delta, zeta, true);
}

KamSchedule build_schedule(double r0, double log_eps0, const WeightSpec& L, const ApproxSpec& psi,
                           double delta, double zeta, int k_max, double kappa) {
  if (!(r0 > 0)) throw InputError("schedule", "r0 must be positive");
  if (!(log_eps0 < 0)) throw InputError("schedule", "epsilon0 must lie in (0,1)");
  if (k_max < 0) throw InputError("schedule", "k_max must be >= 0");
  KamSchedule s;
  s.delta = delta;
  s.zeta = zeta;
  double r = r0;
  for (int k = 0; k <= k_max; ++k) {
    double le = log_eps0 * std::pow(2 * delta, k);
    if (!std::isfinite(le)) break;
    StepParams p = step_parameters(r, le, L, psi, delta, zeta, kappa);
    s.entries.push_back({k, le, r, p.N, p.log_N, p.R, p.log_R, p.log_kappa2, p.r_loss});
    if (k < k_max && p.exhausted) {
      s.truncated = true;
      s.exhausted_at = k + 1;
      break;
    }
    r = p.r_next;
  }

  double sum = 0;
  int K = 0;
  for (; K < 400; ++K) {
    double le = log_eps0 * std::pow(2 * delta, K);
    if (!std::isfinite(le)) break;
    double t = loss_term(le, L, psi, delta, zeta);
    // relative cut: with the asymptotic constants the first loss is ~1e-113 and must still be summed
    if (t == 0 || t < 1e-18 * sum) break;
    sum += t;
  }
  s.terms_summed = K;
  double leK = log_eps0 * std::pow(2 * delta, K);
  s.tail_bound = std::isfinite(leK) ? loss_integral_bound_sharp(leK, L, psi, delta, zeta) : 0.0;
  if (s.tail_bound < 0) s.tail_bound = 0;
  s.series_sum = sum + s.tail_bound;
  s.r_limit = r0 - s.series_sum;
  s.integral_bound = loss_integral_bound(log_eps0, L, psi, delta, zeta);
  s.integral_bound_sharp = loss_integral_bound_sharp(log_eps0, L, psi, delta, zeta);
  s.assumption_holds = s.integral_bound < r0;
  return s;
}

bool SmallnessReport::all_pass() const {
  return std::all_of(items.begin(), items.end(), [](const Inequality& q) { return q.pass; });
}

const Inequality* SmallnessReport::find(const std::string& name) const {
  for (auto& q : items)
    if (q.name == name) return &q;
  return nullptr;
}

namespace {
// log(sum exp(x_i))
double lse(std::initializer_list<double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}
double lse(const std::vector<double>& xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}
}  // namespace

// Every inequality is compared as log(lhs) <= log(rhs); e = log eps.
SmallnessReport check_smallness(double e, double kappa, double C0, double zeta, double delta, int l) {
  SmallnessReport rep;
  const double pi = std::numbers::pi;
  const double lk = std::log(kappa), lc = std::log(C0);
  auto push = [&](std::string name, double lhs, double rhs) {
    // relative slack for rounding in the log evaluation
    double slack = 1e-12 * std::max({1.0, std::abs(lhs), std::abs(rhs)});
    rep.items.push_back({std::move(name), lhs, rhs, lhs <= rhs + slack});
  };
  const double z1728 = 1.0 / 1728;

  push("cond1.1", lse({std::log(0.5) + lk + z1728 * e, 845.0 / 864 * e}), std::log(0.75) + lk + z1728 * e);
  push("cond1.2", std::log(4.0) + 2 * lc - 13 * lk + (-13 * zeta - 3 * zeta + 1 - 2 * zeta) * e, 7.0 / 8 * e);
  push("cond1.3",
       std::log(8.0) + 2 * lc + (1 - 2 * zeta - 1.0 / 96) * e +
           lse({100 * delta * e, std::log(3.0) + (1 - 6 * zeta) * e}),
       (1.5 - 4 * zeta - 1.0 / 96) * e);

  // log(eps^{-zeta/2} + 1)
  double l_half = lse({-zeta / 2 * e, 0.0});
  push("cond2.0.0", (1 - 576 * zeta) * e, -96 * std::log(2 * C0) + 576 * (lk - std::log(32.0) - l_half));

  double den0 = lse({0.0, std::log(1 + pi) - zeta / 2 * e, 23.0 / 24 * e});
  push("cond2.0", (1.25 - 1.0 / 48) * e,
       2 * (std::log(0.75) + lk - lc + zeta * e - std::log(32.0) - den0) + 2 * zeta * e);

  for (int j = 2; j <= l; ++j) {
    std::vector<double> terms{0.0, 23.0 / 24 * e, std::log(1 + pi) - zeta / 2 * e};
    for (int i = 1; i <= j - 1; ++i) terms.push_back((std::pow(1.25, i) - 1.0 / 96) * e);
    double den = lse(terms);
    push("cond2.1[j=" + std::to_string(j) + "]", (std::pow(1.25, j) - 1.0 / 48) * e,
         2 * (j * std::log(0.75) + lk - lc + zeta * e - std::log(32.0) - den) + 2 * zeta * e);
  }
  for (int j = 2; j <= l; ++j) {
    double p = std::pow(1.25, j - 1);
    double lhs = std::log(256.0) + 2 * lc - 14 * zeta * e - 13 * ((j - 1) * std::log(0.75) + lk - lc) + p * e +
                 lse({50 * delta / l * e, p * e});
    push("cond2.2[j=" + std::to_string(j) + "]", lhs, std::pow(1.25, j) * e);
  }
  {
    std::vector<double> terms{23.0 / 24 * e, std::log(pi) - zeta / 2 * e};
    for (int i = 1; i <= l; ++i) terms.push_back((std::pow(1.25, i) - 1.0 / 48) * e);
    push("cond2.3", lse(terms), -zeta * e);
  }
  push("cond2.4", lse({std::log(0.5) + lk + zeta * e, std::log(2.0) + (1.25 - 1.0 / 48) * e}), lk + zeta * e);
  push("cond2.5.2", lse({-zeta / 2 * e, 23.0 / 24 * e, std::log(pi) - zeta * e}), -2 * zeta * e);
  push("cond2.6", lse({std::log(4.0) + (-2 * zeta + 59.0 / 48) * e, std::log(2.0) + (1.25 - 1.0 / 48) * e}), e);
  push("cond2.7", lse({std::log(2.0) + 0.5 * e, std::log(2.0) + 7.0 / 8 * e}), 0.25 * e);
  return rep;
}

}  // namespace kam
