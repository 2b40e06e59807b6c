#pragma once
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "kam/lattice.hpp"

namespace kam {

// Increasing function on [0,inf): either t^p or a monotone cubic through samples,
// continued past the last sample by its log-log slope. Every accessor has a
// log-space twin so that arguments like exp(1e8) never have to be formed.
class MonotoneFn {
 public:
  enum class Kind { power, tabulated };

  static MonotoneFn power(double p);
  static MonotoneFn table(std::vector<double> t, std::vector<double> v);

  Kind kind() const { return kind_; }
  double exponent() const { return p_; }
  const std::vector<double>& knots() const { return t_; }
  const std::vector<double>& values() const { return v_; }

  double operator()(double t) const;
  double inverse(double y) const;
  double derivative(double t) const;
  double log_at_log(double u) const;          // log f(e^u)
  double log_inverse_at_log(double L) const;  // log f^{-1}(e^L)
  double elasticity(double u) const;          // d log f / d log t at t = e^u

 private:
  double interp(double t) const;
  double interp_prime(double t) const;

  Kind kind_ = Kind::power;
  double p_ = 1.0;
  std::vector<double> t_, v_, m_;  // knots, values, hermite slopes
  double lo_slope_ = 1.0, hi_slope_ = 1.0;
};

class WeightSpec {
 public:
  enum class Kind { analytic, gevrey, tabulated };

  static WeightSpec analytic();
  static WeightSpec gevrey(double s);
  static WeightSpec tabulated(std::vector<double> t, std::vector<double> v);

  Kind kind() const { return kind_; }
  double gevrey_s() const { return s_; }
  const MonotoneFn& fn() const { return f_; }
  std::string describe() const;

  double operator()(double t) const { return f_(t); }
  double inverse(double y) const { return f_.inverse(y); }
  double derivative(double t) const { return f_.derivative(t); }
  double log_at_log(double u) const { return f_.log_at_log(u); }
  double log_inverse_at_log(double L) const { return f_.log_inverse_at_log(L); }
  double elasticity(double u) const { return f_.elasticity(u); }

 private:
  Kind kind_ = Kind::analytic;
  double s_ = 1.0;
  MonotoneFn f_ = MonotoneFn::power(1.0);
};

class ApproxSpec {
 public:
  enum class Kind { power, tabulated };

  static ApproxSpec power(double tau);
  static ApproxSpec tabulated(std::vector<double> t, std::vector<double> v);

  Kind kind() const { return kind_; }
  double tau() const { return f_.exponent(); }
  const MonotoneFn& fn() const { return f_; }
  std::string describe() const;

  double operator()(double t) const { return f_(t); }
  double inverse(double y) const { return f_.inverse(y); }
  double derivative(double t) const { return f_.derivative(t); }
  double log_at_log(double u) const { return f_.log_at_log(u); }
  double log_inverse_at_log(double L) const { return f_.log_inverse_at_log(L); }
  double elasticity(double u) const { return f_.elasticity(u); }

 private:
  Kind kind_ = Kind::power;
  MonotoneFn f_ = MonotoneFn::power(2.0);
};

// Two-column `t value` table, '#' comments.
std::pair<std::vector<double>, std::vector<double>> read_table(const std::string& path);

// Sampled structural checks; an empty string means the property held.
std::string check_weight_properties(const WeightSpec& L, double t_max = 1e3);
std::string check_approx_properties(const ApproxSpec& P, double t_max = 1e3);

struct Frequency {
  std::vector<double> omega;
  std::optional<double> kappa;
  int dim() const { return static_cast<int>(omega.size()); }
};

void validate_frequency(const Frequency& w);

struct FrequencyCheck {
  double kappa_max;
  std::vector<int> worst_k;
};

// min over 0<|k|<=K of |<k,w>| Psi(|k|); k and -k give the same value so the scan
// walks the half-lattice whose first nonzero entry is positive.
FrequencyCheck check_frequency(const Frequency& w, const ApproxSpec& psi, int K);

// Integral of L'(t) ln Psi(t) / L(t)^2 over [lower, inf); +inf when it looks divergent.
double brjuno_russmann_integral(const WeightSpec& L, const ApproxSpec& psi, double lower,
                                double tol);
// Same with the lower bound passed as log(lower), which may be astronomically large.
double brjuno_russmann_integral_log(const WeightSpec& L, const ApproxSpec& psi,
                                    double log_lower, double tol);

struct StepParams {
  double N = 0, log_N = 0;
  double R = 0, log_R = 0;
  double log_RN = 0;
  double log_kappa2 = 0;  // log of kappa * eps^zeta
  double r_next = 0;
  double r_loss = 0;
  bool exhausted = false;   // r_next <= 0
  bool R_below_2 = false;
};

StepParams step_parameters(double r, double log_eps, const WeightSpec& L, const ApproxSpec& psi,
                           double delta, double zeta, double kappa = 1.0);

struct ScheduleEntry {
  int k;
  double log_eps;
  double r;
  double N, log_N;
  double R, log_R;
  double log_kappa2;
  double r_loss;  // r_k - r_{k+1}
};

struct KamSchedule {
  double delta, zeta;
  int l = 56;
  std::vector<ScheduleEntry> entries;
  bool truncated = false;   // some r_k <= 0
  int exhausted_at = -1;
  double series_sum = 0;    // partial sum plus tail bound of the r losses
  double tail_bound = 0;
  int terms_summed = 0;
  double r_limit = 0;       // r0 - series_sum
  double integral_bound = 0;        // displayed bound on the whole loss sum, from eps0
  double integral_bound_sharp = 0;  // same chain before the boundary term is dropped
  bool assumption_holds = false;  // integral_bound < r0
};

KamSchedule build_schedule(double r0, double log_eps0, const WeightSpec& L, const ApproxSpec& psi,
                           double delta, double zeta, int k_max, double kappa = 1.0);

// Bound on sum_{k>=0} loss_k for a schedule started at log_eps.
double loss_integral_bound(double log_eps, const WeightSpec& L, const ApproxSpec& psi,
                           double delta, double zeta);
// Tighter variant keeping -ln Psi(T)/L(T) from the integration by parts.
double loss_integral_bound_sharp(double log_eps, const WeightSpec& L, const ApproxSpec& psi,
                                 double delta, double zeta);

struct Inequality {
  std::string name;
  double lhs_log;
  double rhs_log;
  bool pass;
  double margin() const { return rhs_log - lhs_log; }
};

struct SmallnessReport {
  std::vector<Inequality> items;
  bool all_pass() const;
  const Inequality* find(const std::string& name) const;
};

SmallnessReport check_smallness(double log_eps, double kappa, double C0, double zeta, double delta,
                                int l = 56);

}  // namespace kam
