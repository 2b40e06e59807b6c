#pragma once
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kam/cohomology.hpp"
#include "kam/resonance.hpp"

namespace kam {

enum class EngineMode { paper, practical };
const char* to_string(EngineMode m);

struct StepConfig {
  EngineMode mode = EngineMode::practical;
  double delta = 1.1;
  double zeta = 0.01;
  int l = 3;
  double kappa = 0.5;  // Diophantine constant of omega
  WeightSpec L = WeightSpec::analytic();
  ApproxSpec psi = ApproxSpec::power(2.0);
  double residual_tol = 1e-9;
  double det_tol = -1;  // <= 0: relative default rule
  int max_steps = 8;
  double target_log_eps = -30;  // stop once log eps <= this
  // practical-mode schedule
  double radius_budget = 0.5;       // total radius spent, as a fraction of r0
  double truncation_constant = 1.0;
  double max_order = 400;           // cap on R*N
  int window = 5;                   // nonresonant steps for the reducible-candidate verdict
  double exp_tol = 1e-20;           // absolute, weighted
  double prune_tol = 1e-24;         // absolute, weighted, for perturbation coefficients

  static StepConfig paper_defaults();
  // throws InputError
  void validate() const;
};

struct Flag {
  std::string name;
  bool pass;
  double lhs, rhs;  // the compared quantities, lhs <= rhs expected
};

struct BasicReport {
  double r = 0, r_next = 0, order = 0, kappa_p = 0;
  double norm_F = 0;       // |F|_r
  double norm_F_next = 0;  // |F'|_{r'}
  double norm_X = 0;
  double gate_value = 0, gate_bound = 0;
  bool gate_ok = true;
  bool br_after = true;  // A' at 3 kappa'/4, order N~
  double br_margin = 0;
  bool lowered_separation = false;
  CohomologyDiag coh;
  double pruned = 0;
  double residual = 0;  // |dE - (A~+F)E + E(A'+F')|_{r'}
  size_t modes_next = 0;
};

struct BasicStep {
  MatrixSeries X, E, Einv;
  RMat2 A_next;
  MatrixSeries F_next;
  BasicReport report;
};

// One step without renormalization: solve at order 3 Ntilde and conjugate by e^X.
BasicStep step_basic(const RMat2& A_tilde, const MatrixSeries& F, double r, double r_next,
                     double Ntilde, double kappa_p, const std::vector<double>& omega,
                     const StepConfig& cfg);

struct ReductionState {
  RMat2 A = RMat2::Zero();
  std::vector<TrivialMap> psi;  // psi = psi[0] psi[1] ...
  MatrixSeries psi_series, psi_inv_series;  // cached products, denom 2
  MatrixSeries Fc;  // psi^{-1} Fbar psi
  double r0 = 0;
  double r = 0;
  double log_eps = 0;  // log |Fbar|_r
  int k = 0;
  Index m_total{};  // sum of doubled resonance vectors
  double rotation_shift_total = 0;

  static ReductionState initial(const RMat2& A0, const MatrixSeries& F0, double r0,
                                const WeightSpec& L);
};

enum class Branch { nonresonant, resonant };
const char* to_string(Branch b);

struct StepReport {
  int k = 0;
  Branch branch = Branch::nonresonant;
  std::optional<TrivialMap> phi;
  RenormReport renorm;
  double log_eps_before = 0, log_eps_after = 0;
  double r_before = 0, r_after = 0;
  double N = 0, R = 0, RN = 0, kappa2 = 0, C0 = 1;
  bool order_capped = false;
  double norm_A_before = 0, norm_A_after = 0;
  double norm_Fc_after = 0;  // |psi'^{-1} Fbar' psi'|_{r''}
  std::vector<BasicReport> sub;
  std::vector<Flag> flags;
  double residual = 0;  // conjugation residual of Z' between the two systems, at r''
  bool residual_ok = true;
  double z_dev = 0, zinv_dev = 0;  // |Z'^{+-1} - Id|_{r''}
  double psi_norm = 0, psi_inv_norm = 0;
};

struct FullStep {
  ReductionState state;
  MatrixSeries Z, Zinv;  // Z' and its inverse, on T^d
  StepReport report;
};

// Renormalization, conjugation of the stored perturbation and the first basic step.
struct RenormStep {
  ReductionState state;  // psi' already extended, A and Fc after the first basic step
  TrivialMap phi;
  BasicStep basic;
  RenormReport renorm;
};

struct Schedule1 {  // parameters of one full step
  double N, R, RN, log_kappa2, r_next;
  bool capped = false;
};
Schedule1 full_step_parameters(const ReductionState& s, const StepConfig& cfg, int dim);

RenormStep step_renorm(const ReductionState& s, const Schedule1& p,
                       const std::vector<double>& omega, const StepConfig& cfg);

FullStep full_step(const ReductionState& s, const std::vector<double>& omega,
                   const StepConfig& cfg);

// Constant part and perturbation in the original frame.
MatrixSeries system_series(const std::vector<TrivialMap>& psi, const RMat2& A,
                           const MatrixSeries& Fc, const std::vector<double>& omega);
MatrixSeries conj_chain(const std::vector<TrivialMap>& psi, const MatrixSeries& G, bool inverse_side);

// |dZ - B Z + Z C|_{L,r}
double conjugation_residual(const MatrixSeries& Z, const MatrixSeries& B, const MatrixSeries& C,
                            const std::vector<double>& omega, const WeightSpec& L, double r);

enum class Outcome { reducible_candidate, recurrent_resonances };
const char* to_string(Outcome o);

struct ReductionTrace {
  std::vector<StepReport> steps;
  RMat2 A0;
  MatrixSeries F0;
  double r0 = 0;
  ReductionState final_state;
  MatrixSeries Z, Zinv;
  MatrixSeries A_bar, F_bar;  // reduced system in the original-frame coordinates
  double r_eps = 0, log_eps = 0;
  Outcome outcome = Outcome::reducible_candidate;
  bool target_reached = false;
  int trailing_nonresonant = 0;
  double final_residual = 0;  // |dZ - (A0+F0)Z + Z(Abar+Fbar)|_{r_eps}
  bool residual_ok = true;
  double z_dev = 0, zinv_dev = 0, z_dev_bound = 0;  // telescoping 2 sum eps_i^{9/10}
  std::vector<double> dZ_norms;                   // |dZ|_{r_k} after each step
  std::vector<Flag> resonance_events;             // |A_k| <= kappa eps_k^zeta after resonant steps
  std::string error_code, error_message;          // set when a step aborted

  bool all_residuals_ok() const;
};

class ReductionError : public NumericalError {
 public:
  ReductionError(const KamError& e, std::shared_ptr<ReductionTrace> partial)
      : NumericalError(e.code(), e.what()), partial_(std::move(partial)) {}
  const ReductionTrace& partial() const { return *partial_; }

 private:
  std::shared_ptr<ReductionTrace> partial_;
};

ReductionTrace almost_reduce(const RMat2& A0, const MatrixSeries& F0, double r0,
                             const std::vector<double>& omega, const StepConfig& cfg);

struct DensityResult {
  MatrixSeries H;
  ReductionTrace trace;
  MatrixSeries W;  // Z psi on the doubled torus
  double distance = 0;   // |H - G|_rho
  double bound = 0;      // 4 |Fbar|_rho
  double residual = 0;   // |dW - H W + W A_eps|_rho
  double rho = 0;
};

// G = A + perturbation; returns H close to G reducible to the constant A_eps.
DensityResult density_approximant(const MatrixSeries& G, double r0, const std::vector<double>& omega,
                                  const StepConfig& cfg);

}  // namespace kam
