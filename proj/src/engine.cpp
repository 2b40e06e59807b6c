#include "kam/engine.hpp"

#include <cmath>
#include <numbers>

namespace kam {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2 * kPi;

double wnorm(const MatrixSeries& F, const StepConfig& cfg, double r) {
  return weighted_norm(F, cfg.L, r);
}

double safe_log(double x) { return x > 0 ? std::log(x) : -std::numeric_limits<double>::infinity(); }

// Drop coefficients whose weighted size is below tol / #modes; returns the dropped weighted mass.
double prune_weighted(MatrixSeries& F, const WeightSpec& L, double r, double tol) {
  if (tol <= 0 || F.empty()) return 0;
  const double thr = tol / static_cast<double>(F.size());
  std::vector<Index> drop;
  double lost = 0;
  for (auto& [h, M] : F.coeffs()) {
    double c = M.cwiseAbs().maxCoeff();
    if (c == 0) {
      drop.push_back(h);
      continue;
    }
    double w = std::exp(std::log(c) + kTwoPi * L(F.frequency_l1(h)) * r);
    if (w < thr) {
      drop.push_back(h);
      lost += w;
    }
  }
  for (auto& h : drop) F.erase(h);
  F.add_error(lost);
  return lost;
}

RMat2 traceless_real(const Mat2& M) {
  RMat2 A = M.real();
  double t = A.trace() / 2;
  A(0, 0) -= t;
  A(1, 1) -= t;
  return A;
}

void add_flag(std::vector<Flag>& f, std::string name, double lhs, double rhs) {
  f.push_back({std::move(name), lhs <= rhs * (1 + 1e-12), lhs, rhs});
}

double dev_from_identity(const MatrixSeries& Z, const WeightSpec& L, double r) {
  return weighted_norm(Z - MatrixSeries::identity(Z.dim(), Z.denom()), L, r);
}
}  // namespace

const char* to_string(EngineMode m) { return m == EngineMode::paper ? "paper" : "practical"; }
const char* to_string(Branch b) { return b == Branch::resonant ? "resonant" : "nonresonant"; }
const char* to_string(Outcome o) {
  return o == Outcome::reducible_candidate ? "reducible-candidate" : "recurrent-resonances";
}

StepConfig StepConfig::paper_defaults() {
  StepConfig c;
  c.mode = EngineMode::paper;
  c.delta = 100000;
  c.zeta = 1.0 / 1728;
  c.l = 56;
  return c;
}

void StepConfig::validate() const {
  if (mode == EngineMode::paper) {
    if (delta != 100000 || std::abs(zeta - 1.0 / 1728) > 1e-15 || l != 56)
      throw InputError("config", "paper mode fixes delta=100000, zeta=1/1728, l=56");
  } else {
    if (!(delta >= 1.05)) throw InputError("config", "delta must be >= 1.05");
    if (!(zeta > 0 && zeta < 0.125)) throw InputError("config", "zeta must lie in (0,1/8)");
    if (l < 1) throw InputError("config", "l must be >= 1");
  }
  if (!(kappa > 0 && kappa <= 1)) throw InputError("config", "kappa must lie in (0,1]");
  if (!(residual_tol >= 0)) throw InputError("config", "residual_tol must be >= 0");
  if (max_steps < 0) throw InputError("config", "max_steps must be >= 0");
  if (!(radius_budget > 0 && radius_budget < 1)) throw InputError("config", "radius_budget must lie in (0,1)");
  if (!(truncation_constant > 0)) throw InputError("config", "truncation_constant must be positive");
  if (!(max_order >= 1)) throw InputError("config", "max_order must be >= 1");
  if (window < 1) throw InputError("config", "window must be >= 1");
  if (!(exp_tol > 0)) throw InputError("config", "exp_tol must be positive");
  if (!(prune_tol >= 0)) throw InputError("config", "prune_tol must be >= 0");
}

ReductionState ReductionState::initial(const RMat2& A0, const MatrixSeries& F0, double r0,
                                       const WeightSpec& L) {
  ReductionState s;
  s.A = A0;
  s.Fc = F0.reduced();
  if (s.Fc.denom() != 1) throw InputError("series", "perturbation must live on the standard torus");
  s.psi_series = MatrixSeries::identity(F0.dim(), 2);
  s.psi_inv_series = s.psi_series;
  s.r0 = s.r = r0;
  s.log_eps = safe_log(weighted_norm(F0, L, r0));
  return s;
}

BasicStep step_basic(const RMat2& A_tilde, const MatrixSeries& F, double r, double r_next,
                     double Ntilde, double kappa_p, const std::vector<double>& omega,
                     const StepConfig& cfg) {
  validate_sl2(A_tilde);
  if (!(r_next > 0 && r_next <= r)) throw NumericalError("radius", "radius schedule exhausted");
  BasicStep out;
  BasicReport& rep = out.report;
  rep.r = r;
  rep.r_next = r_next;
  rep.order = Ntilde;
  rep.kappa_p = kappa_p;
  rep.norm_F = wnorm(F, cfg, r);

  const Mat2 F0 = F.mean();
  const double psiN = cfg.psi(std::max(1.0, Ntilde));
  rep.gate_value = mat_norm(F0);
  rep.gate_bound = std::pow(kappa_p / (32 * (1 + mat_norm(A_tilde))), 2) / (psiN * psiN);
  rep.gate_ok = rep.gate_value <= rep.gate_bound;

  SpectralData S = classify(A_tilde, cfg.det_tol);
  CohomologyOptions opt;
  if (S.has_projections() && S.separation < kappa_p) {
    opt.min_separation = S.separation;
    rep.lowered_separation = true;
  }
  auto sol = solve_cohomological(A_tilde, F, omega, cfg.psi, kappa_p, 3 * Ntilde, opt);
  rep.coh = sol.diag;
  out.X = std::move(sol.X);
  rep.norm_X = wnorm(out.X, cfg, r);

  out.A_next = traceless_real(A_tilde.cast<cd>() + F0);
  const Mat2 At = A_tilde.cast<cd>();
  const Mat2 An = out.A_next.cast<cd>();
  out.E = exp_series(out.X, cfg.L, r, cfg.exp_tol);
  out.Einv = exp_series(cd(-1.0) * out.X, cfg.L, r, cfg.exp_tol);

  // F' = e^{-X} [ (A~ + F) e^X - d e^X ] - A'
  MatrixSeries B = F + MatrixSeries::constant(F.dim(), At);
  MatrixSeries G = multiply(B, out.E) - derive_omega(out.E, omega) - out.E.right(An);
  MatrixSeries Fn = multiply(out.Einv, G);
  if (F.is_real()) Fn.symmetrize();
  rep.pruned = prune_weighted(Fn, cfg.L, r_next, cfg.prune_tol);
  rep.norm_F_next = wnorm(Fn, cfg, r_next);
  rep.modes_next = Fn.size();

  MatrixSeries res = derive_omega(out.E, omega) - multiply(B, out.E) +
                     multiply(out.E, Fn + MatrixSeries::constant(F.dim(), An));
  rep.residual = wnorm(res, cfg, r_next);

  BrCheck br = is_br_spectrum(out.A_next, omega, cfg.psi, 0.75 * kappa_p, std::max(1.0, Ntilde));
  rep.br_after = br.pass;
  rep.br_margin = br.margin;
  out.F_next = std::move(Fn);
  return out;
}

Schedule1 full_step_parameters(const ReductionState& s, const StepConfig& cfg, int dim) {
  Schedule1 p{};
  const double abs_log = -s.log_eps;
  if (!(abs_log > 0)) throw InputError("eps", "perturbation norm must be below 1");
  if (cfg.mode == EngineMode::paper) {
    SmallnessReport sm = check_smallness(s.log_eps, cfg.kappa, 1.0, cfg.zeta, cfg.delta, cfg.l);
    if (!sm.all_pass()) {
      for (auto& it : sm.items)
        if (!it.pass)
          throw InputError("smallness", "eps too large for the asymptotic constants: " + it.name + " fails");
    }
    StepParams sp = step_parameters(s.r, s.log_eps, cfg.L, cfg.psi, cfg.delta, cfg.zeta, cfg.kappa);
    if (sp.exhausted) throw NumericalError("schedule", "radius schedule exhausted");
    if (sp.log_RN > std::log(cfg.max_order) || dim * sp.log_RN > std::log(kMaxScanPoints))
      throw InputError("order", "paper-mode order exceeds the computable range");
    p.N = sp.N;
    p.R = sp.R;
    p.RN = std::exp(sp.log_RN);
    p.log_kappa2 = sp.log_kappa2;
    p.r_next = sp.r_next;
    return p;
  }
  const double loss = cfg.radius_budget * s.r0 * std::ldexp(1.0, -(s.k + 1));
  p.r_next = s.r - loss;
  if (!(p.r_next > 0)) throw NumericalError("schedule", "radius schedule exhausted");
  double target = cfg.truncation_constant * cfg.delta * abs_log / (kPi * loss);
  double order = std::max(1.0, cfg.L.inverse(target));
  if (order > cfg.max_order) {
    order = cfg.max_order;
    p.capped = true;
  }
  if (l1_ball_size(dim, std::floor(order)) > kMaxScanPoints)
    throw InputError("order", "order^d exceeds the scan limit");
  p.RN = order;
  p.R = 2;
  p.N = order / 2;
  p.log_kappa2 = std::log(cfg.kappa) + cfg.zeta * s.log_eps;
  return p;
}

MatrixSeries conj_chain(const std::vector<TrivialMap>& psi, const MatrixSeries& G, bool inverse_side) {
  MatrixSeries S = G;
  if (inverse_side) {
    for (const auto& phi : psi) S = conj_by_trivial(phi, S, true);
  } else {
    for (auto it = psi.rbegin(); it != psi.rend(); ++it) S = conj_by_trivial(*it, S, false);
  }
  return S;
}

MatrixSeries system_series(const std::vector<TrivialMap>& psi, const RMat2& A,
                           const MatrixSeries& Fc, const std::vector<double>& omega) {
  MatrixSeries S = Fc + MatrixSeries::constant(Fc.dim(), A.cast<cd>());
  for (auto it = psi.rbegin(); it != psi.rend(); ++it) {
    S = conj_by_trivial(*it, S, false);
    // d(Phi) Phi^{-1} = 2 pi i <m,w> (P1 - P2)
    Mat2 drift = cd(0, kPi * dot(it->m2, omega)) * (it->P1 - it->P2);
    S += MatrixSeries::constant(S.dim(), Mat2(drift.real().cast<cd>()));
  }
  return S;
}

double conjugation_residual(const MatrixSeries& Z, const MatrixSeries& B, const MatrixSeries& C,
                            const std::vector<double>& omega, const WeightSpec& L, double r) {
  MatrixSeries res = derive_omega(Z, omega) - multiply(B, Z) + multiply(Z, C);
  return weighted_norm(res, L, r);
}

RenormStep step_renorm(const ReductionState& s, const Schedule1& p,
                       const std::vector<double>& omega, const StepConfig& cfg) {
  const double kappa2 = std::exp(p.log_kappa2);
  RenormResult rr = renormalize(s.A, omega, cfg.psi, kappa2, p.RN, p.N);
  RenormStep out{s, rr.phi, {}, rr.report};
  ReductionState& st = out.state;
  if (rr.report.resonant) {
    st.psi.push_back(rr.phi);
    st.psi_series = multiply(st.psi_series, rr.phi.as_series());
    st.psi_inv_series = multiply(rr.phi.inverse_series(), st.psi_inv_series);
    st.Fc = conj_by_trivial(rr.phi, s.Fc, true);
    st.m_total = add(st.m_total, rr.phi.m2);
    st.rotation_shift_total += rr.report.shift;
  }
  SpectralData S = classify(rr.A_tilde, cfg.det_tol);
  double C0 = 1.0;
  if (S.has_projections()) C0 = std::max(1.0, 2 * S.proj_norm * std::pow(std::min(1.0, kappa2), 6));
  const double r_mid = 0.5 * (s.r + p.r_next);
  out.basic = step_basic(rr.A_tilde, st.Fc, s.r, r_mid, p.RN, kappa2 / C0, omega, cfg);
  st.A = out.basic.A_next;
  st.Fc = out.basic.F_next;
  st.r = r_mid;
  return out;
}

FullStep full_step(const ReductionState& s, const std::vector<double>& omega, const StepConfig& cfg) {
  cfg.validate();
  const int d = static_cast<int>(omega.size());
  if (s.Fc.dim() != d) throw InputError("dim", "frequency dimension mismatch");
  if (std::isinf(s.log_eps) && s.log_eps < 0) {
    // nothing left to reduce: the step is the identity
    FullStep out;
    out.state = s;
    out.state.k = s.k + 1;
    out.Z = MatrixSeries::identity(d);
    out.Zinv = out.Z;
    StepReport& rep = out.report;
    rep.k = s.k;
    rep.log_eps_before = rep.log_eps_after = s.log_eps;
    rep.r_before = rep.r_after = s.r;
    rep.norm_A_before = rep.norm_A_after = mat_norm(s.A);
    rep.psi_norm = weighted_norm(s.psi_series, cfg.L, s.r);
    rep.psi_inv_norm = weighted_norm(s.psi_inv_series, cfg.L, s.r);
    return out;
  }
  const Schedule1 p = full_step_parameters(s, cfg, d);
  const double r = s.r, r2 = p.r_next;
  const double kappa2 = std::exp(p.log_kappa2);

  FullStep out;
  StepReport& rep = out.report;
  rep.k = s.k;
  rep.log_eps_before = s.log_eps;
  rep.r_before = r;
  rep.r_after = r2;
  rep.N = p.N;
  rep.R = p.R;
  rep.RN = p.RN;
  rep.kappa2 = kappa2;
  rep.order_capped = p.capped;
  rep.norm_A_before = mat_norm(s.A);

  RenormStep rs = step_renorm(s, p, omega, cfg);
  rep.renorm = rs.renorm;
  rep.branch = rs.renorm.resonant ? Branch::resonant : Branch::nonresonant;
  if (rs.renorm.resonant) rep.phi = rs.phi;
  rep.C0 = std::max(1.0, rs.basic.report.kappa_p > 0 ? kappa2 / rs.basic.report.kappa_p : 1.0);
  rep.sub.push_back(rs.basic.report);

  ReductionState cur = rs.state;
  const double A1_norm = mat_norm(cur.A);
  const double Fc1_norm = wnorm(cur.Fc, cfg, cur.r);
  MatrixSeries E = rs.basic.E, Einv = rs.basic.Einv;
  for (int i = 1; i <= cfg.l; ++i) {
    double kp = std::pow(0.75, i) * kappa2 / rep.C0;
    double ri = 0.5 * (r + r2) - i * (r - r2) / (2.0 * cfg.l);
    if (i == cfg.l) ri = r2;
    BasicStep b = step_basic(cur.A, cur.Fc, cur.r, ri, p.RN, kp, omega, cfg);
    E = multiply(E, b.E);
    Einv = multiply(b.Einv, Einv);
    prune_weighted(E, cfg.L, ri, cfg.prune_tol);
    prune_weighted(Einv, cfg.L, ri, cfg.prune_tol);
    cur.A = b.A_next;
    cur.Fc = std::move(b.F_next);
    cur.r = ri;
    rep.sub.push_back(b.report);
  }
  cur.k = s.k + 1;

  out.Z = conj_chain(cur.psi, E, false);
  out.Zinv = conj_chain(cur.psi, Einv, false);
  MatrixSeries Fbar = conj_chain(cur.psi, cur.Fc, false);
  cur.log_eps = safe_log(wnorm(Fbar, cfg, r2));
  rep.log_eps_after = cur.log_eps;
  rep.norm_A_after = mat_norm(cur.A);
  rep.norm_Fc_after = wnorm(cur.Fc, cfg, r2);

  MatrixSeries B_old = system_series(s.psi, s.A, s.Fc, omega);
  MatrixSeries B_new = system_series(cur.psi, cur.A, cur.Fc, omega);
  rep.residual = conjugation_residual(out.Z, B_old, B_new, omega, cfg.L, r2);
  rep.residual_ok =
      rep.residual < cfg.residual_tol * (1 + std::max(rep.norm_A_before, rep.norm_A_after));
  rep.z_dev = dev_from_identity(out.Z, cfg.L, r2);
  rep.zinv_dev = dev_from_identity(out.Zinv, cfg.L, r2);
  rep.psi_norm = weighted_norm(cur.psi_series, cfg.L, r2);
  rep.psi_inv_norm = weighted_norm(cur.psi_inv_series, cfg.L, r2);

  const double le = s.log_eps;
  auto& f = rep.flags;
  add_flag(f, "norm_A_after_renorm", A1_norm, rep.norm_A_before + std::exp(le * 23.0 / 24) + kPi * p.N);
  add_flag(f, "norm_A_weak_chain", rep.norm_A_after, rep.norm_A_before + std::exp(-cfg.zeta * le));
  if (rs.renorm.resonant) {
    add_flag(f, "resonant_A1_small", A1_norm, 0.75 * kappa2);
    add_flag(f, "resonant_A_final_small", rep.norm_A_after, kappa2);
  }
  add_flag(f, "conjugated_perturbation", Fc1_norm, std::exp(1.25 * le));
  add_flag(f, "eps_target", std::exp(cur.log_eps), std::exp(2 * cfg.delta * le));
  add_flag(f, "psi_bound", std::max(rep.psi_norm, rep.psi_inv_norm), std::exp(-2 * cfg.delta * cfg.zeta * le));
  add_flag(f, "Z_bound", std::max(rep.z_dev, rep.zinv_dev), std::exp(0.9 * le));
  for (auto& b : rep.sub) {
    if (!b.gate_ok) add_flag(f, "fourier_mean_gate", b.gate_value, b.gate_bound);
  }

  if (cfg.mode == EngineMode::paper) {
    for (auto& fl : f)
      if (!fl.pass) throw NumericalError("estimate", "paper-mode estimate fails: " + fl.name);
  }
  if (!(cur.log_eps < s.log_eps))
    throw NumericalError("blowup", "perturbation did not decrease over the step");
  out.state = std::move(cur);
  return out;
}

bool ReductionTrace::all_residuals_ok() const {
  if (!residual_ok) return false;
  for (auto& s : steps)
    if (!s.residual_ok) return false;
  return true;
}

ReductionTrace almost_reduce(const RMat2& A0, const MatrixSeries& F0, double r0,
                             const std::vector<double>& omega, const StepConfig& cfg) {
  cfg.validate();
  validate_sl2(A0);
  if (!(r0 > 0)) throw InputError("radius", "r0 must be positive");
  if (F0.dim() != static_cast<int>(omega.size())) throw InputError("dim", "frequency dimension mismatch");
  if (!F0.is_real(1e-12 * std::max(1.0, weighted_norm(F0, cfg.L, 0))))
    throw InputError("series", "perturbation is not real-valued");

  auto tr = std::make_shared<ReductionTrace>();
  tr->A0 = A0;
  tr->F0 = F0;
  tr->r0 = r0;
  ReductionState state = ReductionState::initial(A0, F0, r0, cfg.L);
  const int d = F0.dim();
  tr->Z = MatrixSeries::identity(d);
  tr->Zinv = MatrixSeries::identity(d);
  if (!std::isfinite(state.log_eps) && state.log_eps > 0)
    throw InputError("series", "perturbation norm is not finite");

  auto finalize = [&] {
    ReductionTrace& t = *tr;
    t.final_state = state;
    t.r_eps = state.r;
    t.log_eps = state.log_eps;
    t.A_bar = system_series(state.psi, state.A, MatrixSeries(d), omega);
    t.F_bar = conj_chain(state.psi, state.Fc, false);
    MatrixSeries G = F0 + MatrixSeries::constant(d, A0.cast<cd>());
    t.final_residual = conjugation_residual(t.Z, G, t.A_bar + t.F_bar, omega, cfg.L, t.r_eps);
    double normA = std::max(mat_norm(A0), mat_norm(state.A));
    t.residual_ok = t.final_residual < cfg.residual_tol * (1 + normA);
    t.z_dev = dev_from_identity(t.Z, cfg.L, t.r_eps);
    t.zinv_dev = dev_from_identity(t.Zinv, cfg.L, t.r_eps);
    t.target_reached = state.log_eps <= cfg.target_log_eps;
    int trailing = 0;
    for (auto it = t.steps.rbegin(); it != t.steps.rend() && it->branch == Branch::nonresonant; ++it)
      ++trailing;
    t.trailing_nonresonant = trailing;
    bool last_nonres = t.steps.empty() || t.steps.back().branch == Branch::nonresonant;
    t.outcome = last_nonres && (trailing >= cfg.window || t.target_reached)
                    ? Outcome::reducible_candidate
                    : Outcome::recurrent_resonances;
  };

  while (state.k < cfg.max_steps && state.log_eps > cfg.target_log_eps) {
    FullStep fs;
    try {
      fs = full_step(state, omega, cfg);
    } catch (const NumericalError& e) {
      finalize();
      tr->error_code = e.code();
      tr->error_message = e.what();
      throw ReductionError(e, tr);
    }
    const double eps_before = state.log_eps;
    state = std::move(fs.state);
    tr->Z = multiply(tr->Z, fs.Z);
    tr->Zinv = multiply(fs.Zinv, tr->Zinv);
    prune_weighted(tr->Z, cfg.L, state.r, cfg.prune_tol);
    prune_weighted(tr->Zinv, cfg.L, state.r, cfg.prune_tol);
    tr->z_dev_bound += 2 * std::exp(0.9 * eps_before);
    tr->dZ_norms.push_back(weighted_norm(derive_omega(tr->Z, omega), cfg.L, state.r));
    if (fs.report.branch == Branch::resonant) {
      Flag ev{"k=" + std::to_string(fs.report.k), false, mat_norm(state.A),
              cfg.kappa * std::exp(cfg.zeta * state.log_eps)};
      ev.pass = ev.lhs <= ev.rhs;
      tr->resonance_events.push_back(ev);
    }
    tr->steps.push_back(std::move(fs.report));
  }
  finalize();
  return std::move(*tr);
}

DensityResult density_approximant(const MatrixSeries& G, double r0, const std::vector<double>& omega,
                                  const StepConfig& cfg) {
  const int d = G.dim();
  RMat2 A = traceless_real(G.mean());
  MatrixSeries F0 = G - MatrixSeries::constant(d, A.cast<cd>());
  F0.erase(Index{});
  // a leftover trace part of the mean would make the problem non-sl2
  if (mat_norm(Mat2(G.mean() - A.cast<cd>())) > 1e-12 * std::max(1.0, mat_norm(A)))
    throw InputError("series", "mean of G is not a real traceless matrix");
  DensityResult out;
  out.trace = almost_reduce(A, F0, r0, omega, cfg);
  const ReductionTrace& t = out.trace;
  out.rho = t.r_eps;
  MatrixSeries corr = multiply(multiply(t.Z, t.F_bar), t.Zinv);
  out.H = G - corr;
  out.distance = weighted_norm(corr, cfg.L, out.rho);
  out.bound = 4 * weighted_norm(t.F_bar, cfg.L, out.rho);
  out.W = multiply(t.Z, t.final_state.psi_series);
  const Mat2 Ae = t.final_state.A.cast<cd>();
  MatrixSeries res = derive_omega(out.W, omega) - multiply(out.H, out.W) + out.W.right(Ae);
  out.residual = weighted_norm(res, cfg.L, out.rho);
  return out;
}

}  // namespace kam
