#include "kam/trace_io.hpp"

#include <cmath>
#include <ostream>

namespace kam {

using oj = nlohmann::ordered_json;

oj num(double x) { return std::isfinite(x) ? oj(x) : oj(nullptr); }

namespace {
oj flags_json(const std::vector<Flag>& fl) {
  oj a = oj::array();
  for (auto& f : fl) a.push_back({{"name", f.name}, {"pass", f.pass}, {"lhs", num(f.lhs)}, {"rhs", num(f.rhs)}});
  return a;
}

oj mat_json(const RMat2& A) { return oj::array({num(A(0, 0)), num(A(0, 1)), num(A(1, 0)), num(A(1, 1))}); }
}  // namespace

oj step_json(const StepReport& s, int dim) {
  oj j;
  j["k"] = s.k;
  j["branch"] = to_string(s.branch);
  j["log_eps_before"] = num(s.log_eps_before);
  j["log_eps_after"] = num(s.log_eps_after);
  j["r"] = num(s.r_after);
  j["r_before"] = num(s.r_before);
  j["N"] = num(s.N);
  j["R"] = num(s.R);
  j["kappa2"] = num(s.kappa2);
  j["norm_A"] = num(s.norm_A_after);
  if (s.branch == Branch::resonant) {
    oj m = oj::array();
    for (int i = 0; i < dim; ++i) m.push_back(s.renorm.m2[i] / 2.0);
    j["resonance_m"] = m;
    j["rotation_shift"] = num(s.renorm.shift);
  } else {
    j["resonance_m"] = nullptr;
  }
  j["residual"] = num(s.residual);
  j["residual_ok"] = s.residual_ok;
  j["order_capped"] = s.order_capped;
  oj sub = oj::array();
  for (auto& b : s.sub)
    sub.push_back({{"norm_F", num(b.norm_F)},
                   {"norm_F_next", num(b.norm_F_next)},
                   {"residual", num(b.residual)},
                   {"gate_ok", b.gate_ok},
                   {"br_after", b.br_after},
                   {"cohomology_within_bound", b.coh.within_paper},
                   {"lowered_separation", b.lowered_separation}});
  j["substeps"] = sub;
  j["estimate_flags"] = flags_json(s.flags);
  return j;
}

oj summary_json(const ReductionTrace& t) {
  oj j;
  j["summary"] = true;
  j["steps"] = t.steps.size();
  j["outcome"] = to_string(t.outcome);
  j["target_reached"] = t.target_reached;
  j["log_eps"] = num(t.log_eps);
  j["r_eps"] = num(t.r_eps);
  j["A_eps"] = mat_json(t.final_state.A);
  j["final_residual"] = num(t.final_residual);
  j["residual_ok"] = t.all_residuals_ok();
  j["z_dev"] = num(t.z_dev);
  j["zinv_dev"] = num(t.zinv_dev);
  j["z_dev_bound"] = num(t.z_dev_bound);
  j["rotation_shift_total"] = num(t.final_state.rotation_shift_total);
  j["resonance_events"] = flags_json(t.resonance_events);
  if (!t.error_code.empty()) j["error"] = {{"code", t.error_code}, {"message", t.error_message}};
  return j;
}

void write_trace_jsonl(std::ostream& os, const ReductionTrace& t) {
  const int d = t.F0.dim();
  for (auto& s : t.steps) os << step_json(s, d).dump() << "\n";
  os << summary_json(t).dump() << "\n";
}

oj error_json(const std::string& kind, const std::string& code, const std::string& message) {
  return {{"error", kind}, {"code", code}, {"message", message}};
}

}  // namespace kam
