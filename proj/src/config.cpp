#include "kam/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace kam {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i]);
  return s;
}

std::string fmt_mat(const RMat2& A) { return fmt_list({A(0, 0), A(0, 1), A(1, 0), A(1, 1)}); }

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (trim(v.substr(pos)).empty()) return x;
  } catch (const std::exception&) {
  }
  throw InputError("config", "bad number for " + key + ": '" + v + "'");
}

long to_long(const std::string& key, const std::string& v) {
  double x = to_double(key, v);
  if (x != std::floor(x) || std::abs(x) > 9e15) throw InputError("config", "expected an integer for " + key);
  return static_cast<long>(x);
}

RMat2 to_mat(const std::string& key, const std::string& v) {
  auto x = parse_doubles(v);
  if (x.size() != 4) throw InputError("config", key + " needs 4 entries (row-major)");
  RMat2 A;
  A << x[0], x[1], x[2], x[3];
  return A;
}

std::string one_of(const std::string& key, const std::string& v, std::initializer_list<const char*> opts) {
  for (const char* o : opts)
    if (v == o) return v;
  throw InputError("config", "unsupported value for " + key + ": '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> m = {
      {"system.family", [](RunConfig& c, const std::string& v) { c.system.family = one_of("family", v, {"matrix", "schrodinger"}); }},
      {"system.omega", [](RunConfig& c, const std::string& v) { c.system.omega = parse_doubles(v); }},
      {"system.kappa", [](RunConfig& c, const std::string& v) { c.system.kappa = to_double("kappa", v); }},
      {"system.kappa_order", [](RunConfig& c, const std::string& v) { c.system.kappa_order = to_long("kappa_order", v); }},
      {"system.r0", [](RunConfig& c, const std::string& v) { c.system.r0 = to_double("r0", v); }},
      {"system.A", [](RunConfig& c, const std::string& v) { c.system.A = to_mat("A", v); }},
      {"system.perturbation", [](RunConfig& c, const std::string& v) { c.system.perturbation = one_of("perturbation", v, {"none", "cosine", "file"}); }},
      {"system.series_file", [](RunConfig& c, const std::string& v) { c.system.series_file = v; }},
      {"system.mode", [](RunConfig& c, const std::string& v) { c.system.mode = parse_ints(v); }},
      {"system.M", [](RunConfig& c, const std::string& v) { c.system.M = to_mat("M", v); }},
      {"system.scale", [](RunConfig& c, const std::string& v) { c.system.scale = to_double("scale", v); }},
      {"system.energy", [](RunConfig& c, const std::string& v) { c.system.energy = to_double("energy", v); }},
      {"system.lambda", [](RunConfig& c, const std::string& v) { c.system.lambda = to_double("lambda", v); }},
      {"system.potential_file", [](RunConfig& c, const std::string& v) { c.system.potential_file = v; }},
      {"weight.kind", [](RunConfig& c, const std::string& v) { c.weight.kind = one_of("weight.kind", v, {"analytic", "gevrey", "table"}); }},
      {"weight.s", [](RunConfig& c, const std::string& v) { c.weight.s = to_double("weight.s", v); }},
      {"weight.table", [](RunConfig& c, const std::string& v) { c.weight.table = v; }},
      {"approx.kind", [](RunConfig& c, const std::string& v) { c.approx.kind = one_of("approx.kind", v, {"power", "table"}); }},
      {"approx.tau", [](RunConfig& c, const std::string& v) { c.approx.tau = to_double("approx.tau", v); }},
      {"approx.table", [](RunConfig& c, const std::string& v) { c.approx.table = v; }},
      {"engine.mode", [](RunConfig& c, const std::string& v) {
         c.engine.mode = one_of("engine.mode", v, {"paper", "practical"}) == "paper" ? EngineMode::paper : EngineMode::practical;
       }},
      {"engine.delta", [](RunConfig& c, const std::string& v) { c.engine.delta = to_double("delta", v); }},
      {"engine.zeta", [](RunConfig& c, const std::string& v) { c.engine.zeta = to_double("zeta", v); }},
      {"engine.l", [](RunConfig& c, const std::string& v) { c.engine.l = to_long("l", v); }},
      {"engine.residual_tol", [](RunConfig& c, const std::string& v) { c.engine.residual_tol = to_double("residual_tol", v); }},
      {"engine.det_tol", [](RunConfig& c, const std::string& v) { c.engine.det_tol = to_double("det_tol", v); }},
      {"engine.max_steps", [](RunConfig& c, const std::string& v) { c.engine.max_steps = to_long("max_steps", v); }},
      {"engine.target_log_eps", [](RunConfig& c, const std::string& v) { c.engine.target_log_eps = to_double("target_log_eps", v); }},
      {"engine.radius_budget", [](RunConfig& c, const std::string& v) { c.engine.radius_budget = to_double("radius_budget", v); }},
      {"engine.truncation_constant", [](RunConfig& c, const std::string& v) { c.engine.truncation_constant = to_double("truncation_constant", v); }},
      {"engine.max_order", [](RunConfig& c, const std::string& v) { c.engine.max_order = to_double("max_order", v); }},
      {"engine.window", [](RunConfig& c, const std::string& v) { c.engine.window = to_long("window", v); }},
      {"engine.exp_tol", [](RunConfig& c, const std::string& v) { c.engine.exp_tol = to_double("exp_tol", v); }},
      {"engine.prune_tol", [](RunConfig& c, const std::string& v) { c.engine.prune_tol = to_double("prune_tol", v); }},
      {"output.dir", [](RunConfig& c, const std::string& v) { c.output.dir = v; }},
      {"output.seed", [](RunConfig& c, const std::string& v) { c.output.seed = static_cast<uint64_t>(to_long("seed", v)); }},
      {"output.verify_grid", [](RunConfig& c, const std::string& v) { c.output.verify_grid = to_long("verify_grid", v); }},
  };
  return m;
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty() || std::filesystem::path(p).is_absolute()) return p;
  return (std::filesystem::path(base) / p).string();
}

}  // namespace

std::vector<double> parse_doubles(const std::string& s) {
  std::string t = s;
  for (char& ch : t)
    if (ch == ',') ch = ' ';
  std::istringstream is(t);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) out.push_back(to_double("list", tok));
  return out;
}

std::vector<int> parse_ints(const std::string& s) {
  std::vector<int> out;
  for (double x : parse_doubles(s)) {
    if (x != std::floor(x)) throw InputError("config", "expected integers");
    out.push_back(static_cast<int>(x));
  }
  return out;
}

void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  auto it = setters().find(key);
  if (it == setters().end()) throw InputError("config", "unknown key '" + key + "'");
  it->second(c, trim(value));
}

RunConfig parse_config(std::istream& in, const std::string& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw InputError("config", "bad section header on line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      if (section != "system" && section != "weight" && section != "approx" && section != "engine" &&
          section != "output")
        throw InputError("config", "unknown section [" + section + "]");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("config", "expected key = value on line " + std::to_string(lineno));
    if (section.empty()) throw InputError("config", "key outside of any section on line " + std::to_string(lineno));
    set_config_value(c, section + "." + trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("io", "cannot open config " + path);
  auto base = std::filesystem::path(path).parent_path().string();
  return parse_config(in, base.empty() ? "." : base);
}

std::string format_config(const RunConfig& c) {
  std::ostringstream o;
  const auto& s = c.system;
  o << "[system]\n";
  o << "family = " << s.family << "\n";
  o << "omega = " << fmt_list(s.omega) << "\n";
  if (s.kappa) o << "kappa = " << fmt(*s.kappa) << "\n";
  o << "kappa_order = " << s.kappa_order << "\n";
  o << "r0 = " << fmt(s.r0) << "\n";
  o << "A = " << fmt_mat(s.A) << "\n";
  o << "perturbation = " << s.perturbation << "\n";
  if (!s.series_file.empty()) o << "series_file = " << s.series_file << "\n";
  if (!s.mode.empty()) {
    o << "mode =";
    for (int x : s.mode) o << " " << x;
    o << "\n";
  }
  o << "M = " << fmt_mat(s.M) << "\n";
  if (s.scale) o << "scale = " << fmt(*s.scale) << "\n";
  o << "energy = " << fmt(s.energy) << "\n";
  o << "lambda = " << fmt(s.lambda) << "\n";
  if (!s.potential_file.empty()) o << "potential_file = " << s.potential_file << "\n";
  o << "\n[weight]\nkind = " << c.weight.kind << "\ns = " << fmt(c.weight.s) << "\n";
  if (!c.weight.table.empty()) o << "table = " << c.weight.table << "\n";
  o << "\n[approx]\nkind = " << c.approx.kind << "\ntau = " << fmt(c.approx.tau) << "\n";
  if (!c.approx.table.empty()) o << "table = " << c.approx.table << "\n";
  const auto& e = c.engine;
  o << "\n[engine]\n";
  o << "mode = " << to_string(e.mode) << "\n";
  o << "delta = " << fmt(e.delta) << "\nzeta = " << fmt(e.zeta) << "\nl = " << e.l << "\n";
  o << "residual_tol = " << fmt(e.residual_tol) << "\ndet_tol = " << fmt(e.det_tol) << "\n";
  o << "max_steps = " << e.max_steps << "\ntarget_log_eps = " << fmt(e.target_log_eps) << "\n";
  o << "radius_budget = " << fmt(e.radius_budget) << "\ntruncation_constant = " << fmt(e.truncation_constant) << "\n";
  o << "max_order = " << fmt(e.max_order) << "\nwindow = " << e.window << "\n";
  o << "exp_tol = " << fmt(e.exp_tol) << "\nprune_tol = " << fmt(e.prune_tol) << "\n";
  o << "\n[output]\ndir = " << c.output.dir << "\nseed = " << c.output.seed
    << "\nverify_grid = " << c.output.verify_grid << "\n";
  return o.str();
}

WeightSpec make_weight(const WeightCfg& w, const std::string& base_dir) {
  if (w.kind == "analytic") return WeightSpec::analytic();
  if (w.kind == "gevrey") return WeightSpec::gevrey(w.s);
  if (w.table.empty()) throw InputError("config", "weight.kind = table needs weight.table");
  auto [t, v] = read_table(resolve(base_dir, w.table));
  return WeightSpec::tabulated(t, v);
}

ApproxSpec make_approx(const ApproxCfg& a, const std::string& base_dir) {
  if (a.kind == "power") return ApproxSpec::power(a.tau);
  if (a.table.empty()) throw InputError("config", "approx.kind = table needs approx.table");
  auto [t, v] = read_table(resolve(base_dir, a.table));
  return ApproxSpec::tabulated(t, v);
}

BuiltRun build_run(const RunConfig& c) {
  const auto& s = c.system;
  BuiltRun b;
  b.cfg = c.engine;
  b.cfg.L = make_weight(c.weight, c.base_dir);
  b.cfg.psi = make_approx(c.approx, c.base_dir);
  std::string why = check_weight_properties(b.cfg.L);
  if (!why.empty()) throw InputError("weight", why);
  why = check_approx_properties(b.cfg.psi);
  if (!why.empty()) throw InputError("approx", why);

  Frequency w{s.omega, s.kappa};
  validate_frequency(w);
  const int d = w.dim();
  b.omega = s.omega;
  if (s.kappa) {
    b.cfg.kappa = *s.kappa;
  } else {
    FrequencyCheck fc = check_frequency(w, b.cfg.psi, s.kappa_order);
    b.cfg.kappa = std::min(1.0, fc.kappa_max);
  }
  if (!(s.r0 > 0)) throw InputError("config", "r0 must be positive");
  b.r0 = s.r0;

  if (s.family == "schrodinger") {
    ScalarSeries q = s.potential_file.empty() ? lambda_cos_potential(d, s.lambda)
                                              : read_scalar_series(resolve(c.base_dir, s.potential_file), d);
    CocycleSystem sys = schrodinger_system(s.energy, q, s.omega);
    b.A0 = sys.A;
    b.F0 = sys.F;
  } else {
    b.A0 = s.A;
    validate_sl2(b.A0);
    if (s.perturbation == "none") {
      b.F0 = MatrixSeries(d);
    } else if (s.perturbation == "cosine") {
      if (static_cast<int>(s.mode.size()) != d) throw InputError("config", "mode must have dim entries");
      if (std::abs(s.M.trace()) > 1e-13 * std::max(1.0, s.M.cwiseAbs().maxCoeff()))
        throw InputError("config", "M must be traceless");
      b.F0 = MatrixSeries::cosine_mode(d, make_index(s.mode), s.M);
    } else {
      b.F0 = load_series(resolve(c.base_dir, s.series_file));
      if (b.F0.dim() != d) throw InputError("config", "series dimension differs from omega");
    }
  }
  if (s.scale) {
    double n = weighted_norm(b.F0, b.cfg.L, b.r0);
    if (!(n > 0)) throw InputError("config", "cannot rescale a zero perturbation");
    b.F0 *= cd(*s.scale / n);
  }
  b.cfg.validate();
  return b;
}

}  // namespace kam
