// kamcli: front end for the reduction engine, the cocycle lab and the schedule tools.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "kam/config.hpp"
#include "kam/lab.hpp"
#include "kam/trace_io.hpp"

using namespace kam;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0, kExitFail = 1, kExitInput = 2, kExitNumerical = 3;

void emit_error(const std::string& kind, const std::string& code, const std::string& msg) {
  std::cerr << error_json(kind, code, msg).dump() << std::endl;
}

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

ApproxSpec approx_from_flags(double tau, const std::string& table) {
  if (!table.empty()) {
    auto [t, v] = read_table(table);
    return ApproxSpec::tabulated(t, v);
  }
  return ApproxSpec::power(tau);
}

WeightSpec weight_from_flag(const std::string& w) {
  if (w == "analytic") return WeightSpec::analytic();
  if (w.rfind("gevrey:", 0) == 0) return WeightSpec::gevrey(std::stod(w.substr(7)));
  if (w.rfind("table:", 0) == 0) {
    auto [t, v] = read_table(w.substr(6));
    return WeightSpec::tabulated(t, v);
  }
  throw InputError("weight", "weight must be analytic, gevrey:<s> or table:<path>");
}

RMat2 mat_from_flag(const std::string& s) {
  auto x = parse_doubles(s);
  if (x.size() != 4) throw InputError("matrix", "matrix needs 4 row-major entries");
  RMat2 A;
  A << x[0], x[1], x[2], x[3];
  return A;
}

// ---- check-freq
struct FreqOpts {
  std::string omega;
  double tau = 2;
  std::string psi_table;
  int order = 0;
  double min_kappa = 0;
};

int cmd_check_freq(const FreqOpts& o) {
  Frequency w{parse_doubles(o.omega), std::nullopt};
  ApproxSpec psi = approx_from_flags(o.tau, o.psi_table);
  FrequencyCheck fc = check_frequency(w, psi, o.order);
  nlohmann::ordered_json j;
  j["omega"] = w.omega;
  j["psi"] = psi.describe();
  j["order"] = o.order;
  j["kappa_max"] = num(fc.kappa_max);
  j["worst_k"] = fc.worst_k;
  j["min_kappa"] = o.min_kappa;
  j["pass"] = fc.kappa_max >= o.min_kappa;
  std::cout << j.dump() << std::endl;
  return fc.kappa_max >= o.min_kappa ? kExitOk : kExitFail;
}

// ---- reduce
void write_summary_table(std::ostream& os, const ReductionTrace& t) {
  os << "k,log_eps_before,log_eps_after,r,N,branch,residual\n";
  for (auto& s : t.steps)
    os << s.k << "," << g17(s.log_eps_before) << "," << g17(s.log_eps_after) << "," << g17(s.r_after) << ","
       << g17(s.N) << "," << to_string(s.branch) << "," << g17(s.residual) << "\n";
}

void write_outputs(const fs::path& dir, const ReductionTrace& t) {
  fs::create_directories(dir);
  {
    std::ofstream tr(dir / "trace.jsonl");
    write_trace_jsonl(tr, t);
  }
  {
    std::ofstream sm(dir / "summary.csv");
    write_summary_table(sm, t);
  }
  save_series((dir / "Z.series").string(), t.Z);
  save_series((dir / "Zinv.series").string(), t.Zinv);
  save_series((dir / "Abar.series").string(), t.A_bar);
  save_series((dir / "Fbar.series").string(), t.F_bar);
  save_series((dir / "Fc.series").string(), t.final_state.Fc);
  save_series((dir / "psi.series").string(), t.final_state.psi_series);
}

struct RunOutcome {
  int code = kExitOk;
  std::string text;
};

RunOutcome run_one(const RunConfig& rc, const fs::path& dir) {
  RunOutcome out;
  std::ostringstream log;
  try {
    BuiltRun b = build_run(rc);
    ReductionTrace t;
    try {
      t = almost_reduce(b.A0, b.F0, b.r0, b.omega, b.cfg);
    } catch (const ReductionError& e) {
      write_outputs(dir, e.partial());
      throw;
    }
    write_outputs(dir, t);
    bool ok = t.all_residuals_ok();
    double grid_res = 0;
    if (rc.output.verify_grid > 0) {
      CocycleSystem before(b.A0, b.F0, b.omega);
      CocycleSystem after(RMat2::Zero(), t.A_bar + t.F_bar, b.omega);
      grid_res = verify_conjugation(t.Z, before, after, rc.output.verify_grid);
      double normA = std::max(mat_norm(b.A0), mat_norm(t.final_state.A));
      ok = ok && grid_res < b.cfg.residual_tol * (1 + normA);
    }
    write_summary_table(log, t);
    log << "outcome," << to_string(t.outcome) << "\nfinal_residual," << g17(t.final_residual)
        << "\ngrid_residual," << g17(grid_res) << "\nlog_eps," << g17(t.log_eps) << "\n";
    out.code = ok ? kExitOk : kExitNumerical;
    if (!ok) emit_error("numerical", "residual", "residual check failed in " + dir.string());
  } catch (const InputError& e) {
    emit_error("input", e.code(), e.what());
    out.code = kExitInput;
  } catch (const NumericalError& e) {
    emit_error("numerical", e.code(), e.what());
    out.code = kExitNumerical;
  } catch (const std::exception& e) {
    emit_error("internal", "exception", e.what());
    out.code = kExitNumerical;
  }
  out.text = log.str();
  return out;
}

struct ReduceOpts {
  std::string config;
  std::string out_dir;
  std::vector<std::string> sweep;
};

int cmd_reduce(const ReduceOpts& o) {
  RunConfig rc = load_config(o.config);
  if (!o.out_dir.empty()) rc.output.dir = o.out_dir;
  if (o.sweep.empty()) {
    RunOutcome r = run_one(rc, rc.output.dir);
    std::cout << r.text;
    return r.code;
  }
  // --sweep section.key=v1,v2,... : every combination gets its own subdirectory
  std::vector<RunConfig> runs{rc};
  std::vector<std::string> names{""};
  for (auto& spec : o.sweep) {
    auto eq = spec.find('=');
    if (eq == std::string::npos) throw InputError("sweep", "sweep needs key=v1,v2");
    std::string key = spec.substr(0, eq);
    std::vector<std::string> vals;
    std::stringstream ss(spec.substr(eq + 1));
    for (std::string v; std::getline(ss, v, ',');) vals.push_back(v);
    if (vals.empty()) throw InputError("sweep", "sweep needs at least one value");
    std::vector<RunConfig> nr;
    std::vector<std::string> nn;
    for (size_t i = 0; i < runs.size(); ++i)
      for (auto& v : vals) {
        RunConfig c = runs[i];
        set_config_value(c, key, v);
        nr.push_back(c);
        nn.push_back(names[i] + (names[i].empty() ? "" : "_") + key + "=" + v);
      }
    runs = std::move(nr);
    names = std::move(nn);
  }
  std::vector<std::future<RunOutcome>> fut;
  for (size_t i = 0; i < runs.size(); ++i)
    fut.push_back(std::async(std::launch::async, run_one, runs[i], fs::path(rc.output.dir) / names[i]));
  int code = kExitOk;
  for (size_t i = 0; i < fut.size(); ++i) {
    RunOutcome r = fut[i].get();
    std::cout << "# run " << names[i] << " exit " << r.code << "\n" << r.text;
    code = std::max(code, r.code);
  }
  return code;
}

// ---- verify
struct VerifyOpts {
  std::string omega, z, before_a = "0 0 0 0", before_f, after_a = "0 0 0 0", after_f;
  int grid = 16;
  double tol = 1e-8;
  bool fd = false;
};

int cmd_verify(const VerifyOpts& o) {
  auto omega = parse_doubles(o.omega);
  validate_frequency({omega, std::nullopt});
  const int d = static_cast<int>(omega.size());
  auto series_or_zero = [&](const std::string& p) { return p.empty() ? MatrixSeries(d) : load_series(p); };
  MatrixSeries Z = o.z.empty() ? MatrixSeries::identity(d) : load_series(o.z);
  CocycleSystem before(mat_from_flag(o.before_a), series_or_zero(o.before_f), omega);
  CocycleSystem after(mat_from_flag(o.after_a), series_or_zero(o.after_f), omega);
  double res = verify_conjugation(Z, before, after, o.grid, !o.fd);
  std::cout << "grid_n,points,max_residual\n" << o.grid << "," << static_cast<long>(std::pow(o.grid, d)) << ","
            << g17(res) << "\n";
  return res <= o.tol ? kExitOk : kExitFail;
}

// ---- lyapunov
struct LyapOpts {
  std::string config, omega, a, f, csv;
  double T = 1000, h = 0.01;
  int samples = 8;
  uint64_t seed = 1;
};

int cmd_lyapunov(const LyapOpts& o) {
  CocycleSystem sys;
  if (!o.config.empty()) {
    BuiltRun b = build_run(load_config(o.config));
    sys = CocycleSystem(b.A0, b.F0, b.omega);
  } else {
    if (o.omega.empty() || o.a.empty()) throw InputError("usage", "need --config or --omega and --a");
    auto omega = parse_doubles(o.omega);
    validate_frequency({omega, std::nullopt});
    RMat2 A = mat_from_flag(o.a);
    validate_sl2(A);
    sys = CocycleSystem(A, o.f.empty() ? MatrixSeries(static_cast<int>(omega.size())) : load_series(o.f), omega);
  }
  auto pts = sample_points(sys.dim(), o.samples, o.seed);
  std::vector<CsvRow> rows;
  std::vector<double> ly, rot;
  for (auto& p : pts) {
    double ln = log_norm_at(sys, p, o.T, o.h);
    double rn = rotation_at(sys, p, o.T, o.h);
    rows.push_back({p, o.T, ln, rn});
    ly.push_back(ln / o.T);
    rot.push_back(rn);
  }
  if (!o.csv.empty()) {
    std::ofstream out(o.csv);
    if (!out) throw InputError("io", "cannot write " + o.csv);
    write_csv(out, rows);
  }
  auto stats = [](const std::vector<double>& v) {
    double m = 0, q = 0;
    for (double x : v) m += x;
    m /= v.size();
    for (double x : v) q += (x - m) * (x - m);
    double se = v.size() > 1 ? std::sqrt(q / (v.size() - 1) / v.size()) : 0.0;
    return std::pair{m, se};
  };
  auto [lm, ls] = stats(ly);
  auto [rm, rs] = stats(rot);
  std::cout << "lyapunov,lyapunov_stderr,rotation,rotation_stderr,samples\n"
            << g17(lm) << "," << g17(ls) << "," << g17(rm) << "," << g17(rs) << "," << o.samples << "\n";
  return kExitOk;
}

// ---- schedule
struct SchedOpts {
  bool paper = false;
  double delta = 100000, zeta = 1.0 / 1728, log_eps0 = -1e6, r0 = 1, tau = 2;
  std::string weight = "analytic", psi_table;
  int k_max = 60;
  double kappa = 1;
};

int cmd_schedule(const SchedOpts& o) {
  WeightSpec L = weight_from_flag(o.weight);
  ApproxSpec psi = approx_from_flags(o.tau, o.psi_table);
  double delta = o.paper ? 100000 : o.delta, zeta = o.paper ? 1.0 / 1728 : o.zeta;
  KamSchedule s = build_schedule(o.r0, o.log_eps0, L, psi, delta, zeta, o.k_max, o.kappa);
  std::cout << "k,log_eps,r,log_N,log_R,log_kappa2,r_loss\n";
  for (auto& e : s.entries)
    std::cout << e.k << "," << g17(e.log_eps) << "," << g17(e.r) << "," << g17(e.log_N) << "," << g17(e.log_R) << ","
              << g17(e.log_kappa2) << "," << g17(e.r_loss) << "\n";
  double br = brjuno_russmann_integral(L, psi, 1.0, 1e-10);
  std::cout << "# series_sum," << g17(s.series_sum) << "\n# r_limit," << g17(s.r_limit) << "\n# integral_bound,"
            << g17(s.integral_bound) << "\n# integral_bound_sharp," << g17(s.integral_bound_sharp)
            << "\n# brjuno_russmann_integral," << g17(br) << "\n# truncated," << (s.truncated ? 1 : 0) << "\n";
  return s.truncated || !(s.r_limit > 0) ? kExitFail : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KAM almost-reducibility engine and cocycle lab"};
  app.require_subcommand(1);

  FreqOpts fo;
  auto* cf = app.add_subcommand("check-freq", "Scan min |<k,w>| Psi(|k|) over 0<|k|<=K; prints JSON");
  cf->add_option("--omega", fo.omega, "frequency vector, e.g. \"0.618 0.414\"")->required();
  cf->add_option("--psi", fo.tau, "exponent tau of Psi(t)=t^tau");
  cf->add_option("--psi-table", fo.psi_table, "tabulated Psi (two columns t value)");
  cf->add_option("--order", fo.order, "scan order K")->required();
  cf->add_option("--min-kappa", fo.min_kappa, "exit 1 unless kappa_max >= this");

  ReduceOpts ro;
  auto* rd = app.add_subcommand("reduce",
                                "Run the reduction; writes trace.jsonl, summary.csv and *.series to the output dir.\n"
                                "summary.csv columns: k,log_eps_before,log_eps_after,r,N,branch,residual");
  rd->add_option("--config", ro.config, "config file")->required();
  rd->add_option("--out", ro.out_dir, "output directory (overrides [output] dir)");
  rd->add_option("--sweep", ro.sweep, "section.key=v1,v2,... ; runs combinations concurrently");

  VerifyOpts vo;
  auto* vf = app.add_subcommand("verify",
                                "Pointwise residual of dZ - (A+F)Z + Z(A'+F') on a grid of the doubled torus.\n"
                                "CSV columns: grid_n,points,max_residual");
  vf->add_option("--omega", vo.omega, "frequency vector")->required();
  vf->add_option("--z", vo.z, "series file of Z (identity when absent)");
  vf->add_option("--before-a", vo.before_a, "constant part before, row-major");
  vf->add_option("--before-f", vo.before_f, "perturbation series before");
  vf->add_option("--after-a", vo.after_a, "constant part after, row-major");
  vf->add_option("--after-f", vo.after_f, "perturbation series after");
  vf->add_option("--grid", vo.grid, "points per axis");
  vf->add_option("--tol", vo.tol, "exit 1 above this residual");
  vf->add_flag("--finite-difference", vo.fd, "differentiate Z by central differences");

  LyapOpts lo;
  auto* ly = app.add_subcommand("lyapunov",
                                "Lyapunov exponent and rotation number by integration.\n"
                                "stdout columns: lyapunov,lyapunov_stderr,rotation,rotation_stderr,samples\n"
                                "--csv columns: theta,T,log_norm,rotation (theta entries space separated)");
  ly->add_option("--config", lo.config, "take the system from a config file");
  ly->add_option("--omega", lo.omega, "frequency vector");
  ly->add_option("--a", lo.a, "constant part, row-major");
  ly->add_option("--f", lo.f, "perturbation series file");
  ly->add_option("--time", lo.T, "integration time T");
  ly->add_option("--step", lo.h, "step size h");
  ly->add_option("--samples", lo.samples, "theta samples");
  ly->add_option("--seed", lo.seed, "sampling seed");
  ly->add_option("--csv", lo.csv, "per-sample CSV output");

  SchedOpts so;
  auto* sc = app.add_subcommand("schedule",
                                "Radius schedule in log space.\n"
                                "CSV columns: k,log_eps,r,log_N,log_R,log_kappa2,r_loss; '#' lines carry totals");
  sc->add_flag("--paper", so.paper, "use delta=100000, zeta=1/1728");
  sc->add_option("--delta", so.delta, "delta");
  sc->add_option("--zeta", so.zeta, "zeta");
  sc->add_option("--log-eps0", so.log_eps0, "natural log of eps0");
  sc->add_option("--r0", so.r0, "initial radius");
  sc->add_option("--weight", so.weight, "analytic | gevrey:<s> | table:<path>");
  sc->add_option("--psi", so.tau, "exponent tau of Psi(t)=t^tau");
  sc->add_option("--psi-table", so.psi_table, "tabulated Psi");
  sc->add_option("--k-max", so.k_max, "number of steps to tabulate");
  sc->add_option("--kappa", so.kappa, "kappa in kappa'' = kappa eps^zeta");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("usage", "usage", e.what());
    std::cerr << app.help() << std::endl;
    return kExitInput;
  }

  try {
    if (*cf) return cmd_check_freq(fo);
    if (*rd) return cmd_reduce(ro);
    if (*vf) return cmd_verify(vo);
    if (*ly) return cmd_lyapunov(lo);
    if (*sc) return cmd_schedule(so);
  } catch (const InputError& e) {
    emit_error("input", e.code(), e.what());
    return kExitInput;
  } catch (const NumericalError& e) {
    emit_error("numerical", e.code(), e.what());
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    emit_error("input", "parse", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    emit_error("internal", "exception", e.what());
    return kExitNumerical;
  }
  return kExitInput;
}
