#pragma once
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kam/engine.hpp"
#include "kam/lab.hpp"

namespace kam {

struct SystemSpec {
  std::string family = "matrix";  // matrix | schrodinger
  std::vector<double> omega;
  std::optional<double> kappa;  // computed from a frequency scan when absent
  int kappa_order = 100;
  double r0 = 1.0;
  // matrix family
  RMat2 A = RMat2::Zero();
  std::string perturbation = "none";  // none | cosine | file
  std::string series_file;
  std::vector<int> mode;
  RMat2 M = RMat2::Zero();
  std::optional<double> scale;  // rescale F0 so that |F0|_{r0} = scale
  // schrodinger family
  double energy = 0;
  double lambda = 0;
  std::string potential_file;  // scalar table; lambda cos family when empty
};

struct WeightCfg {
  std::string kind = "analytic";  // analytic | gevrey | table
  double s = 1.0;
  std::string table;
};

struct ApproxCfg {
  std::string kind = "power";  // power | table
  double tau = 2.0;
  std::string table;
};

struct OutputCfg {
  std::string dir = "out";
  uint64_t seed = 1;
  int verify_grid = 16;  // 0 disables the pointwise check
};

struct RunConfig {
  SystemSpec system;
  WeightCfg weight;
  ApproxCfg approx;
  StepConfig engine;  // L and psi are filled by build_run
  OutputCfg output;
  std::string base_dir = ".";  // relative file paths resolve against this
};

// `key = value` lines under [system] [weight] [approx] [engine] [output]; '#' comments.
// Unknown sections or keys are InputErrors.
RunConfig parse_config(std::istream& in, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);
std::string format_config(const RunConfig& c);
// Apply one `section.key=value` override (sweeps).
void set_config_value(RunConfig& c, const std::string& dotted_key, const std::string& value);

struct BuiltRun {
  RMat2 A0;
  MatrixSeries F0;
  std::vector<double> omega;
  double r0;
  StepConfig cfg;
};
BuiltRun build_run(const RunConfig& c);

WeightSpec make_weight(const WeightCfg& w, const std::string& base_dir);
ApproxSpec make_approx(const ApproxCfg& a, const std::string& base_dir);

std::vector<double> parse_doubles(const std::string& s);  // space or comma separated
std::vector<int> parse_ints(const std::string& s);

}  // namespace kam
