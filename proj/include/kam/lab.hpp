#pragma once
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "kam/fourier.hpp"

namespace kam {

// dX/dt = (A + F(theta + t omega)) X. F may carry a mean; only A + F matters.
struct CocycleSystem {
  RMat2 A = RMat2::Zero();
  MatrixSeries F;
  std::vector<double> omega;
  std::string label;

  CocycleSystem() = default;
  CocycleSystem(const RMat2& A, MatrixSeries F, std::vector<double> omega, std::string label = "");
  int dim() const { return static_cast<int>(omega.size()); }
};

// Fast pointwise evaluation of A + F(theta0 + t omega) along one orbit.
class OrbitField {
 public:
  OrbitField(const CocycleSystem& sys, const std::vector<double>& theta0);
  RMat2 operator()(double t) const;

 private:
  RMat2 A_;
  std::vector<Mat2> c_;     // coefficient times starting phase, canonical half doubled
  std::vector<double> w_;   // 2 pi <h,omega>/denom
};

RMat2 integrate(const CocycleSystem& sys, const std::vector<double>& theta0, double T, double h);

struct Estimate {
  double mean = 0;
  double stderr_ = 0;
  int samples = 0;
  bool collapsed = false;  // rotation: the tracked vector grew exponentially
};

// Deterministic sample points on T^d (first one is the origin).
std::vector<std::vector<double>> sample_points(int d, int n, uint64_t seed);

// (1/T) ln|X^T(theta)| averaged over samples.
Estimate lyapunov(const CocycleSystem& sys, double T, int n_samples, double h, uint64_t seed = 1);
double log_norm_at(const CocycleSystem& sys, const std::vector<double>& theta0, double T, double h);

// Fibered rotation number by argument continuation of X^t v, v = (1,0).
Estimate rotation_number(const CocycleSystem& sys, double T, double h, int n_samples = 1,
                         uint64_t seed = 1);
double rotation_at(const CocycleSystem& sys, const std::vector<double>& theta0, double T, double h,
                   bool* collapsed = nullptr);

// max entry of dZ - (A+F)Z + Z(A'+F') over a grid_n^d grid of the doubled torus.
// spectral=false swaps in central differences along omega for dZ.
double verify_conjugation(const MatrixSeries& Z, const CocycleSystem& before,
                          const CocycleSystem& after, int grid_n, bool spectral = true);

struct CsvRow {
  std::vector<double> theta;
  double T, log_norm, rotation;
};
void write_csv(std::ostream& os, const std::vector<CsvRow>& rows);

// Scalar potential q(theta) = sum q_h e^{2 pi i <h,theta>}.
using ScalarSeries = std::map<Index, cd>;
ScalarSeries lambda_cos_potential(int d, double lambda);  // 2 lambda sum_i cos(2 pi theta_i)
ScalarSeries read_scalar_series(const std::string& path, int d);
// Companion system [[0,1],[q - E, 0]] split into constant part and perturbation.
CocycleSystem schrodinger_system(double E, const ScalarSeries& q, const std::vector<double>& omega);

}  // namespace kam
