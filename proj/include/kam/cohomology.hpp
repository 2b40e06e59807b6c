#pragma once
#include "kam/spectral.hpp"

namespace kam {

struct CohomologyOptions {
  double min_separation = -1;  // refuse smaller eigenvalue gaps; <= 0 means kappa'
  double divisor_floor = 1e-15;
};

struct CohomologyDiag {
  SpectralClass cls = SpectralClass::zero;
  int modes = 0;
  double max_inv_divisor = 0;
  double C0_effective = 0;    // scaled projection norm times kappa'^6
  double paper_constant = 0;  // 4C0^2 k^-13 Psi(N), 3k^-3 Psi(N)^3 or k^-1 Psi(N)
  double mode_gain = 0;       // max over modes of |X(m)|/|F(m)|, scaled norm
  bool within_paper = true;
  bool ad_small = true;       // nilpotent case: |ad| <= 1, needed by the three-term bound
};

struct CohomologySolution {
  MatrixSeries X;
  CohomologyDiag diag;
};

// dX = [A,X] + F^N - F(0), X(0) = 0.
CohomologySolution solve_cohomological(const RMat2& A, const MatrixSeries& F,
                                       const std::vector<double>& omega, const ApproxSpec& psi,
                                       double kappa_p, double N, CohomologyOptions opt = {});

// |d X - [A,X] - (F^N - F(0))|_{L,r}
double cohomological_residual(const RMat2& A, const MatrixSeries& X, const MatrixSeries& F,
                              const std::vector<double>& omega, double N, const WeightSpec& L,
                              double r);

// ad_A acting on column-major vec(X).
Eigen::Matrix4cd ad_matrix(const Mat2& A);
// z I - ad_A, the operator inverted on one Fourier mode.
Eigen::Matrix4cd mode_operator(const Mat2& A, cd z);

}  // namespace kam
