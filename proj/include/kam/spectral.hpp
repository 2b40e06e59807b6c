#pragma once
#include "kam/fourier.hpp"

namespace kam {

enum class SpectralClass { hyperbolic, elliptic, nilpotent, zero };
const char* to_string(SpectralClass c);

struct SpectralData {
  SpectralClass cls = SpectralClass::zero;
  double alpha = 0;  // a (hyperbolic) or alpha (elliptic); 0 otherwise
  cd lambda1{0}, lambda2{0};
  Mat2 P1 = Mat2::Identity();  // P1 belongs to lambda1 (= a or i*alpha)
  Mat2 P2 = Mat2::Zero();
  double separation = 0;  // |lambda1 - lambda2|
  double proj_norm = 0;   // max over i of max-abs entry of P_i
  bool has_projections() const {
    return cls == SpectralClass::elliptic || cls == SpectralClass::hyperbolic;
  }
};

double default_tol_det(const RMat2& A);
constexpr double kDefaultTolZero = 1e-15;

// Throws InputError for nonfinite entries or |trace| > 1e-13 max(1,|A|).
void validate_sl2(const RMat2& A);

// Sign of det decides (trace is zero). tol_det <= 0 selects the default rule.
SpectralData classify(const RMat2& A, double tol_det = -1, double tol_zero = kDefaultTolZero);

struct ProjectionCheck {
  double C0_effective;
  bool pass;
};
// C0_effective = max|P_i| kappa'^6; pass iff <= C0.
ProjectionCheck projection_norm_check(const SpectralData& S, double kappa_p, double C0 = 1.0);

// Same eigenvectors, eigenvalues +-i(alpha - s).
RMat2 rotation_shift(const RMat2& A, double s);

// sign(c) alpha for elliptic A = [[a,b],[c,-a]], else 0. Angular speed of the flow e^{tA}.
double const_rotation_number(const RMat2& A);

inline RMat2 real_part(const Mat2& M) { return M.real(); }

}  // namespace kam
