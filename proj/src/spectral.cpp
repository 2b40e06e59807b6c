#include "kam/spectral.hpp"

#include <cmath>

namespace kam {

const char* to_string(SpectralClass c) {
  switch (c) {
    case SpectralClass::hyperbolic: return "hyperbolic";
    case SpectralClass::elliptic: return "elliptic";
    case SpectralClass::nilpotent: return "nilpotent";
    case SpectralClass::zero: return "zero";
  }
  return "?";
}

double default_tol_det(const RMat2& A) {
  double n = A.cwiseAbs().maxCoeff();
  return 1e-12 * std::max(1.0, n * n);
}

void validate_sl2(const RMat2& A) {
  if (!A.allFinite()) throw InputError("matrix", "matrix has nonfinite entries");
  double n = A.cwiseAbs().maxCoeff();
  if (std::abs(A.trace()) > 1e-13 * std::max(1.0, n))
    throw InputError("trace", "matrix is not traceless");
}

SpectralData classify(const RMat2& A, double tol_det, double tol_zero) {
  if (tol_det <= 0) tol_det = default_tol_det(A);
  SpectralData S;
  double det = A.determinant();
  const Mat2 Ac = A.cast<cd>();
  const Mat2 I = Mat2::Identity();
  if (det > tol_det) {
    double al = std::sqrt(det);
    S.cls = SpectralClass::elliptic;
    S.alpha = al;
    S.lambda1 = cd(0, al);
    S.lambda2 = cd(0, -al);
    S.P1 = (Ac + cd(0, al) * I) / cd(0, 2 * al);
    S.P2 = S.P1.conjugate();
    S.separation = 2 * al;
  } else if (det < -tol_det) {
    double a = std::sqrt(-det);
    S.cls = SpectralClass::hyperbolic;
    S.alpha = a;
    S.lambda1 = a;
    S.lambda2 = -a;
    S.P1 = (Ac + a * I) / (2 * a);
    S.P2 = I - S.P1;
    S.separation = 2 * a;
  } else {
    S.cls = A.cwiseAbs().maxCoeff() <= tol_zero ? SpectralClass::zero : SpectralClass::nilpotent;
    S.P1 = I;
    S.P2 = Mat2::Zero();
  }
  if (S.has_projections())
    S.proj_norm = std::max(S.P1.cwiseAbs().maxCoeff(), S.P2.cwiseAbs().maxCoeff());
  return S;
}

ProjectionCheck projection_norm_check(const SpectralData& S, double kappa_p, double C0) {
  if (!(kappa_p > 0 && kappa_p <= 1)) throw InputError("kappa", "kappa' must lie in (0,1]");
  if (!S.has_projections()) throw InputError("spectrum", "no eigenprojections for this class");
  if (S.separation < kappa_p) throw InputError("separation", "eigenvalue separation below kappa'");
  double c = S.proj_norm * std::pow(kappa_p, 6);
  return {c, c <= C0};
}

RMat2 rotation_shift(const RMat2& A, double s) {
  SpectralData S = classify(A);
  if (S.cls != SpectralClass::elliptic) throw InputError("spectrum", "rotation_shift needs an elliptic matrix");
  if (s == S.alpha) return RMat2::Zero();
  return A * ((S.alpha - s) / S.alpha);
}

double const_rotation_number(const RMat2& A) {
  SpectralData S = classify(A);
  if (S.cls != SpectralClass::elliptic) return 0.0;
  return A(1, 0) >= 0 ? S.alpha : -S.alpha;
}

}  // namespace kam
