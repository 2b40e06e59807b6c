#include "kam/cohomology.hpp"

#include <cmath>
#include <numbers>

namespace kam {

namespace {
constexpr double kTwoPi = 2 * std::numbers::pi;

Mat2 ad(const Mat2& A, const Mat2& X) { return A * X - X * A; }
}  // namespace

Eigen::Matrix4cd ad_matrix(const Mat2& A) {
  // vec(AX - XA) = (I kron A - A^T kron I) vec(X)
  Eigen::Matrix4cd M = Eigen::Matrix4cd::Zero();
  const Mat2 I = Mat2::Identity();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) M(2 * i + k, 2 * j + l) = I(i, j) * A(k, l) - A(j, i) * I(k, l);
  return M;
}

Eigen::Matrix4cd mode_operator(const Mat2& A, cd z) {
  return z * Eigen::Matrix4cd::Identity() - ad_matrix(A);
}

CohomologySolution solve_cohomological(const RMat2& A, const MatrixSeries& F,
                                       const std::vector<double>& omega, const ApproxSpec& psi,
                                       double kappa_p, double N, CohomologyOptions opt) {
  validate_sl2(A);
  if (static_cast<int>(omega.size()) != F.dim()) throw InputError("dim", "frequency dimension mismatch");
  if (!(kappa_p > 0)) throw InputError("kappa", "kappa' must be positive");
  if (!(N >= 0)) throw InputError("order", "order must be nonnegative");
  SpectralData S = classify(A);
  double min_sep = opt.min_separation > 0 ? opt.min_separation : kappa_p;
  if (S.has_projections() && S.separation < min_sep)
    throw NumericalError("separation", "eigenvalue gap below the separation threshold; caller must pick a branch");

  const Mat2 Ac = A.cast<cd>();
  const cd lam[2] = {S.lambda1, S.lambda2};
  const Mat2* P[2] = {&S.P1, &S.P2};
  CohomologyDiag dg;
  dg.cls = S.cls;
  const double psiN = N >= 1 ? psi(N) : 1.0;
  const double normA = mat_norm(A, MatrixNorm::scaled_max);
  switch (S.cls) {
    case SpectralClass::elliptic:
    case SpectralClass::hyperbolic:
      dg.C0_effective = 2 * S.proj_norm * std::pow(kappa_p, 6);
      dg.paper_constant = 4 * dg.C0_effective * dg.C0_effective * std::pow(kappa_p, -13) * psiN;
      break;
    case SpectralClass::nilpotent:
      dg.paper_constant = 3 * std::pow(kappa_p, -3) * psiN * psiN * psiN;
      dg.ad_small = 2 * normA <= 1;
      break;
    case SpectralClass::zero:
      dg.paper_constant = psiN / kappa_p;
      break;
  }

  const bool real = F.is_real(1e-14 * std::max(1.0, F.max_trace() + 1));
  MatrixSeries X(F.dim(), F.denom());
  const double lim = N * F.denom();
  for (auto& [h, Fh] : F.coeffs()) {
    if (is_zero(h) || l1(h) > lim) continue;
    if (real && !canonical_half(h)) continue;
    const cd z(0, kTwoPi * dot(h, omega) / F.denom());
    Mat2 Xh = Mat2::Zero();
    auto use = [&](cd div) {
      if (std::abs(div) < opt.divisor_floor)
        throw NumericalError("divisor", "small divisor below floor; resonant data");
      dg.max_inv_divisor = std::max(dg.max_inv_divisor, 1 / std::abs(div));
      return div;
    };
    if (S.has_projections()) {
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) Xh += (*P[a]) * Fh * (*P[b]) / use(z - (lam[a] - lam[b]));
    } else if (S.cls == SpectralClass::nilpotent) {
      cd zi = 1.0 / use(z);
      Mat2 a1 = ad(Ac, Fh);
      Xh = zi * (Fh + zi * a1 + zi * zi * ad(Ac, a1));
    } else {
      Xh = Fh / use(z);
    }
    double fn = mat_norm(Fh, MatrixNorm::scaled_max);
    if (fn > 0) dg.mode_gain = std::max(dg.mode_gain, mat_norm(Xh, MatrixNorm::scaled_max) / fn);
    ++dg.modes;
    X.set(h, Xh);
    if (real) X.set(negate(h), Xh.conjugate());
  }
  X.prune(kPruneAbs);
  dg.within_paper = dg.mode_gain <= dg.paper_constant * (1 + 1e-12);
  return {std::move(X), dg};
}

double cohomological_residual(const RMat2& A, const MatrixSeries& X, const MatrixSeries& F,
                              const std::vector<double>& omega, double N, const WeightSpec& L,
                              double r) {
  const Mat2 Ac = A.cast<cd>();
  MatrixSeries rhs = truncate(F, N);
  rhs.erase(Index{});
  MatrixSeries res = derive_omega(X, omega) - (X.left(Ac) - X.right(Ac)) - rhs;
  return weighted_norm(res, L, r);
}

}  // namespace kam
