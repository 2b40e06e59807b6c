#include <cmath>

#include "doctest.h"
#include "kam/cohomology.hpp"
#include "kam/resonance.hpp"
#include "oracles.hpp"

using namespace kam;
using doctest::Approx;
using oracle::Rng;

namespace {
const double kPi = std::numbers::pi;
const std::vector<double> kGold{oracle::frozen::golden};
Index idx(std::vector<int> v) { return make_index(v); }

// largest kappa' for which A has BR spectrum up to order N (capped at 1)
double br_kappa(const RMat2& A, const std::vector<double>& w, int N) {
  auto S = classify(A);
  if (S.cls != SpectralClass::elliptic) return 1.0;
  double m = oracle::br_margin(S.lambda1 - S.lambda2, w, [](double t) { return t * t; }, 1.0, N) + 1;
  return std::min(1.0, m);
}
}  // namespace

TEST_CASE("zero matrix: scalar division") {
  RMat2 M;
  M << 0.2, -1, 0.5, -0.2;
  MatrixSeries F(1);
  F.set(idx({1}), M.cast<cd>());
  F.set(idx({-1}), M.cast<cd>());
  double w = 0.37;
  auto sol = solve_cohomological(RMat2::Zero(), F, {w}, ApproxSpec::power(2), 0.1, 3);
  Mat2 expect = M.cast<cd>() / cd(0, 2 * kPi * w);
  CHECK((sol.X.at(idx({1})) - expect).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((sol.X.at(idx({-1})) + expect).cwiseAbs().maxCoeff() < 1e-15);
  // X(theta) = M sin(2 pi theta) / (pi w)
  CHECK((evaluate(sol.X, {0.25}) - M / (kPi * w)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(sol.diag.cls == SpectralClass::zero);
  CHECK(cohomological_residual(RMat2::Zero(), sol.X, F, {w}, 3, WeightSpec::analytic(), 0.2) <= 1e-13);
}

TEST_CASE("constant perturbation gives zero solution") {
  auto F = MatrixSeries::constant(1, Mat2(oracle::rot(0.3).cast<cd>()));
  auto sol = solve_cohomological(oracle::rot(0.4), F, kGold, ApproxSpec::power(2), 0.1, 5);
  CHECK(sol.X.empty());
  CHECK(sol.diag.modes == 0);
}

TEST_CASE("ad matrix agrees with basis images") {
  Rng rng(51);
  for (int rep = 0; rep < 20; ++rep) {
    Mat2 A = oracle::random_complex_traceless(rng);
    cd z(rng.normal(), rng.normal());
    CHECK((mode_operator(A, z) - oracle::dense_operator(A, z)).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("elliptic solve matches dense per-mode oracle") {
  Rng rng(52);
  RMat2 A = oracle::rot(0.4);
  auto F = oracle::random_series(rng, 1, 8, 8);
  double kp = std::min(br_kappa(A, kGold, 8) * 0.99, 0.8);  // separation of rot(0.4) is 0.8
  auto sol = solve_cohomological(A, F, kGold, ApproxSpec::power(2), kp, 8);
  for (auto& [h, Fh] : F.coeffs()) {
    if (is_zero(h)) continue;
    Mat2 ref = oracle::dense_mode_solve(A.cast<cd>(), cd(0, 2 * kPi * h[0] * kGold[0]), Fh);
    CHECK((sol.X.at(h) - ref).cwiseAbs().maxCoeff() < 1e-11);
  }
  CHECK(cohomological_residual(A, sol.X, F, kGold, 8, WeightSpec::analytic(), 0.3) <=
        1e-9 * std::max(1.0, weighted_norm(F, WeightSpec::analytic(), 0.3)));
  CHECK(sol.X.at(Index{}).norm() == 0);
  CHECK(sol.X.is_real());
  CHECK(sol.X.max_trace() < 1e-14);
}

TEST_CASE("property: random instances per spectral class") {
  Rng rng(53);
  auto L = WeightSpec::analytic();
  auto P = ApproxSpec::power(2.0);
  std::vector<double> w2{oracle::frozen::golden, std::sqrt(2.0) - 1};
  for (auto c : {SpectralClass::elliptic, SpectralClass::hyperbolic, SpectralClass::nilpotent,
                 SpectralClass::zero}) {
    for (int rep = 0; rep < 40; ++rep) {
      int d = rng.integer(1, 2);
      std::vector<double> w(w2.begin(), w2.begin() + d);
      RMat2 A = oracle::random_sl2(rng, c);
      int N = rng.integer(1, 6);
      auto F = oracle::random_series(rng, d, 6, N + 2);
      auto S = classify(A);
      double kp = br_kappa(A, w, N) * 0.99;
      if (S.has_projections()) kp = std::min(kp, S.separation);
      auto sol = solve_cohomological(A, F, w, P, kp, N);
      double fn = weighted_norm(F, L, 0.2);
      CHECK(cohomological_residual(A, sol.X, F, w, N, L, 0.2) <= 1e-9 * std::max(1.0, fn));
      CHECK(sol.X.is_real(1e-15));
      CHECK(sol.X.max_trace() < 1e-12 * std::max(1.0, fn));
      for (auto& [h, Xh] : sol.X.coeffs()) CHECK(l1(h) <= N);
      if (c != SpectralClass::nilpotent || sol.diag.ad_small) {
        CHECK(sol.diag.within_paper);
        double xs = weighted_norm(sol.X, L, 0.2, MatrixNorm::scaled_max);
        double fs = weighted_norm(truncate(F, N), L, 0.2, MatrixNorm::scaled_max);
        CHECK(xs <= sol.diag.paper_constant * fs * (1 + 1e-12));
      }
    }
  }
}

TEST_CASE("elliptic estimate in the eigen-frame") {
  // Phi^{-1} X Phi with a nontrivial trivial map of the same decomposition
  Rng rng(54);
  auto L = WeightSpec::analytic();
  for (int rep = 0; rep < 20; ++rep) {
    RMat2 A = oracle::random_sl2(rng, SpectralClass::elliptic);
    auto S = classify(A);
    auto F = oracle::random_series(rng, 1, 5, 5);
    double kp = std::min(br_kappa(A, kGold, 5) * 0.99, S.separation);
    auto sol = solve_cohomological(A, F, kGold, ApproxSpec::power(2), kp, 5);
    TrivialMap phi;
    phi.P1 = S.P1;
    phi.P2 = S.P2;
    phi.m2 = idx({rng.integer(-2, 2)});
    double lhs = weighted_norm(conj_by_trivial(phi, sol.X, true), L, 0.1, MatrixNorm::scaled_max);
    double rhs = weighted_norm(conj_by_trivial(phi, truncate(F, 5), true), L, 0.1, MatrixNorm::scaled_max);
    CHECK(lhs <= sol.diag.paper_constant * rhs);
  }
}

TEST_CASE("residual detects corruption and ignores the tail") {
  Rng rng(55);
  RMat2 A = oracle::rot(0.4);
  auto F = oracle::random_series(rng, 1, 8, 10);
  auto sol = solve_cohomological(A, F, kGold, ApproxSpec::power(2), 0.01, 4);
  auto L = WeightSpec::analytic();
  double base = cohomological_residual(A, sol.X, F, kGold, 4, L, 0.0);
  CHECK(base < 1e-12);
  auto X2 = sol.X;
  Index h = X2.coeffs().begin()->first;
  X2.add_to(h, Mat2::Identity() * 1e-6);
  CHECK(cohomological_residual(A, X2, F, kGold, 4, L, 0.0) >= 1e-7);
  auto G = F;
  G.add_to(idx({9}), Mat2::Identity() * 5.0);
  G.add_to(idx({-9}), Mat2::Identity() * 5.0);
  CHECK(cohomological_residual(A, sol.X, G, kGold, 4, L, 0.0) == Approx(base).epsilon(1e-6).scale(1e-14));
}

TEST_CASE("solver errors") {
  Rng rng(56);
  auto F = oracle::random_series(rng, 1, 4, 3);
  // exact resonance: divisor 2 i alpha - 2 pi i w vanishes at k=1
  RMat2 A = oracle::rot(kPi * kGold[0]);
  CHECK_THROWS_AS(solve_cohomological(A, F, kGold, ApproxSpec::power(2), 0.01, 3), NumericalError);
  // separation 0.2 below kappa' 0.5
  CHECK_THROWS_AS(solve_cohomological(oracle::rot(0.1), F, kGold, ApproxSpec::power(2), 0.5, 3), NumericalError);
  CohomologyOptions opt;
  opt.min_separation = 0.1;
  CHECK_NOTHROW(solve_cohomological(oracle::rot(0.1), F, kGold, ApproxSpec::power(2), 0.5, 3, opt));
  CHECK_THROWS_AS(solve_cohomological(oracle::rot(0.4), F, {0.1, 0.2}, ApproxSpec::power(2), 0.1, 3), InputError);
  CHECK_THROWS_AS(solve_cohomological(oracle::rot(0.4), F, kGold, ApproxSpec::power(2), 0.0, 3), InputError);
}

TEST_CASE("nilpotent three-term inverse is exact") {
  Rng rng(57);
  RMat2 N = oracle::random_sl2(rng, SpectralClass::nilpotent);
  auto F = oracle::random_series(rng, 1, 6, 5);
  auto sol = solve_cohomological(N, F, kGold, ApproxSpec::power(2), 0.1, 5);
  for (auto& [h, Fh] : F.coeffs()) {
    if (is_zero(h)) continue;
    Mat2 ref = oracle::dense_mode_solve(N.cast<cd>(), cd(0, 2 * kPi * h[0] * kGold[0]), Fh);
    CHECK((sol.X.at(h) - ref).cwiseAbs().maxCoeff() < 1e-11 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
  }
}
