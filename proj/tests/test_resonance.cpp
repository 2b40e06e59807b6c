#include <cmath>

#include "doctest.h"
#include "kam/resonance.hpp"
#include "oracles.hpp"

using namespace kam;
using doctest::Approx;
using oracle::Rng;

namespace {
const double kPi = std::numbers::pi;
const std::vector<double> kGold{0.618034};
}  // namespace

TEST_CASE("hyperbolic spectrum always passes") {
  RMat2 A;
  A << 0.01, 0, 0, -0.01;
  auto br = is_br_spectrum(A, kGold, ApproxSpec::power(2), 0.9, 40);
  CHECK(br.pass);
  CHECK(br.real_spectrum);
}

TEST_CASE("exact resonance fails at k=1") {
  RMat2 A = oracle::rot(kPi * 0.618034);
  auto br = is_br_spectrum(A, kGold, ApproxSpec::power(2), 0.01, 5);
  CHECK_FALSE(br.pass);
  CHECK(std::abs(br.worst_k[0]) == 1);
  CHECK(br.margin == Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("BR scan agrees with exhaustive oracle in d=2") {
  Rng rng(41);
  std::vector<double> w{oracle::frozen::golden, std::sqrt(2.0) - 1};
  auto P = ApproxSpec::power(2.0);
  for (int rep = 0; rep < 100; ++rep) {
    double al = rng.uni(0.05, 3);
    double kappa = rng.uni(0.001, 0.5);
    int N = rng.integer(1, 12);
    auto br = is_br_spectrum(oracle::rot(al), w, P, kappa, N);
    double ref = oracle::br_margin(cd(0, 2 * al), w, [](double t) { return t * t; }, kappa, N);
    CHECK(br.margin == Approx(ref).epsilon(1e-12));
    CHECK(br.pass == (ref >= 0));
  }
}

TEST_CASE("BR scan input errors") {
  CHECK_THROWS_AS(is_br_spectrum(oracle::rot(0.3), kGold, ApproxSpec::power(2), 0.1, 0.5), InputError);
  std::vector<double> w4{0.1, 0.2, 0.3, 0.4};
  CHECK_THROWS_AS(is_br_spectrum(oracle::rot(0.3), w4, ApproxSpec::power(2), 0.1, 1e3), InputError);
}

TEST_CASE("find_resonance") {
  auto P = ApproxSpec::power(2.0);
  // nonresonant: 2 alpha far from every 2 pi k w
  CHECK_FALSE(find_resonance(0.1, kGold, P, 0.01, 5).has_value());

  auto r = find_resonance(kPi * 0.618034, kGold, P, 0.01, 5);
  REQUIRE(r.has_value());
  CHECK(r->m2 == make_index({1}));
  CHECK(r->m_l1() == 0.5);
  CHECK(std::abs(r->shifted_alpha) < 1e-15);

  std::vector<double> w{0.618034, 0.414214};
  double al = kPi * (w[0] + w[1]) + 0.001;
  auto r2 = find_resonance(al, w, P, 0.05, 2);
  REQUIRE(r2.has_value());
  CHECK(r2->m2 == make_index({1, 1}));
  CHECK(std::abs(r2->shifted_alpha) <= 0.05 / 2);
  CHECK(r2->shifted_alpha == Approx(0.001).epsilon(1e-9));

  // exhaustive oracle: smallest defect among resonant m'
  double best = INFINITY;
  for (int a = -2; a <= 2; ++a)
    for (int b = -2; b <= 2; ++b) {
      int n = std::abs(a) + std::abs(b);
      if (n == 0 || n > 2) continue;
      double def = std::abs(2 * al - 2 * kPi * (a * w[0] + b * w[1]));
      if (def < 0.05 / (n * n)) best = std::min(best, def);
    }
  CHECK(r2->defect == Approx(best));
}

TEST_CASE("renormalize hyperbolic and nonresonant are identity") {
  RMat2 H;
  H << 0.5, 0.1, 0.2, -0.5;
  auto out = renormalize(H, kGold, ApproxSpec::power(2), 0.01, 10, 5);
  CHECK(out.phi.is_identity());
  CHECK((out.A_tilde - H).norm() == 0);
  CHECK_FALSE(out.report.resonant);
  auto out2 = renormalize(oracle::rot(0.1), kGold, ApproxSpec::power(2), 0.01, 10, 5);
  CHECK(out2.phi.is_identity());
  CHECK_THROWS_AS(renormalize_scaled(H, kGold, ApproxSpec::power(2), 0.5, 1.5, 3), InputError);
}

TEST_CASE("renormalize exact resonance to zero matrix") {
  double w = oracle::frozen::golden;
  std::vector<double> om{w};
  auto out = renormalize(oracle::rot(kPi * w), om, ApproxSpec::power(2), 0.01, 10, 5);
  CHECK(out.report.resonant);
  CHECK(out.phi.m2 == make_index({1}));
  CHECK(out.A_tilde.norm() == 0);
  CHECK(is_br_spectrum(out.A_tilde, om, ApproxSpec::power(2), 0.01, 10).pass);
  CHECK(out.report.norm_small_ok);
  CHECK(out.report.shift_bound_ok);
  CHECK(out.report.shift == Approx(kPi * w));
}

TEST_CASE("renormalize: conjugation identity and small shifted matrix") {
  Rng rng(42);
  auto L = WeightSpec::analytic();
  std::vector<double> om{oracle::frozen::golden};
  auto P = ApproxSpec::power(2.0);
  for (int rep = 0; rep < 30; ++rep) {
    double kappa2 = rng.uni(0.01, 0.2);
    int mp = rng.integer(1, 4) * (rng.integer(0, 1) ? 1 : -1);
    double al = kPi * mp * om[0] + rng.uni(-0.25, 0.25) * kappa2 / (mp * mp);
    if (al <= 0) continue;
    // random eigenbasis with this alpha
    RMat2 Q;
    Q << rng.normal(), rng.normal(), rng.normal(), rng.normal();
    if (std::abs(Q.determinant()) < 0.5) continue;
    RMat2 A = Q * oracle::rot(al) * Q.inverse();
    A(1, 1) = -A(0, 0);
    auto out = renormalize(A, om, P, kappa2, 10, 5);
    REQUIRE(out.report.resonant);
    CHECK(out.phi.m2 == make_index({mp}));
    CHECK(out.report.alpha_small_ok);
    CHECK(std::abs(classify(out.A_tilde).alpha) <= kappa2 / 2 + 1e-12);
    CHECK(out.report.br_pass);
    auto Phi = out.phi.as_series();
    auto res = derive_omega(Phi, om) - Phi.left(A.cast<cd>()) + Phi.right(out.A_tilde.cast<cd>());
    CHECK(weighted_norm(res, L, 0.1) <= 1e-10 * A.cwiseAbs().maxCoeff());
    // Phi maps 2T -> SL(2,R)
    CHECK(std::abs(evaluate(Phi, {0.37}).determinant() - 1) < 1e-10);
  }
}

TEST_CASE("triviality closes under products") {
  Rng rng(43);
  RMat2 A = oracle::random_sl2(rng, SpectralClass::elliptic);
  auto S = classify(A);
  auto mk = [&](int m) {
    TrivialMap t;
    t.P1 = S.P1;
    t.P2 = S.P2;
    t.m2 = make_index({m});
    return t;
  };
  auto prod = multiply(mk(3).as_series(), mk(-5).as_series());
  prod.prune(1e-13);
  CHECK(oracle::coeff_distance(prod, mk(-2).as_series()) < 1e-12);
}

TEST_CASE("trivial conjugation keeps standard-torus parity") {
  Rng rng(44);
  std::vector<double> om{oracle::frozen::golden};
  auto out = renormalize(oracle::rot(kPi * om[0] + 0.001), om, ApproxSpec::power(2), 0.01, 10, 5);
  REQUIRE(out.report.resonant);
  auto G = oracle::random_series(rng, 1, 5, 4);
  auto C = conj_by_trivial(out.phi, G, false);
  CHECK(C.denom() == 1);
  auto C2 = C.with_denom(2);
  for (auto& [h, M] : C2.coeffs()) CHECK(h[0] % 2 == 0);
}
