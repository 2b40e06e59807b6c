#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "kam/engine.hpp"
#include "kam/lab.hpp"
#include "oracles.hpp"
#include "scenarios.hpp"

using namespace kam;
using doctest::Approx;
using oracle::Rng;

namespace {
const double kPi = std::numbers::pi;
}

TEST_CASE("integrate constant rotation and hyperbolic") {
  double a = 0.4, T = 1.0;
  CocycleSystem rot(oracle::rot(a), MatrixSeries(1), {0.3});
  RMat2 X = integrate(rot, {0.0}, T, 1e-3);
  RMat2 R;
  R << std::cos(a * T), -std::sin(a * T), std::sin(a * T), std::cos(a * T);
  CHECK((X - R).cwiseAbs().maxCoeff() < 1e-12);

  RMat2 H;
  H << 0.7, 0, 0, -0.7;
  CocycleSystem hyp(H, MatrixSeries(1), {0.3});
  RMat2 Y = integrate(hyp, {0.0}, 3.0, 1e-3);
  CHECK(Y(0, 0) == Approx(std::exp(2.1)).epsilon(1e-11));
  CHECK(Y(1, 1) == Approx(std::exp(-2.1)).epsilon(1e-11));
  CHECK(std::abs(Y(0, 1)) < 1e-12);
  CHECK_THROWS_AS(integrate(hyp, {0.0}, 1.0, 0.0), InputError);
  CHECK_THROWS_AS(integrate(hyp, {0.0, 0.1}, 1.0, 0.1), InputError);
}

TEST_CASE("property: RK4 error ratio under step halving") {
  Rng rng(71);
  int good = 0;
  for (int rep = 0; rep < 50; ++rep) {
    int d = rng.integer(1, 2);
    std::vector<double> w{oracle::frozen::golden, 0.31};
    w.resize(d);
    CocycleSystem sys(oracle::random_traceless(rng, 0.5), oracle::random_series(rng, d, 3, 2, 0.3, false), w);
    std::vector<double> th(d, 0.1);
    double h = 0.08;
    RMat2 X1 = integrate(sys, th, 1.6, h), X2 = integrate(sys, th, 1.6, h / 2), X4 = integrate(sys, th, 1.6, h / 4);
    double ratio = (X1 - X2).cwiseAbs().maxCoeff() / (X2 - X4).cwiseAbs().maxCoeff();
    good += ratio > 12 && ratio < 20;
  }
  CHECK(good >= 45);
}

TEST_CASE("determinant stays one") {
  auto s = scenario::schrodinger(0.5, 0.3);
  CocycleSystem sys(s.A, s.F, scenario::golden());
  for (double T : {10.0, 100.0, 537.0}) {
    RMat2 X = integrate(sys, {0.2}, T, 0.01);
    CHECK(std::abs(X.determinant() - 1) < 1e-9);
  }
}

TEST_CASE("lyapunov of constant systems") {
  RMat2 A;
  A << 0.3, 0.8, -1.1, -0.3;  // elliptic, not normal
  CocycleSystem ell(A, MatrixSeries(1), {0.3});
  auto e = lyapunov(ell, 500, 4, 0.01);
  CHECK(std::abs(e.mean) <= 3 * e.stderr_ + 5e-3);
  RMat2 H;
  H << 0.25, 0, 0, -0.25;
  CocycleSystem hyp(H, MatrixSeries(1), {0.3});
  CHECK(lyapunov(hyp, 200, 3, 0.01).mean == Approx(0.25).epsilon(1e-6));
  CHECK_THROWS_AS(lyapunov(hyp, 200, 0, 0.01), InputError);
}

TEST_CASE("lyapunov positive for strong potential, stable under step halving") {
  auto s = scenario::schrodinger(-2.0, 2.0);  // below most of the potential range
  CocycleSystem sys(s.A, s.F, scenario::golden());
  auto e1 = lyapunov(sys, 400, 6, 0.01, 3);
  auto e2 = lyapunov(sys, 400, 6, 0.005, 3);
  CHECK(e1.mean > 0.1);
  CHECK(e1.mean == Approx(e2.mean).epsilon(1e-4));
}

TEST_CASE("lyapunov invariant under constant conjugation") {
  Rng rng(72);
  RMat2 H;
  H << 0.4, 0.1, 0.2, -0.4;
  auto F = oracle::random_series(rng, 1, 2, 2, 0.1, false);
  CocycleSystem a(H, F, scenario::golden());
  RMat2 Q;
  Q << 1.3, 0.4, -0.2, 0.9;
  Q /= std::sqrt(Q.determinant());
  RMat2 Qi = Q.inverse();
  CocycleSystem b(Qi * H * Q, F.left(Qi.cast<cd>()).right(Q.cast<cd>()), scenario::golden());
  auto ea = lyapunov(a, 400, 8, 0.01), eb = lyapunov(b, 400, 8, 0.01);
  CHECK(std::abs(ea.mean - eb.mean) <= 3 * (ea.stderr_ + eb.stderr_) + 2e-2);
}

TEST_CASE("rotation number of constant and perturbed systems") {
  CocycleSystem rot(oracle::rot(0.4), MatrixSeries(1), scenario::golden());
  auto e = rotation_number(rot, 200, 0.01);
  CHECK(e.mean == Approx(0.4).epsilon(1e-9));
  CHECK_FALSE(e.collapsed);
  RMat2 A;
  A << 0.3, 0.8, -1.1, -0.3;
  CocycleSystem ell(A, MatrixSeries(1), scenario::golden());
  CHECK(rotation_number(ell, 4000, 0.01).mean == Approx(const_rotation_number(A)).epsilon(2e-3));

  auto s = scenario::elliptic_single_mode(1e-3);
  CocycleSystem pert(s.A, s.F, scenario::golden());
  double rn = rotation_number(pert, 2000, 0.01, 4).mean;
  CHECK(std::abs(rn - 0.4) <= 1e-2);

  RMat2 H;
  H << 0.5, 0, 0, -0.5;
  CocycleSystem hyp(H, MatrixSeries(1), scenario::golden());
  CHECK(rotation_number(hyp, 100, 0.01).collapsed);
}

TEST_CASE("rotation shift of a trivial conjugation") {
  // A and its shifted version differ in rotation number by pi <m',w>
  const auto& w = scenario::golden();
  RMat2 A;
  A << 0.2, -2.2, 1.0, -0.2;
  double al = classify(A).alpha;
  double s = kPi * w[0];
  RMat2 At = rotation_shift(A, s);
  CocycleSystem a(A, MatrixSeries(1), w), b(At, MatrixSeries(1), w);
  double ra = rotation_number(a, 4000, 0.005).mean, rb = rotation_number(b, 4000, 0.005).mean;
  CHECK(ra - rb == Approx(s).epsilon(2e-3));
}

TEST_CASE("verify_conjugation") {
  auto s = scenario::elliptic_single_mode(1e-4);
  const auto& w = scenario::golden();
  CocycleSystem sys(s.A, s.F, w);
  CHECK(verify_conjugation(MatrixSeries::identity(1), sys, sys, 16) == 0);

  StepConfig cfg = scenario::practical();
  auto b = step_basic(s.A, s.F, 1.0, 0.8, 10, 0.1, w, cfg);
  CocycleSystem after(b.A_next, b.F_next, w);
  double g = verify_conjugation(b.E, sys, after, 64);
  CHECK(g <= 1e-9);
  CHECK(verify_conjugation(b.E, sys, after, 64, false) <= 1e-8);

  auto bad = b.E;
  bad.add_to(make_index({2}), Mat2::Identity() * 1e-6);
  bad.add_to(make_index({-2}), Mat2::Identity() * 1e-6);
  double gb = verify_conjugation(bad, sys, after, 64);
  CHECK(gb >= 1e-7);
  // series-side residual at radius zero bounds the grid maximum and is within a factor 10
  auto B = s.F + MatrixSeries::constant(1, s.A.cast<cd>());
  auto C = b.F_next + MatrixSeries::constant(1, b.A_next.cast<cd>());
  double ser = conjugation_residual(bad, B, C, w, cfg.L, 0.0);
  CHECK(gb <= ser * (1 + 1e-9));
  CHECK(gb * 10 >= ser);
  CHECK_THROWS_AS(verify_conjugation(b.E, sys, after, 0), InputError);
}

TEST_CASE("sampling is deterministic") {
  auto a = sample_points(2, 5, 9), b = sample_points(2, 5, 9), c = sample_points(2, 5, 10);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a[0] == std::vector<double>{0, 0});
  auto s = scenario::schrodinger(0.5, 1.0);
  CocycleSystem sys(s.A, s.F, scenario::golden());
  CHECK(lyapunov(sys, 50, 4, 0.01, 5).mean == lyapunov(sys, 50, 4, 0.01, 5).mean);
}

TEST_CASE("csv output") {
  std::ostringstream os;
  write_csv(os, {{{0.25, 0.5}, 10, 0.125, -0.5}});
  CHECK(os.str() == "theta,T,log_norm,rotation\n0.25 0.5,10,0.125,-0.5\n");
}

TEST_CASE("schroedinger builder and potential file") {
  auto q = lambda_cos_potential(2, 0.5);
  CHECK(q.size() == 4);
  auto sys = schrodinger_system(0.7, q, {0.3, 0.4});
  CHECK(sys.A(1, 0) == Approx(-0.7));
  CHECK(sys.A(0, 1) == 1);
  CHECK(sys.A.trace() == 0);
  // q(theta) = cos(2 pi theta1) + cos(2 pi theta2) at theta = 0 is 2
  RMat2 v = evaluate(sys.F, {0.0, 0.0});
  CHECK(v(1, 0) == Approx(2.0));

  const char* path = "lab_potential_test.txt";
  {
    std::ofstream f(path);
    f << "# h re im\n0 0.1 0\n1 0.25 0.1\n-1 0.25 -0.1\n";
  }
  auto q2 = read_scalar_series(path, 1);
  auto s2 = schrodinger_system(1.0, q2, {0.3});
  CHECK(s2.A(1, 0) == Approx(0.1 - 1.0));
  CHECK(s2.F.size() == 2);
  {
    std::ofstream f(path);
    f << "1 0.25 0.1\n";
  }
  CHECK_THROWS_AS(read_scalar_series(path, 1), InputError);
  std::remove(path);
}
