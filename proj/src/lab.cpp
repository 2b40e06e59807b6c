#include "kam/lab.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "kam/spectral.hpp"

namespace kam {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2 * kPi;

RMat2 rk4_step(const OrbitField& f, const RMat2& X, double t, double h) {
  RMat2 M0 = f(t), Mh = f(t + h / 2), M1 = f(t + h);
  RMat2 k1 = M0 * X;
  RMat2 k2 = Mh * (X + h / 2 * k1);
  RMat2 k3 = Mh * (X + h / 2 * k2);
  RMat2 k4 = M1 * (X + h * k3);
  return X + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
}

void renormalize_det(RMat2& X) {
  double det = X.determinant();
  if (!(det > 0) || !std::isfinite(det)) throw NumericalError("integrate", "propagator degenerated");
  X /= std::sqrt(det);
}

// Runs fn(i) for i in [0,n) on a few threads; results go to caller-owned slots.
template <class Fn>
void parallel_for(int n, Fn&& fn) {
  int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  int nt = std::min(n, std::min(hw, 8));
  if (nt <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> th;
  std::vector<std::exception_ptr> errs(nt);
  for (int w = 0; w < nt; ++w)
    th.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += nt) fn(i);
      } catch (...) {
        errs[w] = std::current_exception();
      }
    });
  for (auto& t : th) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

Estimate mean_and_stderr(const std::vector<double>& v) {
  Estimate e;
  e.samples = static_cast<int>(v.size());
  if (v.empty()) return e;
  double s = 0;
  for (double x : v) s += x;
  e.mean = s / v.size();
  if (v.size() > 1) {
    double q = 0;
    for (double x : v) q += (x - e.mean) * (x - e.mean);
    e.stderr_ = std::sqrt(q / (v.size() - 1) / v.size());
  }
  return e;
}

void check_step(double T, double h) {
  if (!(h > 0)) throw InputError("step", "step size must be positive");
  if (!(T >= 0)) throw InputError("time", "time must be nonnegative");
}
}  // namespace

CocycleSystem::CocycleSystem(const RMat2& A_, MatrixSeries F_, std::vector<double> omega_,
                             std::string label_)
    : A(A_), F(std::move(F_)), omega(std::move(omega_)), label(std::move(label_)) {
  if (F.dim() != dim()) throw InputError("dim", "perturbation and frequency dimensions differ");
  if (!A.allFinite()) throw InputError("matrix", "nonfinite constant part");
}

OrbitField::OrbitField(const CocycleSystem& sys, const std::vector<double>& theta0) {
  if (static_cast<int>(theta0.size()) != sys.dim()) throw InputError("dim", "point dimension mismatch");
  A_ = sys.A;
  const int D = sys.F.denom();
  const bool real = sys.F.is_real(1e-13);
  for (auto& [h, M] : sys.F.coeffs()) {
    double ph = kTwoPi * dot(h, theta0) / D;
    double w = kTwoPi * dot(h, sys.omega) / D;
    if (is_zero(h)) {
      A_ += M.real();
      continue;
    }
    if (real) {
      if (!canonical_half(h)) continue;
      c_.push_back(2.0 * cd(std::cos(ph), std::sin(ph)) * M);
    } else {
      c_.push_back(cd(std::cos(ph), std::sin(ph)) * M);
    }
    w_.push_back(w);
  }
}

RMat2 OrbitField::operator()(double t) const {
  RMat2 s = A_;
  for (size_t i = 0; i < c_.size(); ++i) s += (cd(std::cos(w_[i] * t), std::sin(w_[i] * t)) * c_[i]).real();
  return s;
}

RMat2 integrate(const CocycleSystem& sys, const std::vector<double>& theta0, double T, double h) {
  check_step(T, h);
  OrbitField f(sys, theta0);
  long n = static_cast<long>(std::ceil(T / h));
  RMat2 X = RMat2::Identity();
  if (n == 0) return X;
  double hh = T / n;
  for (long i = 0; i < n; ++i) {
    X = rk4_step(f, X, i * hh, hh);
    if ((i + 1) % 100 == 0) renormalize_det(X);
  }
  renormalize_det(X);
  if (!X.allFinite()) throw NumericalError("integrate", "nonfinite propagator");
  return X;
}

std::vector<std::vector<double>> sample_points(int d, int n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < n; ++i) {
    std::vector<double> p(d, 0.0);
    if (i > 0)
      for (auto& x : p) x = u(rng);
    pts.push_back(p);
  }
  return pts;
}

double log_norm_at(const CocycleSystem& sys, const std::vector<double>& theta0, double T, double h) {
  check_step(T, h);
  OrbitField f(sys, theta0);
  long n = static_cast<long>(std::ceil(T / h));
  if (n == 0) return 0;
  double hh = T / n;
  // X^T = B_m ... B_1 with blocks of 100 steps; keep the running product normalized
  RMat2 U = RMat2::Identity(), B = RMat2::Identity();
  double s = 0;
  for (long i = 0; i < n; ++i) {
    B = rk4_step(f, B, i * hh, hh);
    if ((i + 1) % 100 == 0 || i + 1 == n) {
      renormalize_det(B);
      U = B * U;
      double nu = U.operatorNorm();
      s += std::log(nu);
      U /= nu;
      B.setIdentity();
    }
  }
  return s;
}

Estimate lyapunov(const CocycleSystem& sys, double T, int n_samples, double h, uint64_t seed) {
  if (n_samples < 1) throw InputError("samples", "need at least one sample");
  if (!(T > 0)) throw InputError("time", "time must be positive");
  auto pts = sample_points(sys.dim(), n_samples, seed);
  std::vector<double> v(n_samples);
  parallel_for(n_samples, [&](int i) { v[i] = log_norm_at(sys, pts[i], T, h) / T; });
  return mean_and_stderr(v);
}

double rotation_at(const CocycleSystem& sys, const std::vector<double>& theta0, double T, double h,
                   bool* collapsed) {
  check_step(T, h);
  if (!(T > 0)) throw InputError("time", "time must be positive");
  OrbitField f(sys, theta0);
  Eigen::Vector2d v(1, 0);
  double t = 0, arg = 0, growth = 0;
  double step = h;
  while (t < T) {
    double hs = std::min(step, T - t);
    Eigen::Vector2d w;
    for (;;) {
      RMat2 P = rk4_step(f, RMat2::Identity(), t, hs);
      w = P * v;
      double da = std::atan2(v(0) * w(1) - v(1) * w(0), v.dot(w));
      if (std::abs(da) < kPi / 2) {
        arg += da;
        break;
      }
      hs /= 2;
      if (hs < 1e-12) throw NumericalError("rotation", "step-size guard collapsed");
    }
    double nw = w.norm();
    growth += std::log(nw);
    v = w / nw;
    t += hs;
  }
  if (collapsed) *collapsed = growth / T > 1e-2;
  return arg / T;
}

Estimate rotation_number(const CocycleSystem& sys, double T, double h, int n_samples, uint64_t seed) {
  if (n_samples < 1) throw InputError("samples", "need at least one sample");
  auto pts = sample_points(sys.dim(), n_samples, seed);
  std::vector<double> v(n_samples);
  std::vector<char> col(n_samples, 0);
  parallel_for(n_samples, [&](int i) {
    bool c = false;
    v[i] = rotation_at(sys, pts[i], T, h, &c);
    col[i] = c;
  });
  Estimate e = mean_and_stderr(v);
  for (char c : col) e.collapsed = e.collapsed || c;
  return e;
}

double verify_conjugation(const MatrixSeries& Z, const CocycleSystem& before,
                          const CocycleSystem& after, int grid_n, bool spectral) {
  const int d = before.dim();
  if (Z.dim() != d || after.dim() != d) throw InputError("dim", "dimension mismatch");
  if (grid_n < 1) throw InputError("grid", "grid size must be positive");
  MatrixSeries dZ = derive_omega(Z, before.omega);
  long total = 1;
  for (int i = 0; i < d; ++i) total *= grid_n;
  double worst = 0;
  std::vector<double> th(d);
  const double fd = 1e-5;
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    for (int i = 0; i < d; ++i) {
      th[i] = 2.0 * (rem % grid_n) / grid_n;
      rem /= grid_n;
    }
    Mat2 z = evaluate_complex(Z, th);
    Mat2 dz;
    if (spectral) {
      dz = evaluate_complex(dZ, th);
    } else {
      std::vector<double> p = th, m = th;
      for (int i = 0; i < d; ++i) {
        p[i] += fd * before.omega[i];
        m[i] -= fd * before.omega[i];
      }
      dz = (evaluate_complex(Z, p) - evaluate_complex(Z, m)) / (2 * fd);
    }
    Mat2 B = before.A.cast<cd>() + evaluate_complex(before.F, th);
    Mat2 C = after.A.cast<cd>() + evaluate_complex(after.F, th);
    Mat2 res = dz - B * z + z * C;
    worst = std::max(worst, res.cwiseAbs().maxCoeff());
  }
  return worst;
}

void write_csv(std::ostream& os, const std::vector<CsvRow>& rows) {
  os << "theta,T,log_norm,rotation\n";
  char buf[128];
  for (auto& r : rows) {
    std::string th;
    for (size_t i = 0; i < r.theta.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s%.17g", i ? " " : "", r.theta[i]);
      th += buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g\n", r.T, r.log_norm, r.rotation);
    os << th << buf;
  }
}

ScalarSeries lambda_cos_potential(int d, double lambda) {
  ScalarSeries q;
  for (int i = 0; i < d; ++i) {
    Index k;
    k[i] = 1;
    q[k] = lambda;
    q[negate(k)] = lambda;
  }
  return q;
}

ScalarSeries read_scalar_series(const std::string& path, int d) {
  std::ifstream in(path);
  if (!in) throw InputError("io", "cannot open " + path);
  ScalarSeries q;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::vector<int> h(d);
    if (!(ls >> h[0])) continue;
    for (int i = 1; i < d; ++i)
      if (!(ls >> h[i])) throw InputError("potential", "bad index on line " + std::to_string(lineno));
    double re, im;
    if (!(ls >> re >> im)) throw InputError("potential", "bad coefficient on line " + std::to_string(lineno));
    q[make_index(h)] += cd(re, im);
  }
  for (auto& [h, c] : q) {
    auto it = q.find(negate(h));
    cd other = it == q.end() ? cd(0) : it->second;
    if (std::abs(c - std::conj(other)) > 1e-12 * (1 + std::abs(c)))
      throw InputError("potential", "potential is not real-valued");
  }
  return q;
}

CocycleSystem schrodinger_system(double E, const ScalarSeries& q, const std::vector<double>& omega) {
  const int d = static_cast<int>(omega.size());
  MatrixSeries F(d);
  double q0 = 0;
  for (auto& [h, c] : q) {
    if (is_zero(h)) {
      q0 = c.real();
      continue;
    }
    Mat2 M = Mat2::Zero();
    M(1, 0) = c;
    F.set(h, M);
  }
  RMat2 A;
  A << 0, 1, q0 - E, 0;
  return CocycleSystem(A, std::move(F), omega, "schrodinger");
}

}  // namespace kam
