#pragma once
// Shared end-to-end scenarios.
#include <cmath>
#include <numbers>

#include "kam/engine.hpp"
#include "kam/lab.hpp"

namespace scenario {

inline const std::vector<double>& golden() {
  static const std::vector<double> w{(std::sqrt(5.0) - 1) / 2};
  return w;
}

inline kam::StepConfig practical() {
  kam::StepConfig c;  // delta 1.1, zeta 0.01, l 3, analytic weight, Psi = t^2
  c.kappa = golden()[0];
  c.target_log_eps = std::log(1e-13);
  c.max_steps = 4;
  return c;
}

struct Data {
  kam::RMat2 A;
  kam::MatrixSeries F;
  double r0;
};

// elliptic alpha = 0.4 with one cosine mode of weighted norm `size` at r0 = 1
inline Data elliptic_single_mode(double size = 1e-4) {
  kam::RMat2 A, M;
  A << 0, -0.4, 0.4, 0;
  M << 0.3, 1, -0.5, -0.3;
  auto F = kam::MatrixSeries::cosine_mode(1, kam::make_index({1}), M);
  F *= kam::cd(size / kam::weighted_norm(F, kam::WeightSpec::analytic(), 1.0));
  return {A, F, 1.0};
}

// Schroedinger companion system with q = 2 lambda cos(2 pi theta)
inline Data schrodinger(double E, double lambda) {
  auto sys = kam::schrodinger_system(E, kam::lambda_cos_potential(1, lambda), golden());
  return {sys.A, sys.F, 1.0};
}

// energy whose rotation number sits just above the first resonance pi*w
inline double resonant_energy() {
  double a = std::numbers::pi * golden()[0] + 0.05;
  return a * a;
}

}  // namespace scenario
