#pragma once
#include <optional>

#include "kam/spectral.hpp"

namespace kam {

// Largest l1-ball (points) a scan may walk.
constexpr double kMaxScanPoints = 1e8;

struct BrCheck {
  bool pass = true;
  bool real_spectrum = false;  // passes by definition
  Index worst_k{};
  double margin = std::numeric_limits<double>::infinity();  // min |z - 2 pi i<k,w>| Psi(|k|)/kappa - 1
};

BrCheck is_br_spectrum(const RMat2& A, const std::vector<double>& omega, const ApproxSpec& psi,
                       double kappa, double N);
// Same scan for an arbitrary eigenvalue gap z.
BrCheck is_br_gap(cd z, bool real_spectrum, const std::vector<double>& omega,
                  const ApproxSpec& psi, double kappa, double N);

struct ResonanceResult {
  Index m2{};  // m' = 2m
  double defect = 0;         // |2 alpha - 2 pi <m',w>|
  double shifted_alpha = 0;  // alpha - pi <m',w>
  double kappa_used = 0;
  double order = 0;
  double m_l1() const { return l1(m2) / 2.0; }
};

// Smallest defect among resonant 0<|m'|<=N, ties to the first in lexicographic order.
std::optional<ResonanceResult> find_resonance(double alpha, const std::vector<double>& omega,
                                              const ApproxSpec& psi, double kappa, double N);

struct RenormReport {
  SpectralClass cls = SpectralClass::zero;
  bool resonant = false;
  bool close_eigenvalues = false;  // elliptic with 2 alpha < kappa''
  Index m2{};
  double defect = 0;
  double shift = 0;  // sign(c) pi <m',w>, the change in rotation number
  double alpha = 0, shifted_alpha = 0;
  double kappa2 = 0;
  double RN = 0, N = 0;
  double norm_shift = 0;   // |A~ - A|
  bool shift_bound_ok = true;  // |A~ - A| <= pi N
  bool br_pass = true;
  double br_margin = 0;
  double norm_A_tilde = 0;
  bool norm_small_ok = true;   // |A~| <= kappa''/2 (resonant only)
  bool alpha_small_ok = true;  // |alpha~| <= kappa''/2 (resonant only)
  double C0_effective = 0;     // max|P_i| kappa''^6
};

struct RenormResult {
  TrivialMap phi;
  RMat2 A_tilde;
  RenormReport report;
};

// Resonance search at order RN with threshold kappa2; N only enters the |A~ - A| <= pi N check.
RenormResult renormalize(const RMat2& A, const std::vector<double>& omega, const ApproxSpec& psi,
                         double kappa2, double RN, double N);
// kappa'' = kappa / Psi(3RN).
RenormResult renormalize_scaled(const RMat2& A, const std::vector<double>& omega,
                                const ApproxSpec& psi, double kappa, double R, double N);

}  // namespace kam
