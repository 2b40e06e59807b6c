#include "kam/resonance.hpp"

#include <cmath>
#include <numbers>

namespace kam {

namespace {
constexpr double kPi = std::numbers::pi;

void check_scan(int d, double N) {
  if (!(N >= 1)) throw InputError("order", "scan order must be >= 1");
  if (l1_ball_size(d, std::floor(N)) > kMaxScanPoints)
    throw InputError("order", "lattice scan too large (RN^d limit)");
}

std::vector<double> psi_table(const ApproxSpec& psi, int K) {
  std::vector<double> t(K + 1, 0.0);
  for (int n = 1; n <= K; ++n) t[n] = psi(n);
  return t;
}
}  // namespace

BrCheck is_br_gap(cd z, bool real_spectrum, const std::vector<double>& omega,
                  const ApproxSpec& psi, double kappa, double N) {
  const int d = static_cast<int>(omega.size());
  check_scan(d, N);
  if (!(kappa > 0)) throw InputError("kappa", "kappa must be positive");
  const int K = static_cast<int>(std::floor(N));
  auto ps = psi_table(psi, K);
  BrCheck out;
  out.real_spectrum = real_spectrum;
  double best = std::numeric_limits<double>::infinity();
  for_each_l1_ball(d, K, [&](const Index& k) {
    double v = std::abs(z - cd(0, 2 * kPi * dot(k, omega))) * ps[l1(k)] / kappa;
    if (v < best) {
      best = v;
      out.worst_k = k;
    }
  });
  out.margin = best - 1;
  out.pass = real_spectrum || best >= 1;
  return out;
}

BrCheck is_br_spectrum(const RMat2& A, const std::vector<double>& omega, const ApproxSpec& psi,
                       double kappa, double N) {
  SpectralData S = classify(A);
  return is_br_gap(S.lambda1 - S.lambda2, S.cls != SpectralClass::elliptic, omega, psi, kappa, N);
}

std::optional<ResonanceResult> find_resonance(double alpha, const std::vector<double>& omega,
                                              const ApproxSpec& psi, double kappa, double N) {
  const int d = static_cast<int>(omega.size());
  check_scan(d, N);
  const int K = static_cast<int>(std::floor(N));
  auto ps = psi_table(psi, K);
  std::optional<ResonanceResult> best;
  for_each_l1_ball(d, K, [&](const Index& m) {
    double def = std::abs(2 * alpha - 2 * kPi * dot(m, omega));
    if (def < kappa / ps[l1(m)] && (!best || def < best->defect)) {
      best = ResonanceResult{m, def, alpha - kPi * dot(m, omega), kappa, N};
    }
  });
  return best;
}

RenormResult renormalize(const RMat2& A, const std::vector<double>& omega, const ApproxSpec& psi,
                         double kappa2, double RN, double N) {
  validate_sl2(A);
  if (!(kappa2 > 0)) throw InputError("kappa", "kappa'' must be positive");
  const int d = static_cast<int>(omega.size());
  SpectralData S = classify(A);
  RenormResult out{TrivialMap::identity(d), A, {}};
  RenormReport& rep = out.report;
  rep.cls = S.cls;
  rep.alpha = rep.shifted_alpha = S.alpha;
  rep.kappa2 = kappa2;
  rep.RN = RN;
  rep.N = N;
  rep.norm_A_tilde = A.cwiseAbs().maxCoeff();
  if (S.has_projections()) rep.C0_effective = S.proj_norm * std::pow(std::min(1.0, kappa2), 6);

  BrCheck br = is_br_spectrum(A, omega, psi, kappa2, RN);
  rep.br_pass = br.pass;
  rep.br_margin = br.margin;
  if (S.cls != SpectralClass::elliptic || br.pass) return out;

  rep.close_eigenvalues = S.separation < kappa2;
  auto res = find_resonance(S.alpha, omega, psi, kappa2, RN);
  if (!res) throw NumericalError("renormalize", "BR scan failed but no resonance was found");

  TrivialMap& phi = out.phi;
  phi.P1 = S.P1;
  phi.P2 = S.P2;
  phi.m2 = res->m2;
  phi.order = RN;
  double s = kPi * dot(res->m2, omega);
  out.A_tilde = rotation_shift(A, s);

  rep.resonant = true;
  rep.m2 = res->m2;
  rep.defect = res->defect;
  rep.shifted_alpha = res->shifted_alpha;
  rep.shift = A(1, 0) >= 0 ? s : -s;
  rep.norm_shift = (out.A_tilde - A).cwiseAbs().maxCoeff();
  rep.shift_bound_ok = rep.norm_shift <= kPi * N;
  rep.norm_A_tilde = out.A_tilde.cwiseAbs().maxCoeff();
  rep.norm_small_ok = rep.norm_A_tilde <= kappa2 / 2;
  rep.alpha_small_ok = std::abs(rep.shifted_alpha) <= kappa2 / 2;

  BrCheck br2 = is_br_spectrum(out.A_tilde, omega, psi, kappa2, RN);
  rep.br_pass = br2.pass;
  rep.br_margin = br2.margin;
  if (!br2.pass)
    throw NumericalError("renormalize", "shifted matrix still fails the BR scan (several resonances)");
  return out;
}

RenormResult renormalize_scaled(const RMat2& A, const std::vector<double>& omega,
                                const ApproxSpec& psi, double kappa, double R, double N) {
  if (!(R >= 2)) throw InputError("R", "R must be >= 2");
  return renormalize(A, omega, psi, kappa / psi(3 * R * N), R * N, N);
}

}  // namespace kam
