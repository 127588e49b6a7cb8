#ifndef PBG_FARFIELD_HPP
#define PBG_FARFIELD_HPP

// Angular distribution W(theta) and total expectation value W of the
// radiation energy escaping into either half-space, in units of hbar omega_A.
// The stationary-phase far field is carried entirely by the amplitudes
// g_{q+/-}, built from the same polarized coefficients as the decay rates.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "pbg/decay.hpp"

namespace pbg {

enum class Side { above, below };

inline const char* to_string(Side s) noexcept { return s == Side::above ? "above" : "below"; }

struct FarFieldAmplitudes {
  cplx p_plus;
  cplx p_minus;
  cplx s_plus;
  cplx beta_j;
  cplx k_j;
};

struct AngularSpectrum {
  Side side = Side::above;
  double omega_a = 0.0;
  std::vector<double> thetas;
  std::vector<double> values;  // W(theta) / (hbar omega_A)
};

struct EnergyResult {
  double W_top = 0.0;
  double W_bottom = 0.0;
  double lost_fraction = 0.0;
  double gamma_total = 0.0;      // Gamma / Gamma_0 in the prefactor
  double quadrature_error = 0.0;
  double form_mismatch = 0.0;    // largest relative theta-form vs k-form difference
  Diagnostics diagnostics;
};

/// Amplitudes g^{side}_{q+/-} at in-plane wavenumber k_par <= k_side.
/// k_par == k_side is allowed because sin(theta) rounds to 1 near grazing.
inline FarFieldAmplitudes farfield_amplitudes(const EmissionProblem& prob, Side side,
                                              double k_par) {
  const double k_side = prob.half_space_k(side == Side::above);
  if (!(k_par >= 0.0 && k_par <= k_side))
    throw std::domain_error("far-field amplitudes need 0 <= k_par <= k_side");
  const auto& s = prob.spectrum();
  const double two_pi = 2.0 * std::numbers::pi;
  const double z = prob.emitter().z_a * two_pi;
  const double d = s.thickness[s.emitter];
  const double near = side == Side::above ? d - z : z;  // emitter to the exit face
  const double far = d - near;

  FarFieldAmplitudes g{};
  for (Polarization q : {Polarization::s, Polarization::p}) {
    const auto c = coefficients(s, cplx(k_par), q);
    const cplx t = side == Side::above ? c.t_up : c.t_down;
    const cplx r_back = side == Side::above ? c.r_minus : c.r_plus;
    const cplx i(0.0, 1.0);
    const cplx lead = t * std::exp(i * c.beta_j * near) / c.D;
    const cplx echo = r_back * std::exp(2.0 * i * c.beta_j * far);
    if (q == Polarization::s) {
      g.s_plus = lead * (1.0 + echo);
    } else {
      g.p_plus = lead * (1.0 + echo);
      g.p_minus = lead * (1.0 - echo);
    }
    g.beta_j = c.beta_j;
  }
  g.k_j = s.k(s.emitter);
  return g;
}

inline FarFieldAmplitudes farfield_amplitudes(const LayerStack& stack,
                                              const EmitterConfig& emitter, Side side,
                                              double k_par, const EngineOptions& opt = {}) {
  return farfield_amplitudes(EmissionProblem(stack, emitter, opt), side, k_par);
}

namespace detail {

// Orientation-weighted bracket shared by the theta- and k-forms of W.
inline double farfield_bracket(const EmissionProblem& prob, Side side, double k_par) {
  const auto g = farfield_amplitudes(prob, side, k_par);
  const double kj2 = std::norm(g.k_j);
  const auto& e = prob.emitter();
  double sum = 0.0;
  if (e.w_z != 0.0) sum += e.w_z * 2.0 * k_par * k_par / kj2 * std::norm(g.p_plus);
  if (e.w_par != 0.0)
    sum += e.w_par * (std::norm(g.beta_j) / kj2 * std::norm(g.p_minus) + std::norm(g.s_plus));
  return sum;
}

inline double half_space_index(const EmissionProblem& prob, Side side) {
  return prob.half_space_k(side == Side::above) / prob.spectrum().omega;
}

}  // namespace detail

/// W(theta) / (hbar omega_A) for one polar angle in [0, pi/2).
inline double angular_density(const EmissionProblem& prob, Side side, double theta) {
  if (!(theta >= 0.0 && theta < 0.5 * std::numbers::pi))
    throw std::domain_error("theta must lie in [0, pi/2)");
  const double k_side = prob.half_space_k(side == Side::above);
  const double gamma = prob.total().value;
  return 3.0 / (8.0 * gamma) * detail::half_space_index(prob, side) *
         detail::farfield_bracket(prob, side, k_side * std::sin(theta));
}

/// W(Omega) / (hbar omega_A) per unit solid angle for a dipole along the unit
/// vector `dipole`; its squared components must match the emitter's
/// orientation weights.
inline double solid_angle_density(const EmissionProblem& prob, Side side, double theta,
                                  double phi, const std::array<double, 3>& dipole) {
  const auto& e = prob.emitter();
  const double dz2 = dipole[2] * dipole[2];
  const double norm2 = dipole[0] * dipole[0] + dipole[1] * dipole[1] + dz2;
  if (std::abs(norm2 - 1.0) > 1e-12 || std::abs(dz2 - e.w_z) > 1e-12)
    throw std::invalid_argument("dipole direction does not match the emitter orientation weights");
  const double k_side = prob.half_space_k(side == Side::above);
  const double k_par = k_side * std::sin(theta);
  const auto g = farfield_amplitudes(prob, side, k_par);
  // Dipole components along the in-plane propagation direction and across it.
  const double along = dipole[0] * std::cos(phi) + dipole[1] * std::sin(phi);
  const double across = -dipole[0] * std::sin(phi) + dipole[1] * std::cos(phi);
  const cplx amp_p = k_par / g.k_j * dipole[2] * g.p_plus - g.beta_j / g.k_j * along * g.p_minus;
  const cplx amp_s = across * g.s_plus;
  const double gamma = prob.total().value;
  return 3.0 / (8.0 * std::numbers::pi * gamma) * detail::half_space_index(prob, side) *
         (std::norm(amp_p) + std::norm(amp_s));
}

inline AngularSpectrum angular_energy(const EmissionProblem& prob, Side side,
                                      std::span<const double> thetas) {
  AngularSpectrum out;
  out.side = side;
  out.omega_a = prob.emitter().omega_a;
  out.thetas.assign(thetas.begin(), thetas.end());
  out.values.reserve(thetas.size());
  for (double t : thetas) out.values.push_back(angular_density(prob, side, t));
  return out;
}

inline AngularSpectrum angular_energy(const LayerStack& stack, const EmitterConfig& emitter,
                                      Side side, std::span<const double> thetas,
                                      const EngineOptions& opt = {}) {
  return angular_energy(EmissionProblem(stack, emitter, opt), side, thetas);
}

/// Uniform grid of n points on [0, pi/2).
inline std::vector<double> theta_grid(std::size_t n = 721) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = 0.5 * std::numbers::pi * double(i) / double(n);
  return g;
}

/// W / (hbar omega_A) on one side by quadrature of sin(theta) W(theta).
inline QuadratureResult side_energy_theta(const EmissionProblem& prob, Side side) {
  const double k_side = prob.half_space_k(side == Side::above);
  const AxisPiece piece{AxisPiece::Kind::sine, k_side, 0.0, 0.5 * std::numbers::pi};
  const auto cuts = resonance_breakpoints(prob.spectrum(), piece, prob.options().scan_points);
  const double pre = 3.0 / (8.0 * prob.total().value) * detail::half_space_index(prob, side);
  auto f = [&](double t) {
    return std::sin(t) * detail::farfield_bracket(prob, side, k_side * std::sin(t));
  };
  auto r = integrate(f, piece.t0, piece.t1, prob.options().quad, cuts);
  r.value *= pre;
  r.error *= pre;
  return r;
}

/// The same quantity integrated directly over k_par in [0, k_side]:
///   3 / (8 (Gamma/Gamma_0) omega_A) int dk (k / beta_side) [...]
/// The upper half uses k = k_side - s^2 to absorb the 1/beta_side endpoint.
inline QuadratureResult side_energy_k(const EmissionProblem& prob, Side side) {
  const double kn = prob.half_space_k(side == Side::above);
  const double omega = prob.spectrum().omega;
  const AxisPiece piece{AxisPiece::Kind::sine, kn, 0.0, 0.5 * std::numbers::pi};
  const auto theta_cuts = resonance_breakpoints(prob.spectrum(), piece, prob.options().scan_points);
  std::vector<double> k_cuts, s_cuts;
  for (double t : theta_cuts) {
    const double k = kn * std::sin(t);
    if (k < 0.5 * kn) k_cuts.push_back(k);
    else s_cuts.push_back(std::sqrt(kn - k));
  }
  const double pre = 3.0 / (8.0 * prob.total().value * omega);
  auto lower = [&](double k) {
    return k / std::sqrt(kn * kn - k * k) * detail::farfield_bracket(prob, side, k);
  };
  // dk = -2 s ds and beta = s sqrt(kn + k), so (k/beta) dk -> 2 k ds / sqrt(kn + k).
  auto upper = [&](double s) {
    const double k = kn - s * s;
    return 2.0 * k / std::sqrt(kn + k) * detail::farfield_bracket(prob, side, k);
  };
  auto r = integrate(lower, 0.0, 0.5 * kn, prob.options().quad, k_cuts);
  r += integrate(upper, 0.0, std::sqrt(0.5 * kn), prob.options().quad, s_cuts);
  r.value *= pre;
  r.error *= pre;
  return r;
}

inline EnergyResult total_energy(const EmissionProblem& prob) {
  EnergyResult out;
  out.gamma_total = prob.total().value;
  out.diagnostics = prob.rate_diagnostics();
  double* targets[] = {&out.W_top, &out.W_bottom};
  int idx = 0;
  for (Side side : {Side::above, Side::below}) {
    const auto th = side_energy_theta(prob, side);
    const auto kf = side_energy_k(prob, side);
    *targets[idx++] = th.value;
    out.quadrature_error += th.error;
    const double scale = std::max(std::abs(th.value), 1e-300);
    out.form_mismatch = std::max(out.form_mismatch, std::abs(th.value - kf.value) / scale);
  }
  out.quadrature_error += prob.total().error;
  out.lost_fraction = 1.0 - out.W_top - out.W_bottom;
  out.diagnostics.form_mismatch = out.form_mismatch > 1e-8;
  return out;
}

inline EnergyResult total_energy(const LayerStack& stack, const EmitterConfig& emitter,
                                 const EngineOptions& opt = {}) {
  return total_energy(EmissionProblem(stack, emitter, opt));
}

}  // namespace pbg

#endif  // PBG_FARFIELD_HPP
