#ifndef PBG_DECAY_HPP
#define PBG_DECAY_HPP

// Total and radiative spontaneous decay rates of a dipole inside the emitter
// layer, normalized to the free-space rate.
//
//   Gamma / Gamma_0     = Re int_0^inf  F(k) dk
//   Gamma_rad / Gamma_0 = Re int_0^k_n  F(k) dk
//
// F is analytic in the lower half of the complex k plane (guided-mode poles
// of a passive stack sit just above the real axis). The total rate is
// therefore integrated along a semi-ellipse below the axis, which passes
// every pole and branch point at a finite distance; the radiative rate stays
// on the real axis, where only broad leaky resonances occur, and gets
// breakpoints at the minima of |D_qj|.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "pbg/quadrature.hpp"
#include "pbg/stack.hpp"

namespace pbg {

struct EmitterConfig {
  double omega_a = 1.0;
  double z_a = 0.0;    // from the lower face of the emitter layer, lambda_0 units
  double w_z = 0.0;    // d_z^2 / d^2
  double w_par = 1.0;  // d_par^2 / d^2

  static EmitterConfig parallel(double omega, double z) { return {omega, z, 0.0, 1.0}; }
  static EmitterConfig perpendicular(double omega, double z) { return {omega, z, 1.0, 0.0}; }
  static EmitterConfig isotropic(double omega, double z) {
    return {omega, z, 1.0 / 3.0, 2.0 / 3.0};
  }

  void validate(const LayerStack& stack) const {
    if (!(omega_a > 0.0)) throw std::domain_error("emitter.omega_A must be > 0");
    const double d = stack.emitter_thickness();
    if (!(z_a > 0.0 && z_a < d))
      throw std::domain_error("emitter.z_A must lie strictly inside the emitter layer (0, " +
                              std::to_string(d) + ")");
    if (!(w_z >= 0.0 && w_par >= 0.0) || std::abs(w_z + w_par - 1.0) > 1e-12)
      throw std::domain_error("emitter orientation weights must be >= 0 and sum to 1");
  }
};

struct Diagnostics {
  bool clamped = false;          // deep-evanescent propagation factor clamped
  bool lossy_emitter = false;    // Im eps_j / Re eps_j above 1e-3
  bool regularized = false;      // gamma = 0 replaced by the linewidth floor
  bool form_mismatch = false;    // theta- and k-forms of W disagree beyond 1e-8

  Diagnostics& operator|=(const Diagnostics& o) {
    clamped |= o.clamped;
    lossy_emitter |= o.lossy_emitter;
    regularized |= o.regularized;
    form_mismatch |= o.form_mismatch;
    return *this;
  }

  /// Flags joined with '|', empty when clean.
  std::string to_string() const {
    std::string s;
    auto add = [&s](bool on, const char* name) {
      if (!on) return;
      if (!s.empty()) s += '|';
      s += name;
    };
    add(clamped, "clamped");
    add(lossy_emitter, "lossy_emitter");
    add(regularized, "regularized");
    add(form_mismatch, "form_mismatch");
    return s;
  }
};

struct RateResult {
  double gamma_total = 0.0;
  double gamma_rad = 0.0;
  double quadrature_error = 0.0;
  double guided_fraction = 0.0;
  Diagnostics diagnostics;
};

struct EngineOptions {
  QuadratureOptions quad;
  double gamma_floor = 1e-12;   // linewidth injected where a Drude-Lorentz gamma is exactly 0
  double contour_depth = 0.1;   // semi-minor axis of the contour / its length
  int scan_points = 1024;       // coarse |D|^2 scan used to seed resonance breakpoints
};

/// Copy of the stack with every exactly lossless Drude-Lorentz layer given the
/// linewidth floor.
inline LayerStack regularized(const LayerStack& stack, double gamma_floor,
                              bool* changed = nullptr) {
  auto layers = stack.layers();
  for (auto& l : layers) {
    if (const auto* dl = l.material.drude(); dl && dl->gamma == 0.0) {
      l.material = l.material.with_min_gamma(gamma_floor);
      if (changed) *changed = true;
    }
  }
  return LayerStack(std::move(layers), stack.emitter_layer());
}

/// Complex integrand F(k) of the decay-rate integral for one emitter.
class RateIntegrand {
 public:
  RateIntegrand(StackSpectrum spectrum, const EmitterConfig& emitter)
      : s_(std::move(spectrum)), e_(emitter) {
    const double scale = 2.0 * std::numbers::pi;
    z_ = emitter.z_a * scale;
    d_ = s_.thickness[s_.emitter];
    kj2_ = s_.eps[s_.emitter] * s_.omega * s_.omega;
  }

  const StackSpectrum& spectrum() const noexcept { return s_; }
  const EmitterConfig& emitter() const noexcept { return e_; }

  /// e^{i beta_j d_j} C^q_{+/-} for both signs.
  struct Bracket {
    cplx plus, minus, D;
  };

  Bracket bracket(const PolarizedCoefficients& c) const {
    bool dummy = false;
    const cplx ez = detail::propagate(c.beta_j, 2.0 * z_, dummy);
    const cplx ezr = detail::propagate(c.beta_j, 2.0 * (d_ - z_), dummy);
    const cplx ed = detail::propagate(c.beta_j, 2.0 * d_, dummy);
    const cplx mixed = c.r_minus * ez + c.r_plus * ezr;
    const cplx both = c.r_plus * c.r_minus * ed;
    return {(1.0 + mixed + both) / c.D, (-1.0 + mixed - both) / c.D, c.D};
  }

  cplx operator()(cplx k, bool* clamped = nullptr) const {
    const auto cs = coefficients(s_, k, Polarization::s);
    const auto cp = coefficients(s_, k, Polarization::p);
    if (clamped) *clamped |= cs.clamped || cp.clamped;
    const cplx beta = cs.beta_j;
    const auto bs = bracket(cs);
    const auto bp = bracket(cp);
    cplx sum = 0.0;
    if (e_.w_z != 0.0) sum += e_.w_z * (2.0 * k * k / kj2_) * bp.plus;
    if (e_.w_par != 0.0) sum += e_.w_par * (bs.plus - beta * beta / kj2_ * bp.minus);
    return 1.5 / s_.omega * k * sum / (2.0 * beta);
  }

  double real(double k) const { return (*this)(cplx(k)).real(); }

 private:
  StackSpectrum s_;
  EmitterConfig e_;
  double z_ = 0.0;
  double d_ = 0.0;
  cplx kj2_;
};

/// Real-axis parametrization k(t) with dk/dt of one integration piece.
struct AxisPiece {
  enum class Kind { sine, cosh };
  Kind kind;
  double scale;  // k = scale sin t  or  k = scale cosh t
  double t0, t1;

  double k(double t) const { return kind == Kind::sine ? scale * std::sin(t) : scale * std::cosh(t); }
  double dk(double t) const { return kind == Kind::sine ? scale * std::cos(t) : scale * std::sinh(t); }
};

/// Splits [0, k_max] so that 1/beta_j never sits inside a piece.
inline std::vector<AxisPiece> radiative_pieces(double k_emitter, double k_max) {
  if (k_emitter >= k_max * (1.0 - 1e-14))
    return {{AxisPiece::Kind::sine, k_max, 0.0, 0.5 * std::numbers::pi}};
  return {{AxisPiece::Kind::sine, k_emitter, 0.0, 0.5 * std::numbers::pi},
          {AxisPiece::Kind::cosh, k_emitter, 0.0, std::acosh(k_max / k_emitter)}};
}

/// Breakpoints in the parameter of `piece` at the minima of |D_s|^2 and
/// |D_p|^2: the minimum itself and offsets of 1, 10, 100 and 1000 estimated
/// half-widths on both sides.
inline std::vector<double> resonance_breakpoints(const StackSpectrum& s,
                                                 const AxisPiece& piece,
                                                 int scan_points) {
  std::vector<double> out;
  const int n = std::max(scan_points, 8);
  const double h = (piece.t1 - piece.t0) / n;
  for (Polarization q : {Polarization::s, Polarization::p}) {
    auto dval = [&](double t) { return coefficients(s, cplx(piece.k(t)), q).D; };
    auto dnorm = [&](double t) { return std::norm(dval(t)); };
    std::vector<double> f(n + 1);
    for (int i = 0; i <= n; ++i) f[i] = dnorm(piece.t0 + i * h);
    for (int i = 0; i <= n; ++i) {
      const bool left_ok = i == 0 || f[i] < f[i - 1];
      const bool right_ok = i == n || f[i] < f[i + 1];
      if (!(left_ok && right_ok)) continue;
      const double lo = piece.t0 + std::max(i - 1, 0) * h;
      const double hi = piece.t0 + std::min(i + 1, n) * h;
      const auto [t_min, f_min] =
          boost::math::tools::brent_find_minima(dnorm, lo, hi, 52);
      const double step = 1e-3 * h;
      const cplx slope = (dval(std::min(t_min + step, piece.t1)) -
                          dval(std::max(t_min - step, piece.t0))) /
                         (std::min(t_min + step, piece.t1) - std::max(t_min - step, piece.t0));
      const double width = std::abs(slope) > 0.0 ? std::sqrt(f_min) / std::abs(slope) : h;
      out.push_back(t_min);
      for (double m : {1.0, 10.0, 100.0, 1000.0}) {
        out.push_back(t_min - m * width);
        out.push_back(t_min + m * width);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// One emitter in one stack: the frequency-resolved stack, the integrand and a
/// lazily computed (thread-safe, fill-once) total rate shared by all far-field
/// quantities of the configuration.
class EmissionProblem {
 public:
  EmissionProblem(const LayerStack& stack, const EmitterConfig& emitter,
                  EngineOptions options = {})
      : options_(options),
        stack_(regularized(stack, options.gamma_floor, &diag_.regularized)),
        emitter_((emitter.validate(stack), emitter)),
        integrand_(stack_.at(emitter.omega_a), emitter) {
    const cplx ej = integrand_.spectrum().eps[stack_.emitter_layer()];
    diag_.lossy_emitter = std::abs(ej.imag()) > 1e-3 * std::abs(ej.real());
  }

  const LayerStack& stack() const noexcept { return stack_; }
  const EmitterConfig& emitter() const noexcept { return emitter_; }
  const EngineOptions& options() const noexcept { return options_; }
  const RateIntegrand& integrand() const noexcept { return integrand_; }
  const StackSpectrum& spectrum() const noexcept { return integrand_.spectrum(); }
  const Diagnostics& diagnostics() const noexcept { return diag_; }

  /// Wavenumber of a half-space (top: layer n, bottom: layer 0); requires an
  /// effectively real permittivity there.
  double half_space_k(bool top) const {
    const auto& s = spectrum();
    const cplx e = s.eps[top ? s.top() : 0];
    if (std::abs(e.imag()) > 1e-6 || !(e.real() > 0.0))
      throw std::domain_error(std::string("permittivity of the ") +
                              (top ? "upper" : "lower") +
                              " half-space is not effectively real and positive");
    return std::sqrt(e.real()) * s.omega;
  }

  double emitter_k_real() const { return std::sqrt(spectrum().eps[spectrum().emitter]).real() * spectrum().omega; }

  /// Gamma / Gamma_0 along the complex contour plus the real-axis tail.
  const QuadratureResult& total() const {
    std::call_once(total_once_, [this] { total_ = compute_total(); });
    return total_;
  }

  QuadratureResult radiative() const {
    const double kn = half_space_k(true);
    QuadratureResult out;
    for (const auto& piece : radiative_pieces(emitter_k_real(), kn)) {
      const auto cuts = resonance_breakpoints(spectrum(), piece, options_.scan_points);
      auto f = [&](double t) { return integrand_.real(piece.k(t)) * piece.dk(t); };
      out += integrate(f, piece.t0, piece.t1, options_.quad, cuts);
    }
    return out;
  }

  RateResult rates() const {
    RateResult r;
    const auto& tot = total();
    const auto rad = radiative();
    r.gamma_total = tot.value;
    r.gamma_rad = rad.value;
    r.quadrature_error = tot.error + rad.error;
    r.guided_fraction = (tot.value - rad.value) / tot.value;
    r.diagnostics = rate_diagnostics();
    return r;
  }

  /// Diagnostics including those raised while integrating the total rate.
  Diagnostics rate_diagnostics() const {
    total();
    Diagnostics d = diag_;
    d.clamped |= clamped_;
    return d;
  }

 private:
  QuadratureResult compute_total() const {
    const auto& s = spectrum();
    // Guided poles need evanescent half-spaces and a denser interior layer,
    // so they lie below the largest interior wavenumber.
    double kmax = 0.0;
    for (std::size_t m = 1; m < s.top(); ++m) kmax = std::max(kmax, s.k(m).real());
    const double K = 1.2 * kmax;
    const double a = 0.5 * K;
    const double b = options_.contour_depth * K;
    bool clamped = false;
    auto on_ellipse = [&](double t) {
      const cplx k(a * (1.0 - std::cos(t)), -b * std::sin(t));
      const cplx dk(a * std::sin(t), -b * std::cos(t));
      return (integrand_(k, &clamped) * dk).real();
    };
    std::array<double, 7> cuts{};
    for (std::size_t i = 0; i < cuts.size(); ++i)
      cuts[i] = std::numbers::pi * double(i + 1) / double(cuts.size() + 1);
    auto out = integrate(on_ellipse, 0.0, std::numbers::pi, options_.quad, cuts);
    auto on_axis = [&](double k) { return integrand_(cplx(k), &clamped).real(); };
    out += integrate_tail(on_axis, K, options_.quad);
    clamped_ = clamped;
    return out;
  }

  EngineOptions options_;
  Diagnostics diag_;
  LayerStack stack_;
  EmitterConfig emitter_;
  RateIntegrand integrand_;
  mutable std::once_flag total_once_;
  mutable QuadratureResult total_;
  mutable bool clamped_ = false;
};

inline double rate_integrand(const LayerStack& stack, const EmitterConfig& emitter,
                             double k_par) {
  if (!(k_par >= 0.0)) throw std::domain_error("k_par must be >= 0");
  emitter.validate(stack);
  return RateIntegrand(stack.at(emitter.omega_a), emitter).real(k_par);
}

inline RateResult total_rate(const LayerStack& stack, const EmitterConfig& emitter,
                             const EngineOptions& opt = {}) {
  EmissionProblem prob(stack, emitter, opt);
  RateResult r;
  r.gamma_total = prob.total().value;
  r.quadrature_error = prob.total().error;
  r.diagnostics = prob.diagnostics();
  return r;
}

inline RateResult radiative_rate(const LayerStack& stack, const EmitterConfig& emitter,
                                 const EngineOptions& opt = {}) {
  EmissionProblem prob(stack, emitter, opt);
  const auto rad = prob.radiative();
  RateResult r;
  r.gamma_rad = rad.value;
  r.quadrature_error = rad.error;
  r.diagnostics = prob.diagnostics();
  return r;
}

inline RateResult decay_rates(const LayerStack& stack, const EmitterConfig& emitter,
                              const EngineOptions& opt = {}) {
  return EmissionProblem(stack, emitter, opt).rates();
}

}  // namespace pbg

#endif  // PBG_DECAY_HPP
