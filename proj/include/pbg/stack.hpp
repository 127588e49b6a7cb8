#ifndef PBG_STACK_HPP
#define PBG_STACK_HPP

// Planar multilayer geometry and its polarized reflection/transmission
// coefficients as seen from inside the emitter layer.
//
// Conventions: c = 1 and omega_0 = 1, so lambda_0 = 2 pi and in-plane
// wavenumbers are measured in units of omega_0 / c. Layer thicknesses are
// stored in units of lambda_0. Layer 0 is the lower half-space, layer n the
// upper one. Time dependence is exp(-i omega t), so outgoing/decaying normal
// wavenumbers have Im beta >= 0.

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbg/dispersion.hpp"

namespace pbg {

enum class Polarization { s, p };

inline const char* to_string(Polarization q) noexcept {
  return q == Polarization::s ? "s" : "p";
}

enum class Material { low, high };

struct Layer {
  DispersionModel material;
  std::optional<double> thickness;  // lambda_0 units; empty for half-spaces
};

/// Normal wavenumber sqrt(z) on the decaying/outgoing branch.
inline cplx normal_sqrt(cplx z) {
  cplx r = std::sqrt(z);
  if (r.imag() < 0.0) r = -r;
  return r;
}

/// The stack evaluated at one angular frequency.
struct StackSpectrum {
  double omega = 0.0;
  std::vector<cplx> eps;
  std::vector<double> thickness;  // radians of vacuum phase: 2 pi d / lambda_0
  std::size_t emitter = 0;

  std::size_t top() const noexcept { return eps.size() - 1; }

  cplx k(std::size_t m) const { return std::sqrt(eps[m]) * omega; }
  cplx beta(std::size_t m, cplx k_par) const {
    return normal_sqrt(eps[m] * omega * omega - k_par * k_par);
  }
};

class LayerStack {
 public:
  LayerStack(std::vector<Layer> layers, std::size_t emitter_layer)
      : layers_(std::move(layers)), emitter_(emitter_layer) {
    if (layers_.size() < 3)
      throw std::invalid_argument("a layer stack needs at least three layers");
    const std::size_t n = layers_.size() - 1;
    if (emitter_ < 1 || emitter_ > n - 1)
      throw std::invalid_argument("emitter layer index must satisfy 1 <= j <= n-1");
    if (layers_.front().thickness || layers_.back().thickness)
      throw std::invalid_argument("layers 0 and n are half-spaces and carry no thickness");
    for (std::size_t m = 1; m < n; ++m) {
      const auto& d = layers_[m].thickness;
      if (!d || !(*d > 0.0) || !std::isfinite(*d))
        throw std::invalid_argument("interior layer " + std::to_string(m) +
                                    " needs a positive thickness");
    }
  }

  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::size_t emitter_layer() const noexcept { return emitter_; }
  std::size_t top_index() const noexcept { return layers_.size() - 1; }
  double emitter_thickness() const { return *layers_[emitter_].thickness; }

  /// Same geometry with the layer order reversed (z -> -z).
  LayerStack reversed() const {
    std::vector<Layer> rev(layers_.rbegin(), layers_.rend());
    return LayerStack(std::move(rev), layers_.size() - 1 - emitter_);
  }

  StackSpectrum at(double omega) const {
    if (!(omega > 0.0))
      throw std::domain_error("stack evaluation requires omega > 0");
    StackSpectrum s;
    s.omega = omega;
    s.emitter = emitter_;
    s.eps.reserve(layers_.size());
    s.thickness.reserve(layers_.size());
    for (const auto& l : layers_) {
      s.eps.push_back(l.material(omega));
      s.thickness.push_back(l.thickness ? 2.0 * std::numbers::pi * *l.thickness
                                        : 0.0);
    }
    return s;
  }

 private:
  std::vector<Layer> layers_;
  std::size_t emitter_;
};

/// Parameters of the two-mirror Bragg device. Each period is one H/L pair;
/// `adjacent` names the material touching the emitter layer on both sides.
struct BraggDesign {
  int periods_up = 5;
  int periods_down = 5;
  bool defect = false;
  DispersionModel eps_low = DispersionModel::vacuum();
  DispersionModel eps_high = DispersionModel::vacuum();
  DispersionModel eps_emitter = DispersionModel::vacuum();
  DispersionModel eps_outer = DispersionModel::vacuum();
  Material adjacent = Material::high;
  // Materials whose index at omega_0 sets the quarter-wave thicknesses; when
  // empty the layer materials themselves are used. Tuning studies keep the
  // geometry of the nominal design while the material changes.
  std::optional<DispersionModel> design_low;
  std::optional<DispersionModel> design_high;
};

/// Quarter-wave optical thickness lambda_0 / (4 Re sqrt(eps(omega_0))).
inline double quarter_wave(const DispersionModel& m) {
  const double n = std::sqrt(m(1.0)).real();
  if (!(n > 0.0)) throw std::invalid_argument("material has no positive index at omega_0");
  return 0.25 / n;
}

inline LayerStack build_bragg(const BraggDesign& d) {
  if (d.periods_up < 1 || d.periods_down < 1)
    throw std::invalid_argument("Bragg stacks need at least one period on each side");
  const double d_low = quarter_wave(d.design_low.value_or(d.eps_low));
  const double d_high = quarter_wave(d.design_high.value_or(d.eps_high));
  const double d_emit = (d.defect ? 2.0 : 1.0) * quarter_wave(d.eps_emitter);

  const Layer low{d.eps_low, d_low};
  const Layer high{d.eps_high, d_high};
  const Layer& near = d.adjacent == Material::high ? high : low;
  const Layer& far = d.adjacent == Material::high ? low : high;

  std::vector<Layer> layers;
  layers.push_back(Layer{d.eps_outer, std::nullopt});
  for (int p = 0; p < d.periods_down; ++p) {
    layers.push_back(far);
    layers.push_back(near);
  }
  const std::size_t j = layers.size();
  layers.push_back(Layer{d.eps_emitter, d_emit});
  for (int p = 0; p < d.periods_up; ++p) {
    layers.push_back(near);
    layers.push_back(far);
  }
  layers.push_back(Layer{d.eps_outer, std::nullopt});
  return LayerStack(std::move(layers), j);
}

inline LayerStack build_bragg(int periods_up, int periods_down, bool defect,
                              const DispersionModel& eps_low,
                              const DispersionModel& eps_high,
                              const DispersionModel& eps_emitter) {
  BraggDesign d;
  d.periods_up = periods_up;
  d.periods_down = periods_down;
  d.defect = defect;
  d.eps_low = eps_low;
  d.eps_high = eps_high;
  d.eps_emitter = eps_emitter;
  return build_bragg(d);
}

struct WaveNumbers {
  std::vector<cplx> k_layer;
  std::vector<cplx> beta_layer;
};

inline WaveNumbers wave_numbers(const StackSpectrum& s, double k_par) {
  if (!(k_par >= 0.0)) throw std::domain_error("k_par must be >= 0");
  WaveNumbers w;
  for (std::size_t m = 0; m < s.eps.size(); ++m) {
    w.k_layer.push_back(s.k(m));
    w.beta_layer.push_back(s.beta(m, k_par));
  }
  return w;
}

inline WaveNumbers wave_numbers(const LayerStack& stack, double omega,
                                double k_par) {
  return wave_numbers(stack.at(omega), k_par);
}

struct PolarizedCoefficients {
  Polarization q = Polarization::s;
  cplx r_plus{0.0};
  cplx r_minus{0.0};
  cplx t_up{1.0};    // t^q_{n/j}
  cplx t_down{1.0};  // t^q_{0/j}
  cplx D{1.0};
  cplx beta_j{0.0};
  bool clamped = false;  // a deep-evanescent propagation factor was clamped to zero
};

namespace detail {

// exp(i beta d) with the deep-evanescent clamp.
inline cplx propagate(cplx beta, double d, bool& clamped) {
  if (beta.imag() * d > 700.0) {
    clamped = true;
    return 0.0;
  }
  return std::exp(cplx(0.0, 1.0) * beta * d);
}

inline cplx admittance(const StackSpectrum& s, std::size_t m, cplx beta,
                       Polarization q) {
  return q == Polarization::s ? beta : beta / s.eps[m];
}

struct SideResult {
  cplx r;
  cplx t;
};

// Reflection seen from the emitter layer toward one half-space, referenced at
// the emitter-layer face, and the generalized transmission into that
// half-space. Reflections are composed layer by layer from the outside in so
// only decaying exponentials appear.
inline SideResult side(const StackSpectrum& s, cplx k_par, Polarization q,
                       int dir, bool& clamped) {
  const std::size_t j = s.emitter;
  const std::size_t outer = dir > 0 ? s.top() : 0;
  const std::size_t count = (dir > 0 ? outer - j : j) + 1;
  auto idx = [&](std::size_t i) { return dir > 0 ? j + i : j - i; };

  std::vector<cplx> beta(count), y(count), fresnel(count), gamma(count),
      phase(count);
  for (std::size_t i = 0; i < count; ++i) {
    beta[i] = s.beta(idx(i), k_par);
    y[i] = admittance(s, idx(i), beta[i], q);
  }
  // Equal admittances are no interface at all (also covers 0/0 at grazing incidence).
  for (std::size_t i = 0; i + 1 < count; ++i)
    fresnel[i] = y[i] == y[i + 1] ? cplx(0.0) : (y[i] - y[i + 1]) / (y[i] + y[i + 1]);
  for (std::size_t i = 1; i + 1 < count; ++i)
    phase[i] = propagate(beta[i], s.thickness[idx(i)], clamped);

  gamma[count - 2] = fresnel[count - 2];
  for (std::size_t i = count - 2; i-- > 0;) {
    const cplx back = gamma[i + 1] * phase[i + 1] * phase[i + 1];
    gamma[i] = (fresnel[i] + back) / (1.0 + fresnel[i] * back);
  }

  cplx t = 1.0;
  for (std::size_t i = 0; i + 1 < count; ++i) {
    const cplx t_interface = y[i] == y[i + 1] ? cplx(1.0) : 2.0 * y[i] / (y[i] + y[i + 1]);
    if (i + 2 < count) {
      const cplx back = gamma[i + 1] * phase[i + 1] * phase[i + 1];
      t *= t_interface / (1.0 + fresnel[i] * back) * phase[i + 1];
    } else {
      t *= t_interface;
    }
  }
  // Convert the tangential-field amplitude ratio to the generalized
  // transmission normalized so that (beta_j/beta_out)|t|^2 + |r|^2 = 1 for
  // lossless stacks.
  // Equal normal wavenumbers (same medium, grazing incidence included) give ratio 1.
  if (beta[count - 1] != beta[0]) t *= beta[count - 1] / beta[0];
  if (q == Polarization::p) t *= std::sqrt(s.eps[j] / s.eps[outer]);
  return {gamma[0], t};
}

}  // namespace detail

/// Coefficients at complex in-plane wavenumber (analytic continuation used by
/// contour quadrature); real k_par reproduces the physical values.
inline PolarizedCoefficients coefficients(const StackSpectrum& s, cplx k_par,
                                          Polarization q) {
  // The layer recursion is 0/0 when some layer sits exactly on its light line
  // (beta_m = 0). The coefficients are continuous there, so step off it.
  for (const auto& e : s.eps) {
    if (e * s.omega * s.omega - k_par * k_par == cplx(0.0)) {
      k_par *= 1.0 - 1e-13;
      break;
    }
  }
  PolarizedCoefficients c;
  c.q = q;
  const auto up = detail::side(s, k_par, q, +1, c.clamped);
  const auto down = detail::side(s, k_par, q, -1, c.clamped);
  c.r_plus = up.r;
  c.t_up = up.t;
  c.r_minus = down.r;
  c.t_down = down.t;
  c.beta_j = s.beta(s.emitter, k_par);
  const cplx e = detail::propagate(c.beta_j, s.thickness[s.emitter], c.clamped);
  c.D = 1.0 - c.r_plus * c.r_minus * e * e;
  return c;
}

inline PolarizedCoefficients coefficients(const LayerStack& stack, double omega,
                                          double k_par, Polarization q) {
  if (!(k_par >= 0.0)) throw std::domain_error("k_par must be >= 0");
  return coefficients(stack.at(omega), cplx(k_par), q);
}

}  // namespace pbg

#endif  // PBG_STACK_HPP
