#ifndef PBG_DISPERSION_HPP
#define PBG_DISPERSION_HPP

// Complex relative permittivity models. All frequencies are dimensionless,
// measured in units of the reference (mid-gap design) frequency omega_0.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>

namespace pbg {

using cplx = std::complex<double>;

struct ConstantPermittivity {
  cplx eps{1.0, 0.0};
};

/// Single-resonance Drude-Lorentz medium:
///   eps(w) = 1 + wP^2 / (wT^2 - w^2 - i w gamma)
struct DrudeLorentz {
  double omega_p = 0.0;
  double omega_t = 0.0;
  double gamma = 0.0;
};

class DispersionModel {
 public:
  using Variant = std::variant<ConstantPermittivity, DrudeLorentz>;

  DispersionModel() = default;

  static DispersionModel constant(cplx eps) {
    if (!std::isfinite(eps.real()) || !std::isfinite(eps.imag()))
      throw std::invalid_argument("permittivity must be finite");
    if (eps.imag() < 0.0)
      throw std::invalid_argument("constant permittivity must satisfy Im eps >= 0");
    return DispersionModel(ConstantPermittivity{eps});
  }

  static DispersionModel drude_lorentz(double omega_p, double omega_t,
                                       double gamma) {
    if (!(omega_p >= 0.0) || !(omega_t >= 0.0) || !(gamma >= 0.0))
      throw std::invalid_argument(
          "Drude-Lorentz parameters omega_P, omega_T, gamma must be >= 0");
    return DispersionModel(DrudeLorentz{omega_p, omega_t, gamma});
  }

  static DispersionModel vacuum() { return constant(1.0); }

  const Variant& variant() const noexcept { return model_; }

  bool is_drude_lorentz() const noexcept {
    return std::holds_alternative<DrudeLorentz>(model_);
  }

  const DrudeLorentz* drude() const noexcept {
    return std::get_if<DrudeLorentz>(&model_);
  }

  /// Copy with a lower bound on the Drude-Lorentz linewidth; constants pass through.
  DispersionModel with_min_gamma(double gamma_min) const {
    if (const auto* dl = drude(); dl && dl->gamma < gamma_min)
      return drude_lorentz(dl->omega_p, dl->omega_t, gamma_min);
    return *this;
  }

  cplx operator()(double omega) const {
    if (!(omega > 0.0) || !std::isfinite(omega))
      throw std::domain_error("permittivity requires omega > 0, got " +
                              std::to_string(omega));
    return std::visit(
        [omega](const auto& m) -> cplx {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, ConstantPermittivity>) {
            return m.eps;
          } else {
            const cplx denom(m.omega_t * m.omega_t - omega * omega,
                             -omega * m.gamma);
            return 1.0 + m.omega_p * m.omega_p / denom;
          }
        },
        model_);
  }

  friend bool operator==(const DispersionModel& a, const DispersionModel& b) {
    if (a.model_.index() != b.model_.index()) return false;
    if (const auto* x = a.drude()) {
      const auto* y = b.drude();
      return x->omega_p == y->omega_p && x->omega_t == y->omega_t &&
             x->gamma == y->gamma;
    }
    return std::get<ConstantPermittivity>(a.model_).eps ==
           std::get<ConstantPermittivity>(b.model_).eps;
  }

 private:
  explicit DispersionModel(Variant v) : model_(v) {}

  Variant model_{ConstantPermittivity{}};
};

inline cplx permittivity(const DispersionModel& model, double omega) {
  return model(omega);
}

}  // namespace pbg

#endif  // PBG_DISPERSION_HPP
