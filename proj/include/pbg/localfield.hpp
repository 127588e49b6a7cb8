#ifndef PBG_LOCALFIELD_HPP
#define PBG_LOCALFIELD_HPP

// Real-cavity local-field correction for an emitter embedded in a host of
// permittivity eps != 1. Opt-in post-processing only: the rates pick up the
// common factor |3 eps / (2 eps + 1)|^2, energies are left unchanged because
// the same factor cancels against the rate in the W prefactor.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "pbg/decay.hpp"
#include "pbg/farfield.hpp"

namespace pbg {

/// Raised for hosts outside the nonabsorbing regime the correction is stated for.
class UnsupportedRegime : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct LocalFieldFactor {
  cplx eps_host{1.0};
  cplx factor{1.0};
  double factor_sq_abs = 1.0;

  explicit LocalFieldFactor(cplx eps) : eps_host(eps) {
    if (!std::isfinite(eps.real()) || !std::isfinite(eps.imag()) || !(eps.real() > 0.0))
      throw UnsupportedRegime("local_field.eps_host must be finite with Re eps > 0");
    if (std::abs(eps.imag()) > 1e-3 * eps.real())
      throw UnsupportedRegime("local_field.eps_host is absorbing (Im/Re > 1e-3); no correction rule");
    if (eps == cplx(1.0)) return;  // exact identity, no rounding
    factor = 3.0 * eps / (2.0 * eps + 1.0);
    factor_sq_abs = std::norm(factor);
  }
};

/// Record of every correction applied, so outputs can show it was considered.
struct LocalFieldAudit {
  std::vector<std::string> entries;
  void note(std::string s) { entries.push_back(std::move(s)); }
};

inline RateResult corrected_rates(const RateResult& raw, cplx eps_host,
                                  LocalFieldAudit* audit = nullptr) {
  const LocalFieldFactor f(eps_host);
  RateResult out = raw;
  out.gamma_total *= f.factor_sq_abs;
  out.gamma_rad *= f.factor_sq_abs;
  out.quadrature_error *= f.factor_sq_abs;
  if (audit) audit->note("rates scaled by " + std::to_string(f.factor_sq_abs));
  return out;
}

/// Energies are invariant; the call validates the host and logs the decision.
template <class T>
  requires std::is_same_v<T, EnergyResult> || std::is_same_v<T, AngularSpectrum>
T corrected_energy(const T& raw, cplx eps_host, LocalFieldAudit* audit = nullptr) {
  const LocalFieldFactor f(eps_host);
  if (audit) audit->note("energy unchanged (factor cancels), |f|^2 = " + std::to_string(f.factor_sq_abs));
  return raw;
}

}  // namespace pbg

#endif  // PBG_LOCALFIELD_HPP
