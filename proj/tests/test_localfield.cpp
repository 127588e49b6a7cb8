#include <gtest/gtest.h>

#include "pbg/localfield.hpp"

using namespace pbg;

namespace {

RateResult sample_rates() {
  RateResult r;
  r.gamma_total = 1.3724985;
  r.gamma_rad = 0.4187;
  r.quadrature_error = 1e-9;
  r.guided_fraction = (r.gamma_total - r.gamma_rad) / r.gamma_total;
  return r;
}

}  // namespace

TEST(LocalField, UnitHostIsExactIdentity) {
  const LocalFieldFactor f(1.0);
  EXPECT_EQ(f.factor, cplx(1.0));
  EXPECT_EQ(f.factor_sq_abs, 1.0);
  const auto raw = sample_rates();
  const auto c = corrected_rates(raw, 1.0);
  EXPECT_EQ(c.gamma_total, raw.gamma_total);
  EXPECT_EQ(c.gamma_rad, raw.gamma_rad);
}

TEST(LocalField, RateMultiplier) {
  const auto raw = sample_rates();
  const auto c = corrected_rates(raw, 4.0);
  EXPECT_NEAR(LocalFieldFactor(4.0).factor_sq_abs, 16.0 / 9.0, 1e-15);
  EXPECT_NEAR(c.gamma_total / raw.gamma_total, 16.0 / 9.0, 1e-15);
  EXPECT_NEAR(c.gamma_rad / raw.gamma_rad, 16.0 / 9.0, 1e-15);
  EXPECT_EQ(c.guided_fraction, raw.guided_fraction);
}

TEST(LocalField, RatioInvariance) {
  const auto raw = sample_rates();
  for (double eps : {2.25, 4.0, 1.7, 12.0}) {
    const auto c = corrected_rates(raw, eps);
    // one common multiplier applied once to each rate
    const double k = LocalFieldFactor(eps).factor_sq_abs;
    EXPECT_EQ(c.gamma_rad, raw.gamma_rad * k);
    EXPECT_EQ(c.gamma_total, raw.gamma_total * k);
    EXPECT_NEAR(c.gamma_rad / c.gamma_total, raw.gamma_rad / raw.gamma_total, 1e-15);
  }
}

TEST(LocalField, EnergyUnchanged) {
  EnergyResult e;
  e.W_top = 0.37;
  e.W_bottom = 0.21;
  LocalFieldAudit audit;
  for (double eps : {1.0, 2.25, 4.0}) {
    const auto c = corrected_energy(e, eps, &audit);
    EXPECT_EQ(c.W_top, 0.37);
    EXPECT_EQ(c.W_bottom, 0.21);
  }
  EXPECT_EQ(audit.entries.size(), 3u);

  AngularSpectrum pattern;
  pattern.thetas = {0.0, 0.1, 0.2};
  pattern.values = {0.7, 0.5, 0.1};
  const auto c = corrected_energy(pattern, 4.0);
  EXPECT_EQ(c.values, pattern.values);
  EXPECT_EQ(c.thetas, pattern.thetas);
}

TEST(LocalField, AbsorbingHostUnsupported) {
  EXPECT_THROW(LocalFieldFactor(cplx(4.0, 0.01)), UnsupportedRegime);
  EXPECT_THROW(corrected_rates(sample_rates(), cplx(2.25, 0.1)), UnsupportedRegime);
  EXPECT_THROW(corrected_energy(EnergyResult{}, cplx(2.25, 0.1)), UnsupportedRegime);
  EXPECT_THROW(LocalFieldFactor(cplx(-2.0, 0.0)), UnsupportedRegime);
  EXPECT_NO_THROW(LocalFieldFactor(cplx(4.0, 1e-4)));
}
