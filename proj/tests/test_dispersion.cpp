#include <gtest/gtest.h>

#include <cmath>

#include "pbg/dispersion.hpp"

using namespace pbg;

namespace {

DispersionModel eps_h(double ratio, double gamma = 1e-7) {
  return DispersionModel::drude_lorentz(ratio * 20.0, 20.0, gamma);
}

}  // namespace

TEST(Dispersion, CaptionAnchorNominal) {
  const cplx e = permittivity(eps_h(1.7299), 1.0);
  EXPECT_NEAR(e.real(), 4.0, 4.0 * 1e-3);
  EXPECT_NEAR(e.imag(), 7.5e-10, 7.5e-10 * 5e-2);
}

TEST(Dispersion, CaptionAnchorTuned) {
  const cplx e = permittivity(eps_h(1.7529), 1.0);
  EXPECT_NEAR(e.real(), 4.0804, 4.0804 * 1e-3);
  EXPECT_NEAR(e.imag(), 7.7e-10, 7.7e-10 * 5e-2);
}

TEST(Dispersion, ConstantIsFrequencyIndependent) {
  const auto vac = DispersionModel::vacuum();
  for (double w : {1e-3, 1.0, 7.5}) EXPECT_EQ(vac(w), cplx(1.0, 0.0));
  const auto glass = DispersionModel::constant({2.25, 0.01});
  EXPECT_EQ(glass(0.3), cplx(2.25, 0.01));
}

TEST(Dispersion, RejectsNonPositiveFrequency) {
  EXPECT_THROW(eps_h(1.7299)(0.0), std::domain_error);
  EXPECT_THROW(eps_h(1.7299)(-1.0), std::domain_error);
  EXPECT_THROW(DispersionModel::vacuum()(0.0), std::domain_error);
}

TEST(Dispersion, RejectsInvalidParameters) {
  EXPECT_THROW(DispersionModel::drude_lorentz(-1.0, 20.0, 0.0), std::invalid_argument);
  EXPECT_THROW(DispersionModel::drude_lorentz(1.0, -20.0, 0.0), std::invalid_argument);
  EXPECT_THROW(DispersionModel::drude_lorentz(1.0, 20.0, -1e-3), std::invalid_argument);
  EXPECT_THROW(DispersionModel::constant({1.0, -1e-6}), std::invalid_argument);
  EXPECT_THROW(DispersionModel::constant({NAN, 0.0}), std::invalid_argument);
}

TEST(Dispersion, PassiveAboveZeroFrequency) {
  const auto m = eps_h(1.7299, 1e-3);
  for (double w = 0.01; w < 60.0; w *= 1.07) EXPECT_GT(m(w).imag(), 0.0) << "omega = " << w;
}

TEST(Dispersion, AbsorptionGrowsTowardResonance) {
  const auto m = eps_h(1.7299, 1e-2);
  double prev = 0.0;
  for (double w = 0.05; w < 20.0; w += 0.05) {
    const double im = m(w).imag();
    EXPECT_GT(im, prev) << "omega = " << w;
    prev = im;
  }
}

TEST(Dispersion, LosslessLimit) {
  const double wp = 1.7299 * 20.0, wt = 20.0;
  const auto m = DispersionModel::drude_lorentz(wp, wt, 1e-7);
  for (double w = 0.1; w <= 2.0; w += 0.1) {
    const double lossless = 1.0 + wp * wp / (wt * wt - w * w);
    EXPECT_NEAR(m(w).real(), lossless, 1e-8 * lossless);
  }
}

TEST(Dispersion, ZeroLinewidthIsExactlyReal) {
  const auto m = eps_h(1.7299, 0.0);
  EXPECT_EQ(m(1.0).imag(), 0.0);
  EXPECT_EQ(m.with_min_gamma(1e-12).drude()->gamma, 1e-12);
  EXPECT_EQ(eps_h(1.7299, 1e-7).with_min_gamma(1e-12).drude()->gamma, 1e-7);
}
