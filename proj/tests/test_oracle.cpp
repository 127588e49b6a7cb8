#include <gtest/gtest.h>

#include "oracle.hpp"

using namespace pbg;

namespace {

LayerStack fig2b_stack() {
  return build_bragg(5, 5, true, DispersionModel::vacuum(),
                     DispersionModel::drude_lorentz(1.7299 * 20.0, 20.0, 1e-7),
                     DispersionModel::vacuum());
}

}  // namespace

class DenseSumOracle : public ::testing::TestWithParam<double> {};

TEST_P(DenseSumOracle, AdaptiveTotalRateMatches) {
  const auto s = fig2b_stack();
  const auto e = EmitterConfig::parallel(GetParam(), 0.5 * s.emitter_thickness());
  const auto ref = oracle::total_rate(s, e);
  EXPECT_GE(ref.evaluations, 1000000u);
  EXPECT_GT(ref.peaks, 0u);
  const double got = total_rate(s, e).gamma_total;
  EXPECT_NEAR(got, ref.value, 1e-5 * ref.value);
}

INSTANTIATE_TEST_SUITE_P(Fig2bDevice, DenseSumOracle, ::testing::Values(0.95, 1.0, 1.1, 1.25));

TEST(DenseSumOracleSelfCheck, Vacuum) {
  const auto v = DispersionModel::vacuum();
  const auto s = build_bragg(1, 1, false, v, v, v);
  const auto ref = oracle::total_rate(s, EmitterConfig::parallel(1.0, 0.1), 40.0, 200000, 20000, 2000);
  EXPECT_NEAR(ref.value, 1.0, 1e-6);
}
