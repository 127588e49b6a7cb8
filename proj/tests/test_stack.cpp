#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "pbg/stack.hpp"

using namespace pbg;

namespace {

LayerStack vacuum_stack() {
  const auto v = DispersionModel::vacuum();
  return build_bragg(1, 1, false, v, v, v);
}

LayerStack fig2_stack(bool defect, int up = 5, int down = 5) {
  return build_bragg(up, down, defect, DispersionModel::vacuum(),
                     DispersionModel::drude_lorentz(1.7299 * 20.0, 20.0, 1e-7),
                     DispersionModel::vacuum());
}

// Independent oracle: tangential (E, H)-type field vectors carried through
// each layer with the characteristic 2x2 matrix, then matched to incoming,
// reflected and transmitted plane waves in the outer media.
using M2 = std::array<std::array<cplx, 2>, 2>;

M2 mul(const M2& a, const M2& b) {
  M2 c{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
  return c;
}

struct OracleResult {
  cplx r, t;
};

// Wave incident from medium `eps_in` through interior layers onto `eps_out`.
OracleResult matrix_oracle(cplx eps_in, const std::vector<std::pair<cplx, double>>& layers,
                           cplx eps_out, double omega, double kp, Polarization q) {
  auto beta = [&](cplx e) { return normal_sqrt(e * omega * omega - kp * kp); };
  auto adm = [&](cplx e) { return q == Polarization::s ? beta(e) : beta(e) / e; };
  M2 m{{{1.0, 0.0}, {0.0, 1.0}}};
  for (const auto& [e, d] : layers) {
    const cplx b = beta(e), y = adm(e);
    const cplx phi = b * d;
    const cplx i(0.0, 1.0);
    M2 layer{{{std::cos(phi), -i * std::sin(phi) / y}, {-i * y * std::sin(phi), std::cos(phi)}}};
    m = mul(m, layer);
  }
  const cplx y0 = adm(eps_in), ys = adm(eps_out);
  const cplx B = m[0][0] + m[0][1] * ys;
  const cplx C = m[1][0] + m[1][1] * ys;
  const cplx r = (y0 * B - C) / (y0 * B + C);
  const cplx t_psi = 2.0 * y0 / (y0 * B + C);
  return {r, t_psi};
}

}  // namespace

TEST(WaveNumbers, BranchExamples) {
  const auto s = vacuum_stack();
  EXPECT_NEAR(std::abs(wave_numbers(s, 1.3, 0.0).beta_layer[1] - cplx(1.3)), 0.0, 1e-15);
  const auto ev = wave_numbers(s, 1.0, 2.0).beta_layer[1];
  EXPECT_NEAR(ev.real(), 0.0, 1e-15);
  EXPECT_NEAR(ev.imag(), std::sqrt(3.0), 1e-15);

  const auto four = DispersionModel::constant(4.0);
  const LayerStack dense({{four, std::nullopt}, {four, 0.3}, {four, std::nullopt}}, 1);
  EXPECT_NEAR(std::abs(wave_numbers(dense, 1.0, 1.0).beta_layer[1] - std::sqrt(3.0)), 0.0, 1e-15);
  EXPECT_THROW(wave_numbers(dense, 1.0, -0.1), std::domain_error);
}

TEST(WaveNumbers, DecayingBranchEverywhere) {
  const auto s = fig2_stack(true).at(1.1);
  for (double kp : {0.0, 0.5, 1.1, 1.5, 2.5, 10.0}) {
    const auto w = wave_numbers(s, kp);
    for (const auto& b : w.beta_layer) {
      EXPECT_GE(b.imag(), 0.0);
      if (b.imag() == 0.0) EXPECT_GE(b.real(), 0.0);
    }
  }
}

TEST(Stack, Validation) {
  const auto v = DispersionModel::vacuum();
  EXPECT_THROW(LayerStack({{v, std::nullopt}, {v, std::nullopt}}, 1), std::invalid_argument);
  EXPECT_THROW(LayerStack({{v, std::nullopt}, {v, 0.1}, {v, std::nullopt}}, 0),
               std::invalid_argument);
  EXPECT_THROW(LayerStack({{v, std::nullopt}, {v, 0.1}, {v, std::nullopt}}, 2),
               std::invalid_argument);
  EXPECT_THROW(LayerStack({{v, 1.0}, {v, 0.1}, {v, std::nullopt}}, 1), std::invalid_argument);
  EXPECT_THROW(LayerStack({{v, std::nullopt}, {v, 0.0}, {v, std::nullopt}}, 1),
               std::invalid_argument);
  EXPECT_THROW(build_bragg(0, 5, false, v, v, v), std::invalid_argument);
  EXPECT_THROW(build_bragg(5, -1, false, v, v, v), std::invalid_argument);
}

TEST(Stack, BraggGeometry) {
  const auto s = fig2_stack(true, 5, 7);
  ASSERT_EQ(s.layers().size(), 2u + 2 * 5 + 2 * 7 + 1);
  EXPECT_EQ(s.emitter_layer(), 1u + 2 * 7);
  // H adjacent on both sides, quarter-wave optical thicknesses.
  const double n_h = std::sqrt(s.layers()[s.emitter_layer() + 1].material(1.0)).real();
  EXPECT_NEAR(*s.layers()[s.emitter_layer() + 1].thickness * n_h, 0.25, 1e-15);
  EXPECT_NEAR(*s.layers()[s.emitter_layer() - 1].thickness * n_h, 0.25, 1e-15);
  EXPECT_NEAR(*s.layers()[s.emitter_layer() + 2].thickness, 0.25, 1e-15);
  EXPECT_NEAR(s.emitter_thickness(), 0.5, 1e-15);
  EXPECT_NEAR(fig2_stack(false).emitter_thickness(), 0.25, 1e-15);
}

TEST(Stack, DesignMaterialFixesGeometry) {
  BraggDesign d;
  d.eps_high = DispersionModel::drude_lorentz(1.7529 * 20.0, 20.0, 1e-7);
  d.design_high = DispersionModel::drude_lorentz(1.7299 * 20.0, 20.0, 1e-7);
  const auto tuned = build_bragg(d);
  const auto nominal = fig2_stack(false);
  for (std::size_t m = 1; m + 1 < tuned.layers().size(); ++m)
    EXPECT_EQ(*tuned.layers()[m].thickness, *nominal.layers()[m].thickness);
}

TEST(Coefficients, VacuumIsTransparent) {
  const auto s = vacuum_stack();
  for (auto q : {Polarization::s, Polarization::p}) {
    for (double kp : {0.0, 0.3, 0.99}) {
      const auto c = coefficients(s, 1.0, kp, q);
      EXPECT_EQ(c.r_plus, cplx(0.0));
      EXPECT_EQ(c.r_minus, cplx(0.0));
      // |t| = 1; the phase is the propagation across the interior layers.
      EXPECT_NEAR(std::abs(c.t_up), 1.0, 1e-15);
      EXPECT_NEAR(std::abs(c.t_down), 1.0, 1e-15);
      const double b = std::sqrt(1.0 - kp * kp);
      double above = 0.0;
      for (std::size_t m = s.emitter_layer() + 1; m < s.top_index(); ++m)
        above += 2.0 * std::numbers::pi * *s.layers()[m].thickness;
      EXPECT_NEAR(std::abs(c.t_up - std::polar(1.0, b * above)), 0.0, 1e-14);
      EXPECT_EQ(c.D, cplx(1.0));
    }
  }
}

TEST(Coefficients, NormalIncidenceFresnel) {
  const auto v = DispersionModel::vacuum();
  const auto four = DispersionModel::constant(4.0);
  const LayerStack s({{v, std::nullopt}, {v, 0.2}, {four, std::nullopt}}, 1);
  for (auto q : {Polarization::s, Polarization::p}) {
    const auto c = coefficients(s, 1.0, 0.0, q);
    EXPECT_NEAR(std::abs(c.r_plus), 1.0 / 3.0, 1e-15) << to_string(q);
  }
  // s: (n1 - n2)/(n1 + n2); p with the magnetic-field reference: opposite sign.
  EXPECT_NEAR(coefficients(s, 1.0, 0.0, Polarization::s).r_plus.real(), -1.0 / 3.0, 1e-15);
  EXPECT_NEAR(coefficients(s, 1.0, 0.0, Polarization::p).r_plus.real(), 1.0 / 3.0, 1e-15);
}

TEST(Coefficients, DenominatorDefinition) {
  const auto st = fig2_stack(true);
  const auto s = st.at(0.9975);
  for (auto q : {Polarization::s, Polarization::p}) {
    for (double kp : {0.0, 0.4, 0.8, 1.3}) {
      const auto c = coefficients(s, cplx(kp), q);
      const cplx e = std::exp(cplx(0.0, 2.0) * c.beta_j * s.thickness[s.emitter]);
      EXPECT_NEAR(std::abs(c.D - (1.0 - c.r_plus * c.r_minus * e)), 0.0, 1e-13);
    }
  }
}

TEST(Coefficients, EnergyConservationAgainstMatrixOracle) {
  // Lossless, asymmetric stack: emitter layer (eps 1.5) between two dense layers.
  const auto e1 = DispersionModel::constant(1.0);
  const auto e15 = DispersionModel::constant(1.5);
  const auto e4 = DispersionModel::constant(4.0);
  const auto e2 = DispersionModel::constant(2.25);
  const LayerStack st({{e1, std::nullopt}, {e4, 0.11}, {e2, 0.37}, {e15, 0.3},
                       {e4, 0.19}, {e2, 0.07}, {e1, std::nullopt}},
                      3);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uw(0.7, 1.4), uk(0.0, 0.999);
  int checked = 0;
  for (int n = 0; n < 100; ++n) {
    const double w = uw(rng);
    const double kp = uk(rng) * w;  // below the vacuum light line: propagating everywhere
    const auto q = n % 2 ? Polarization::p : Polarization::s;
    const auto s = st.at(w);
    const auto c = coefficients(s, cplx(kp), q);
    const cplx bj = s.beta(3, kp), bn = s.beta(6, kp), b0 = s.beta(0, kp);
    EXPECT_NEAR((bj / bn).real() * std::norm(c.t_up) + std::norm(c.r_plus), 1.0, 1e-10);
    EXPECT_NEAR((bj / b0).real() * std::norm(c.t_down) + std::norm(c.r_minus), 1.0, 1e-10);

    // Upper side from the oracle: layers above the emitter, referenced at its face.
    std::vector<std::pair<cplx, double>> up;
    for (std::size_t m = 4; m < 6; ++m) up.emplace_back(s.eps[m], s.thickness[m]);
    const auto o = matrix_oracle(s.eps[3], up, s.eps[6], w, kp, q);
    EXPECT_NEAR(std::abs(o.r - c.r_plus), 0.0, 1e-12);
    // tangential-field amplitude -> generalized transmission
    const double conv = q == Polarization::s ? 1.0 : std::abs(s.eps[3] / s.eps[6]);
    const double oracle_t2 = std::norm(o.t) * std::norm(bn / bj) * conv;
    EXPECT_NEAR(oracle_t2, std::norm(c.t_up), 1e-10 * (1.0 + oracle_t2));

    std::vector<std::pair<cplx, double>> down;
    for (std::size_t m = 2; m >= 1; --m) down.emplace_back(s.eps[m], s.thickness[m]);
    const auto od = matrix_oracle(s.eps[3], down, s.eps[0], w, kp, q);
    EXPECT_NEAR(std::abs(od.r - c.r_minus), 0.0, 1e-12);
    ++checked;
  }
  EXPECT_EQ(checked, 100);
}

TEST(Coefficients, MirrorSymmetry) {
  const auto st = fig2_stack(true);
  const auto rev = st.reversed();
  for (double w : {0.95, 0.9975, 1.2}) {
    for (auto q : {Polarization::s, Polarization::p}) {
      for (double kp : {0.0, 0.5, 0.95, 1.5}) {
        const auto a = coefficients(st, w, kp, q);
        const auto b = coefficients(rev, w, kp, q);
        EXPECT_EQ(a.r_plus, b.r_minus);
        EXPECT_EQ(a.r_minus, b.r_plus);
        EXPECT_EQ(a.t_up, b.t_down);
        EXPECT_EQ(a.t_down, b.t_up);
      }
    }
  }
}

TEST(Coefficients, Passivity) {
  const auto lossy = build_bragg(4, 6, true, DispersionModel::constant({2.0, 0.05}),
                                 DispersionModel::drude_lorentz(1.7299 * 20.0, 20.0, 1e-2),
                                 DispersionModel::vacuum());
  for (double w = 0.8; w < 1.4; w += 0.01)
    for (auto q : {Polarization::s, Polarization::p})
      for (double kp = 0.0; kp < w; kp += 0.05) {
        const auto c = coefficients(lossy, w, kp, q);
        EXPECT_LE(std::abs(c.r_plus), 1.0 + 1e-12);
        EXPECT_LE(std::abs(c.r_minus), 1.0 + 1e-12);
      }
}

TEST(Coefficients, ContinuousAcrossLightLines) {
  const auto st = build_bragg(5, 5, true, DispersionModel::constant(2.1),
                              DispersionModel::drude_lorentz(1.7299 * 20.0, 20.0, 1e-7),
                              DispersionModel::vacuum());
  const double w = 1.05;
  const auto s = st.at(w);
  for (double k_line : {s.k(0).real(), s.k(2).real(), s.k(1).real()}) {
    for (auto q : {Polarization::s, Polarization::p}) {
      const auto lo = coefficients(s, cplx(k_line - 5e-10), q);
      const auto hi = coefficients(s, cplx(k_line + 5e-10), q);
      EXPECT_LT(std::abs(lo.r_plus - hi.r_plus), 1e-3);
      EXPECT_LT(std::abs(lo.r_minus - hi.r_minus), 1e-3);
      EXPECT_LT(std::abs(lo.D - hi.D), 1e-3);
    }
  }
}

TEST(Coefficients, FiniteOnLightLines) {
  const auto st = fig2_stack(true);
  for (auto q : {Polarization::s, Polarization::p}) {
    const auto on = coefficients(st, 0.95, 0.95, q);
    const auto near = coefficients(st, 0.95, 0.95 * (1.0 - 1e-10), q);
    EXPECT_TRUE(std::isfinite(std::abs(on.t_up)) && std::isfinite(std::abs(on.r_plus)));
    EXPECT_LT(std::abs(on.r_plus - near.r_plus), 1e-4);  // square-root branch point
  }
}

TEST(Coefficients, DeepEvanescentClampIsReported) {
  const auto st = fig2_stack(false);
  const auto c = coefficients(st, 1.0, 1000.0, Polarization::s);
  EXPECT_TRUE(c.clamped);
  EXPECT_TRUE(std::isfinite(c.r_plus.real()) && std::isfinite(c.D.real()));
  EXPECT_FALSE(coefficients(st, 1.0, 0.5, Polarization::s).clamped);
}
