#ifndef PBG_QUADRATURE_HPP
#define PBG_QUADRATURE_HPP

// Globally adaptive 21-point Gauss-Kronrod quadrature with user breakpoints
// and a fixed panel budget. Node tables come from Boost.Math.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace pbg {

struct QuadratureOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-13;
  std::size_t max_panels = 10000;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t panels = 0;

  QuadratureResult& operator+=(const QuadratureResult& o) {
    value += o.value;
    error += o.error;
    panels += o.panels;
    return *this;
  }
};

/// Raised when the panel budget runs out before the tolerance is met; carries
/// the partial estimate.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, QuadratureResult partial)
      : std::runtime_error(what), partial_(partial) {}
  const QuadratureResult& partial() const noexcept { return partial_; }

 private:
  QuadratureResult partial_;
};

namespace detail {

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gauss_kronrod_21(F& f, double a, double b) {
  using gk = boost::math::quadrature::gauss_kronrod<double, 21>;
  using g = boost::math::quadrature::gauss<double, 10>;
  static const auto& xk = gk::abscissa();
  static const auto& wk = gk::weights();
  static const auto& wg = g::weights();

  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double f0 = f(c);
  double kron = wk[0] * f0;
  double gauss = 0.0;
  for (std::size_t i = 1; i < xk.size(); ++i) {
    const double fs = f(c - h * xk[i]) + f(c + h * xk[i]);
    kron += wk[i] * fs;
    if (i % 2 == 1) gauss += wg[i / 2] * fs;
  }
  return {a, b, kron * h, std::abs((kron - gauss) * h)};
}

}  // namespace detail

/// Integrates f over [a, b]. Breakpoints inside (a, b) seed the initial
/// partition; the panel with the largest error estimate is bisected until the
/// combined error meets max(abs_tol, rel_tol |I|).
template <class F>
QuadratureResult integrate(F&& f, double a, double b,
                           const QuadratureOptions& opt = {},
                           std::span<const double> breakpoints = {}) {
  if (!(a <= b)) throw std::invalid_argument("integrate: need a <= b");
  QuadratureResult out;
  if (a == b) return out;

  std::vector<double> cuts{a};
  for (double x : breakpoints)
    if (x > a && x < b) cuts.push_back(x);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<detail::Panel> heap;
  std::vector<detail::Panel> frozen;  // too narrow to bisect further
  double total = 0.0, error = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto p = detail::gauss_kronrod_21(f, cuts[i], cuts[i + 1]);
    total += p.value;
    error += p.error;
    heap.push(p);
  }
  std::size_t panels = heap.size();

  auto target = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::abs(total)); };
  while (error > target() && !heap.empty() && panels < opt.max_panels) {
    const auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      frozen.push_back(worst);
      continue;
    }
    const auto left = detail::gauss_kronrod_21(f, worst.a, mid);
    const auto right = detail::gauss_kronrod_21(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++panels;
  }

  // Re-sum to shed the drift of the running updates.
  total = 0.0;
  error = 0.0;
  for (const auto& p : frozen) {
    total += p.value;
    error += p.error;
  }
  while (!heap.empty()) {
    total += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  out = {total, error, panels};
  if (error > std::max(opt.abs_tol, opt.rel_tol * std::abs(total)) &&
      panels >= opt.max_panels)
    throw QuadratureError("quadrature did not converge within " +
                              std::to_string(opt.max_panels) + " panels",
                          out);
  return out;
}

/// Integrates f over [start, inf) with the substitution x = start cosh(u),
/// one unit panel in u at a time, stopping after five consecutive panels whose
/// contribution is below 1e-12 of the running total (cap u <= 20).
template <class F>
QuadratureResult integrate_tail(F&& f, double start,
                                const QuadratureOptions& opt = {}) {
  if (!(start > 0.0)) throw std::invalid_argument("integrate_tail: start must be > 0");
  auto g = [&](double u) { return f(start * std::cosh(u)) * start * std::sinh(u); };
  QuadratureResult out;
  int quiet = 0;
  constexpr double du = 1.0;
  for (double u = 0.0; u < 20.0 && quiet < 5; u += du) {
    QuadratureOptions local = opt;
    local.abs_tol = std::max(opt.abs_tol, 1e-3 * opt.rel_tol * std::abs(out.value));
    const auto piece = integrate(g, u, u + du, local);
    out += piece;
    quiet = std::abs(piece.value) <= 1e-12 * std::abs(out.value) ? quiet + 1 : 0;
  }
  return out;
}

}  // namespace pbg

#endif  // PBG_QUADRATURE_HPP
