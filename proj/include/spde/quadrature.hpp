#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature on finite and
// semi-infinite intervals.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <vector>

namespace spde::quad {

struct Options {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  int max_intervals = 20000;
};

struct Result {
  double value = 0.0;
  double abs_error = 0.0;
  int intervals = 0;
  bool converged = false;
};

namespace detail {

inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a;
  double b;
  double value;
  double error;
};

struct ByError {
  bool operator()(const Panel& l, const Panel& r) const { return l.error < r.error; }
};

// QUADPACK qk15 error heuristic.
template <class F>
Panel kronrod15(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double resk = fc * kWgk[7];
  double resg = fc * kWg[3];
  double resabs = std::abs(resk);
  std::array<double, 7> f1{};
  std::array<double, 7> f2{};
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    f1[j] = f(center - dx);
    f2[j] = f(center + dx);
    resk += kWgk[j] * (f1[j] + f2[j]);
    resabs += kWgk[j] * (std::abs(f1[j]) + std::abs(f2[j]));
    if (j % 2 == 1) resg += kWg[j / 2] * (f1[j] + f2[j]);
  }
  const double mean = 0.5 * resk;
  double resasc = kWgk[7] * std::abs(fc - mean);
  for (int j = 0; j < 7; ++j) {
    resasc += kWgk[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));
  }
  const double ah = std::abs(half);
  double err = std::abs((resk - resg) * half);
  resasc *= ah;
  resabs *= ah;
  if (resasc != 0.0 && err != 0.0) {
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  }
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) {
    err = std::max(50.0 * eps * resabs, err);
  }
  if (!std::isfinite(resk)) err = std::numeric_limits<double>::infinity();
  return {a, b, resk * half, err};
}

}  // namespace detail

/// Integrates f over the union of consecutive panels [p0,p1], [p1,p2], ...
/// `points` must be sorted; breakpoints mark kinks or spikes of f.
template <class F>
Result integrate(F&& f, std::span<const double> points, const Options& opt = {}) {
  Result out;
  if (points.size() < 2) return out;
  std::priority_queue<detail::Panel, std::vector<detail::Panel>, detail::ByError> heap;
  double total = 0.0;
  double error = 0.0;
  for (std::size_t p = 0; p + 1 < points.size(); ++p) {
    if (!(points[p + 1] > points[p])) continue;
    auto panel = detail::kronrod15(f, points[p], points[p + 1]);
    total += panel.value;
    error += panel.error;
    heap.push(panel);
  }
  while (!heap.empty()) {
    if (error <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
      out.converged = true;
      break;
    }
    if (static_cast<int>(heap.size()) >= opt.max_intervals) break;
    const auto worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;  // interval exhausted
    heap.pop();
    const auto left = detail::kronrod15(f, worst.a, mid);
    const auto right = detail::kronrod15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum in a fixed order; the running totals drift.
  std::vector<detail::Panel> panels;
  panels.reserve(heap.size());
  while (!heap.empty()) {
    panels.push_back(heap.top());
    heap.pop();
  }
  std::sort(panels.begin(), panels.end(),
            [](const detail::Panel& l, const detail::Panel& r) { return l.a < r.a; });
  out.value = 0.0;
  out.abs_error = 0.0;
  for (const auto& p : panels) {
    out.value += p.value;
    out.abs_error += p.error;
  }
  out.intervals = static_cast<int>(panels.size());
  if (out.abs_error <= std::max(opt.abs_tol, opt.rel_tol * std::abs(out.value))) out.converged = true;
  return out;
}

template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
  const std::array<double, 2> pts = {a, b};
  return integrate(f, std::span<const double>(pts), opt);
}

/// Integrates f over [a, inf) through x = a + u/(1-u). f must decay faster
/// than x^-2 so that the mapped integrand vanishes at u = 1.
template <class F>
Result integrate_to_infinity(F&& f, double a, const Options& opt = {}) {
  auto g = [&f, a](double u) {
    const double one_minus = 1.0 - u;
    if (!(one_minus > 0.0)) return 0.0;
    const double x = a + u / one_minus;
    return f(x) / (one_minus * one_minus);
  };
  return integrate(g, 0.0, 1.0, opt);
}

}  // namespace spde::quad
