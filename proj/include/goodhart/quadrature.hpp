#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace goodhart {

struct QuadOptions {
  double rel_tol = 1e-10;
  // Absolute floor, measured in units of the first component's L1 mass.
  double abs_tol = 1e-14;
  int max_depth = 60;
  std::size_t max_intervals = 400000;
};

template <std::size_t N>
using Vec = std::array<double, N>;

template <std::size_t N>
struct QuadResult {
  Vec<N> value{};
  Vec<N> l1{};     // integral of |f_k|
  Vec<N> error{};  // summed Kronrod-minus-Gauss estimates
  std::size_t intervals = 0;
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

template <std::size_t N>
struct Panel {
  double a = 0.0;
  double b = 0.0;
  int depth = 0;
  Vec<N> value{};
  Vec<N> l1{};
  Vec<N> error{};
  double priority = 0.0;
};

template <std::size_t N, class F>
Panel<N> gauss_kronrod_15(F& f, double a, double b, int depth) {
  Panel<N> p;
  p.a = a;
  p.b = b;
  p.depth = depth;
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  Vec<N> kron{};
  Vec<N> gauss{};
  Vec<N> l1{};
  const Vec<N> fc = f(c);
  for (std::size_t k = 0; k < N; ++k) {
    kron[k] = kWgk[7] * fc[k];
    gauss[k] = kWg[3] * fc[k];
    l1[k] = kWgk[7] * std::abs(fc[k]);
  }
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const Vec<N> f1 = f(c - dx);
    const Vec<N> f2 = f(c + dx);
    for (std::size_t k = 0; k < N; ++k) {
      kron[k] += kWgk[j] * (f1[k] + f2[k]);
      l1[k] += kWgk[j] * (std::abs(f1[k]) + std::abs(f2[k]));
      if (j % 2 == 1) gauss[k] += kWg[j / 2] * (f1[k] + f2[k]);
    }
  }
  for (std::size_t k = 0; k < N; ++k) {
    p.value[k] = kron[k] * h;
    p.l1[k] = l1[k] * std::abs(h);
    p.error[k] = std::abs((kron[k] - gauss[k]) * h);
  }
  return p;
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod (7/15) quadrature of a vector-valued
// integrand over [breaks.front(), breaks.back()]. Every component shares one
// subdivision, so ratios of components are computed on identical panels.
template <std::size_t N, class F>
QuadResult<N> integrate(F&& f, std::span<const double> breaks, const QuadOptions& opt = {}) {
  QuadResult<N> out;
  if (breaks.size() < 2) return out;
  using Panel = detail::Panel<N>;

  std::vector<Panel> panels;
  panels.reserve(breaks.size() + 64);
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    panels.push_back(detail::gauss_kronrod_15<N>(f, breaks[i], breaks[i + 1], 0));
  }
  if (panels.empty()) return out;

  Vec<N> scale{};
  for (const auto& p : panels)
    for (std::size_t k = 0; k < N; ++k) scale[k] += p.l1[k];
  for (std::size_t k = 0; k < N; ++k)
    scale[k] = std::max({scale[k], scale[0] * 1e-300, std::numeric_limits<double>::min()});

  auto priority = [&](const Panel& p) {
    double worst = 0.0;
    for (std::size_t k = 0; k < N; ++k) worst = std::max(worst, p.error[k] / scale[k]);
    return worst;
  };
  auto cmp = [](const Panel& x, const Panel& y) { return x.priority < y.priority; };
  std::priority_queue<Panel, std::vector<Panel>, decltype(cmp)> heap(cmp);

  Vec<N> value{}, l1{}, err{};
  for (auto& p : panels) {
    p.priority = priority(p);
    for (std::size_t k = 0; k < N; ++k) {
      value[k] += p.value[k];
      l1[k] += p.l1[k];
      err[k] += p.error[k];
    }
    heap.push(p);
  }

  auto converged = [&]() {
    for (std::size_t k = 0; k < N; ++k) {
      const double tol = std::max(opt.rel_tol * l1[k], opt.abs_tol * l1[0]);
      if (err[k] > tol) return false;
    }
    return true;
  };

  while (!converged()) {
    if (heap.size() >= opt.max_intervals)
      throw QuadratureFailure("quadrature: interval budget exhausted");
    Panel worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (worst.depth >= opt.max_depth || !(mid > worst.a && mid < worst.b)) {
      throw QuadratureFailure("quadrature: maximum subdivision depth reached near x = " +
                              std::to_string(mid));
    }
    heap.pop();
    Panel left = detail::gauss_kronrod_15<N>(f, worst.a, mid, worst.depth + 1);
    Panel right = detail::gauss_kronrod_15<N>(f, mid, worst.b, worst.depth + 1);
    left.priority = priority(left);
    right.priority = priority(right);
    for (std::size_t k = 0; k < N; ++k) {
      value[k] += left.value[k] + right.value[k] - worst.value[k];
      l1[k] += left.l1[k] + right.l1[k] - worst.l1[k];
      err[k] += left.error[k] + right.error[k] - worst.error[k];
    }
    heap.push(left);
    heap.push(right);
  }

  out.intervals = heap.size();
  while (!heap.empty()) {
    const Panel& p = heap.top();
    for (std::size_t k = 0; k < N; ++k) {
      out.value[k] += p.value[k];
      out.l1[k] += p.l1[k];
      out.error[k] += p.error[k];
    }
    heap.pop();
  }
  return out;
}

template <std::size_t N, class F>
QuadResult<N> integrate(F&& f, double a, double b, const QuadOptions& opt = {}) {
  const std::array<double, 2> br{a, b};
  return integrate<N>(std::forward<F>(f), std::span<const double>(br), opt);
}

// Scalar convenience wrapper.
template <class F>
double integrate_scalar(F&& f, double a, double b, const QuadOptions& opt = {}) {
  auto g = [&](double x) { return Vec<1>{f(x)}; };
  return integrate<1>(g, a, b, opt).value[0];
}

}  // namespace goodhart
