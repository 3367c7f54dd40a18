#pragma once

// Accelerated proximal gradient for mu-strongly convex, L-smooth G plus a
// prox-capable H. Innermost solver of the stack.

#include "ialm/core.hpp"

#include <cmath>
#include <cstddef>

namespace ialm {

enum class ApgStatus { converged, max_iterations };

struct ApgResult {
  Vector x;
  std::size_t iterations = 0;
  /// Certified dist(-grad G(x), dH(x)).
  double stationarity = kInfinity;
  bool is_upper_bound = false;
  /// An element of dH(x) produced by the last prox step.
  Vector subgradient;
  ApgStatus status = ApgStatus::max_iterations;
  EvalCounters counters;

  bool converged() const { return status == ApgStatus::converged; }
};

struct ApgOptions {
  std::size_t max_iterations = 1000000;
};

/// ceil(sqrt(L/mu) log(64 L^2 (L d_init^2 + mu d_0^2) / (eps^2 mu)) + 1), with
/// d_init = ||x_init - x*|| and d_0 = ||x* - x0||. Never below 1.
inline std::size_t apg_iteration_bound(double mu, double smoothness, double eps, double d_init,
                                       double d_0) {
  detail::require(mu > 0.0 && smoothness >= mu, "apg_iteration_bound: need 0 < mu <= L");
  detail::require(eps > 0.0, "apg_iteration_bound: eps must be positive");
  const double l = smoothness;
  const double arg = 64.0 * l * l * (l * d_init * d_init + mu * d_0 * d_0) / (eps * eps * mu);
  const double t = std::ceil(std::sqrt(l / mu) * std::log(arg) + 1.0);
  if (!(t >= 1.0)) return 1;
  if (t > 1e18) return static_cast<std::size_t>(1e18);
  return static_cast<std::size_t>(t);
}

/// Solves min G(x) + H(x). `G` needs gradient(x). Each loop iteration costs
/// two gradients: one at the extrapolated point and one at the new iterate
/// for the stopping test. Both are counted.
template <class Oracle>
ApgResult apg_solve(const Oracle& G, const ProxCapableFunction& H, const Vector& x_init, double mu,
                    double smoothness, double eps, const ApgOptions& options = {}) {
  detail::require(mu > 0.0, "apg_solve: mu must be positive");
  detail::require(smoothness >= mu, "apg_solve: L_G must be >= mu");
  detail::require(eps > 0.0, "apg_solve: eps must be positive");
  detail::require_finite(x_init, "x_init");
  detail::require(H.in_domain(x_init), "apg_solve: x_init is outside dom(H)");

  const double step = 1.0 / smoothness;
  const double alpha = std::sqrt(mu / smoothness);
  const double momentum = (1.0 - alpha) / (1.0 + alpha);

  ApgResult result;
  auto gradient = [&](const Vector& x) -> Vector {
    ++result.counters.gradient;
    Vector g = G.gradient(x);
    detail::check_oracle(g, "APG gradient");
    return g;
  };

  // x_bar^0 = x^0 = prox step from x_bar^{-1} = x_init
  Vector x = H.prox(x_init - step * gradient(x_init), step);
  Vector x_bar = x;

  result.x = x;
  for (std::size_t t = 0; t < options.max_iterations; ++t) {
    const Vector grad_bar = gradient(x_bar);
    Vector x_next = H.prox(x_bar - step * grad_bar, step);
    detail::check_oracle(x_next, "prox");
    const Vector grad_next = gradient(x_next);
    // optimality of the prox step: e = L (x_bar - x_next) - grad_bar is in dH(x_next)
    Vector witness = smoothness * (x_bar - x_next) - grad_bar;
    const StationarityMeasure m = measure_stationarity(H, x_next, (-grad_next).eval(), &witness);

    if (m.value < result.stationarity || t == 0) {
      result.x = x_next;
      result.stationarity = m.value;
      result.is_upper_bound = m.is_upper_bound;
      result.subgradient = witness;
    }
    result.iterations = t + 1;
    if (m.value <= eps) {
      result.x = std::move(x_next);
      result.stationarity = m.value;
      result.is_upper_bound = m.is_upper_bound;
      result.subgradient = std::move(witness);
      result.status = ApgStatus::converged;
      return result;
    }
    x_bar = x_next + momentum * (x_next - x);
    x = std::move(x_next);
  }
  result.status = ApgStatus::max_iterations;
  return result;
}

}  // namespace ialm
