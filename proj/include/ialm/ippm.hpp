#pragma once

// Inexact proximal point method: Phi = phi + psi with phi rho-weakly convex is
// minimized through a sequence of rho-strongly convex APG subproblems.

#include "ialm/apg.hpp"
#include "ialm/core.hpp"

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

namespace ialm {

/// G(x) = phi(x) + rho ||x - center||^2, built by composition.
template <class Oracle>
class ProximalShift {
 public:
  ProximalShift(const Oracle& phi, double rho, Vector center)
      : phi_(&phi), rho_(rho), center_(std::move(center)) {}

  double value(const Vector& x) const {
    return phi_->value(x) + rho_ * (x - center_).squaredNorm();
  }
  Vector gradient(const Vector& x) const {
    return phi_->gradient(x) + 2.0 * rho_ * (x - center_);
  }

 private:
  const Oracle* phi_;
  double rho_;
  Vector center_;
};

enum class IppmStatus { converged, max_outer_iterations, inner_max_iterations, stalled };

inline const char* to_string(IppmStatus s) {
  switch (s) {
    case IppmStatus::converged: return "converged";
    case IppmStatus::max_outer_iterations: return "ippm_max_outer_iterations";
    case IppmStatus::inner_max_iterations: return "apg_max_iterations";
    case IppmStatus::stalled: return "apg_stalled";
  }
  return "unknown";
}

struct IppmOptions {
  std::size_t max_outer = 100000;
  std::size_t max_inner = 1000000;
  /// Cap APG at twice its iteration bound when dom(psi) is bounded.
  bool stall_guard = true;
  /// Record Phi(x^k) for every outer iterate (costs one value call each).
  bool record_trace = false;
};

struct IppmResult {
  Vector x;
  std::size_t outer_iterations = 0;
  std::size_t inner_iterations = 0;
  /// Upper bound on dist(-grad phi(x), d psi(x)).
  double stationarity = kInfinity;
  /// Element of d psi(x) from the last APG step.
  Vector subgradient;
  IppmStatus status = IppmStatus::max_outer_iterations;
  std::string message;
  EvalCounters counters;
  /// Phi(x^0), Phi(x^1), ... when record_trace is set.
  std::vector<double> objective_trace;
  /// ||x^{k+1} - x^k|| per outer iteration when record_trace is set.
  std::vector<double> step_norms;

  bool converged() const { return status == IppmStatus::converged; }
};

/// ceil(32 rho (Phi(x0) - Phi*) / eps^2).
inline std::size_t ippm_iteration_bound(double rho, double eps, double gap) {
  detail::require(rho > 0.0 && eps > 0.0 && gap >= 0.0,
                  "ippm_iteration_bound: need rho, eps > 0 and gap >= 0");
  return static_cast<std::size_t>(std::ceil(32.0 * rho * gap / (eps * eps)));
}

template <class Oracle>
IppmResult ippm_solve(const Oracle& phi, const ProxCapableFunction& psi, const Vector& x0,
                      double rho, double smoothness, double eps, const IppmOptions& options = {}) {
  detail::require(rho > 0.0, "ippm_solve: rho must be positive");
  detail::require(smoothness > 0.0, "ippm_solve: L_phi must be positive");
  detail::require(eps > 0.0, "ippm_solve: eps must be positive");
  detail::require_finite(x0, "x0");
  detail::require(psi.in_domain(x0), "ippm_solve: x0 is outside dom(psi)");

  const double inner_eps = eps / 4.0;
  const double inner_smoothness = smoothness + 2.0 * rho;
  ApgOptions apg_options{options.max_inner};
  bool capped = false;
  if (options.stall_guard && psi.diameter()) {
    const double d = *psi.diameter();
    const std::size_t bound = apg_iteration_bound(rho, inner_smoothness, inner_eps, d, d);
    if (bound < options.max_inner / 2) {
      apg_options.max_iterations = 2 * bound;
      capped = true;
    }
  }

  IppmResult result;
  auto record_value = [&](const Vector& x) {
    ++result.counters.objective;
    result.objective_trace.push_back(phi.value(x) + psi.value(x));
  };

  Vector x = x0;
  if (options.record_trace) record_value(x);
  result.x = x;
  for (std::size_t k = 0; k < options.max_outer; ++k) {
    const ProximalShift<Oracle> shifted(phi, rho, x);
    ApgResult inner = apg_solve(shifted, psi, x, rho, inner_smoothness, inner_eps, apg_options);
    result.counters += inner.counters;
    result.inner_iterations += inner.iterations;
    result.outer_iterations = k + 1;
    const double step = (inner.x - x).norm();
    result.x = inner.x;
    result.subgradient = inner.subgradient;
    result.stationarity = inner.stationarity + 2.0 * rho * step;
    if (options.record_trace) {
      record_value(inner.x);
      result.step_norms.push_back(step);
    }
    if (!inner.converged()) {
      std::ostringstream msg;
      if (capped && inner.iterations >= apg_options.max_iterations) {
        result.status = IppmStatus::stalled;
        msg << "APG exceeded twice its iteration bound (" << apg_options.max_iterations
            << " iterations) at outer iteration " << k << "; the weak-convexity estimate rho="
            << rho << " is probably too small, increase rho";
      } else {
        result.status = IppmStatus::inner_max_iterations;
        msg << "APG hit its iteration limit (" << apg_options.max_iterations
            << ") at outer iteration " << k;
      }
      result.message = msg.str();
      return result;
    }
    if (2.0 * rho * step <= eps / 2.0) {
      result.status = IppmStatus::converged;
      return result;
    }
    x = std::move(inner.x);
  }
  result.status = IppmStatus::max_outer_iterations;
  result.message = "iPPM reached its outer iteration limit";
  return result;
}

}  // namespace ialm
