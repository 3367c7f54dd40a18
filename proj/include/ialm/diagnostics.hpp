#pragma once

// Runtime checks of the structural guarantees behind the iALM analysis:
// regularity constant estimates, feasibility decay, the dual-norm bound and the
// predicted number of outer iterations.

#include "ialm/core.hpp"
#include "ialm/ialm.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace ialm {

struct RegularityTrace {
  bool supported = true;
  std::string message;
  /// v-hat_k per iterate; empty where ||c(x^k)|| < 1e-12.
  std::vector<std::optional<double>> values;

  std::optional<double> minimum() const {
    std::optional<double> out;
    for (const auto& v : values) {
      if (v && (!out || *v < *out)) out = *v;
    }
    return out;
  }
};

inline constexpr double kFeasibleThreshold = 1e-12;

/// v-hat_k = dist(-J_c(x^k)^T c(x^k), N_X(x^k)) / ||c(x^k)||. Only defined when
/// h is zero or an indicator (dh / beta is then scale free).
inline RegularityTrace estimate_regularity_v(const std::vector<Vector>& iterates,
                                             const ProblemSpec& problem) {
  RegularityTrace trace;
  const ProxKind kind = problem.nonsmooth.kind();
  if (kind == ProxKind::general || !problem.nonsmooth.has_subdiff_distance()) {
    trace.supported = false;
    trace.message =
        "regularity estimation needs h = 0 or an indicator with an exact normal-cone distance";
    return trace;
  }
  trace.values.reserve(iterates.size());
  for (const auto& x : iterates) {
    const Vector c = problem.constraints.evaluate(x);
    const double c_norm = c.norm();
    if (c_norm < kFeasibleThreshold) {
      trace.values.emplace_back();
      continue;
    }
    const Vector v = -problem.constraints.jacobian_transpose_apply(x, c);
    trace.values.emplace_back(*problem.nonsmooth.subdiff_distance(x, v) / c_norm);
  }
  return trace;
}

inline RegularityTrace estimate_regularity_v(const SolveReport& report,
                                             const ProblemSpec& problem) {
  return estimate_regularity_v(report.iterates, problem);
}

struct FeasibilityDecayVerdict {
  bool pass = false;
  /// Fitted constant: median of ||c(x^{k+1})|| beta_k.
  double constant = 0.0;
  double max_after_burn_in = 0.0;
  std::vector<double> products;
  std::string message;
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace detail

/// Products p_j = ||c(x^{j+1})|| beta_j over the records. Passes when every
/// product after the first outer iteration stays within 3x of the median.
inline FeasibilityDecayVerdict check_feasibility_decay(const std::vector<double>& pres,
                                                       const std::vector<double>& betas) {
  detail::require(pres.size() == betas.size(), "check_feasibility_decay: length mismatch");
  FeasibilityDecayVerdict out;
  if (pres.size() < 3) {
    out.message = "needs at least 3 outer iterations";
    return out;
  }
  for (std::size_t j = 0; j < pres.size(); ++j) out.products.push_back(pres[j] * betas[j]);
  out.constant = detail::median(out.products);
  out.max_after_burn_in = *std::max_element(out.products.begin() + 1, out.products.end());
  out.pass = out.max_after_burn_in <= 3.0 * out.constant;
  out.message = out.pass ? "bounded" : "||c|| beta grows beyond 3x its median";
  return out;
}

inline FeasibilityDecayVerdict check_feasibility_decay(const SolveReport& report, double sigma) {
  std::vector<double> pres;
  std::vector<double> betas;
  for (const auto& r : report.records) {
    pres.push_back(r.pres);
    betas.push_back(r.beta);
  }
  FeasibilityDecayVerdict out = check_feasibility_decay(pres, betas);
  for (std::size_t j = 1; j < betas.size(); ++j) {
    if (std::abs(betas[j] / betas[j - 1] - sigma) > 1e-9 * sigma) {
      out.pass = false;
      out.message = "penalty schedule does not grow by sigma";
      break;
    }
  }
  return out;
}

inline constexpr std::size_t kDualBoundHorizon = 1000000;

/// sum_{t<N} 1/((t+1) ln(t+2)^2) + 1/ln(N + 1/2). The second term bounds the
/// tail: each term is at most g(t+1) with g(u) = 1/(u ln^2 u) convex, so the
/// tail is below the integral of g from N + 1/2.
inline double dual_series_bound(std::size_t horizon = kDualBoundHorizon) {
  detail::require(horizon >= 1, "dual_series_bound: horizon must be at least 1");
  double sum = 0.0;
  // summed from the smallest terms up for accuracy
  for (std::size_t t = horizon; t-- > 0;) {
    const double l = std::log(static_cast<double>(t) + 2.0);
    sum += 1.0 / ((static_cast<double>(t) + 1.0) * l * l);
  }
  return sum + 1.0 / std::log(static_cast<double>(horizon) + 0.5);
}

/// y_max = w0 (ln 2)^2 ||c(x0)|| c-bar, an upper bound on ||y^k|| under the
/// Theoretical policy.
inline double dual_norm_bound(double w0, double c0_norm,
                              std::size_t horizon = kDualBoundHorizon) {
  detail::require(w0 >= 0.0 && c0_norm >= 0.0, "dual_norm_bound: inputs must be nonnegative");
  if (w0 == 0.0 || c0_norm == 0.0) return 0.0;
  static const double default_series = dual_series_bound(kDualBoundHorizon);
  const double series = horizon == kDualBoundHorizon ? default_series : dual_series_bound(horizon);
  const double l2 = std::log(2.0);
  return w0 * l2 * l2 * c0_norm * series;
}

/// K = ceil(log_sigma C) + 1 with C = (eps + B0 + B_c y_max) / (v beta0 eps).
inline std::size_t predict_outer_iterations(double eps, double b0, double b_c, double y_max,
                                            double v, double beta0, double sigma) {
  detail::require(eps > 0.0 && v > 0.0 && beta0 > 0.0 && sigma > 1.0,
                  "predict_outer_iterations: eps, v, beta0 must be positive and sigma > 1");
  detail::require(b0 >= 0.0 && b_c >= 0.0 && y_max >= 0.0,
                  "predict_outer_iterations: constants must be nonnegative");
  const double c = (eps + b0 + b_c * y_max) / (v * beta0 * eps);
  const double k = std::ceil(std::log(c) / std::log(sigma) - 1e-12) + 1.0;
  if (!(k >= 1.0)) return 1;
  return static_cast<std::size_t>(k);
}

}  // namespace ialm
