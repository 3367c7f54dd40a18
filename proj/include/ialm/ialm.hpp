#pragma once

// Inexact augmented Lagrangian method for min g(x) + h(x) s.t. c(x) = 0.

#include "ialm/core.hpp"
#include "ialm/ippm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace ialm {

/// w_k = w0 min{1, gamma_k / ||c||}
struct Theoretical {
  double w0 = 1.0;
};
/// w_k = M (k+1)^q / ||c||
struct PowerGrowth {
  double m = 1.0;
  unsigned q = 0;
};
/// w_k = 1 / ||c||
struct Practical {};

using DualStepPolicy = std::variant<Theoretical, PowerGrowth, Practical>;

inline std::string policy_name(const DualStepPolicy& policy) {
  if (std::holds_alternative<Theoretical>(policy)) return "theoretical";
  if (std::holds_alternative<PowerGrowth>(policy)) return "power";
  return "practical";
}

/// gamma_k = (ln 2)^2 ||c(x0)|| / ((k+1) ln(k+2)^2)
inline double gamma_schedule(std::size_t k, double c0_norm) {
  const double l2 = std::log(2.0);
  const double lk = std::log(static_cast<double>(k) + 2.0);
  return l2 * l2 * c0_norm / ((static_cast<double>(k) + 1.0) * lk * lk);
}

/// Step size of the dual update y += w c. For PowerGrowth and Practical the
/// formula is undefined at c = 0; the increment w c is zero there anyway, so 0
/// is returned.
inline double dual_step_size(const DualStepPolicy& policy, std::size_t k, double c_norm_next,
                             double gamma) {
  detail::require(c_norm_next >= 0.0, "dual_step_size: ||c|| must be nonnegative");
  if (const auto* p = std::get_if<Theoretical>(&policy)) {
    if (c_norm_next == 0.0) return p->w0;
    return p->w0 * std::min(1.0, gamma / c_norm_next);
  }
  if (c_norm_next == 0.0) return 0.0;
  if (const auto* p = std::get_if<PowerGrowth>(&policy)) {
    return p->m * std::pow(static_cast<double>(k) + 1.0, static_cast<double>(p->q)) / c_norm_next;
  }
  return 1.0 / c_norm_next;
}

/// (beta_k, ||y^k||) -> (rho-hat_k, L-hat_k)
using CurvatureSchedule = std::function<Curvature(double beta, double y_norm)>;

struct IalmConfig {
  double beta0 = 0.01;
  double sigma = 3.0;
  double eps = 1e-3;
  DualStepPolicy policy = Practical{};
  /// Freeze y at zero: the quadratic penalty method.
  bool penalty_mode = false;
  std::size_t max_outer = 100;
  /// APG iteration limit per call.
  std::size_t max_inner = 1000000;
  /// iPPM outer iteration limit per AL subproblem.
  std::size_t max_ppm = 100000;
  bool stall_guard = true;
  /// Keep x^{k+1} of every outer iteration in the report.
  bool record_iterates = false;
  /// Replaces the ledger-based (rho-hat, L-hat) when set.
  CurvatureSchedule curvature_override;

  void validate() const {
    detail::require(beta0 > 0.0 && std::isfinite(beta0), "beta0 must be positive");
    detail::require(sigma > 1.0 && std::isfinite(sigma), "sigma must exceed 1");
    detail::require(eps > 0.0, "eps must be positive");
    detail::require(max_outer >= 1, "max_outer must be at least 1");
    if (const auto* p = std::get_if<Theoretical>(&policy)) {
      detail::require(p->w0 >= 0.0, "w0 must be nonnegative");
    }
    if (const auto* p = std::get_if<PowerGrowth>(&policy)) {
      detail::require(p->m > 0.0, "M must be positive");
    }
  }
};

struct OuterIterationRecord {
  std::size_t k = 0;
  double beta = 0.0;
  double w = 0.0;
  double rho_hat = 0.0;
  double l_hat = 0.0;
  /// ||c(x^{k+1})||
  double pres = 0.0;
  /// dres at x^{k+1} with the certificate multiplier y^k + beta_k c(x^{k+1})
  double dres = 0.0;
  bool dres_is_upper_bound = false;
  /// dres at x^{k+1} with the running multiplier y^{k+1}
  double dres_running = 0.0;
  double y_norm = 0.0;  // ||y^{k+1}||
  std::size_t ppm_iterations = 0;
  std::size_t apg_iterations = 0;
  std::size_t grad_evals = 0;  // cumulative
  std::size_t obj_evals = 0;   // cumulative
  double elapsed = 0.0;        // seconds since solve start
};

enum class SolveStatus { converged, max_outer_iterations, subsolver_failure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_outer_iterations: return "max_outer_iterations";
    case SolveStatus::subsolver_failure: return "subsolver_failure";
  }
  return "unknown";
}

struct SolveReport {
  std::vector<OuterIterationRecord> records;
  Vector x;
  /// Certificate multiplier y^K + beta_K c(x^{K+1}).
  Vector y;
  /// Multiplier y^{K+1} carried by the outer loop.
  Vector y_running;
  /// An element of dh(x) from the final subproblem, for re-measuring dres.
  Vector subgradient;
  KktResidual kkt;
  double compl_residual = 0.0;  // inequality solver only
  bool success = false;
  SolveStatus status = SolveStatus::max_outer_iterations;
  std::string reason;
  EvalCounters counters;
  double elapsed = 0.0;
  double initial_c_norm = 0.0;
  /// x^{k+1} per outer iteration when record_iterates is set.
  std::vector<Vector> iterates;

  double max_y_norm() const {
    double out = 0.0;
    for (const auto& r : records) out = std::max(out, r.y_norm);
    return out;
  }
};

namespace detail {

inline Curvature checked_curvature(const Curvature& c) {
  if (!(c.weak_convexity > 0.0) || !std::isfinite(c.weak_convexity)) {
    throw std::invalid_argument(
        "subproblem weak-convexity estimate must be finite and positive; supply rho0 > 0 or a "
        "curvature override");
  }
  if (!(c.smoothness > 0.0) || !std::isfinite(c.smoothness)) {
    throw std::invalid_argument(
        "subproblem smoothness estimate must be finite and positive; the constants ledger is "
        "incomplete, supply a curvature override");
  }
  return c;
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

inline SolveReport ialm_solve(const ProblemSpec& problem, const IalmConfig& config) {
  problem.validate();
  config.validate();
  const detail::Stopwatch clock;

  SolveReport report;
  const Index l = problem.constraint_count();
  Vector x = problem.initial_point;
  Vector y = Vector::Zero(l);
  report.initial_c_norm = problem.constraints.evaluate(x).norm();

  const double l0 = problem.smooth.smoothness();
  const double rho0 = problem.smooth.weak_convexity();

  IppmOptions ppm_options;
  ppm_options.max_outer = config.max_ppm;
  ppm_options.max_inner = config.max_inner;
  ppm_options.stall_guard = config.stall_guard;

  double beta = config.beta0;
  for (std::size_t k = 0; k < config.max_outer; ++k) {
    if (k > 0) beta *= config.sigma;
    const double y_norm = y.norm();
    const Curvature curv = detail::checked_curvature(
        config.curvature_override ? config.curvature_override(beta, y_norm)
                                  : al_curvature_params(beta, y_norm, problem.constants, l0, rho0));

    const AugmentedLagrangianSmooth phi(problem, y, beta);
    IppmResult sub = ippm_solve(phi, problem.nonsmooth, x, curv.weak_convexity, curv.smoothness,
                                config.eps, ppm_options);
    report.counters += sub.counters;
    x = sub.x;
    report.subgradient = sub.subgradient;

    OuterIterationRecord rec;
    rec.k = k;
    rec.beta = beta;
    rec.rho_hat = curv.weak_convexity;
    rec.l_hat = curv.smoothness;
    rec.ppm_iterations = sub.outer_iterations;
    rec.apg_iterations = sub.inner_iterations;

    const Vector c = problem.constraints.evaluate(x);
    const double c_norm = c.norm();
    const Vector y_cert = y + beta * c;
    const KktResidual cert = kkt_residual(x, y_cert, problem, &sub.subgradient, &report.counters);
    rec.pres = c_norm;
    rec.dres = cert.dres;
    rec.dres_is_upper_bound = cert.dres_is_upper_bound;

    const bool done = sub.converged() && c_norm <= config.eps && cert.dres <= config.eps;
    double w = 0.0;
    if (!done && !config.penalty_mode) {
      w = dual_step_size(config.policy, k, c_norm, gamma_schedule(k, report.initial_c_norm));
      if (c_norm > 0.0) y += w * c;
    }
    rec.w = w;
    rec.y_norm = y.norm();
    rec.dres_running =
        done ? cert.dres : kkt_residual(x, y, problem, &sub.subgradient, &report.counters).dres;
    rec.grad_evals = report.counters.gradient;
    rec.obj_evals = report.counters.objective;
    rec.elapsed = clock.seconds();
    report.records.push_back(rec);
    if (config.record_iterates) report.iterates.push_back(x);

    report.x = x;
    report.y = y_cert;
    report.y_running = y;
    report.kkt = cert;

    if (!sub.converged()) {
      report.status = SolveStatus::subsolver_failure;
      std::ostringstream msg;
      msg << "outer iteration " << k << " (beta=" << beta << "): " << to_string(sub.status);
      if (!sub.message.empty()) msg << ": " << sub.message;
      report.reason = msg.str();
      report.elapsed = clock.seconds();
      return report;
    }
    if (done) {
      report.status = SolveStatus::converged;
      report.success = true;
      report.reason = "converged";
      report.elapsed = clock.seconds();
      return report;
    }
  }
  report.status = SolveStatus::max_outer_iterations;
  report.reason = "reached max_outer without an eps-KKT certificate";
  report.elapsed = clock.seconds();
  return report;
}

}  // namespace ialm
