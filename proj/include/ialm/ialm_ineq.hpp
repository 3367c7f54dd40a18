#pragma once

// iALM for min g(x) + h(x) s.t. Ax = b, f(x) <= 0 with convex f, and the
// slack-variable route that hands inequality problems to the equality solver.

#include "ialm/core.hpp"
#include "ialm/ialm.hpp"
#include "ialm/ippm.hpp"
#include "ialm/prox.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace ialm {

struct IneqProblemSpec {
  SmoothOracle smooth;
  ProxCapableFunction nonsmooth;
  Matrix a;  // may have zero rows
  Vector b;
  /// Convex f: constants().bounds holds B_i^f, constants().smoothness L_i^f.
  ConstraintOracle inequalities;
  /// B_i >= max over dom(h) of max{|a_i^T x - b_i|, ||a_i||}; only needed by
  /// the slack route. Empty means unknown.
  std::vector<double> affine_bounds;
  double b0 = kInfinity;
  Vector initial_point;

  Index dimension() const { return initial_point.size(); }
  Index affine_count() const { return a.rows(); }
  Index inequality_count() const { return inequalities.count(); }

  void validate() const {
    detail::require(static_cast<bool>(smooth), "IneqProblemSpec: smooth oracle missing");
    detail::require_finite(initial_point, "initial point");
    detail::require(nonsmooth.in_domain(initial_point),
                    "IneqProblemSpec: initial point is outside dom(h)");
    detail::require(a.cols() == dimension() || a.rows() == 0,
                    "IneqProblemSpec: A has the wrong number of columns");
    detail::require(b.size() == a.rows(), "IneqProblemSpec: b and A disagree");
  }

  Vector affine_residual(const Vector& x) const {
    if (a.rows() == 0) return Vector(0);
    return a * x - b;
  }

  /// ||A^T A||_2
  double ata_norm() const {
    if (a.rows() == 0) return 0.0;
    const Matrix ata = a.transpose() * a;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(ata, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().maxCoeff();
  }
};

/// Primal residual, dual residual and complementarity of the inequality
/// eps-KKT definition.
struct TripleKktResidual {
  double pres = 0.0;
  double dres = 0.0;
  double compl_residual = 0.0;
  bool dres_is_upper_bound = false;
};

namespace detail {

inline void check_ineq_inputs(const Vector& x, const Vector& y, const Vector& z,
                              const IneqProblemSpec& problem) {
  require_size(x, problem.dimension(), "x");
  require_size(y, problem.affine_count(), "y");
  require_size(z, problem.inequality_count(), "z");
  require_finite(x, "x");
  require_finite(y, "y");
  require_finite(z, "z");
  if (z.size() > 0 && z.minCoeff() < 0.0) {
    throw std::invalid_argument("z must be componentwise nonnegative");
  }
}

/// Smooth part of the inequality AL without h.
inline double al_ineq_smooth_value(const Vector& x, const Vector& y, const Vector& z, double beta,
                                   const IneqProblemSpec& problem) {
  const Vector r = problem.affine_residual(x);
  double value = problem.smooth.value(x) + y.dot(r) + 0.5 * beta * r.squaredNorm();
  if (problem.inequality_count() > 0) {
    const Vector f = problem.inequalities.evaluate(x);
    value += ((z + beta * f).cwiseMax(0.0).squaredNorm() - z.squaredNorm()) / (2.0 * beta);
  }
  return value;
}

inline Vector al_ineq_smooth_gradient(const Vector& x, const Vector& y, const Vector& z,
                                      double beta, const IneqProblemSpec& problem) {
  Vector grad = problem.smooth.gradient(x);
  if (problem.affine_count() > 0) {
    grad += problem.a.transpose() * (y + beta * problem.affine_residual(x));
  }
  if (problem.inequality_count() > 0) {
    const Vector f = problem.inequalities.evaluate(x);
    grad += problem.inequalities.jacobian_transpose_apply(x, (z + beta * f).cwiseMax(0.0));
  }
  return grad;
}

}  // namespace detail

/// f0(x) + y^T(Ax-b) + (beta/2)||Ax-b||^2 + (||[z + beta f(x)]_+||^2 - ||z||^2) / (2 beta)
inline double al_ineq_value(const Vector& x, const Vector& y, const Vector& z, double beta,
                            const IneqProblemSpec& problem, EvalCounters* counters = nullptr) {
  detail::require(beta > 0.0, "beta must be positive");
  detail::check_ineq_inputs(x, y, z, problem);
  if (counters) ++counters->objective;
  const double value = detail::al_ineq_smooth_value(x, y, z, beta, problem) +
                       problem.nonsmooth.value(x);
  if (std::isnan(value) || value == -kInfinity) {
    throw NumericalError("augmented Lagrangian value is not finite (oracle overflow)");
  }
  return value;
}

/// grad g(x) + A^T(y + beta(Ax-b)) + J_f(x)^T [z + beta f(x)]_+
inline Vector al_ineq_gradient_smooth(const Vector& x, const Vector& y, const Vector& z,
                                      double beta, const IneqProblemSpec& problem,
                                      EvalCounters* counters = nullptr) {
  detail::require(beta > 0.0, "beta must be positive");
  detail::check_ineq_inputs(x, y, z, problem);
  if (counters) ++counters->gradient;
  Vector grad = detail::al_ineq_smooth_gradient(x, y, z, beta, problem);
  detail::check_oracle(grad, "augmented Lagrangian gradient");
  return grad;
}

class AugmentedLagrangianIneqSmooth {
 public:
  AugmentedLagrangianIneqSmooth(const IneqProblemSpec& problem, Vector y, Vector z, double beta)
      : problem_(&problem), y_(std::move(y)), z_(std::move(z)), beta_(beta) {}

  double value(const Vector& x) const {
    return detail::check_oracle(detail::al_ineq_smooth_value(x, y_, z_, beta_, *problem_),
                                "augmented Lagrangian value");
  }
  Vector gradient(const Vector& x) const {
    Vector grad = detail::al_ineq_smooth_gradient(x, y_, z_, beta_, *problem_);
    detail::check_oracle(grad, "augmented Lagrangian gradient");
    return grad;
  }

 private:
  const IneqProblemSpec* problem_;
  Vector y_;
  Vector z_;
  double beta_;
};

inline TripleKktResidual kkt_residual_ineq(const Vector& x, const Vector& y, const Vector& z,
                                           const IneqProblemSpec& problem,
                                           const Vector* subgradient_witness = nullptr,
                                           EvalCounters* counters = nullptr) {
  detail::check_ineq_inputs(x, y, z, problem);
  if (counters) ++counters->gradient;
  const Vector r = problem.affine_residual(x);
  Vector grad = problem.smooth.gradient(x);
  if (problem.affine_count() > 0) grad += problem.a.transpose() * y;
  TripleKktResidual out;
  double f_plus_sq = 0.0;
  if (problem.inequality_count() > 0) {
    const Vector f = problem.inequalities.evaluate(x);
    grad += problem.inequalities.jacobian_transpose_apply(x, z);
    f_plus_sq = f.cwiseMax(0.0).squaredNorm();
    out.compl_residual = z.cwiseProduct(f).cwiseAbs().sum();
  }
  out.pres = std::sqrt(r.squaredNorm() + f_plus_sq);
  const StationarityMeasure m =
      measure_stationarity(problem.nonsmooth, x, (-grad).eval(), subgradient_witness);
  out.dres = m.value;
  out.dres_is_upper_bound = m.is_upper_bound;
  return out;
}

/// z_i + w max{-z_i / beta, f_i}, clamped at 0 against rounding.
inline Vector z_update(const Vector& z, const Vector& f, double w, double beta) {
  detail::require(z.size() == f.size(), "z_update: dimension mismatch");
  detail::require(beta > 0.0 && w >= 0.0 && w <= beta, "z_update: need 0 <= w <= beta");
  Vector out(z.size());
  for (Index i = 0; i < z.size(); ++i) {
    out[i] = std::max(0.0, z[i] + w * std::max(-z[i] / beta, f[i]));
  }
  return out;
}

/// L0 + beta ||A^T A|| + sum_i (beta B_i (B_i + L_i) + L_i |z_i|)
inline double ineq_smoothness_estimate(double l0, double beta, double ata_norm,
                                       const ConstraintConstants& cc, const Vector& z) {
  double out = l0 + beta * ata_norm;
  for (std::size_t i = 0; i < cc.bounds.size(); ++i) {
    const double bi = cc.bounds[i];
    const double li = i < cc.smoothness.size() ? cc.smoothness[i] : 0.0;
    out += beta * bi * (bi + li);
    if (li != 0.0) out += li * std::abs(z[static_cast<Index>(i)]);
  }
  return out;
}

/// Dual step of the inequality solver, capped at beta so z stays nonnegative.
inline double ineq_dual_step_size(const DualStepPolicy& policy, std::size_t k, double residual,
                                  double gamma, double beta) {
  return std::min(dual_step_size(policy, k, residual, gamma), beta);
}

/// Solves the inequality problem. The report's y holds the affine certificate
/// multiplier; z and z_running are returned separately.
struct IneqSolveReport : SolveReport {
  Vector z;          // [z^K + beta_K f(x^{K+1})]_+
  Vector z_running;  // z^{K+1}
  TripleKktResidual triple;
  std::vector<double> w_history;
  std::vector<double> z_min_history;
};

inline IneqSolveReport ialm_ineq_solve(const IneqProblemSpec& problem, const IalmConfig& config) {
  problem.validate();
  config.validate();
  const detail::Stopwatch clock;

  IneqSolveReport report;
  Vector x = problem.initial_point;
  Vector y = Vector::Zero(problem.affine_count());
  Vector z = Vector::Zero(problem.inequality_count());

  // gamma uses the smaller initial violation over the blocks that exist
  {
    double c0 = kInfinity;
    if (problem.affine_count() > 0) c0 = std::min(c0, problem.affine_residual(x).norm());
    if (problem.inequality_count() > 0) {
      c0 = std::min(c0, problem.inequalities.evaluate(x).cwiseMax(0.0).norm());
    }
    report.initial_c_norm = std::isfinite(c0) ? c0 : 0.0;
  }

  const double l0 = problem.smooth.smoothness();
  const double rho0 = problem.smooth.weak_convexity();
  const double ata = problem.ata_norm();

  IppmOptions ppm_options;
  ppm_options.max_outer = config.max_ppm;
  ppm_options.max_inner = config.max_inner;
  ppm_options.stall_guard = config.stall_guard;

  double beta = config.beta0;
  for (std::size_t k = 0; k < config.max_outer; ++k) {
    if (k > 0) beta *= config.sigma;
    Curvature curv;
    if (config.curvature_override) {
      curv = config.curvature_override(beta, std::hypot(y.norm(), z.norm()));
    } else {
      curv.weak_convexity = rho0;
      curv.smoothness =
          ineq_smoothness_estimate(l0, beta, ata, problem.inequalities.constants(), z);
    }
    curv = detail::checked_curvature(curv);

    const AugmentedLagrangianIneqSmooth phi(problem, y, z, beta);
    IppmResult sub = ippm_solve(phi, problem.nonsmooth, x, curv.weak_convexity, curv.smoothness,
                                config.eps, ppm_options);
    report.counters += sub.counters;
    x = sub.x;
    report.subgradient = sub.subgradient;

    const Vector r = problem.affine_residual(x);
    const Vector f =
        problem.inequality_count() > 0 ? problem.inequalities.evaluate(x) : Vector(0);
    const Vector y_cert = y + beta * r;
    const Vector z_cert = (z + beta * f).cwiseMax(0.0);
    const TripleKktResidual cert =
        kkt_residual_ineq(x, y_cert, z_cert, problem, &sub.subgradient, &report.counters);

    OuterIterationRecord rec;
    rec.k = k;
    rec.beta = beta;
    rec.rho_hat = curv.weak_convexity;
    rec.l_hat = curv.smoothness;
    rec.ppm_iterations = sub.outer_iterations;
    rec.apg_iterations = sub.inner_iterations;
    rec.pres = cert.pres;
    rec.dres = cert.dres;
    rec.dres_is_upper_bound = cert.dres_is_upper_bound;

    const bool done = sub.converged() && cert.pres <= config.eps && cert.dres <= config.eps &&
                      cert.compl_residual <= config.eps;
    double w = 0.0;
    if (!done && !config.penalty_mode) {
      const double violation = std::max(r.norm(), f.cwiseMax(0.0).norm());
      w = ineq_dual_step_size(config.policy, k, violation,
                              gamma_schedule(k, report.initial_c_norm), beta);
      if (r.size() > 0) y += w * r;
      if (z.size() > 0) z = z_update(z, f, w, beta);
    }
    rec.w = w;
    rec.y_norm = std::hypot(y.norm(), z.norm());
    rec.dres_running =
        done ? cert.dres
             : kkt_residual_ineq(x, y, z, problem, &sub.subgradient, &report.counters).dres;
    rec.grad_evals = report.counters.gradient;
    rec.obj_evals = report.counters.objective;
    rec.elapsed = clock.seconds();
    report.records.push_back(rec);
    report.w_history.push_back(w);
    report.z_min_history.push_back(z.size() > 0 ? z.minCoeff() : 0.0);
    if (config.record_iterates) report.iterates.push_back(x);

    report.x = x;
    report.y = y_cert;
    report.y_running = y;
    report.z = z_cert;
    report.z_running = z;
    report.triple = cert;
    report.kkt = {cert.pres, cert.dres, cert.dres_is_upper_bound};
    report.compl_residual = cert.compl_residual;

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

/// Multipliers of the original inequality problem recovered from a solution
/// of the slack reformulation.
struct SlackCertificate {
  Vector x;
  Vector y;
  Vector z;                     // [z-bar]_+
  double negative_part = 0.0;   // ||[z-bar]_-||
  TripleKktResidual kkt;        // measured on the original problem
};

/// z-hat = max(z-bar, 0) and the norm of the discarded negative part.
inline std::pair<Vector, double> clean_multiplier(const Vector& z_bar) {
  return {z_bar.cwiseMax(0.0), z_bar.cwiseMin(0.0).norm()};
}

/// Equality problem over (x, s): Ax - b = 0, f(x) + s = 0, with s in
/// [0, 2 B_i^f + 1] (or s >= 0 when B_i^f is unknown) folded into h.
struct SlackReformulation {
  ProblemSpec problem;
  Index original_dimension = 0;
  Index affine_count = 0;
  Index inequality_count = 0;

  SlackCertificate translate(const SolveReport& report, const IneqProblemSpec& original) const {
    SlackCertificate out;
    const Index n = original_dimension;
    out.x = report.x.head(n);
    out.y = report.y.head(affine_count);
    auto [z_hat, neg] = clean_multiplier(report.y.tail(inequality_count));
    out.z = std::move(z_hat);
    out.negative_part = neg;
    const Vector* witness = nullptr;
    Vector head_witness;
    if (report.subgradient.size() == report.x.size()) {
      head_witness = report.subgradient.head(n);
      witness = &head_witness;
    }
    out.kkt = kkt_residual_ineq(out.x, out.y, out.z, original, witness);
    return out;
  }
};

inline SlackReformulation slack_reformulate(const IneqProblemSpec& original) {
  original.validate();
  const Index n = original.dimension();
  const Index l = original.affine_count();
  const Index m = original.inequality_count();
  const ConstraintConstants& fc = original.inequalities.constants();

  bool bounded = true;
  Vector s_upper(m);
  for (Index i = 0; i < m; ++i) {
    const double bi = static_cast<std::size_t>(i) < fc.bounds.size()
                          ? fc.bounds[static_cast<std::size_t>(i)]
                          : kInfinity;
    bounded = bounded && std::isfinite(bi);
    s_upper[i] = 2.0 * bi + 1.0;
  }
  ProxCapableFunction slack_part =
      m == 0 ? zero_function()
             : (bounded ? box_indicator(BoxSet(Vector::Zero(m), s_upper))
                        : nonneg_orthant_indicator());

  const Vector x0 = original.initial_point;
  Vector s0 = Vector::Zero(m);
  if (m > 0) {
    s0 = (-original.inequalities.evaluate(x0)).cwiseMax(0.0);
    if (bounded) s0 = s0.cwiseMin(s_upper);
  }

  SlackReformulation out;
  out.original_dimension = n;
  out.affine_count = l;
  out.inequality_count = m;

  const SmoothOracle g = original.smooth;
  out.problem.smooth = SmoothOracle(
      [g, n](const Vector& xs) { return g.value(xs.head(n)); },
      [g, n, m](const Vector& xs) {
        Vector grad = Vector::Zero(n + m);
        grad.head(n) = g.gradient(xs.head(n));
        return grad;
      },
      g.smoothness(), g.weak_convexity());
  out.problem.nonsmooth = separable_sum(original.nonsmooth, n, std::move(slack_part));

  const Matrix a = original.a;
  const Vector b = original.b;
  const ConstraintOracle f = original.inequalities;
  ConstraintConstants cc;
  for (Index i = 0; i < l; ++i) {
    cc.bounds.push_back(static_cast<std::size_t>(i) < original.affine_bounds.size()
                            ? original.affine_bounds[static_cast<std::size_t>(i)]
                            : kInfinity);
    cc.smoothness.push_back(0.0);
    cc.weak_convexity.push_back(0.0);
  }
  for (Index i = 0; i < m; ++i) {
    const auto u = static_cast<std::size_t>(i);
    const double bi = u < fc.bounds.size() ? fc.bounds[u] : kInfinity;
    cc.bounds.push_back(std::max(bi + s_upper[i], std::sqrt(bi * bi + 1.0)));
    cc.smoothness.push_back(u < fc.smoothness.size() ? fc.smoothness[u] : kInfinity);
    cc.weak_convexity.push_back(u < fc.weak_convexity.size() ? fc.weak_convexity[u] : 0.0);
  }
  cc.jacobian_bound = kInfinity;
  out.problem.constraints = ConstraintOracle(
      l + m,
      [a, b, f, n, l, m](const Vector& xs) {
        Vector c(l + m);
        const Vector x = xs.head(n);
        if (l > 0) c.head(l) = a * x - b;
        if (m > 0) c.tail(m) = f.evaluate(x) + xs.tail(m);
        return c;
      },
      [a, f, n, l, m](const Vector& xs, const Vector& v) {
        Vector out_v = Vector::Zero(n + m);
        const Vector x = xs.head(n);
        if (l > 0) out_v.head(n) += a.transpose() * v.head(l);
        if (m > 0) {
          out_v.head(n) += f.jacobian_transpose_apply(x, v.tail(m));
          out_v.tail(m) = v.tail(m);
        }
        return out_v;
      },
      cc);

  double diameter = kInfinity;
  if (auto d = out.problem.nonsmooth.diameter()) diameter = *d;
  bool all_finite = true;
  for (double v : cc.bounds) all_finite = all_finite && std::isfinite(v);
  if (all_finite) {
    out.problem.constants = ConstantsLedger::from(original.b0, cc, diameter);
  } else {
    out.problem.constants.b0 = original.b0;
    out.problem.constants.diameter = diameter;
    out.problem.constants.b_i = cc.bounds;
  }
  out.problem.initial_point = Vector(n + m);
  out.problem.initial_point << x0, s0;
  return out;
}

}  // namespace ialm
