#pragma once

// Problem abstractions shared by every solver layer: oracles for the smooth
// objective g, the prox-capable nonsmooth part h and the equality constraints
// c, the constants ledger, and the augmented Lagrangian / KKT measurements.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ialm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Raised when an oracle produces NaN/Inf.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

inline void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw std::invalid_argument(std::string(what) + " contains NaN or Inf");
}

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " is not finite");
}

inline void require_size(const Vector& v, Index n, const char* what) {
  if (v.size() != n) {
    throw std::invalid_argument(std::string(what) + " has dimension " + std::to_string(v.size()) +
                                ", expected " + std::to_string(n));
  }
}

inline double check_oracle(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalError(std::string(what) + " returned a non-finite value");
  return v;
}

inline const Vector& check_oracle(const Vector& v, const char* what) {
  if (!v.allFinite()) throw NumericalError(std::string(what) + " returned a non-finite vector");
  return v;
}

}  // namespace detail

/// Oracle call counts. #Grad counts smooth-part gradient evaluations (one
/// gradient of g plus one Jacobian-transpose product count as one), #Obj
/// counts value evaluations.
struct EvalCounters {
  std::size_t objective = 0;
  std::size_t gradient = 0;

  EvalCounters& operator+=(const EvalCounters& other) {
    objective += other.objective;
    gradient += other.gradient;
    return *this;
  }
};

/// Smooth function with known smoothness L and weak-convexity rho.
class SmoothOracle {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;

  SmoothOracle() = default;
  SmoothOracle(ValueFn value, GradientFn gradient, double smoothness, double weak_convexity)
      : value_(std::move(value)),
        gradient_(std::move(gradient)),
        smoothness_(smoothness),
        weak_convexity_(weak_convexity) {
    detail::require(static_cast<bool>(value_) && static_cast<bool>(gradient_),
                    "SmoothOracle needs both value and gradient callables");
    detail::require(smoothness_ >= 0.0, "smoothness must be nonnegative");
    detail::require(weak_convexity_ >= 0.0, "weak convexity must be nonnegative");
  }

  double value(const Vector& x) const { return value_(x); }
  Vector gradient(const Vector& x) const { return gradient_(x); }
  double smoothness() const { return smoothness_; }
  double weak_convexity() const { return weak_convexity_; }
  explicit operator bool() const { return static_cast<bool>(value_); }

 private:
  ValueFn value_;
  GradientFn gradient_;
  double smoothness_ = 0.0;
  double weak_convexity_ = 0.0;
};

/// Wraps any smooth oracle and counts its calls. Each solve owns its own
/// wrapper so a shared oracle never carries mutable state.
template <class Oracle>
class Counted {
 public:
  explicit Counted(const Oracle& oracle) : oracle_(&oracle) {}

  double value(const Vector& x) const {
    ++counters_.objective;
    return oracle_->value(x);
  }
  Vector gradient(const Vector& x) const {
    ++counters_.gradient;
    return oracle_->gradient(x);
  }
  const EvalCounters& counters() const { return counters_; }

 private:
  const Oracle* oracle_;
  mutable EvalCounters counters_;
};

/// Geometry class of the nonsmooth part. For indicators dh(x)/beta = N_X(x)
/// for every beta > 0, which the regularity estimator relies on.
enum class ProxKind { zero, indicator, general };

/// Closed convex h with a computable proximal map.
class ProxCapableFunction {
 public:
  /// prox(x, t) = argmin_u h(u) + ||u - x||^2 / (2 t)
  using ProxFn = std::function<Vector(const Vector&, double)>;
  using ValueFn = std::function<double(const Vector&)>;
  /// Exact dist(v, dh(x)) for x in dom(h).
  using SubdiffDistanceFn = std::function<double(const Vector&, const Vector&)>;

  ProxCapableFunction() = default;
  ProxCapableFunction(ProxKind kind, ProxFn prox, ValueFn value, SubdiffDistanceFn subdiff_distance,
                      std::optional<double> diameter)
      : kind_(kind),
        prox_(std::move(prox)),
        value_(std::move(value)),
        subdiff_distance_(std::move(subdiff_distance)),
        diameter_(diameter) {
    detail::require(static_cast<bool>(prox_) && static_cast<bool>(value_),
                    "ProxCapableFunction needs prox and value callables");
    if (diameter_) detail::require(*diameter_ >= 0.0, "domain diameter must be nonnegative");
  }

  Vector prox(const Vector& x, double step) const { return prox_(x, step); }
  double value(const Vector& x) const { return value_(x); }
  bool has_subdiff_distance() const { return static_cast<bool>(subdiff_distance_); }
  std::optional<double> subdiff_distance(const Vector& x, const Vector& v) const {
    if (!subdiff_distance_) return std::nullopt;
    return subdiff_distance_(x, v);
  }
  /// nullopt when the domain is unbounded.
  std::optional<double> diameter() const { return diameter_; }
  ProxKind kind() const { return kind_; }
  bool in_domain(const Vector& x) const { return std::isfinite(value_(x)); }

  /// Same function with the exact distance removed, so callers fall back to
  /// the certified surrogate.
  ProxCapableFunction without_subdiff_distance() const {
    ProxCapableFunction copy = *this;
    copy.subdiff_distance_ = nullptr;
    return copy;
  }

 private:
  ProxKind kind_ = ProxKind::general;
  ProxFn prox_;
  ValueFn value_;
  SubdiffDistanceFn subdiff_distance_;
  std::optional<double> diameter_;
};

/// Per-component constants of c_j: L_j-smooth, rho_j-weakly convex, and
/// B_j >= max over dom(h) of max{|c_j(x)|, ||grad c_j(x)||}.
struct ConstraintConstants {
  std::vector<double> smoothness;
  std::vector<double> weak_convexity;
  std::vector<double> bounds;
  double jacobian_bound = 0.0;  // B_c >= max ||J_c(x)||
};

/// Equality constraints c: R^n -> R^l accessed matrix-free.
class ConstraintOracle {
 public:
  using EvalFn = std::function<Vector(const Vector&)>;
  /// (x, v) -> J_c(x)^T v
  using JacobianTransposeFn = std::function<Vector(const Vector&, const Vector&)>;

  ConstraintOracle() = default;
  ConstraintOracle(Index count, EvalFn evaluate, JacobianTransposeFn jacobian_transpose,
                   ConstraintConstants constants = {})
      : count_(count),
        evaluate_(std::move(evaluate)),
        jacobian_transpose_(std::move(jacobian_transpose)),
        constants_(std::move(constants)) {
    detail::require(count_ >= 0, "constraint count must be nonnegative");
    detail::require(static_cast<bool>(evaluate_) && static_cast<bool>(jacobian_transpose_),
                    "ConstraintOracle needs evaluate and jacobian_transpose callables");
  }

  /// Zero constraints on R^n.
  static ConstraintOracle none(Index dimension) {
    return ConstraintOracle(
        0, [](const Vector&) { return Vector(0); },
        [dimension](const Vector&, const Vector&) { return Vector::Zero(dimension).eval(); });
  }

  Index count() const { return count_; }
  Vector evaluate(const Vector& x) const { return evaluate_(x); }
  Vector jacobian_transpose_apply(const Vector& x, const Vector& v) const {
    return jacobian_transpose_(x, v);
  }
  const ConstraintConstants& constants() const { return constants_; }

 private:
  Index count_ = 0;
  EvalFn evaluate_;
  JacobianTransposeFn jacobian_transpose_;
  ConstraintConstants constants_;
};

struct AggregateConstants {
  double bar_b_c = 0.0;  // sqrt(sum B_i^2)
  double bar_l = 0.0;    // sqrt(sum L_i^2)
  double rho_c = 0.0;    // sum B_i rho_i
  double l_c = 0.0;      // sum (B_i L_i + B_i^2)
};

inline AggregateConstants aggregate_constants(const std::vector<double>& bounds,
                                              const std::vector<double>& smoothness,
                                              const std::vector<double>& weak_convexity) {
  detail::require(bounds.size() == smoothness.size() && bounds.size() == weak_convexity.size(),
                  "aggregate_constants: sequences must have equal length");
  AggregateConstants out;
  double sum_b2 = 0.0;
  double sum_l2 = 0.0;
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    const double b = bounds[i];
    const double l = smoothness[i];
    const double r = weak_convexity[i];
    detail::require(b >= 0.0 && l >= 0.0 && r >= 0.0,
                    "aggregate_constants: constants must be nonnegative");
    sum_b2 += b * b;
    sum_l2 += l * l;
    out.rho_c += b * r;
    out.l_c += b * l + b * b;
  }
  out.bar_b_c = std::sqrt(sum_b2);
  out.bar_l = std::sqrt(sum_l2);
  return out;
}

/// Constants used by the curvature schedule and by the diagnostics. Any entry
/// may be +inf when the quantity is unbounded (no compact domain).
struct ConstantsLedger {
  double b0 = kInfinity;   // max over dom(h) of max{|f0|, ||grad g||}
  double b_c = kInfinity;  // max ||J_c||
  std::vector<double> b_i;
  double bar_b_c = kInfinity;
  double bar_l = kInfinity;
  double rho_c = kInfinity;
  double l_c = kInfinity;
  double diameter = kInfinity;

  static ConstantsLedger from(double b0, const ConstraintConstants& cc, double diameter) {
    ConstantsLedger ledger;
    ledger.b0 = b0;
    ledger.b_c = cc.jacobian_bound;
    ledger.b_i = cc.bounds;
    const AggregateConstants agg = aggregate_constants(cc.bounds, cc.smoothness, cc.weak_convexity);
    ledger.bar_b_c = agg.bar_b_c;
    ledger.bar_l = agg.bar_l;
    ledger.rho_c = agg.rho_c;
    ledger.l_c = agg.l_c;
    ledger.diameter = diameter;
    return ledger;
  }
};

/// One instance of min g(x) + h(x) s.t. c(x) = 0.
struct ProblemSpec {
  SmoothOracle smooth;
  ProxCapableFunction nonsmooth;
  ConstraintOracle constraints;
  ConstantsLedger constants;
  Vector initial_point;

  Index dimension() const { return initial_point.size(); }
  Index constraint_count() const { return constraints.count(); }

  void validate() const {
    detail::require(static_cast<bool>(smooth), "ProblemSpec: smooth oracle missing");
    detail::require_finite(initial_point, "initial point");
    detail::require(nonsmooth.in_domain(initial_point),
                    "ProblemSpec: initial point is outside dom(h)");
  }
};

/// Curvature parameters of one augmented-Lagrangian subproblem.
struct Curvature {
  double weak_convexity = 0.0;  // rho-hat
  double smoothness = 0.0;      // L-hat
};

/// rho-hat = rho0 + L-bar ||y|| + beta rho_c,  L-hat = L0 + L-bar ||y|| + beta L_c.
inline Curvature al_curvature_params(double beta, double y_norm, const ConstantsLedger& constants,
                                     double l0, double rho0) {
  detail::require(beta > 0.0, "beta must be positive");
  detail::require(y_norm >= 0.0 && l0 >= 0.0 && rho0 >= 0.0,
                  "curvature inputs must be nonnegative");
  // 0 * inf must not turn into NaN when one factor vanishes.
  const double y_term = (constants.bar_l == 0.0 || y_norm == 0.0) ? 0.0 : constants.bar_l * y_norm;
  Curvature out;
  out.weak_convexity = rho0 + y_term + beta * constants.rho_c;
  out.smoothness = l0 + y_term + beta * constants.l_c;
  return out;
}

namespace detail {

inline void check_al_inputs(const Vector& x, const Vector& y, double beta,
                            const ProblemSpec& problem) {
  require(beta > 0.0, "beta must be positive");
  require_size(x, problem.dimension(), "x");
  require_size(y, problem.constraint_count(), "y");
  require_finite(x, "x");
  require_finite(y, "y");
}

}  // namespace detail

/// L_beta(x, y) = g(x) + h(x) + y^T c(x) + (beta/2) ||c(x)||^2.
inline double al_value(const Vector& x, const Vector& y, double beta, const ProblemSpec& problem,
                       EvalCounters* counters = nullptr) {
  detail::check_al_inputs(x, y, beta, problem);
  if (counters) ++counters->objective;
  const Vector c = problem.constraints.evaluate(x);
  const double value = problem.smooth.value(x) + problem.nonsmooth.value(x) + y.dot(c) +
                       0.5 * beta * c.squaredNorm();
  if (std::isnan(value) || value == -kInfinity) {
    throw NumericalError("augmented Lagrangian value is not finite (oracle overflow)");
  }
  return value;
}

/// grad g(x) + J_c(x)^T (y + beta c(x)).
inline Vector al_gradient_smooth(const Vector& x, const Vector& y, double beta,
                                 const ProblemSpec& problem, EvalCounters* counters = nullptr) {
  detail::check_al_inputs(x, y, beta, problem);
  if (counters) ++counters->gradient;
  const Vector c = problem.constraints.evaluate(x);
  Vector grad = problem.smooth.gradient(x);
  if (c.size() > 0) {
    grad += problem.constraints.jacobian_transpose_apply(x, y + beta * c);
  }
  detail::check_oracle(grad, "augmented Lagrangian gradient");
  return grad;
}

/// The smooth part phi = L_beta(., y) - h of one outer iteration, as an oracle.
class AugmentedLagrangianSmooth {
 public:
  AugmentedLagrangianSmooth(const ProblemSpec& problem, Vector y, double beta)
      : problem_(&problem), y_(std::move(y)), beta_(beta) {}

  double value(const Vector& x) const {
    const Vector c = problem_->constraints.evaluate(x);
    return detail::check_oracle(problem_->smooth.value(x) + y_.dot(c) + 0.5 * beta_ * c.squaredNorm(),
                                "augmented Lagrangian value");
  }

  Vector gradient(const Vector& x) const {
    Vector grad = problem_->smooth.gradient(x);
    if (problem_->constraint_count() > 0) {
      const Vector c = problem_->constraints.evaluate(x);
      grad += problem_->constraints.jacobian_transpose_apply(x, y_ + beta_ * c);
    }
    detail::check_oracle(grad, "augmented Lagrangian gradient");
    return grad;
  }

 private:
  const ProblemSpec* problem_;
  Vector y_;
  double beta_;
};

/// dist(v, dh(x)) measured exactly when h provides it, otherwise bounded by
/// ||v - e|| for a known subgradient e in dh(x). Without either the distance
/// cannot be certified and +inf is returned.
struct StationarityMeasure {
  double value = kInfinity;
  bool is_upper_bound = true;
};

inline StationarityMeasure measure_stationarity(const ProxCapableFunction& h, const Vector& x,
                                                const Vector& v,
                                                const Vector* subgradient_witness = nullptr) {
  if (auto exact = h.subdiff_distance(x, v)) return {*exact, false};
  if (subgradient_witness) return {(v - *subgradient_witness).norm(), true};
  return {kInfinity, true};
}

/// (||c(x)||, dist(0, df0(x) + J_c(x)^T y)) of the eps-KKT definition.
struct KktResidual {
  double pres = 0.0;
  double dres = 0.0;
  bool dres_is_upper_bound = false;
};

/// Measures the KKT residual at (x, y). `subgradient_witness`, when given,
/// must be an element of dh(x); it is only used if h has no exact distance.
inline KktResidual kkt_residual(const Vector& x, const Vector& y, const ProblemSpec& problem,
                                const Vector* subgradient_witness = nullptr,
                                EvalCounters* counters = nullptr) {
  detail::require_size(x, problem.dimension(), "x");
  detail::require_size(y, problem.constraint_count(), "y");
  detail::require_finite(x, "x");
  detail::require_finite(y, "y");
  if (counters) ++counters->gradient;
  const Vector c = problem.constraints.evaluate(x);
  Vector grad = problem.smooth.gradient(x);
  if (c.size() > 0) grad += problem.constraints.jacobian_transpose_apply(x, y);
  const StationarityMeasure m =
      measure_stationarity(problem.nonsmooth, x, (-grad).eval(), subgradient_witness);
  return {c.norm(), m.value, m.is_upper_bound};
}

}  // namespace ialm
