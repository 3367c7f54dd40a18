#pragma once

// Projections, indicator functions and exact normal-cone distances for the
// sets that appear in the experiments: boxes, centered balls and the
// intersection of the nonnegative orthant with a centered ball.

#include "ialm/core.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>

namespace ialm {

struct BoxSet {
  Vector lower;
  Vector upper;

  BoxSet(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
    detail::require(lower.size() == upper.size(), "BoxSet: bound dimensions differ");
    for (Index i = 0; i < lower.size(); ++i) {
      detail::require(std::isfinite(lower[i]) && std::isfinite(upper[i]) && lower[i] <= upper[i],
                      "BoxSet: need finite l_i <= u_i");
    }
  }
  static BoxSet uniform(Index n, double lo, double hi) {
    return BoxSet(Vector::Constant(n, lo), Vector::Constant(n, hi));
  }
  Index dimension() const { return lower.size(); }
};

struct BallSet {
  double radius;
  explicit BallSet(double r) : radius(r) {
    detail::require(std::isfinite(r) && r > 0.0, "BallSet: radius must be finite and positive");
  }
};

struct NonnegBallSet {
  double radius;
  explicit NonnegBallSet(double s) : radius(s) {
    detail::require(std::isfinite(s) && s > 0.0,
                    "NonnegBallSet: radius must be finite and positive");
  }
};

namespace detail {

inline constexpr double kBoxTolerance = 1e-12;
inline constexpr double kBallRelativeTolerance = 1e-10;

inline double box_slack(double bound) { return kBoxTolerance * std::max(1.0, std::abs(bound)); }

inline bool on_ball_boundary(double norm, double radius) {
  return norm >= radius * (1.0 - kBallRelativeTolerance);
}

}  // namespace detail

inline Vector project_box(const Vector& x, const BoxSet& set) {
  detail::require_size(x, set.dimension(), "x");
  return x.cwiseMax(set.lower).cwiseMin(set.upper);
}

inline Vector project_ball(const Vector& x, const BallSet& set) {
  const double norm = x.norm();
  if (norm <= set.radius) return x;
  return (set.radius / norm) * x;
}

/// Exact projection onto {x >= 0, ||x|| <= s}: clip then rescale.
inline Vector project_nonneg_ball(const Vector& x, const NonnegBallSet& set) {
  Vector p = x.cwiseMax(0.0);
  const double norm = p.norm();
  if (norm > set.radius) p *= set.radius / norm;
  return p;
}

/// dist(v, N_box(x)). Coordinates at an upper bound absorb positive v_i,
/// coordinates at a lower bound absorb negative v_i.
inline double normal_cone_distance_box(const Vector& x, const Vector& v, const BoxSet& set) {
  detail::require_size(x, set.dimension(), "x");
  detail::require_size(v, set.dimension(), "v");
  double sum = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double lo = set.lower[i];
    const double hi = set.upper[i];
    if (x[i] < lo - detail::box_slack(lo) || x[i] > hi + detail::box_slack(hi)) {
      throw std::invalid_argument("normal_cone_distance_box: x lies outside the box");
    }
    const bool at_lower = x[i] <= lo + detail::box_slack(lo);
    const bool at_upper = x[i] >= hi - detail::box_slack(hi);
    double d = v[i];
    if (at_lower && at_upper) {
      d = 0.0;
    } else if (at_upper) {
      d = std::min(v[i], 0.0);
    } else if (at_lower) {
      d = std::max(v[i], 0.0);
    }
    sum += d * d;
  }
  return std::sqrt(sum);
}

/// dist(v, N_ball(x)): the cone is {0} inside and the ray {lambda x} on the
/// boundary.
inline double normal_cone_distance_ball(const Vector& x, const Vector& v, const BallSet& set) {
  detail::require(x.size() == v.size(), "normal_cone_distance_ball: dimension mismatch");
  const double norm = x.norm();
  if (!detail::on_ball_boundary(norm, set.radius)) return v.norm();
  const double lambda = std::max(0.0, v.dot(x) / (norm * norm));
  return (v - lambda * x).norm();
}

/// dist(v, N_C(x)) for C = R^n_+ intersected with the ball of radius s:
/// N_C(x) = N_+(x) + {lambda x : lambda >= 0} on the sphere, N_+(x) inside.
inline double normal_cone_distance_nonneg_ball(const Vector& x, const Vector& v,
                                               const NonnegBallSet& set) {
  detail::require(x.size() == v.size(), "normal_cone_distance_nonneg_ball: dimension mismatch");
  const double norm = x.norm();
  double lambda = 0.0;
  if (norm > 0.0 && detail::on_ball_boundary(norm, set.radius)) {
    double dot = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
      if (x[i] > 0.0) dot += v[i] * x[i];
    }
    lambda = std::max(0.0, dot / (norm * norm));
  }
  double sum = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    // zero coordinates absorb any nonpositive component
    const double d = x[i] > 0.0 ? v[i] - lambda * x[i] : std::max(v[i], 0.0);
    sum += d * d;
  }
  return std::sqrt(sum);
}

/// h = 0 on R^n.
inline ProxCapableFunction zero_function() {
  return ProxCapableFunction(
      ProxKind::zero, [](const Vector& x, double) { return x; }, [](const Vector&) { return 0.0; },
      [](const Vector&, const Vector& v) { return v.norm(); }, std::nullopt);
}

inline ProxCapableFunction box_indicator(BoxSet set) {
  const double diameter = (set.upper - set.lower).norm();
  auto shared = std::make_shared<const BoxSet>(std::move(set));
  return ProxCapableFunction(
      ProxKind::indicator, [shared](const Vector& x, double) { return project_box(x, *shared); },
      [shared](const Vector& x) {
        if (x.size() != shared->dimension()) return kInfinity;
        for (Index i = 0; i < x.size(); ++i) {
          if (x[i] < shared->lower[i] - detail::box_slack(shared->lower[i]) ||
              x[i] > shared->upper[i] + detail::box_slack(shared->upper[i])) {
            return kInfinity;
          }
        }
        return 0.0;
      },
      [shared](const Vector& x, const Vector& v) { return normal_cone_distance_box(x, v, *shared); },
      diameter);
}

inline ProxCapableFunction ball_indicator(BallSet set) {
  return ProxCapableFunction(
      ProxKind::indicator, [set](const Vector& x, double) { return project_ball(x, set); },
      [set](const Vector& x) {
        return x.norm() <= set.radius * (1.0 + detail::kBallRelativeTolerance) ? 0.0 : kInfinity;
      },
      [set](const Vector& x, const Vector& v) { return normal_cone_distance_ball(x, v, set); },
      2.0 * set.radius);
}

inline ProxCapableFunction nonneg_ball_indicator(NonnegBallSet set, Index dimension) {
  const double diameter = dimension >= 2 ? std::sqrt(2.0) * set.radius : set.radius;
  return ProxCapableFunction(
      ProxKind::indicator, [set](const Vector& x, double) { return project_nonneg_ball(x, set); },
      [set](const Vector& x) {
        if (x.minCoeff() < 0.0) return kInfinity;
        return x.norm() <= set.radius * (1.0 + detail::kBallRelativeTolerance) ? 0.0 : kInfinity;
      },
      [set](const Vector& x, const Vector& v) {
        return normal_cone_distance_nonneg_ball(x, v, set);
      },
      diameter);
}

/// Indicator of the nonnegative orthant (unbounded domain).
inline ProxCapableFunction nonneg_orthant_indicator() {
  return ProxCapableFunction(
      ProxKind::indicator, [](const Vector& x, double) { return x.cwiseMax(0.0).eval(); },
      [](const Vector& x) { return x.size() == 0 || x.minCoeff() >= 0.0 ? 0.0 : kInfinity; },
      [](const Vector& x, const Vector& v) {
        double sum = 0.0;
        for (Index i = 0; i < x.size(); ++i) {
          const double d = x[i] > 0.0 ? v[i] : std::max(v[i], 0.0);
          sum += d * d;
        }
        return std::sqrt(sum);
      },
      std::nullopt);
}

/// h(u, w) = first(u) + second(w) with u the leading `split` coordinates.
/// Prox, value, subdifferential distance and diameter all separate.
inline ProxCapableFunction separable_sum(ProxCapableFunction first, Index split,
                                         ProxCapableFunction second) {
  ProxKind kind = ProxKind::general;
  if (first.kind() == ProxKind::zero && second.kind() == ProxKind::zero) {
    kind = ProxKind::zero;
  } else if (first.kind() != ProxKind::general && second.kind() != ProxKind::general) {
    kind = ProxKind::indicator;
  }
  std::optional<double> diameter;
  if (first.diameter() && second.diameter()) {
    diameter = std::hypot(*first.diameter(), *second.diameter());
  }
  const bool exact = first.has_subdiff_distance() && second.has_subdiff_distance();
  auto head = [split](const Vector& x) { return x.head(split).eval(); };
  auto tail = [split](const Vector& x) { return x.tail(x.size() - split).eval(); };
  ProxCapableFunction::SubdiffDistanceFn distance;
  if (exact) {
    distance = [first, second, head, tail](const Vector& x, const Vector& v) {
      return std::hypot(*first.subdiff_distance(head(x), head(v)),
                        *second.subdiff_distance(tail(x), tail(v)));
    };
  }
  return ProxCapableFunction(
      kind,
      [first, second, head, tail, split](const Vector& x, double step) {
        Vector out(x.size());
        out.head(split) = first.prox(head(x), step);
        out.tail(x.size() - split) = second.prox(tail(x), step);
        return out;
      },
      [first, second, head, tail](const Vector& x) {
        return first.value(head(x)) + second.value(tail(x));
      },
      std::move(distance), diameter);
}

}  // namespace ialm
