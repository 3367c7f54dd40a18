#pragma once

// Seeded generators for the three experiment families (nonconvex LCQP,
// generalized eigenvalue, clustering) and CSV point loading.

#include "ialm/core.hpp"
#include "ialm/ialm.hpp"
#include "ialm/prox.hpp"
#include "ialm/random.hpp"

#include <Eigen/Eigenvalues>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ialm {

namespace detail {

/// Row-major fill so the stream index of entry (i, j) is i * cols + j.
inline Matrix gaussian_matrix(Index rows, Index cols, std::uint64_t seed, RandomStream stream) {
  CounterRng rng(seed, stream);
  Matrix out(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) out(i, j) = rng.normal();
  }
  return out;
}

inline Vector gaussian_vector(Index n, std::uint64_t seed, RandomStream stream) {
  CounterRng rng(seed, stream);
  Vector out(n);
  for (Index i = 0; i < n; ++i) out[i] = rng.normal();
  return out;
}

inline Matrix symmetrized_gaussian(Index n, std::uint64_t seed, RandomStream stream) {
  const Matrix raw = gaussian_matrix(n, n, seed, stream);
  return 0.5 * (raw + raw.transpose());
}

inline Vector symmetric_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues();
}

/// Spectral norm of a symmetric matrix.
inline double symmetric_norm(const Matrix& m) {
  const Vector ev = symmetric_eigenvalues(m);
  return std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1]));
}

inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()[0];
}

}  // namespace detail

// ---------------------------------------------------------------------------
// LCQP: min 1/2 x^T Q x + c^T x  s.t.  Ax = b, l <= x <= u

struct LcqpInstance {
  Index m = 0;
  Index n = 0;
  double rho = 1.0;
  std::uint64_t seed = 0;
  Matrix q;
  Vector c;
  Matrix a;
  Vector b;
  Vector lower;
  Vector upper;
  Vector x_hat;
};

inline LcqpInstance generate_lcqp(Index m, Index n, double rho, std::uint64_t seed,
                                  double bound = 5.0) {
  detail::require(m >= 1 && n >= 1, "gen_lcqp: sizes must be positive");
  detail::require(m < n, "gen_lcqp: need m < n");
  detail::require(rho > 0.0 && std::isfinite(rho), "gen_lcqp: rho must be positive");
  detail::require(bound > 0.0, "gen_lcqp: box bound must be positive");
  LcqpInstance inst;
  inst.m = m;
  inst.n = n;
  inst.rho = rho;
  inst.seed = seed;
  Matrix q = detail::symmetrized_gaussian(n, seed, RandomStream::q);
  const double lambda_min = detail::symmetric_eigenvalues(q)[0];
  q.diagonal().array() -= lambda_min + rho;
  inst.q = std::move(q);
  inst.a = detail::gaussian_matrix(m, n, seed, RandomStream::a);
  inst.c = detail::gaussian_vector(n, seed, RandomStream::c);
  CounterRng xr(seed, RandomStream::x_hat);
  inst.x_hat.resize(n);
  for (Index i = 0; i < n; ++i) inst.x_hat[i] = xr.uniform(-0.5 * bound, 0.5 * bound);
  inst.b = inst.a * inst.x_hat;
  inst.lower = Vector::Constant(n, -bound);
  inst.upper = Vector::Constant(n, bound);
  return inst;
}

/// B_i = max{ max over the box of |a_i^T x - b_i|, ||a_i|| }. The extremes of
/// a_i^T x over a box are attained coordinatewise by the sign pattern of a_i.
inline std::vector<double> lcqp_constraint_bounds(const Matrix& a, const Vector& b,
                                                  const Vector& lower, const Vector& upper) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(a.rows()));
  for (Index i = 0; i < a.rows(); ++i) {
    double hi = 0.0;
    double lo = 0.0;
    for (Index j = 0; j < a.cols(); ++j) {
      const double p = a(i, j) * lower[j];
      const double r = a(i, j) * upper[j];
      hi += std::max(p, r);
      lo += std::min(p, r);
    }
    const double span = std::max(hi - b[i], b[i] - lo);
    out.push_back(std::max(span, a.row(i).norm()));
  }
  return out;
}

inline ProblemSpec lcqp_problem(const LcqpInstance& inst) {
  const Matrix q = inst.q;
  const Vector c = inst.c;
  const double q_norm = detail::symmetric_norm(q);
  ProblemSpec p;
  p.smooth = SmoothOracle([q, c](const Vector& x) { return 0.5 * x.dot(q * x) + c.dot(x); },
                          [q, c](const Vector& x) { return (q * x + c).eval(); }, q_norm, inst.rho);
  p.nonsmooth = box_indicator(BoxSet(inst.lower, inst.upper));

  const Matrix a = inst.a;
  const Vector b = inst.b;
  ConstraintConstants cc;
  cc.bounds = lcqp_constraint_bounds(a, b, inst.lower, inst.upper);
  cc.smoothness.assign(cc.bounds.size(), 0.0);
  cc.weak_convexity.assign(cc.bounds.size(), 0.0);
  cc.jacobian_bound = detail::spectral_norm(a);
  p.constraints = ConstraintOracle(
      a.rows(), [a, b](const Vector& x) { return (a * x - b).eval(); },
      [a](const Vector&, const Vector& v) { return (a.transpose() * v).eval(); }, cc);

  // sup over the box of |f0| and ||grad g|| through R = max ||x||
  const double radius = inst.lower.cwiseAbs().cwiseMax(inst.upper.cwiseAbs()).norm();
  const double c_norm = c.norm();
  const double b0 = std::max(0.5 * q_norm * radius * radius + c_norm * radius,
                             q_norm * radius + c_norm);
  p.constants = ConstantsLedger::from(b0, cc, (inst.upper - inst.lower).norm());
  p.initial_point = Vector::Zero(inst.n).cwiseMax(inst.lower).cwiseMin(inst.upper);
  return p;
}

inline ProblemSpec gen_lcqp(Index m, Index n, double rho, std::uint64_t seed) {
  return lcqp_problem(generate_lcqp(m, n, rho, seed));
}

/// (rho, ||Q + beta A^T A||): the exact curvature of the LCQP augmented
/// Lagrangian. Much tighter than the ledger schedule, whose L_c = sum B_i^2
/// scales with the box.
inline CurvatureSchedule lcqp_exact_schedule(const LcqpInstance& inst) {
  const Matrix q = inst.q;
  const Matrix ata = inst.a.transpose() * inst.a;
  const double rho = inst.rho;
  return [q, ata, rho](double beta, double) {
    return Curvature{rho, detail::symmetric_norm(q + beta * ata)};
  };
}

// ---------------------------------------------------------------------------
// Generalized eigenvalue: min x^T Q x  s.t.  x^T B x = 1

struct EvInstance {
  Index n = 0;
  std::uint64_t seed = 0;
  Matrix q;
  Matrix b;
  Vector x0;
  double q_norm = 0.0;
  double q_lambda_min = 0.0;
  double b_norm = 0.0;
};

inline EvInstance generate_ev(Index n, std::uint64_t seed) {
  detail::require(n >= 2, "gen_ev: need n >= 2");
  EvInstance inst;
  inst.n = n;
  inst.seed = seed;
  inst.q = detail::symmetrized_gaussian(n, seed, RandomStream::q);
  Matrix b = detail::symmetrized_gaussian(n, seed, RandomStream::b);
  const double b_bar_norm = detail::symmetric_norm(b);
  b.diagonal().array() += b_bar_norm + 1.0;
  inst.b = std::move(b);
  const Vector q_eig = detail::symmetric_eigenvalues(inst.q);
  inst.q_lambda_min = q_eig[0];
  inst.q_norm = std::max(std::abs(q_eig[0]), std::abs(q_eig[n - 1]));
  inst.b_norm = detail::symmetric_norm(inst.b);
  // point on the unit sphere rescaled so that x0^T B x0 = 2, i.e. c(x0) = 1
  Vector u = detail::gaussian_vector(n, seed, RandomStream::x0);
  u /= u.norm();
  inst.x0 = u * std::sqrt(2.0 / u.dot(inst.b * u));
  return inst;
}

inline ProblemSpec ev_problem(const EvInstance& inst) {
  const Matrix q = inst.q;
  const Matrix b = inst.b;
  ProblemSpec p;
  p.smooth = SmoothOracle([q](const Vector& x) { return x.dot(q * x); },
                          [q](const Vector& x) { return (2.0 * (q * x)).eval(); }, 2.0 * inst.q_norm,
                          std::max(0.0, -2.0 * inst.q_lambda_min));
  p.nonsmooth = zero_function();
  ConstraintConstants cc;
  cc.smoothness = {2.0 * inst.b_norm};
  cc.weak_convexity = {0.0};
  cc.bounds = {kInfinity};
  cc.jacobian_bound = kInfinity;
  p.constraints = ConstraintOracle(
      1,
      [b](const Vector& x) {
        Vector c(1);
        c[0] = x.dot(b * x) - 1.0;
        return c;
      },
      [b](const Vector& x, const Vector& v) { return (2.0 * v[0] * (b * x)).eval(); }, cc);
  // no compact domain: every ledger entry stays +inf
  p.constants = ConstantsLedger{};
  p.constants.b_i = cc.bounds;
  p.initial_point = inst.x0;
  return p;
}

inline ProblemSpec gen_ev(Index n, std::uint64_t seed) { return ev_problem(generate_ev(n, seed)); }

/// Tunable curvature schedule rho-hat = rho_base + rho_beta beta + y_factor ||y||,
/// L-hat = l_base + l_beta beta + y_factor ||y||.
struct AffineSchedule {
  double rho_base = 0.0;
  double rho_beta = 0.0;
  double l_base = 0.0;
  double l_beta = 0.0;
  double y_factor = 0.0;

  CurvatureSchedule schedule() const {
    const AffineSchedule s = *this;
    return [s](double beta, double y_norm) {
      return Curvature{s.rho_base + s.rho_beta * beta + s.y_factor * y_norm,
                       s.l_base + s.l_beta * beta + s.y_factor * y_norm};
    };
  }
};

/// Default EV tuning, a shape tuned for n = 200:
/// rho = -0.2 lambda_min(Q) + beta, L = 2||Q|| + 1000 + 100 beta. This is not a
/// certified bound (the quartic penalty has no global Lipschitz gradient); the
/// reported dres is still measured exactly, so certificates stay honest.
/// ev_safe_tuning gives the globally valid weak-convexity bound instead.
inline AffineSchedule ev_default_tuning(const EvInstance& inst) {
  AffineSchedule s;
  s.rho_base = std::max(0.0, -0.2 * inst.q_lambda_min);
  s.rho_beta = 1.0;
  s.l_base = 2.0 * inst.q_norm + 1000.0;
  s.l_beta = 100.0;
  s.y_factor = 0.0;
  return s;
}

/// Hessian of the AL part is 2Q + 2yB + beta(2 c(x) B + 4 B x x^T B); since
/// x^T B x >= 0 the beta term is >= -2 beta B, so rho below is a global bound.
/// The smoothness part keeps the tuned offset.
inline AffineSchedule ev_safe_tuning(const EvInstance& inst) {
  AffineSchedule s;
  s.rho_base = std::max(0.0, -2.0 * inst.q_lambda_min);
  s.rho_beta = 2.0 * inst.b_norm;
  s.l_base = 2.0 * inst.q_norm + 1000.0;
  s.l_beta = 100.0;
  s.y_factor = 2.0 * inst.b_norm;
  return s;
}

// ---------------------------------------------------------------------------
// Clustering: min sum_ij D_ij <x_i, x_j>  s.t.  x_i^T sum_j x_j = 1,  X in C

struct ClusteringInstance {
  Matrix d;
  Index r = 1;
  double s = 1.0;
  double d_norm = 0.0;
  double d_lambda_min = 0.0;
};

inline Matrix distance_matrix(const Matrix& points) {
  const Index n = points.rows();
  Matrix d = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double v = (points.row(i) - points.row(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

inline ClusteringInstance make_clustering(const Matrix& points, Index r, double s) {
  detail::require(points.rows() >= 2, "gen_clustering: need at least two points");
  detail::require(r >= 1, "gen_clustering: r must be at least 1");
  detail::require(s > 0.0 && std::isfinite(s), "gen_clustering: s must be positive");
  detail::require(points.allFinite(), "gen_clustering: points contain NaN or Inf");
  ClusteringInstance inst;
  inst.d = distance_matrix(points);
  inst.r = r;
  inst.s = s;
  const Vector ev = detail::symmetric_eigenvalues(inst.d);
  inst.d_lambda_min = ev[0];
  inst.d_norm = std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1]));
  return inst;
}

/// Row-major view of the flattened n x r variable.
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<const RowMajorMatrix> as_matrix(const Vector& x, Index n, Index r) {
  return Eigen::Map<const RowMajorMatrix>(x.data(), n, r);
}

inline Vector clustering_initial_point(Index n, Index r, double s, std::uint64_t seed) {
  CounterRng rng(seed, RandomStream::x0);
  Vector x(n * r);
  for (Index i = 0; i < x.size(); ++i) x[i] = rng.uniform();
  x *= std::min(1.0, s) / x.norm();
  return x;
}

inline ProblemSpec clustering_problem(const ClusteringInstance& inst, std::uint64_t seed = 0) {
  const Matrix d = inst.d;
  const Index n = d.rows();
  const Index r = inst.r;
  ProblemSpec p;
  p.smooth = SmoothOracle(
      [d, n, r](const Vector& x) {
        const auto xm = as_matrix(x, n, r);
        return (xm.transpose() * d * xm).trace();
      },
      [d, n, r](const Vector& x) {
        const auto xm = as_matrix(x, n, r);
        RowMajorMatrix g = 2.0 * (d * xm);
        return Vector(Eigen::Map<const Vector>(g.data(), g.size()));
      },
      2.0 * inst.d_norm, std::max(0.0, -2.0 * inst.d_lambda_min));
  p.nonsmooth = nonneg_ball_indicator(NonnegBallSet(inst.s), n * r);
  ConstraintConstants cc;
  cc.smoothness.assign(static_cast<std::size_t>(n), kInfinity);
  cc.weak_convexity.assign(static_cast<std::size_t>(n), kInfinity);
  cc.bounds.assign(static_cast<std::size_t>(n), kInfinity);
  cc.jacobian_bound = kInfinity;
  p.constraints = ConstraintOracle(
      n,
      [n, r](const Vector& x) {
        const auto xm = as_matrix(x, n, r);
        const Eigen::RowVectorXd total = xm.colwise().sum();
        return Vector((xm * total.transpose()).array() - 1.0);
      },
      [n, r](const Vector& x, const Vector& v) {
        const auto xm = as_matrix(x, n, r);
        const Eigen::RowVectorXd total = xm.colwise().sum();
        // row k of J^T v is v_k S + X^T v
        RowMajorMatrix out = v * total;
        out.rowwise() += (xm.transpose() * v).transpose();
        return Vector(Eigen::Map<const Vector>(out.data(), out.size()));
      },
      cc);
  p.constants = ConstantsLedger{};
  p.constants.b_i = cc.bounds;
  p.constants.diameter = *p.nonsmooth.diameter();
  p.initial_point = clustering_initial_point(n, r, inst.s, seed);
  return p;
}

inline ProblemSpec gen_clustering(const Matrix& points, Index r, double s, std::uint64_t seed = 0) {
  return clustering_problem(make_clustering(points, r, s), seed);
}

/// Tuned shape: L = 80 ||D|| + 1200 beta, rho = -0.2 r lambda_min(D) beta.
inline AffineSchedule clustering_default_tuning(const ClusteringInstance& inst) {
  AffineSchedule s;
  s.l_base = 80.0 * inst.d_norm;
  s.l_beta = 1200.0;
  s.rho_beta = std::max(0.0, -0.2 * static_cast<double>(inst.r) * inst.d_lambda_min);
  s.rho_base = 1e-3;  // keeps rho-hat positive when D is PSD
  return s;
}

/// Gaussian blobs: `clusters` centers with spread 3, unit noise around them.
inline Matrix synthetic_points(Index n, Index dim, Index clusters, std::uint64_t seed) {
  detail::require(n >= 2 && dim >= 1 && clusters >= 1, "synthetic_points: invalid sizes");
  CounterRng rng(seed, RandomStream::points);
  Matrix centers(clusters, dim);
  for (Index i = 0; i < clusters; ++i) {
    for (Index j = 0; j < dim; ++j) centers(i, j) = 3.0 * rng.normal();
  }
  Matrix out(n, dim);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < dim; ++j) out(i, j) = centers(i % clusters, j) + rng.normal();
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV points

class CsvParseError : public std::runtime_error {
 public:
  CsvParseError(const std::string& path, std::size_t line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline bool parse_double(const std::string& cell, double& out) {
  const std::string t = trim(cell);
  if (t.empty()) return false;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size() && std::isfinite(out);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace detail

/// Numeric rectangular CSV; a non-numeric first row is treated as a header.
inline Matrix load_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    std::vector<double> values;
    values.reserve(cells.size());
    bool numeric = true;
    for (const auto& c : cells) {
      double v = 0.0;
      if (!detail::parse_double(c, v)) {
        numeric = false;
        break;
      }
      values.push_back(v);
    }
    if (first) {
      first = false;
      if (!numeric) continue;  // header
    }
    if (!numeric) throw CsvParseError(path, line_no, "non-numeric cell");
    if (width == 0) width = values.size();
    if (values.size() != width) {
      throw CsvParseError(path, line_no,
                          "expected " + std::to_string(width) + " cells, found " +
                              std::to_string(values.size()));
    }
    rows.push_back(std::move(values));
  }
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      out(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return out;
}

}  // namespace ialm
