#include "ialm/ippm.hpp"
#include "ialm/prox.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace ialm;
using ialm::testing::vec;

namespace {

/// Independent dist(0, grad phi(x) + d psi(x)).
double recomputed_stationarity(const SmoothOracle& phi, const ProxCapableFunction& psi,
                               const Vector& x) {
  return *psi.subdiff_distance(x, -phi.gradient(x));
}

}  // namespace

TEST(Ippm, StationaryStartStopsAfterOneIteration) {
  const SmoothOracle phi = ialm::testing::quadratic(Matrix::Identity(2, 2), Vector::Zero(2), 1, 0);
  const IppmResult r = ippm_solve(phi, zero_function(), Vector::Zero(2), 1.0, 1.0, 1e-6);
  ASSERT_TRUE(r.converged());
  EXPECT_EQ(r.outer_iterations, 1u);
  EXPECT_EQ(r.x, Vector::Zero(2));
}

TEST(Ippm, ConcaveOnIntervalReachesBoundaryKktPoint) {
  // phi = -x^2 / 2 on [-1, 1]: KKT points -1, 0, 1; from 0.5 the descent path ends at 1
  const SmoothOracle phi =
      ialm::testing::quadratic(-Matrix::Identity(1, 1), Vector::Zero(1), 1.0, 1.0);
  const ProxCapableFunction psi = box_indicator(BoxSet(vec({-1.0}), vec({1.0})));
  const double eps = 1e-6;
  const IppmResult r = ippm_solve(phi, psi, vec({0.5}), 1.0, 1.0, eps);
  ASSERT_TRUE(r.converged());
  EXPECT_NEAR(r.x[0], 1.0, 1e-12);
  EXPECT_EQ(recomputed_stationarity(phi, psi, r.x), 0.0);
  EXPECT_LE(r.stationarity, eps);
}

TEST(IppmIterationBound, HandEvaluation) {
  EXPECT_EQ(ippm_iteration_bound(1.0, 0.1, 1.0), 3200u);
  EXPECT_EQ(ippm_iteration_bound(2.0, 1.0, 0.0), 0u);
  EXPECT_THROW(ippm_iteration_bound(0.0, 1.0, 1.0), std::invalid_argument);
}

TEST(Ippm, MonotoneProximalDescent) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    // nonconvex quadratic with lambda_min = -rho on a box
    Matrix q = ialm::testing::random_matrix(6, 6, rng);
    q = (0.5 * (q + q.transpose())).eval();
    const Eigen::SelfAdjointEigenSolver<Matrix> es(q);
    const double rho = 1.0;
    q.diagonal().array() -= es.eigenvalues()[0] + rho;
    const double l = Eigen::SelfAdjointEigenSolver<Matrix>(q).eigenvalues().cwiseAbs().maxCoeff();
    const SmoothOracle phi =
        ialm::testing::quadratic(q, ialm::testing::random_vector(6, rng), l, rho);
    const ProxCapableFunction psi = box_indicator(BoxSet::uniform(6, -2.0, 2.0));
    const double eps = 1e-4;
    IppmOptions opts;
    opts.record_trace = true;
    const IppmResult r = ippm_solve(phi, psi, Vector::Zero(6), rho, l, eps, opts);
    ASSERT_TRUE(r.converged()) << r.message;
    ASSERT_EQ(r.objective_trace.size(), r.outer_iterations + 1);
    const double slack = (eps / 4.0) * (eps / 4.0) / (2.0 * rho);
    for (std::size_t k = 0; k + 1 < r.objective_trace.size(); ++k) {
      EXPECT_LE(r.objective_trace[k + 1] + rho * r.step_norms[k] * r.step_norms[k],
                r.objective_trace[k] + slack + 1e-12 * std::abs(r.objective_trace[k]))
          << "trial " << trial << " k " << k;
    }
    EXPECT_LE(recomputed_stationarity(phi, psi, r.x), eps);
  }
}

TEST(Ippm, OuterIterationsWithinIterationBound) {
  // phi = -x^2 / 2 on [-1, 1]: Phi* = -1/2, known exactly
  const SmoothOracle phi =
      ialm::testing::quadratic(-Matrix::Identity(1, 1), Vector::Zero(1), 1.0, 1.0);
  const ProxCapableFunction psi = box_indicator(BoxSet(vec({-1.0}), vec({1.0})));
  for (double x0 : {0.05, 0.3, -0.7, 0.99}) {
    for (double eps : {1e-2, 1e-4}) {
      const IppmResult r = ippm_solve(phi, psi, vec({x0}), 1.0, 1.0, eps);
      ASSERT_TRUE(r.converged());
      const double gap = phi.value(vec({x0})) + 0.5;
      EXPECT_LE(r.outer_iterations, std::max<std::size_t>(1, ippm_iteration_bound(1.0, eps, gap)));
    }
  }
}

TEST(Ippm, StallGuardReportsUnderestimatedCurvature) {
  // phi = 50 x^2 but the caller claims L = 1: APG oscillates between the box
  // ends and never certifies, so the guard aborts with a diagnostic
  const SmoothOracle phi =
      ialm::testing::quadratic(100.0 * Matrix::Identity(1, 1), Vector::Zero(1), 1.0, 0.0);
  const ProxCapableFunction psi = box_indicator(BoxSet(vec({-1.0}), vec({1.0})));
  const IppmResult r = ippm_solve(phi, psi, vec({0.9}), 0.1, 1.0, 1e-6);
  EXPECT_EQ(r.status, IppmStatus::stalled);
  EXPECT_NE(r.message.find("increase rho"), std::string::npos);
}

TEST(Ippm, InnerLimitWithoutBoundedDomain) {
  const SmoothOracle phi =
      ialm::testing::quadratic(100.0 * Matrix::Identity(1, 1), Vector::Zero(1), 1.0, 0.0);
  IppmOptions opts;
  opts.max_inner = 50;
  const IppmResult r = ippm_solve(phi, zero_function(), vec({0.9}), 0.1, 1.0, 1e-6, opts);
  EXPECT_EQ(r.status, IppmStatus::inner_max_iterations);
  EXPECT_FALSE(r.converged());
}

TEST(Ippm, InvalidInputsRejected) {
  const SmoothOracle phi = ialm::testing::quadratic(Matrix::Identity(1, 1), Vector::Zero(1), 1, 0);
  EXPECT_THROW(ippm_solve(phi, zero_function(), vec({0.0}), 0.0, 1.0, 1e-3), std::invalid_argument);
  EXPECT_THROW(ippm_solve(phi, box_indicator(BoxSet(vec({1.0}), vec({2.0}))), vec({0.0}), 1.0, 1.0,
                          1e-3),
               std::invalid_argument);
}

TEST(Ippm, CertificatesOnRandomTwoDimensionalInstances) {
  // phi = 1/2 x^T Q x + c^T x with indefinite Q over the box [-1, 1]^2
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix q = ialm::testing::random_matrix(2, 2, rng);
    q = (0.5 * (q + q.transpose())).eval();
    const Eigen::SelfAdjointEigenSolver<Matrix> es(q);
    const double rho = std::max(1e-3, -es.eigenvalues()[0]);
    const double l = es.eigenvalues().cwiseAbs().maxCoeff() + 1e-3;
    const SmoothOracle phi = ialm::testing::quadratic(q, ialm::testing::random_vector(2, rng), l, rho);
    const ProxCapableFunction psi = box_indicator(BoxSet::uniform(2, -1.0, 1.0));
    const double eps = 1e-5;
    const IppmResult r = ippm_solve(phi, psi, Vector::Zero(2), rho, l, eps);
    ASSERT_TRUE(r.converged()) << r.message;
    EXPECT_LE(recomputed_stationarity(phi, psi, r.x), eps);
  }
}
