#include "ialm/diagnostics.hpp"
#include "ialm/problems.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace ialm;
using ialm::testing::vec;

namespace {

/// Independent evaluation of sum_{t>=0} 1/((t+1) ln(t+2)^2): a long double
/// partial sum plus an Euler-Maclaurin tail whose integral is taken exactly
/// after substituting t + 2 = e^u.
long double series_oracle() {
  const long double n = 20000.0L;
  long double sum = 0.0L;
  for (long t = 19999; t >= 0; --t) {
    const long double l = std::log(static_cast<long double>(t) + 2.0L);
    sum += 1.0L / ((static_cast<long double>(t) + 1.0L) * l * l);
  }
  // int_N^inf dt / ((t+1) ln^2(t+2)) = 1/ln(N+2) + int_{ln(N+2)}^inf du / (u^2 (e^u - 1))
  const long double u0 = std::log(n + 2.0L);
  long double rest = 0.0L;
  const long double h = 1e-3L;
  for (int i = 0; i < 40000; ++i) {
    // Simpson on [u0, u0 + 40]; the integrand decays like e^-u
    const long double a = u0 + h * i;
    auto f = [](long double u) { return 1.0L / (u * u * std::expm1(u)); };
    rest += h / 6.0L * (f(a) + 4.0L * f(a + h / 2.0L) + f(a + h));
  }
  const long double integral = 1.0L / u0 + rest;
  const long double ln = std::log(n + 2.0L);
  const long double f_n = 1.0L / ((n + 1.0L) * ln * ln);
  const long double df_n =
      -1.0L / ((n + 1.0L) * (n + 1.0L) * ln * ln) - 2.0L / ((n + 1.0L) * (n + 2.0L) * ln * ln * ln);
  return sum + integral + f_n / 2.0L - df_n / 12.0L;
}

ProblemSpec affine_problem(const Matrix& a, const Vector& b) {
  ProblemSpec p;
  p.smooth = ialm::testing::quadratic(Matrix::Identity(a.cols(), a.cols()),
                                      Vector::Zero(a.cols()), 1.0, 1.0);
  p.nonsmooth = zero_function();
  p.constraints = ialm::testing::affine_constraints(a, b);
  p.initial_point = Vector::Zero(a.cols());
  return p;
}

}  // namespace

TEST(EstimateRegularity, AffineWithoutBoxIsAboveSmallestSingularValue) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 10; ++t) {
    const Matrix a = ialm::testing::random_matrix(3, 7, rng);
    const Vector b = ialm::testing::random_vector(3, rng);
    const ProblemSpec p = affine_problem(a, b);
    const double sigma_min = Eigen::JacobiSVD<Matrix>(a).singularValues()[2];
    std::vector<Vector> iterates;
    for (int k = 0; k < 20; ++k) iterates.push_back(ialm::testing::random_vector(7, rng, 3.0));
    const RegularityTrace trace = estimate_regularity_v(iterates, p);
    ASSERT_TRUE(trace.supported);
    ASSERT_EQ(trace.values.size(), 20u);
    for (const auto& v : trace.values) {
      ASSERT_TRUE(v.has_value());
      EXPECT_GE(*v, sigma_min - 1e-9);
      EXPECT_GE(*v, 0.0);
    }
  }
}

TEST(EstimateRegularity, FeasibleIterateHasNoEntry) {
  Matrix a(1, 2);
  a << 1.0, 1.0;
  const ProblemSpec p = affine_problem(a, Vector::Zero(1));
  const RegularityTrace trace = estimate_regularity_v({vec({1.0, -1.0}), vec({1.0, 1.0})}, p);
  ASSERT_EQ(trace.values.size(), 2u);
  EXPECT_FALSE(trace.values[0].has_value());
  ASSERT_TRUE(trace.values[1].has_value());
  EXPECT_NEAR(*trace.values[1], std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(*trace.minimum(), std::sqrt(2.0), 1e-15);
}

TEST(EstimateRegularity, GeneralNonsmoothPartUnsupported) {
  Matrix a(1, 2);
  a << 1.0, 1.0;
  ProblemSpec p = affine_problem(a, Vector::Zero(1));
  // h = ||x||_1 via soft thresholding
  p.nonsmooth = ProxCapableFunction(
      ProxKind::general,
      [](const Vector& x, double t) {
        return (x.array().sign() * (x.array().abs() - t).max(0.0)).matrix().eval();
      },
      [](const Vector& x) { return x.lpNorm<1>(); }, nullptr, std::nullopt);
  const RegularityTrace trace = estimate_regularity_v({vec({1.0, 1.0})}, p);
  EXPECT_FALSE(trace.supported);
  EXPECT_TRUE(trace.values.empty());
  EXPECT_FALSE(trace.minimum().has_value());
  EXPECT_FALSE(trace.message.empty());
}

TEST(EstimateRegularity, BoxConstrainedLcqpTrajectoryPositive) {
  const LcqpInstance inst = generate_lcqp(5, 30, 1.0, 3);
  const ProblemSpec p = lcqp_problem(inst);
  IalmConfig cfg;
  cfg.curvature_override = lcqp_exact_schedule(inst);
  cfg.record_iterates = true;
  const SolveReport r = ialm_solve(p, cfg);
  ASSERT_TRUE(r.success) << r.reason;
  const RegularityTrace trace = estimate_regularity_v(r, p);
  ASSERT_TRUE(trace.supported);
  ASSERT_TRUE(trace.minimum().has_value());
  EXPECT_GT(*trace.minimum(), 0.0);
}

TEST(FeasibilityDecay, SyntheticExactInverse) {
  std::vector<double> pres;
  std::vector<double> betas;
  double beta = 0.01;
  for (int k = 0; k < 8; ++k) {
    betas.push_back(beta);
    pres.push_back(1.0 / beta);
    beta *= 3.0;
  }
  const FeasibilityDecayVerdict v = check_feasibility_decay(pres, betas);
  EXPECT_TRUE(v.pass);
  EXPECT_NEAR(v.constant, 1.0, 1e-12);
}

TEST(FeasibilityDecay, SyntheticConstantResidualFails) {
  std::vector<double> pres(8, 0.5);
  std::vector<double> betas;
  double beta = 0.01;
  for (int k = 0; k < 8; ++k) {
    betas.push_back(beta);
    beta *= 3.0;
  }
  EXPECT_FALSE(check_feasibility_decay(pres, betas).pass);
}

TEST(FeasibilityDecay, TooFewRecordsAndLengthMismatch) {
  EXPECT_FALSE(check_feasibility_decay({1.0, 0.5}, {1.0, 2.0}).pass);
  EXPECT_THROW(check_feasibility_decay({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST(FeasibilityDecay, RealLcqpRunPasses) {
  const LcqpInstance inst = generate_lcqp(10, 200, 1.0, 1);
  const ProblemSpec p = lcqp_problem(inst);
  IalmConfig cfg;
  cfg.curvature_override = lcqp_exact_schedule(inst);
  const SolveReport r = ialm_solve(p, cfg);
  ASSERT_TRUE(r.success) << r.reason;
  const FeasibilityDecayVerdict v = check_feasibility_decay(r, cfg.sigma);
  EXPECT_TRUE(v.pass) << v.message;
}

TEST(DualNormBound, ZeroAndLinearInW0) {
  EXPECT_EQ(dual_norm_bound(0.0, 3.0), 0.0);
  EXPECT_EQ(dual_norm_bound(2.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(dual_norm_bound(2.0, 1.5), 2.0 * dual_norm_bound(1.0, 1.5));
  EXPECT_THROW(dual_norm_bound(-1.0, 1.0), std::invalid_argument);
}

TEST(DualNormBound, SeriesConstantAgreesWithIndependentSummation) {
  const long double oracle = series_oracle();
  EXPECT_NEAR(static_cast<double>(oracle), 3.387735531952002316, 1e-9);
  const double certified = dual_series_bound();
  EXPECT_GE(certified, static_cast<double>(oracle));
  EXPECT_LE(certified - static_cast<double>(oracle), 1e-8);
  const double l2 = std::log(2.0);
  EXPECT_NEAR(dual_norm_bound(1.0, 1.0), l2 * l2 * certified, 1e-15);
}

TEST(DualNormBound, ShortHorizonsStillBoundTheSeries) {
  const double oracle = static_cast<double>(series_oracle());
  for (std::size_t n : {1u, 2u, 10u, 100u, 1000u}) {
    EXPECT_GE(dual_series_bound(n), oracle) << "horizon " << n;
  }
  EXPECT_THROW(dual_series_bound(0), std::invalid_argument);
}

TEST(PredictOuterIterations, Examples) {
  // C = (eps + B0 + B_c y) / (v beta0 eps)
  EXPECT_EQ(predict_outer_iterations(1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 3.0), 1u);
  EXPECT_EQ(predict_outer_iterations(1.0, 8.0, 0.0, 0.0, 1.0, 1.0, 3.0), 3u);
  EXPECT_THROW(predict_outer_iterations(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 3.0), std::invalid_argument);
  EXPECT_THROW(predict_outer_iterations(1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0), std::invalid_argument);
}

TEST(PredictOuterIterations, MonotoneInRegularityAndInitialPenalty) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unif(0.01, 10.0);
  for (int t = 0; t < 500; ++t) {
    const double eps = 1e-3;
    const double b0 = unif(rng);
    const double bc = unif(rng);
    const double y = unif(rng);
    const double v = unif(rng);
    const double beta0 = unif(rng);
    const std::size_t base = predict_outer_iterations(eps, b0, bc, y, v, beta0, 3.0);
    EXPECT_LE(predict_outer_iterations(eps, b0, bc, y, 2.0 * v, beta0, 3.0), base);
    EXPECT_LE(predict_outer_iterations(eps, b0, bc, y, v, 2.0 * beta0, 3.0), base);
  }
}

TEST(PredictOuterIterations, LcqpRunWithinPrediction) {
  const LcqpInstance inst = generate_lcqp(5, 40, 1.0, 6);
  const ProblemSpec p = lcqp_problem(inst);
  IalmConfig cfg;
  cfg.policy = Theoretical{1.0};
  cfg.curvature_override = lcqp_exact_schedule(inst);
  cfg.record_iterates = true;
  const SolveReport r = ialm_solve(p, cfg);
  ASSERT_TRUE(r.success) << r.reason;
  const RegularityTrace trace = estimate_regularity_v(r, p);
  ASSERT_TRUE(trace.minimum().has_value());
  const double y_max = dual_norm_bound(1.0, r.initial_c_norm);
  EXPECT_LE(r.max_y_norm(), y_max);
  const std::size_t k = predict_outer_iterations(cfg.eps, p.constants.b0, p.constants.b_c, y_max,
                                                 *trace.minimum(), cfg.beta0, cfg.sigma);
  EXPECT_LE(r.records.size(), k);
}
