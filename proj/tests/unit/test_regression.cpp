#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "robust/regression.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using Catch::Approx;
using namespace robust;

namespace {

RegressionData small_fixture(std::uint64_t seed, Index n = 10, Index d = 1) {
  fixtures::Gaussian g(seed);
  RegressionData data{g.matrix(n, d), VectorXd(n), true};
  for (Index i = 0; i < n; ++i) data.y(i) = 1.0 + data.X.row(i).sum() + 0.3 * g();
  // two gross vertical outliers
  data.y(0) += 8.0;
  data.y(1) -= 6.0;
  return data;
}

double ls_slope_closed_form(const VectorXd& x, const VectorXd& y) {
  const double mx = x.mean(), my = y.mean();
  double sxy = 0.0, sxx = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    sxy += (x(i) - mx) * (y(i) - my);
    sxx += (x(i) - mx) * (x(i) - mx);
  }
  return sxy / sxx;
}

RegressionData stars() {
  auto f = fixtures::stars_fixture();
  return {f.X, f.y, true};
}

}  // namespace

TEST_CASE("least squares with inference", "[regression][ls]") {
  fixtures::Gaussian g(3);
  RegressionData data{g.matrix(40, 2), VectorXd(40), true};
  for (Index i = 0; i < 40; ++i) data.y(i) = 1.0 + 2.0 * data.X(i, 0) - data.X(i, 1) + 0.5 * g();
  const auto fit = least_squares(data);
  const MatrixXd Z = data.design();
  const VectorXd normal = (Z.transpose() * Z).ldlt().solve(Z.transpose() * data.y);
  CHECK((fit.beta - normal).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((fit.residuals - (data.y - Z * fit.beta)).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(fit.inference);
  const auto& inf = *fit.inference;
  CHECK(inf.df_residual == 37);
  const double tss = (data.y.array() - data.y.mean()).square().sum();
  CHECK(inf.r_squared == Approx(1.0 - fit.residuals.squaredNorm() / tss).epsilon(1e-12));
  CHECK(inf.f_statistic == Approx((inf.r_squared / 2.0) / ((1.0 - inf.r_squared) / 37.0)).epsilon(1e-9));
  CHECK(inf.p_values(1) < 1e-10);
  CHECK(inf.f_p_value < 1e-10);
  for (Index j = 0; j < 3; ++j) CHECK(inf.t_values(j) == Approx(fit.beta(j) / inf.std_errors(j)));
}

TEST_CASE("fast_lts with h = n is least squares", "[regression][lts]") {
  const auto data = small_fixture(4, 20, 2);
  LtsOptions opt;
  opt.h = 20;
  const auto lts = fast_lts(data, opt);
  const auto ls = least_squares(data);
  CHECK((lts.beta - ls.beta).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(lts.chn == 1.0);
}

TEST_CASE("fast_lts matches the exhaustive oracle", "[regression][lts][oracle]") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto data = small_fixture(seed);
    const auto oracle = oracles::lts_bruteforce(data.X, data.y, 7);
    LtsOptions opt;
    opt.h = 7;
    opt.seed = seed;
    const auto fit = fast_lts(data, opt);
    CHECK(fit.objective == Approx(oracle.objective).epsilon(1e-9).margin(1e-12));
    CHECK(static_cast<Index>(fit.best_subset.size()) == 7);
    const auto ex = exhaustive_lts(data, 7);
    CHECK(ex.objective == Approx(oracle.objective).epsilon(1e-9).margin(1e-12));
  }
}

TEST_CASE("LTS C-steps never increase the objective", "[regression][cstep]") {
  fixtures::Gaussian g(8);
  const auto data = small_fixture(8, 30, 2);
  Index violations = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto pick = sample_without_replacement(g.rng(), 30, 16);
    Subset s(pick.begin(), pick.end());
    std::sort(s.begin(), s.end());
    const double before = lts_subset_objective(data, s);
    const Subset next = lts_c_step(data, s);
    const double after = lts_subset_objective(data, next);
    if (after > before * (1.0 + 1e-12) + 1e-14) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("stars-like fixture", "[regression][masking]") {
  const auto data = stars();
  const auto f = fixtures::stars_fixture();
  const auto ls = least_squares(data);
  CHECK(ls.beta(1) < 0.0);
  CHECK(ls.beta(1) == Approx(ls_slope_closed_form(data.X.col(0), data.y)).epsilon(1e-10));

  const auto raw = fast_lts(data);
  CHECK(raw.beta(1) > 0.0);
  CHECK(raw.h == default_lts_h(47, 1));
  const auto rew = reweighted_ls(data, raw);
  CHECK(rew.beta(1) > 0.0);
  for (Index i : f.planted) CHECK(rew.weights[static_cast<std::size_t>(i)] == 0);

  McdOptions mo;
  const auto xs = fast_mcd(data.X, mo);
  const auto map = regression_outlier_map(data, raw, xs);
  for (Index i : f.planted) CHECK(map.cls[static_cast<std::size_t>(i)] == PointClass::bad_leverage);
  CHECK(map.rd_cutoff == Approx(std::sqrt(dist::chi2_quantile(0.975, 1))));
}

TEST_CASE("outlier map classes", "[regression][map]") {
  auto data = stars();
  // drop the giants; vertical: central x, large residual; good leverage: on the line, far x
  data.X.conservativeResize(45, 1);
  data.y.conservativeResize(45);
  data.X(43, 0) = 4.3;
  data.y(43) = 2.0 + 0.5 * 4.3 + 3.0;
  data.X(44, 0) = 12.0;
  data.y(44) = 2.0 + 0.5 * 12.0;
  const auto raw = fast_lts(data);
  const auto xs = fast_mcd(data.X);
  const auto map = regression_outlier_map(data, raw, xs);
  CHECK(map.cls[43] == PointClass::vertical);
  CHECK(map.cls[44] == PointClass::good_leverage);
  for (Index i = 0; i < map.std_resid.size(); ++i) {
    const bool out = std::fabs(map.std_resid(i)) > 2.5, lev = map.rd_x(i) > map.rd_cutoff;
    const auto expect = lev ? (out ? PointClass::bad_leverage : PointClass::good_leverage)
                            : (out ? PointClass::vertical : PointClass::regular);
    CHECK(map.cls[static_cast<std::size_t>(i)] == expect);
  }
}

TEST_CASE("LTS scale", "[regression][scale]") {
  fixtures::Gaussian g(21);
  RegressionFit fit;
  fit.residuals = VectorXd(100000);
  for (Index i = 0; i < fit.residuals.size(); ++i) fit.residuals(i) = 3.0 * g();
  fit.h = 100000;
  fit.chn = lts_consistency_factor(fit.h, 100000);
  CHECK(lts_scale(fit) == Approx(3.0).epsilon(0.02));

  // trimmed to half: the consistency factor restores the gaussian scale
  fit.h = 50001;
  fit.chn = lts_consistency_factor(fit.h, 100000);
  CHECK(lts_scale(fit) == Approx(3.0).epsilon(0.02));

  const double s = lts_scale(fit);
  fit.residuals *= 10.0;
  CHECK(lts_scale(fit) == Approx(10.0 * s).epsilon(1e-12));
  fit.residuals.setZero();
  CHECK(lts_scale(fit) == 0.0);
}

TEST_CASE("reweighted least squares", "[regression][reweight]") {
  fixtures::Gaussian g(31);
  RegressionData data{g.matrix(200, 2), VectorXd(200), true};
  for (Index i = 0; i < 200; ++i) data.y(i) = 0.5 + data.X(i, 0) - 2.0 * data.X(i, 1) + 0.2 * g();
  const auto raw = fast_lts(data);

  // a huge cutoff flags nothing, so the refit is plain least squares
  const auto all = reweighted_ls(data, raw, 1e9);
  CHECK((all.beta - least_squares(data).beta).cwiseAbs().maxCoeff() < 1e-12);

  // gaussian errors: a second pass only moves cases sitting near the cutoff
  const auto once = reweighted_ls(data, raw);
  const auto twice = reweighted_ls(data, once);
  for (Index i = 0; i < 200; ++i) {
    if (once.weights[static_cast<std::size_t>(i)] == twice.weights[static_cast<std::size_t>(i)]) continue;
    CHECK(std::fabs(std::fabs(once.residuals(i) / once.scale) - 2.5) < 0.5);
  }

  // clean fixture with bounded errors: weights and coefficients are a fixed point
  RegressionData bounded{g.matrix(200, 2), VectorXd(200), true};
  for (Index i = 0; i < 200; ++i)
    bounded.y(i) = 0.5 + bounded.X(i, 0) - 2.0 * bounded.X(i, 1) + 0.4 * (g.uniform() - 0.5);
  const auto b1 = reweighted_ls(bounded, fast_lts(bounded));
  const auto b2 = reweighted_ls(bounded, b1);
  CHECK(b1.weights == b2.weights);
  CHECK((b1.beta - b2.beta).cwiseAbs().maxCoeff() < 1e-6);

  RegressionFit zero = raw;
  zero.scale = 0.0;
  CHECK_THROWS_AS(reweighted_ls(data, zero), DegenerateError);
  CHECK_THROWS_AS(reweighted_ls(data, raw, 1e-9), DegenerateError);
}

TEST_CASE("exact fit", "[regression][exact]") {
  fixtures::Gaussian g(41);
  RegressionData data{g.matrix(30, 2), VectorXd(30), true};
  for (Index i = 0; i < 30; ++i) data.y(i) = 1.0 + 2.0 * data.X(i, 0) + 3.0 * data.X(i, 1);
  for (Index i = 0; i < 8; ++i) data.y(i) += 5.0 + g();
  const auto fit = fast_lts(data);
  CHECK(fit.exact_fit);
  CHECK(fit.scale == 0.0);
  CHECK(fit.objective < 1e-20);
  CHECK((fit.beta - Eigen::Vector3d(1.0, 2.0, 3.0)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK_THROWS_AS(reweighted_ls(data, fit), DegenerateError);
}

TEST_CASE("regression equivariance of exhaustive LTS", "[regression][equivariance]") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto data = small_fixture(100 + seed, 10, 2);
    const auto base = exhaustive_lts(data, 7);
    const double a = -2.5;
    const Eigen::Vector2d c(0.7, -1.3);
    RegressionData moved = data;
    moved.y = a * data.y + data.X * c;
    const auto fit = exhaustive_lts(moved, 7);
    Eigen::Vector3d expect = a * base.beta;
    expect.tail(2) += c;
    CHECK((fit.beta - expect).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("LTS breakdown", "[regression][breakdown]") {
  fixtures::Gaussian g(51);
  const Index n = 60;
  RegressionData data{g.matrix(n, 1), VectorXd(n), true};
  for (Index i = 0; i < n; ++i) data.y(i) = 1.0 + 2.0 * data.X(i, 0) + 0.3 * g();
  const auto clean = least_squares(data);
  const auto clean_lts = fast_lts(data);
  const Index h = clean_lts.h;
  RegressionData bad = data;
  for (Index i = 0; i < n - h; ++i) {
    bad.X(i, 0) = 1e6 * g.uniform();
    bad.y(i) = -1e6 * g.uniform();
  }
  const auto fit = fast_lts(bad);
  for (Index j = 0; j < 2; ++j)
    CHECK(std::fabs(fit.beta(j) - clean.beta(j)) < 10.0 * clean.inference->std_errors(j));
}

TEST_CASE("regression input errors", "[regression][errors]") {
  RegressionData data{MatrixXd::Zero(3, 2), VectorXd::Zero(3), true};
  CHECK_THROWS_AS(fast_lts(data), InputError);
  auto ok = small_fixture(1);
  LtsOptions opt;
  opt.h = 2;
  CHECK_THROWS_AS(fast_lts(ok, opt), InputError);
  ok.y(3) = std::nan("");
  CHECK_THROWS_AS(fast_lts(ok), InputError);
  RegressionData mismatch{MatrixXd::Zero(5, 1), VectorXd::Zero(4), true};
  CHECK_THROWS_AS(least_squares(mismatch), InputError);
}

TEST_CASE("fast_lts is deterministic and thread independent", "[regression][determinism]") {
  const auto data = stars();
  LtsOptions opt;
  opt.seed = 9;
  const auto a = fast_lts(data, opt);
  setenv("ROBUST_ANOMALY_THREADS", "4", 1);
  const auto b = fast_lts(data, opt);
  unsetenv("ROBUST_ANOMALY_THREADS");
  CHECK(a.best_subset == b.best_subset);
  CHECK(a.beta == b.beta);
}
