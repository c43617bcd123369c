#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "robust/pca.hpp"
#include "support/fixtures.hpp"

using Catch::Approx;
using namespace robust;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

MatrixXd orthonormal_basis(fixtures::Gaussian& g, Index d, Index k) {
  return g.matrix(d, k).householderQr().householderQ() * MatrixXd::Identity(d, k);
}

void check_model(const PCAModel& m) {
  const MatrixXd I = MatrixXd::Identity(m.k, m.k);
  CHECK((m.loadings.transpose() * m.loadings - I).cwiseAbs().maxCoeff() < 1e-8);
  for (Index j = 0; j < m.k; ++j) {
    CHECK(m.eigenvalues(j) > 0.0);
    if (j > 0) CHECK(m.eigenvalues(j) <= m.eigenvalues(j - 1));
  }
}

}  // namespace

TEST_CASE("principal angle", "[pca][angle]") {
  MatrixXd A = MatrixXd::Zero(3, 1), B = MatrixXd::Zero(3, 1);
  A(0, 0) = 1.0;
  B(0, 0) = std::cos(0.3);
  B(1, 0) = std::sin(0.3);
  CHECK(principal_angle(A, B) == Approx(0.3).epsilon(1e-12));
  CHECK(principal_angle(A, -A) == Approx(0.0).margin(1e-15));
}

TEST_CASE("classical PCA", "[pca][classical]") {
  const MatrixXd X = fixtures::mixed_gaussian(100, 4, 2);
  const auto m = classical_pca(X, 2);
  check_model(m);
  const auto mom = full_moments(X);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(mom.cov);
  CHECK(m.eigenvalues(0) == Approx(es.eigenvalues()(3)).epsilon(1e-10));
  for (Index j = 0; j < 2; ++j) {
    const VectorXd v = m.loadings.col(j);
    CHECK(((mom.cov * v) - m.eigenvalues(j) * v).norm() < 1e-8 * m.eigenvalues(0));
    Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    CHECK(v(arg) > 0.0);
  }
  CHECK_THROWS_AS(classical_pca(X, 5), InputError);
  CHECK_THROWS_AS(classical_pca(X, 0), InputError);
}

TEST_CASE("robust PCA on data in a k-plane", "[pca][robpca]") {
  fixtures::Gaussian g(3);
  const MatrixXd B = orthonormal_basis(g, 5, 2);
  const MatrixXd X = (g.matrix(60, 2) * Eigen::Vector2d(3.0, 1.0).asDiagonal()) * B.transpose();
  const auto m = robust_pca(X, 2);
  check_model(m);
  CHECK(principal_angle(B, m.loadings) < 1e-6);
  const auto map = pca_distances(m, X);
  CHECK(map.od.maxCoeff() < 1e-10);
}

TEST_CASE("robust PCA recovers the plane of the outlier-map fixture", "[pca][robpca][fixture]") {
  const auto f = fixtures::pca_fixture();
  const auto cl = classical_pca(f.X, 2);
  const auto rb = robust_pca(f.X, 2);
  check_model(rb);
  CHECK(principal_angle(f.plane, rb.loadings) < 5.0 * kDeg);
  CHECK(principal_angle(f.plane, cl.loadings) > 20.0 * kDeg);

  const auto map = pca_distances(rb, f.X);
  CHECK(map.cls[50] == PcaClass::good_leverage);
  CHECK(map.cls[51] == PcaClass::good_leverage);
  CHECK(map.cls[52] == PcaClass::orthogonal);
  CHECK(map.cls[53] == PcaClass::bad_leverage);
  CHECK(map.cls[54] == PcaClass::bad_leverage);
}

TEST_CASE("robust PCA is permutation equivariant", "[pca][robpca][equivariance]") {
  const auto f = fixtures::pca_fixture();
  Eigen::PermutationMatrix<Eigen::Dynamic> P(3);
  P.indices() << 2, 0, 1;
  const MatrixXd Xp = f.X * P.transpose();
  const auto a = robust_pca(f.X, 2, 0, 500, 7);
  const auto b = robust_pca(Xp, 2, 0, 500, 7);
  CHECK((P * a.loadings - b.loadings).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(a.kept == b.kept);
}

TEST_CASE("robust PCA with all rows kept is classical PCA", "[pca][robpca]") {
  const MatrixXd X = fixtures::mixed_gaussian(80, 3, 9);
  const auto rb = robust_pca(X, 2, 80);
  const auto cl = classical_pca(X, 2);
  CHECK(principal_angle(cl.loadings, rb.loadings) < 1e-6);
  CHECK((rb.center - cl.center).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("spherical PCA", "[pca][spherical]") {
  fixtures::Gaussian g(4);
  MatrixXd X = g.matrix(400, 3) * Eigen::Vector3d(5.0, 2.0, 0.5).asDiagonal();
  const auto sp = spherical_pca(X, 2);
  const auto cl = classical_pca(X, 2);
  check_model(sp);
  CHECK(principal_angle(cl.loadings, sp.loadings) < 2.0 * kDeg);

  // moving an outlier radially away from the center leaves the sphere projection unchanged
  X.row(0) << 40.0, 30.0, 20.0;
  const auto a = spherical_pca(X, 2);
  X.row(0) = a.center.transpose() + 10.0 * (X.row(0) - a.center.transpose());
  const auto b = spherical_pca(X, 2);
  CHECK((a.loadings - b.loadings).cwiseAbs().maxCoeff() < 1e-6);

  const auto full = spherical_pca(X, 3);
  CHECK((full.loadings.transpose() * full.loadings - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <
        1e-10);

  const MatrixXd same = MatrixXd::Ones(5, 2);
  CHECK_THROWS_AS(spherical_pca(same, 1), DegenerateError);
}

TEST_CASE("spatial median", "[pca][spatial]") {
  MatrixXd X(4, 2);
  X << 1, 0, -1, 0, 0, 1, 0, -1;
  CHECK(spatial_median(X).norm() < 1e-12);
  // three collinear points: the middle one
  MatrixXd L(3, 2);
  L << 0, 0, 1, 1, 5, 5;
  CHECK((spatial_median(L) - Eigen::Vector2d(1, 1)).norm() < 1e-6);
}

TEST_CASE("PCA distances", "[pca][distances]") {
  const auto f = fixtures::pca_fixture();
  const auto m = robust_pca(f.X, 2);
  const auto map = pca_distances(m, f.X);
  for (Index i = 0; i < f.X.rows(); ++i) {
    const VectorXd c = f.X.row(i).transpose() - m.center;
    const VectorXd t = m.loadings.transpose() * c;
    CHECK(map.od(i) * map.od(i) + t.squaredNorm() == Approx(c.squaredNorm()).epsilon(1e-8));
    CHECK(map.od(i) >= 0.0);
    const bool far = map.sd(i) > map.sd_cutoff, off = map.od(i) > map.od_cutoff;
    const auto expect = off ? (far ? PcaClass::bad_leverage : PcaClass::orthogonal)
                            : (far ? PcaClass::good_leverage : PcaClass::regular);
    CHECK(map.cls[static_cast<std::size_t>(i)] == expect);
  }
  CHECK(map.sd_cutoff == Approx(std::sqrt(dist::chi2_quantile(0.975, 2))));

  // a point in the subspace at the center is regular with od exactly zero
  MatrixXd probe(1, 3);
  probe.row(0) = m.center.transpose();
  const auto pmap = pca_distances(m, probe);
  CHECK(pmap.od(0) == 0.0);
  CHECK(pmap.cls[0] == PcaClass::regular);

  // rotating the orthogonal complement leaves od unchanged
  const Eigen::Vector3d l0 = m.loadings.col(0), l1 = m.loadings.col(1);
  const VectorXd normal = l0.cross(l1).normalized();
  MatrixXd Y = f.X;
  for (Index i = 0; i < Y.rows(); ++i) {
    const VectorXd c = Y.row(i).transpose() - m.center;
    Y.row(i) = (m.center + c - 2.0 * normal * normal.dot(c)).transpose();
  }
  const auto rmap = pca_distances(m, Y);
  CHECK((rmap.od - map.od).cwiseAbs().maxCoeff() < 1e-10);

  PCAModel bad = m;
  bad.eigenvalues(1) = 0.0;
  CHECK_THROWS_AS(pca_distances(bad, f.X), DegenerateError);
}
