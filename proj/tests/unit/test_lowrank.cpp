#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "helpers.hpp"
#include "tupi/error.hpp"
#include "tupi/kernels.hpp"
#include "tupi/lowrank.hpp"

using namespace tupi;
using testing::max_abs;
using testing::random_matrix;
using testing::random_vector;

namespace {

// Best split of the rows into two groups by total within-group squared error.
Matrix exhaustive_two_means(const Matrix& x) {
  const Eigen::Index n = x.rows();
  double best = std::numeric_limits<double>::infinity();
  Matrix centers(2, x.cols());
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    Eigen::RowVectorXd c[2] = {Eigen::RowVectorXd::Zero(x.cols()),
                               Eigen::RowVectorXd::Zero(x.cols())};
    double count[2] = {0, 0};
    for (Eigen::Index i = 0; i < n; ++i) {
      const int g = (mask >> i) & 1u;
      c[g] += x.row(i);
      count[g] += 1;
    }
    c[0] /= count[0];
    c[1] /= count[1];
    double sse = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) sse += (x.row(i) - c[(mask >> i) & 1u]).squaredNorm();
    if (sse < best) {
      best = sse;
      centers.row(0) = c[0];
      centers.row(1) = c[1];
    }
  }
  return centers;
}

Matrix sorted_by_first_column(Matrix m) {
  if (m(0, 0) > m(1, 0)) m.row(0).swap(m.row(1));
  return m;
}

double dependence_at(const Vector& f, const BasisSet& basis, double sigma_sq,
                     const NystroemFactor& h) {
  return lowrank_dependence(nystroem_factor(Matrix(f), basis, sigma_sq), h);
}

}  // namespace

TEST_SUITE("lowrank") {
  TEST_CASE("1-d interval basis") {
    Matrix x(5, 1);
    x << 0.0, 0.2, 1.0, 0.7, 0.4;
    const BasisSet b = select_basis(x, 3);
    CHECK(b.kind == BasisKind::IntervalEndpoints);
    REQUIRE(b.size() == 3);
    CHECK(b.points(0, 0) == 0.0);
    CHECK(b.points(1, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(b.points(2, 0) == 1.0);
  }

  TEST_CASE("few distinct rows are returned verbatim") {
    Matrix x(4, 2);
    x << 3, 1, 0, 2, 1, 1, 0, 0;
    const BasisSet b = select_basis(x, 10);
    CHECK(b.kind == BasisKind::VerbatimPoints);
    REQUIRE(b.size() == 4);
    for (Eigen::Index i = 0; i < 4; ++i) {
      bool found = false;
      for (Eigen::Index j = 0; j < 4; ++j) found = found || (b.points.row(j) == x.row(i));
      CHECK(found);
    }
  }

  TEST_CASE("basis errors") {
    CHECK_THROWS_AS(select_basis(Matrix::Constant(6, 1, 2.0), 3), DegenerateRange);
    CHECK_THROWS_AS(select_basis(Matrix::Zero(6, 1), 1), InvalidInput);
  }

  TEST_CASE("two blobs: seeded k-means agrees with exhaustive 2-means") {
    std::mt19937_64 rng(13);
    const double sd = 0.3;
    for (int trial = 0; trial < 10; ++trial) {
      Matrix x = random_matrix(rng, 12, 2, sd);
      x.topRows(6).rowwise() += Eigen::RowVector2d(-5.0, 0.0);
      x.bottomRows(6).rowwise() += Eigen::RowVector2d(5.0, 1.0);
      const BasisSet b = select_basis(x, 2, 1000 + trial);
      REQUIRE(b.kind == BasisKind::ClusterCenters);
      const Matrix got = sorted_by_first_column(b.points);
      const Matrix want = sorted_by_first_column(exhaustive_two_means(x));
      CHECK(max_abs(got - want) < 1e-12);
      CHECK((got.row(0) - Eigen::RowVector2d(-5.0, 0.0)).norm() < 3 * sd);
      CHECK((got.row(1) - Eigen::RowVector2d(5.0, 1.0)).norm() < 3 * sd);
    }
  }

  TEST_CASE("k-means is deterministic for a fixed seed") {
    std::mt19937_64 rng(2);
    const Matrix x = random_matrix(rng, 80, 3);
    CHECK(select_basis(x, 7, 99).points == select_basis(x, 7, 99).points);
  }

  TEST_CASE("full basis reproduces the dense kernel") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::Index n = 4 + trial % 12;
      const Matrix x = random_matrix(rng, n, 1 + trial % 3);
      const double s = bandwidth_heuristic(x);
      const BasisSet b{x, BasisKind::VerbatimPoints};
      const Matrix approx = reconstruct(nystroem_factor(x, b, s));
      CHECK(max_abs(approx - gaussian_kernel(x, s).entries()) < 1e-6);
    }
  }

  TEST_CASE("rank 50 on 500 smooth 1-d points") {
    Matrix x(500, 1);
    for (Eigen::Index i = 0; i < 500; ++i) x(i, 0) = std::sin(0.013 * static_cast<double>(i));
    const double s = bandwidth_heuristic(x);
    const NystroemFactor f = nystroem_factor(x, select_basis(x, 50), s);
    CHECK(f.rank() == 50);
    CHECK(max_abs(reconstruct(f) - gaussian_kernel(x, s).entries()) < 1e-3);
  }

  TEST_CASE("coincident basis points are singular") {
    const BasisSet b{Matrix::Constant(3, 1, 0.5), BasisKind::VerbatimPoints};
    Matrix x(4, 1);
    x << 0, 1, 2, 3;
    CHECK_THROWS_AS(nystroem_factor(x, b, 1.0), SingularBasis);
  }

  TEST_CASE("basis inverse and whitened factor are consistent") {
    std::mt19937_64 rng(6);
    const Matrix x = random_matrix(rng, 40, 2);
    const double s = bandwidth_heuristic(x);
    const NystroemFactor f = nystroem_factor(x, select_basis(x, 8), s);
    const Matrix via_inverse = f.cross * f.basis_inv * f.cross.transpose();
    CHECK(max_abs(via_inverse - reconstruct(f)) < 1e-6);
  }

  TEST_CASE("full-rank low-rank dependence equals dense hsic") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::Index n = 5 + trial;  // up to 24
      const Matrix f = random_matrix(rng, n, 1);
      const Matrix h = random_matrix(rng, n, 1 + trial % 4);
      const double sf = bandwidth_heuristic(f);
      const double sh = bandwidth_heuristic(h);
      const double low = lowrank_dependence(
          nystroem_factor(f, BasisSet{f, BasisKind::VerbatimPoints}, sf),
          nystroem_factor(h, BasisSet{h, BasisKind::VerbatimPoints}, sh));
      const double dense = hsic_estimate(gaussian_kernel(f, sf), gaussian_kernel(h, sh));
      CHECK(std::abs(low - dense) <= 1e-6 * std::abs(dense));
    }
  }

  TEST_CASE("constant feature gives zero dependence and zero gradient") {
    std::mt19937_64 rng(3);
    const Vector f = random_vector(rng, 15);
    const BasisSet fb = select_basis(Matrix(f), 5);
    const double sf = bandwidth_heuristic(Matrix(f));
    const Matrix c = Matrix::Constant(15, 2, 1.5);
    const BasisSet hb{c.topRows(1), BasisKind::VerbatimPoints};
    const NystroemFactor h = nystroem_factor(c, hb, 1.0);
    CHECK(std::abs(lowrank_dependence(nystroem_factor(Matrix(f), fb, sf), h)) < 1e-10);
    CHECK(lowrank_dependence_gradient(f, fb, sf, h).cwiseAbs().maxCoeff() < 1e-10);
  }

  TEST_CASE("mismatched factors are rejected") {
    Matrix a(4, 1), b(5, 1);
    a << 0, 1, 2, 3;
    b << 0, 1, 2, 3, 4;
    const NystroemFactor fa = nystroem_factor(a, select_basis(a, 4), 1.0);
    const NystroemFactor fb = nystroem_factor(b, select_basis(b, 4), 1.0);
    CHECK_THROWS_AS(lowrank_dependence(fa, fb), InvalidInput);
  }

  TEST_CASE("gradient matches central differences, n = 15, K = 5") {
    std::mt19937_64 rng(41);
    const Vector f = random_vector(rng, 15);
    const Matrix h = random_matrix(rng, 15, 3);
    const BasisSet fb = select_basis(Matrix(f), 5);
    const double sf = bandwidth_heuristic(Matrix(f));
    const NystroemFactor hf = nystroem_factor(h, select_basis(h, 5), bandwidth_heuristic(h));
    const Vector analytic = lowrank_dependence_gradient(f, fb, sf, hf);
    const Vector numeric = testing::numeric_gradient(
        [&](const Vector& v) { return dependence_at(v, fb, sf, hf); }, f);
    CHECK(testing::relative_error(analytic, numeric) < 1e-4);
  }

  TEST_CASE("gradient matches central differences on 50 random instances") {
    std::mt19937_64 rng(1234);
    std::uniform_int_distribution<int> size(6, 20);
    std::uniform_int_distribution<int> rank(2, 8);
    std::uniform_int_distribution<int> dims(1, 4);
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::Index n = size(rng);
      const Eigen::Index k = std::min<Eigen::Index>(rank(rng), n - 1);
      const Vector f = random_vector(rng, n);
      const Matrix h = random_matrix(rng, n, dims(rng));
      const BasisSet fb = select_basis(Matrix(f), k);
      const double sf = bandwidth_heuristic(Matrix(f));
      const NystroemFactor hf =
          nystroem_factor(h, select_basis(h, k, 7 + trial), bandwidth_heuristic(h));
      const Vector analytic = lowrank_dependence_gradient(f, fb, sf, hf);
      const Vector numeric = testing::numeric_gradient(
          [&](const Vector& v) { return dependence_at(v, fb, sf, hf); }, f);
      INFO("trial " << trial << " n " << n << " K " << k);
      CHECK(testing::relative_error(analytic, numeric) < 1e-4);
    }
  }

  TEST_CASE("mirrored predictions get mirrored gradients") {
    // Basis and predictions symmetric about 0 and a feature that does not
    // distinguish mirrored points: the value is even under f -> -f, so the
    // gradient entries of mirrored points are negatives of each other.
    Vector f(8);
    f << -1.7, -0.9, -0.4, -0.1, 0.1, 0.4, 0.9, 1.7;
    const BasisSet fb{(Matrix(5, 1) << -2, -1, 0, 1, 2).finished(), BasisKind::IntervalEndpoints};
    Matrix h(8, 1);
    for (Eigen::Index i = 0; i < 8; ++i) h(i, 0) = std::abs(f(i)) + 0.3 * f(i) * f(i);
    const NystroemFactor hf = nystroem_factor(h, select_basis(h, 3), bandwidth_heuristic(h));
    const Vector g = lowrank_dependence_gradient(f, fb, 1.3, hf);
    CHECK(g.cwiseAbs().maxCoeff() > 1e-6);
    for (Eigen::Index i = 0; i < 4; ++i) {
      CHECK(g(i) == doctest::Approx(-g(7 - i)).epsilon(1e-9).scale(g.cwiseAbs().maxCoeff()));
    }
  }

  TEST_CASE("low-rank dependence is nonnegative") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
      const Matrix f = random_matrix(rng, 30, 1);
      const Matrix h = random_matrix(rng, 30, 2);
      const double v = lowrank_dependence(
          nystroem_factor(f, select_basis(f, 6), bandwidth_heuristic(f)),
          nystroem_factor(h, select_basis(h, 6), bandwidth_heuristic(h)));
      CHECK(v >= -1e-8);
    }
  }
}
