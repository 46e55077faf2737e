#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "tvsafeopt/kernel.hpp"

using namespace tvsafeopt;

namespace {

Eigen::VectorXd vec2(double a, double b) { return Eigen::Vector2d(a, b); }

}  // namespace

TEST_CASE("kernel diagonal is one") {
  const KernelSpec spec = KernelSpec::spatio_temporal(1.0, 25.0);
  CHECK(kernel_eval(spec, vec2(0.3, -1.2), 7.0, vec2(0.3, -1.2), 7.0) == doctest::Approx(1.0));
  const KernelSpec spatial = KernelSpec::spatial(0.5);
  CHECK(kernel_eval(spatial, vec2(2.0, 2.0), 0.0, vec2(2.0, 2.0), 123.0) ==
        doctest::Approx(1.0));
}

TEST_CASE("kernel closed-form values") {
  const KernelSpec spec = KernelSpec::spatio_temporal(1.0, 25.0);
  // unit spatial separation
  CHECK(kernel_eval(spec, vec2(0.0, 0.0), 0.0, vec2(1.0, 0.0), 0.0) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  // one temporal lengthscale of separation
  CHECK(kernel_eval(spec, vec2(0.0, 0.0), 0.0, vec2(0.0, 0.0), 25.0) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("spatial-only mode ignores time") {
  const KernelSpec spec = KernelSpec::spatial(1.0);
  const double a = kernel_eval(spec, vec2(0.0, 1.0), 0.0, vec2(1.0, 0.0), 0.0);
  const double b = kernel_eval(spec, vec2(0.0, 1.0), 0.0, vec2(1.0, 0.0), 500.0);
  CHECK(a == b);
}

TEST_CASE("kernel input validation") {
  const KernelSpec spec = KernelSpec::spatio_temporal(1.0, 25.0);
  Eigen::VectorXd three(3);
  three << 0, 0, 0;
  CHECK_THROWS_AS(kernel_eval(spec, vec2(0, 0), 0, three, 0), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::spatio_temporal(0.0, 25.0), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::spatio_temporal(1.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::spatial(-2.0), std::invalid_argument);
}

TEST_CASE("gram matrix basics") {
  const KernelSpec spec = KernelSpec::spatio_temporal(1.0, 25.0);
  Eigen::MatrixXd one(1, 2);
  one << 0.5, -0.5;
  Eigen::VectorXd t1(1);
  t1 << 3.0;
  const Eigen::MatrixXd g1 = kernel_gram(spec, one, t1);
  CHECK(g1.rows() == 1);
  CHECK(g1(0, 0) == doctest::Approx(1.0));

  Eigen::MatrixXd two(2, 2);
  two << 0.5, -0.5, 0.5, -0.5;
  Eigen::VectorXd t2(2);
  t2 << 3.0, 3.0;
  const Eigen::MatrixXd g2 = kernel_gram(spec, two, t2);
  CHECK(g2(0, 1) == doctest::Approx(1.0));
  CHECK(g2(1, 0) == doctest::Approx(1.0));

  CHECK_THROWS_AS(kernel_gram(spec, Eigen::MatrixXd(0, 2), Eigen::VectorXd(0)),
                  std::invalid_argument);
}

TEST_CASE("gram entries match pairwise eval") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  const KernelSpec spec = KernelSpec::spatio_temporal(0.8, 10.0);
  Eigen::MatrixXd points(5, 2);
  Eigen::VectorXd times(5);
  for (int i = 0; i < 5; ++i) {
    points(i, 0) = unif(rng);
    points(i, 1) = unif(rng);
    times(i) = std::abs(unif(rng)) * 10;
  }
  const Eigen::MatrixXd gram = kernel_gram(spec, points, times);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      CHECK(gram(i, j) == doctest::Approx(kernel_eval(spec, points.row(i), times(i),
                                                      points.row(j), times(j)))
                              .epsilon(1e-14));
    }
  }
}

TEST_CASE("kernel properties: symmetry, range, monotone decay") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  std::uniform_real_distribution<double> scale(0.2, 30.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const KernelSpec spec = KernelSpec::spatio_temporal(scale(rng), scale(rng));
    const Eigen::VectorXd xa = vec2(unif(rng), unif(rng));
    const Eigen::VectorXd xb = vec2(unif(rng), unif(rng));
    const double ta = std::abs(unif(rng)), tb = std::abs(unif(rng));
    const double ab = kernel_eval(spec, xa, ta, xb, tb);
    const double ba = kernel_eval(spec, xb, tb, xa, ta);
    CHECK(ab == ba);
    CHECK(ab > 0.0);
    CHECK(ab <= 1.0);

    // growing spatial separation, fixed times
    const Eigen::VectorXd direction = (xb - xa).norm() > 0 ? xb : vec2(1.0, 0.0);
    const double near = kernel_eval(spec, xa, ta, xa + 0.5 * direction, ta);
    const double far = kernel_eval(spec, xa, ta, xa + 1.0 * direction, ta);
    CHECK(far <= near + 1e-15);
    // growing temporal separation, fixed decisions
    const double soon = kernel_eval(spec, xa, ta, xa, ta + 1.0);
    const double late = kernel_eval(spec, xa, ta, xa, ta + 2.0);
    CHECK(late <= soon + 1e-15);
  }
}

TEST_CASE("gram on 50 random points is numerically PSD") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  const KernelSpec spec = KernelSpec::spatio_temporal(1.0, 15.0);
  Eigen::MatrixXd points(50, 2);
  Eigen::VectorXd times(50);
  for (int i = 0; i < 50; ++i) {
    points(i, 0) = unif(rng);
    points(i, 1) = unif(rng);
    times(i) = std::abs(unif(rng)) * 25;
  }
  const Eigen::MatrixXd gram = kernel_gram(spec, points, times);
  CHECK((gram - gram.transpose()).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK((gram.diagonal().array() - 1.0).abs().maxCoeff() == doctest::Approx(0.0));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(gram);
  CHECK(eigen.eigenvalues().minCoeff() >= -1e-8);
}
