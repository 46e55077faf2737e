#include "tvsafeopt/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace tvsafeopt {

KernelSpec KernelSpec::spatial(double sigma1) {
  KernelSpec spec{KernelMode::kSpatialOnly, sigma1, 1.0};
  spec.validate();
  return spec;
}

KernelSpec KernelSpec::spatio_temporal(double sigma1, double sigma2) {
  KernelSpec spec{KernelMode::kSpatioTemporal, sigma1, sigma2};
  spec.validate();
  return spec;
}

void KernelSpec::validate() const {
  if (!(spatial_lengthscale > 0.0)) {
    throw std::invalid_argument("KernelSpec: spatial lengthscale must be > 0");
  }
  if (mode == KernelMode::kSpatioTemporal && !(temporal_lengthscale > 0.0)) {
    throw std::invalid_argument("KernelSpec: temporal lengthscale must be > 0");
  }
}

namespace {

double se_factor(double sq_dist, double lengthscale) {
  return std::exp(-sq_dist / (2.0 * lengthscale * lengthscale));
}

}  // namespace

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& xa, double ta,
                   const Eigen::VectorXd& xb, double tb) {
  if (xa.size() != xb.size()) {
    throw std::invalid_argument("kernel_eval: decision dimension mismatch");
  }
  double value = se_factor((xa - xb).squaredNorm(), spec.spatial_lengthscale);
  if (spec.mode == KernelMode::kSpatioTemporal) {
    const double dt = ta - tb;
    value *= se_factor(dt * dt, spec.temporal_lengthscale);
  }
  return value;
}

Eigen::MatrixXd kernel_gram(const KernelSpec& spec, const Eigen::MatrixXd& points,
                            const Eigen::VectorXd& times) {
  if (points.rows() == 0) {
    throw std::invalid_argument("kernel_gram: empty point sequence");
  }
  if (points.rows() != times.size()) {
    throw std::invalid_argument("kernel_gram: points/times length mismatch");
  }
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    gram(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double value =
          kernel_eval(spec, points.row(i), times(i), points.row(j), times(j));
      gram(i, j) = value;
      gram(j, i) = value;
    }
  }
  return gram;
}

Eigen::VectorXd kernel_cross(const KernelSpec& spec, const Eigen::VectorXd& xq, double tq,
                             const Eigen::MatrixXd& points, const Eigen::VectorXd& times) {
  const Eigen::Index n = points.rows();
  Eigen::VectorXd cross(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    cross(i) = kernel_eval(spec, xq, tq, points.row(i), times(i));
  }
  return cross;
}

}  // namespace tvsafeopt
