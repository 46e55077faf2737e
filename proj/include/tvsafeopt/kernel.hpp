#pragma once

#include <Eigen/Dense>

namespace tvsafeopt {

enum class KernelMode { kSpatialOnly, kSpatioTemporal };

/// Squared-exponential covariance over (decision, time) pairs with unit
/// diagonal. Spatio-temporal mode multiplies a spatial and a temporal
/// squared-exponential factor; spatial-only mode ignores time entirely.
struct KernelSpec {
  KernelMode mode = KernelMode::kSpatioTemporal;
  double spatial_lengthscale = 1.0;   // sigma1, decision-space units
  double temporal_lengthscale = 1.0;  // sigma2, time-step units

  static KernelSpec spatial(double sigma1);
  static KernelSpec spatio_temporal(double sigma1, double sigma2);

  /// Throws std::invalid_argument on non-positive lengthscales.
  void validate() const;

  bool operator==(const KernelSpec&) const = default;
};

/// kappa((xa, ta), (xb, tb)). Result in (0, 1], symmetric, equal to 1 on
/// the diagonal. Throws std::invalid_argument on dimension mismatch.
double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& xa, double ta,
                   const Eigen::VectorXd& xb, double tb);

/// Gram matrix of kappa over the rows of `points` paired with `times`.
/// Symmetric with unit diagonal by construction.
Eigen::MatrixXd kernel_gram(const KernelSpec& spec, const Eigen::MatrixXd& points,
                            const Eigen::VectorXd& times);

/// Column of cross-covariances between one query and the rows of `points`.
Eigen::VectorXd kernel_cross(const KernelSpec& spec, const Eigen::VectorXd& xq, double tq,
                             const Eigen::MatrixXd& points, const Eigen::VectorXd& times);

}  // namespace tvsafeopt
