#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tvsafeopt/kernel.hpp"

namespace tvsafeopt {

/// One scalar measurement of output `output` taken at decision x, time t.
struct GpRecord {
  Eigen::VectorXd x;
  double t = 0.0;
  int output = 0;
  double y = 0.0;
};

/// Accumulated training data for all outputs, with the shared homoscedastic
/// observation noise level.
class ObservationSet {
 public:
  ObservationSet(int n_outputs, double noise_std);

  void add(Eigen::VectorXd x, double t, int output, double y);
  /// Adds one record per output (y has one entry per output index).
  void add_joint(const Eigen::VectorXd& x, double t, const Eigen::VectorXd& y);

  int n_outputs() const { return n_outputs_; }
  double noise_std() const { return noise_std_; }
  const std::vector<GpRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }

 private:
  int n_outputs_;
  double noise_std_;
  std::vector<GpRecord> records_;
};

struct NumericalError : std::runtime_error {
  int output;
  explicit NumericalError(int output_index);
};

/// Exact GP posterior with cached Cholesky factorizations of K + sigma_n^2 I.
/// Outputs that share a kernel spec and an identical design (same (x, t)
/// sequence) share one factorization. Immutable once constructed; queries
/// are read-only and safe to issue concurrently.
class PosteriorModel {
 public:
  /// Prior model (no observations): mean 0, std 1 everywhere.
  PosteriorModel() = default;

  static PosteriorModel condition(const ObservationSet& observations,
                                  const std::vector<KernelSpec>& kernel_per_output);

  /// Model extended with one joint observation (one value per output);
  /// factorization grows in place on a copy, O(n^2) per output group.
  PosteriorModel extended(const Eigen::VectorXd& x, double t,
                          const Eigen::VectorXd& y) const;

  /// (mean, std) of output `output` at query (x, t).
  std::pair<double, double> posterior(const Eigen::VectorXd& x, double t, int output) const;

  /// Element-wise posterior over query rows; one factorization reuse.
  void posterior_batch(const Eigen::MatrixXd& queries_x, const Eigen::VectorXd& queries_t,
                       int output, Eigen::VectorXd& mean, Eigen::VectorXd& stddev) const;

  /// (mean, std) of output `output` at `query` as if (xh, th, yh) had also
  /// been observed for that output. Rank-1 posterior update on the cached
  /// factorization; equals full reconditioning.
  std::pair<double, double> posterior_with_added(const Eigen::VectorXd& xh, double th,
                                                 double yh, const Eigen::VectorXd& qx,
                                                 double qt, int output) const;

  int n_outputs() const { return static_cast<int>(group_of_output_.size()); }
  int n_observations(int output) const;
  double noise_std() const { return noise_std_; }

  // Fast path for grid-wide prediction: the caller supplies the
  // cross-covariance matrix between its queries (rows) and the design of
  // the output's group (columns, in design order).
  int group_of(int output) const { return group_of_output_[output]; }
  int n_groups() const { return static_cast<int>(groups_.size()); }
  const Eigen::MatrixXd& group_design_x(int group) const { return groups_[group].x; }
  const Eigen::VectorXd& group_design_t(int group) const { return groups_[group].t; }
  const KernelSpec& group_kernel(int group) const { return groups_[group].spec; }
  const std::vector<int>& group_outputs(int group) const { return groups_[group].outputs; }
  /// means = cross * alpha; stddev from the whitened cross-covariance
  /// v = L^{-1} cross^T, which is exported through `whitened_out` when the
  /// caller needs posterior covariances between queries.
  void predict_with_cross(int group, const Eigen::MatrixXd& cross, Eigen::MatrixXd& means,
                          Eigen::VectorXd& stddev,
                          Eigen::MatrixXd* whitened_out = nullptr) const;

 private:
  struct Group {
    KernelSpec spec;
    std::vector<int> outputs;  // output indices served by this factorization
    Eigen::MatrixXd x;         // design decisions, n x d
    Eigen::VectorXd t;         // design times, n
    Eigen::MatrixXd chol;      // lower Cholesky factor of K + sigma_n^2 I
    Eigen::MatrixXd targets;   // n x |outputs|
    Eigen::MatrixXd alpha;     // (K + sigma_n^2 I)^{-1} targets
  };

  const Group* group_for(int output) const;
  static Eigen::MatrixXd robust_cholesky(Eigen::MatrixXd gram_plus_noise, int output);

  std::vector<Group> groups_;
  std::vector<int> group_of_output_;  // -1 when the output has no data
  std::vector<KernelSpec> kernel_per_output_;
  double noise_std_ = 0.01;
};

}  // namespace tvsafeopt
