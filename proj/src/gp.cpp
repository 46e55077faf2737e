#include "tvsafeopt/gp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tvsafeopt {

ObservationSet::ObservationSet(int n_outputs, double noise_std)
    : n_outputs_(n_outputs), noise_std_(noise_std) {
  if (n_outputs < 1) throw std::invalid_argument("ObservationSet: need >= 1 output");
  if (!(noise_std > 0.0)) throw std::invalid_argument("ObservationSet: noise_std must be > 0");
}

void ObservationSet::add(Eigen::VectorXd x, double t, int output, double y) {
  if (output < 0 || output >= n_outputs_) {
    throw std::invalid_argument("ObservationSet: output index out of range");
  }
  if (t < 0.0) throw std::invalid_argument("ObservationSet: time must be nonnegative");
  records_.push_back({std::move(x), t, output, y});
}

void ObservationSet::add_joint(const Eigen::VectorXd& x, double t, const Eigen::VectorXd& y) {
  if (y.size() != n_outputs_) {
    throw std::invalid_argument("ObservationSet: joint value count mismatch");
  }
  for (int i = 0; i < n_outputs_; ++i) add(x, t, i, y(i));
}

NumericalError::NumericalError(int output_index)
    : std::runtime_error("GP factorization failed after jitter escalation (output " +
                         std::to_string(output_index) + ")"),
      output(output_index) {}

Eigen::MatrixXd PosteriorModel::robust_cholesky(Eigen::MatrixXd gram_plus_noise, int output) {
  double jitter = 1e-10;
  for (int attempt = 0; attempt < 6; ++attempt) {
    Eigen::LLT<Eigen::MatrixXd> llt(gram_plus_noise);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    gram_plus_noise.diagonal().array() += jitter;
    jitter *= 10.0;  // escalation 1e-10 .. 1e-6, then give up
  }
  throw NumericalError(output);
}

PosteriorModel PosteriorModel::condition(const ObservationSet& observations,
                                         const std::vector<KernelSpec>& kernel_per_output) {
  if (static_cast<int>(kernel_per_output.size()) != observations.n_outputs()) {
    throw std::invalid_argument("condition: one kernel spec per output required");
  }
  PosteriorModel model;
  model.noise_std_ = observations.noise_std();
  model.group_of_output_.assign(observations.n_outputs(), -1);
  model.kernel_per_output_ = kernel_per_output;

  // Per-output designs in insertion order.
  std::vector<Eigen::MatrixXd> xs(observations.n_outputs());
  std::vector<Eigen::VectorXd> ts(observations.n_outputs());
  std::vector<Eigen::VectorXd> ys(observations.n_outputs());
  std::vector<int> counts(observations.n_outputs(), 0);
  for (const GpRecord& r : observations.records()) ++counts[r.output];
  for (int i = 0; i < observations.n_outputs(); ++i) {
    const GpRecord* first = nullptr;
    for (const GpRecord& r : observations.records()) {
      if (r.output == i) {
        first = &r;
        break;
      }
    }
    if (!first) continue;
    xs[i].resize(counts[i], first->x.size());
    ts[i].resize(counts[i]);
    ys[i].resize(counts[i]);
  }
  std::vector<int> fill(observations.n_outputs(), 0);
  for (const GpRecord& r : observations.records()) {
    const int i = r.output;
    if (r.x.size() != xs[i].cols()) {
      throw std::invalid_argument("condition: inconsistent decision dimension");
    }
    xs[i].row(fill[i]) = r.x;
    ts[i](fill[i]) = r.t;
    ys[i](fill[i]) = r.y;
    ++fill[i];
  }

  auto same_design = [](const Eigen::MatrixXd& xa, const Eigen::VectorXd& ta,
                        const Eigen::MatrixXd& xb, const Eigen::VectorXd& tb) {
    return xa.rows() == xb.rows() && xa.cols() == xb.cols() && xa == xb && ta == tb;
  };

  for (int i = 0; i < observations.n_outputs(); ++i) {
    if (counts[i] == 0) continue;
    int found = -1;
    for (int g = 0; g < static_cast<int>(model.groups_.size()); ++g) {
      if (model.groups_[g].spec == kernel_per_output[i] &&
          same_design(model.groups_[g].x, model.groups_[g].t, xs[i], ts[i])) {
        found = g;
        break;
      }
    }
    if (found < 0) {
      Group group;
      group.spec = kernel_per_output[i];
      group.spec.validate();
      group.x = xs[i];
      group.t = ts[i];
      Eigen::MatrixXd gram = kernel_gram(group.spec, group.x, group.t);
      gram.diagonal().array() += observations.noise_std() * observations.noise_std();
      group.chol = robust_cholesky(std::move(gram), i);
      model.groups_.push_back(std::move(group));
      found = static_cast<int>(model.groups_.size()) - 1;
    }
    Group& group = model.groups_[found];
    group.outputs.push_back(i);
    group.targets.conservativeResize(counts[i], group.outputs.size());
    group.targets.col(group.outputs.size() - 1) = ys[i];
    model.group_of_output_[i] = found;
  }
  for (Group& group : model.groups_) {
    group.alpha = group.chol.triangularView<Eigen::Lower>().solve(group.targets);
    group.chol.triangularView<Eigen::Lower>().transpose().solveInPlace(group.alpha);
  }
  return model;
}

PosteriorModel PosteriorModel::extended(const Eigen::VectorXd& x, double t,
                                        const Eigen::VectorXd& y) const {
  if (y.size() != n_outputs()) {
    throw std::invalid_argument("extended: joint value count mismatch");
  }
  PosteriorModel model = *this;
  for (Group& group : model.groups_) {
    const Eigen::Index n = group.x.rows();
    const Eigen::VectorXd cross = kernel_cross(group.spec, x, t, group.x, group.t);
    Eigen::VectorXd b = group.chol.triangularView<Eigen::Lower>().solve(cross);
    const double noise_var = model.noise_std_ * model.noise_std_;
    const double pivot_sq = std::max(1.0 + noise_var - b.squaredNorm(), 1e-12);

    group.x.conservativeResize(n + 1, Eigen::NoChange);
    group.x.row(n) = x;
    group.t.conservativeResize(n + 1);
    group.t(n) = t;
    group.chol.conservativeResize(n + 1, n + 1);
    group.chol.row(n).head(n) = b;
    group.chol.col(n).setZero();
    group.chol(n, n) = std::sqrt(pivot_sq);

    group.targets.conservativeResize(n + 1, Eigen::NoChange);
    for (int c = 0; c < static_cast<int>(group.outputs.size()); ++c) {
      group.targets(n, c) = y(group.outputs[c]);
    }
    group.alpha = group.chol.triangularView<Eigen::Lower>().solve(group.targets);
    group.chol.triangularView<Eigen::Lower>().transpose().solveInPlace(group.alpha);
  }
  return model;
}

const PosteriorModel::Group* PosteriorModel::group_for(int output) const {
  if (output < 0 || output >= n_outputs() || group_of_output_[output] < 0) return nullptr;
  return &groups_[group_of_output_[output]];
}

int PosteriorModel::n_observations(int output) const {
  const Group* group = group_for(output);
  return group ? static_cast<int>(group->x.rows()) : 0;
}

std::pair<double, double> PosteriorModel::posterior(const Eigen::VectorXd& x, double t,
                                                    int output) const {
  const Group* group = group_for(output);
  if (!group) return {0.0, 1.0};  // prior
  const Eigen::VectorXd cross = kernel_cross(group->spec, x, t, group->x, group->t);
  const int col = static_cast<int>(std::find(group->outputs.begin(), group->outputs.end(),
                                             output) -
                                   group->outputs.begin());
  const double mean = cross.dot(group->alpha.col(col));
  const Eigen::VectorXd v = group->chol.triangularView<Eigen::Lower>().solve(cross);
  const double var = std::max(0.0, 1.0 - v.squaredNorm());
  return {mean, std::sqrt(var)};
}

void PosteriorModel::posterior_batch(const Eigen::MatrixXd& queries_x,
                                     const Eigen::VectorXd& queries_t, int output,
                                     Eigen::VectorXd& mean, Eigen::VectorXd& stddev) const {
  const Eigen::Index q = queries_x.rows();
  if (queries_t.size() != q) {
    throw std::invalid_argument("posterior_batch: queries_x/queries_t length mismatch");
  }
  mean.resize(q);
  stddev.resize(q);
  for (Eigen::Index i = 0; i < q; ++i) {
    const auto [m, s] = posterior(queries_x.row(i), queries_t(i), output);
    mean(i) = m;
    stddev(i) = s;
  }
}

void PosteriorModel::predict_with_cross(int group_index, const Eigen::MatrixXd& cross,
                                        Eigen::MatrixXd& means, Eigen::VectorXd& stddev,
                                        Eigen::MatrixXd* whitened_out) const {
  const Group& group = groups_[group_index];
  if (cross.cols() != group.x.rows()) {
    throw std::invalid_argument("predict_with_cross: design size mismatch");
  }
  means.noalias() = cross * group.alpha;
  Eigen::MatrixXd v = group.chol.triangularView<Eigen::Lower>().solve(cross.transpose());
  stddev = (1.0 - v.colwise().squaredNorm().array()).max(0.0).sqrt();
  if (whitened_out) *whitened_out = std::move(v);
}

std::pair<double, double> PosteriorModel::posterior_with_added(const Eigen::VectorXd& xh,
                                                               double th, double yh,
                                                               const Eigen::VectorXd& qx,
                                                               double qt, int output) const {
  const Group* group = group_for(output);
  const double noise_var = noise_std_ * noise_std_;
  if (!group) {
    if (output < 0 || output >= static_cast<int>(kernel_per_output_.size())) {
      throw std::invalid_argument("posterior_with_added: unknown output");
    }
    const double rho = kernel_eval(kernel_per_output_[output], qx, qt, xh, th);
    const double gain = 1.0 + noise_var;
    return {rho * yh / gain, std::sqrt(std::max(0.0, 1.0 - rho * rho / gain))};
  }
  const auto [mean_q, std_q] = posterior(qx, qt, output);
  const auto [mean_h, std_h] = posterior(xh, th, output);
  // posterior covariance between query and hypothetical point
  const Eigen::VectorXd cross_q = kernel_cross(group->spec, qx, qt, group->x, group->t);
  const Eigen::VectorXd cross_h = kernel_cross(group->spec, xh, th, group->x, group->t);
  const Eigen::VectorXd vq = group->chol.triangularView<Eigen::Lower>().solve(cross_q);
  const Eigen::VectorXd vh = group->chol.triangularView<Eigen::Lower>().solve(cross_h);
  const double rho = kernel_eval(group->spec, qx, qt, xh, th) - vq.dot(vh);
  const double gain = std_h * std_h + noise_var;
  const double mean = mean_q + rho * (yh - mean_h) / gain;
  const double var = std::max(0.0, std_q * std_q - rho * rho / gain);
  return {mean, std::sqrt(var)};
}

}  // namespace tvsafeopt
