#include "swarm/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace swarm::nn {

int ParamStore::add(const std::string& name, Mat value) {
  if (by_name_.count(name)) throw std::invalid_argument("duplicate param: " + name);
  values_.push_back(std::move(value));
  names_.push_back(name);
  by_name_[name] = static_cast<int>(values_.size()) - 1;
  return by_name_[name];
}

int ParamStore::index(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw std::out_of_range("unknown param: " + name);
  return it->second;
}

int64_t ParamStore::scalar_count() const {
  int64_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

GradStore::GradStore(const ParamStore& params) {
  grads_.reserve(params.count());
  for (int i = 0; i < params.count(); ++i) {
    grads_.emplace_back(Mat::Zero(params.value(i).rows(), params.value(i).cols()));
  }
}

void GradStore::zero() {
  for (auto& g : grads_) g.setZero();
}

void GradStore::add(const GradStore& other, double w) {
  for (size_t i = 0; i < grads_.size(); ++i) grads_[i] += w * other.grads_[i];
}

void GradStore::scale(double w) {
  for (auto& g : grads_) g *= w;
}

double GradStore::global_norm() const {
  double ss = 0.0;
  for (const auto& g : grads_) ss += g.squaredNorm();
  return std::sqrt(ss);
}

void GradStore::clip_global_norm(double max_norm) {
  const double n = global_norm();
  if (n > max_norm && n > 0.0) scale(max_norm / n);
}

void TapeBinding::accumulate(GradStore& out) const {
  for (size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i].valid()) out.grad(static_cast<int>(i)) += tape_.grad(vars_[i]);
  }
}

Mat orthogonal(int rows, int cols, double gain, Rng& rng) {
  if (cols > rows) {
    return orthogonal(cols, rows, gain, rng).transpose().eval();
  }
  Mat a(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) a(r, c) = rng.gaussian();
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ() * Mat::Identity(rows, std::min(rows, cols));
  Mat r_mat = qr.matrixQR().topRows(std::min(rows, cols)).triangularView<Eigen::Upper>();
  // Fix signs so the decomposition is unique.
  for (int c = 0; c < q.cols(); ++c) {
    if (r_mat(c, c) < 0.0) q.col(c) = -q.col(c);
  }
  return gain * q;
}

RmsProp::RmsProp(const ParamStore& params, double lr, double decay, double eps)
    : lr_(lr), decay_(decay), eps_(eps) {
  cache_.reserve(params.count());
  for (int i = 0; i < params.count(); ++i) {
    cache_.emplace_back(Mat::Zero(params.value(i).rows(), params.value(i).cols()));
  }
}

void RmsProp::step(ParamStore& params, const GradStore& grads) {
  for (int i = 0; i < params.count(); ++i) {
    const Mat& g = grads.grad(i);
    cache_[i] = decay_ * cache_[i] + (1.0 - decay_) * g.cwiseProduct(g);
    params.value(i).array() -=
        lr_ * g.array() / (cache_[i].array().sqrt() + eps_);
  }
}

}  // namespace swarm::nn
