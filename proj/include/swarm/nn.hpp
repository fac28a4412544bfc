#ifndef SWARM_NN_HPP_
#define SWARM_NN_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "swarm/rng.hpp"
#include "swarm/tape.hpp"

namespace swarm::nn {

using Mat = Eigen::MatrixXd;

// Flat store of named parameter matrices; the single source of truth for
// trainable state. Order of registration is the canonical order.
class ParamStore {
 public:
  int add(const std::string& name, Mat value);
  int index(const std::string& name) const;
  bool has(const std::string& name) const { return by_name_.count(name) > 0; }
  Mat& value(int i) { return values_[i]; }
  const Mat& value(int i) const { return values_[i]; }
  Mat& value(const std::string& name) { return values_[index(name)]; }
  const Mat& value(const std::string& name) const { return values_[index(name)]; }
  const std::string& name(int i) const { return names_[i]; }
  int count() const { return static_cast<int>(values_.size()); }
  int64_t scalar_count() const;

 private:
  std::vector<Mat> values_;
  std::vector<std::string> names_;
  std::map<std::string, int> by_name_;
};

// Gradient accumulator aligned with a ParamStore.
class GradStore {
 public:
  explicit GradStore(const ParamStore& params);
  void zero();
  Mat& grad(int i) { return grads_[i]; }
  const Mat& grad(int i) const { return grads_[i]; }
  void add(const GradStore& other, double w = 1.0);
  void scale(double w);
  double global_norm() const;
  void clip_global_norm(double max_norm);
  int count() const { return static_cast<int>(grads_.size()); }

 private:
  std::vector<Mat> grads_;
};

// Binds store parameters to tape leaves lazily, once per forward pass.
class TapeBinding {
 public:
  TapeBinding(ad::Tape& tape, const ParamStore& params)
      : tape_(tape), params_(params), vars_(params.count()) {}

  ad::Var operator()(int i) {
    if (!vars_[i].valid()) vars_[i] = tape_.leaf(params_.value(i));
    return vars_[i];
  }
  ad::Var operator()(const std::string& name) {
    return (*this)(params_.index(name));
  }

  // After tape.backward(), fold parameter gradients into `out`.
  void accumulate(GradStore& out) const;

 private:
  ad::Tape& tape_;
  const ParamStore& params_;
  std::vector<ad::Var> vars_;
};

// Orthogonal initialization with gain; rows x cols.
Mat orthogonal(int rows, int cols, double gain, Rng& rng);

// RMSProp with an exponential moving average of squared gradients.
class RmsProp {
 public:
  RmsProp(const ParamStore& params, double lr, double decay = 0.99,
          double eps = 1e-8);
  void step(ParamStore& params, const GradStore& grads);
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  double lr_, decay_, eps_;
  std::vector<Mat> cache_;
};

// Running mean/variance via Welford; checkpointed so evaluation reproduces
// training-time reward scaling.
struct RunningStat {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x) {
    count += 1.0;
    const double d = x - mean;
    mean += d / count;
    m2 += d * (x - mean);
  }
  double variance() const { return count > 1.0 ? m2 / count : 1.0; }
  double stddev() const { return std::sqrt(variance()); }
};

}  // namespace swarm::nn

#endif  // SWARM_NN_HPP_
