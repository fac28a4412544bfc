#ifndef SWARM_TAPE_HPP_
#define SWARM_TAPE_HPP_

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace swarm::ad {

using Mat = Eigen::MatrixXd;

// Reverse-mode autodiff over dense matrices. One Tape records one forward
// pass; backward() walks it in reverse. Handles are indices into the tape.
class Tape;

struct Var {
  int i = -1;
  bool valid() const { return i >= 0; }
};

class Tape {
 public:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(Tape&)> back;  // accumulates into parents' grads
  };

  Var leaf(Mat v) {
    nodes_.push_back(Node{std::move(v), Mat(), nullptr});
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  Var record(Mat v, std::function<void(Tape&)> back) {
    nodes_.push_back(Node{std::move(v), Mat(), std::move(back)});
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  const Mat& value(Var v) const { return nodes_[v.i].value; }
  const Mat& grad(Var v) const { return nodes_[v.i].grad; }
  Mat& grad_ref(int i) { return nodes_[i].grad; }
  double scalar(Var v) const { return nodes_[v.i].value(0, 0); }
  size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and propagates; loss must be 1x1.
  void backward(Var loss);

  void clear() { nodes_.clear(); }

 private:
  std::vector<Node> nodes_;
};

// -- op library -----------------------------------------------------------

Var matmul(Tape& t, Var a, Var b);      // A B
Var matmul_nt(Tape& t, Var a, Var b);   // A B^T
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);         // elementwise
Var scale(Tape& t, Var a, double c);
Var add_const(Tape& t, Var a, const Mat& c);
Var mul_const(Tape& t, Var a, const Mat& c);
Var add_rowvec(Tape& t, Var a, Var r);  // broadcast 1 x d over rows
Var mul_rowvec(Tape& t, Var a, Var r);  // elementwise, r broadcast over rows
Var sum_rows(Tape& t, Var a);           // T x d -> T x 1
Var relu(Tape& t, Var a);
Var tanh_op(Tape& t, Var a);
Var exp_op(Tape& t, Var a);
Var log_op(Tape& t, Var a);
Var square(Tape& t, Var a);
Var clamp(Tape& t, Var a, double lo, double hi);
Var min_op(Tape& t, Var a, Var b);      // elementwise min
Var sum(Tape& t, Var a);                // -> 1x1
Var mean(Tape& t, Var a);               // -> 1x1
Var mean_rows(Tape& t, Var a);          // T x d -> 1 x d
Var slice_rows(Tape& t, Var a, int r0, int n);
Var slice_cols(Tape& t, Var a, int c0, int n);
Var concat_rows(Tape& t, const std::vector<Var>& parts);
Var concat_cols(Tape& t, const std::vector<Var>& parts);
Var softmax_rows(Tape& t, Var a);
Var layernorm_rows(Tape& t, Var a, Var gain, Var bias, double eps = 1e-5);

}  // namespace swarm::ad

#endif  // SWARM_TAPE_HPP_
