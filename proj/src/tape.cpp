#include "swarm/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace swarm::ad {

void Tape::backward(Var loss) {
  if (nodes_[loss.i].value.size() != 1) {
    throw std::invalid_argument("backward: loss must be scalar");
  }
  for (auto& n : nodes_) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  nodes_[loss.i].grad(0, 0) = 1.0;
  for (int i = loss.i; i >= 0; --i) {
    if (nodes_[i].back) nodes_[i].back(*this);
  }
}

namespace {
// Helper to fetch grad of node `self` inside a backward closure.
inline const Mat& g_of(Tape& t, int self) { return t.grad_ref(self); }
}  // namespace

Var matmul(Tape& t, Var a, Var b) {
  Mat v = t.value(a) * t.value(b);
  int ai = a.i, bi = b.i;
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    const Mat& g = g_of(tt, self);
    tt.grad_ref(ai).noalias() += g * tt.value(Var{bi}).transpose();
    tt.grad_ref(bi).noalias() += tt.value(Var{ai}).transpose() * g;
  });
}

Var matmul_nt(Tape& t, Var a, Var b) {
  Mat v = t.value(a) * t.value(b).transpose();
  int ai = a.i, bi = b.i;
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    const Mat& g = g_of(tt, self);
    tt.grad_ref(ai).noalias() += g * tt.value(Var{bi});
    tt.grad_ref(bi).noalias() += g.transpose() * tt.value(Var{ai});
  });
}

Var add(Tape& t, Var a, Var b) {
  Mat v = t.value(a) + t.value(b);
  int ai = a.i, bi = b.i;
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    const Mat& g = g_of(tt, self);
    tt.grad_ref(ai) += g;
    tt.grad_ref(bi) += g;
  });
}

Var sub(Tape& t, Var a, Var b) {
  Mat v = t.value(a) - t.value(b);
  int ai = a.i, bi = b.i;
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    const Mat& g = g_of(tt, self);
    tt.grad_ref(ai) += g;
    tt.grad_ref(bi) -= g;
  });
}

Var mul(Tape& t, Var a, Var b) {
  Mat v = t.value(a).cwiseProduct(t.value(b));
  int ai = a.i, bi = b.i;
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    const Mat& g = g_of(tt, self);
    tt.grad_ref(ai) += g.cwiseProduct(tt.value(Var{bi}));
    tt.grad_ref(bi) += g.cwiseProduct(tt.value(Var{ai}));
  });
}

Var scale(Tape& t, Var a, double c) {
  Mat v = c * t.value(a);
  int ai = a.i;
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    tt.grad_ref(ai) += c * g_of(tt, self);
  });
}

Var add_const(Tape& t, Var a, const Mat& c) {
  Mat v = t.value(a) + c;
  int ai = a.i;
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    tt.grad_ref(ai) += g_of(tt, self);
  });
}

Var mul_const(Tape& t, Var a, const Mat& c) {
  Mat v = t.value(a).cwiseProduct(c);
  int ai = a.i;
  int self = static_cast<int>(t.size());
  Mat cc = c;
  return t.record(std::move(v), [=](Tape& tt) {
    tt.grad_ref(ai) += g_of(tt, self).cwiseProduct(cc);
  });
}

Var add_rowvec(Tape& t, Var a, Var r) {
  Mat v = t.value(a);
  v.rowwise() += t.value(r).row(0);
  int ai = a.i, ri = r.i;
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    const Mat& g = g_of(tt, self);
    tt.grad_ref(ai) += g;
    tt.grad_ref(ri) += g.colwise().sum();
  });
}

Var mul_rowvec(Tape& t, Var a, Var r) {
  Mat v = t.value(a);
  v.array().rowwise() *= t.value(r).row(0).array();
  int ai = a.i, ri = r.i;
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    const Mat& g = g_of(tt, self);
    Mat ga = g;
    ga.array().rowwise() *= tt.value(Var{ri}).row(0).array();
    tt.grad_ref(ai) += ga;
    tt.grad_ref(ri) += g.cwiseProduct(tt.value(Var{ai})).colwise().sum();
  });
}

Var sum_rows(Tape& t, Var a) {
  Mat v = t.value(a).rowwise().sum();
  int ai = a.i;
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    const Mat& g = g_of(tt, self);
    tt.grad_ref(ai) += g.replicate(1, tt.value(Var{ai}).cols());
  });
}

Var relu(Tape& t, Var a) {
  Mat v = t.value(a).cwiseMax(0.0);
  int ai = a.i;
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    const Mat& x = tt.value(Var{ai});
    tt.grad_ref(ai) += g_of(tt, self).cwiseProduct(
        (x.array() > 0.0).cast<double>().matrix());
  });
}

Var tanh_op(Tape& t, Var a) {
  Mat v = t.value(a).array().tanh().matrix();
  int ai = a.i;
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    const Mat& y = tt.value(Var{self});
    tt.grad_ref(ai) += g_of(tt, self).cwiseProduct(
        (1.0 - y.array().square()).matrix());
  });
}

Var exp_op(Tape& t, Var a) {
  Mat v = t.value(a).array().exp().matrix();
  int ai = a.i;
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    tt.grad_ref(ai) += g_of(tt, self).cwiseProduct(tt.value(Var{self}));
  });
}

Var log_op(Tape& t, Var a) {
  Mat v = t.value(a).array().log().matrix();
  int ai = a.i;
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    tt.grad_ref(ai) += g_of(tt, self).cwiseQuotient(tt.value(Var{ai}));
  });
}

Var square(Tape& t, Var a) {
  Mat v = t.value(a).array().square().matrix();
  int ai = a.i;
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    tt.grad_ref(ai) += 2.0 * g_of(tt, self).cwiseProduct(tt.value(Var{ai}));
  });
}

Var clamp(Tape& t, Var a, double lo, double hi) {
  Mat v = t.value(a).cwiseMax(lo).cwiseMin(hi);
  int ai = a.i;
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    const Mat& x = tt.value(Var{ai});
    Mat inside = ((x.array() > lo) && (x.array() < hi)).cast<double>().matrix();
    tt.grad_ref(ai) += g_of(tt, self).cwiseProduct(inside);
  });
}

Var min_op(Tape& t, Var a, Var b) {
  Mat v = t.value(a).cwiseMin(t.value(b));
  int ai = a.i, bi = b.i;
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    const Mat& g = g_of(tt, self);
    const Mat& av = tt.value(Var{ai});
    const Mat& bv = tt.value(Var{bi});
    Mat a_wins = (av.array() <= bv.array()).cast<double>().matrix();
    tt.grad_ref(ai) += g.cwiseProduct(a_wins);
    tt.grad_ref(bi) += g.cwiseProduct((1.0 - a_wins.array()).matrix());
  });
}

Var sum(Tape& t, Var a) {
  Mat v(1, 1);
  v(0, 0) = t.value(a).sum();
  int ai = a.i;
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    tt.grad_ref(ai).array() += g_of(tt, self)(0, 0);
  });
}

Var mean(Tape& t, Var a) {
  const double n = static_cast<double>(t.value(a).size());
  Mat v(1, 1);
  v(0, 0) = t.value(a).sum() / n;
  int ai = a.i;
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    tt.grad_ref(ai).array() += g_of(tt, self)(0, 0) / n;
  });
}

Var mean_rows(Tape& t, Var a) {
  const double n = static_cast<double>(t.value(a).rows());
  Mat v = t.value(a).colwise().mean();
  int ai = a.i;
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    const Mat& g = g_of(tt, self);
    tt.grad_ref(ai).rowwise() += (g.row(0) / n);
  });
}

Var slice_rows(Tape& t, Var a, int r0, int n) {
  Mat v = t.value(a).middleRows(r0, n);
  int ai = a.i;
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    tt.grad_ref(ai).middleRows(r0, n) += g_of(tt, self);
  });
}

Var slice_cols(Tape& t, Var a, int c0, int n) {
  Mat v = t.value(a).middleCols(c0, n);
  int ai = a.i;
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    tt.grad_ref(ai).middleCols(c0, n) += g_of(tt, self);
  });
}

Var concat_rows(Tape& t, const std::vector<Var>& parts) {
  int rows = 0;
  const int cols = static_cast<int>(t.value(parts[0]).cols());
  for (Var p : parts) rows += static_cast<int>(t.value(p).rows());
  Mat v(rows, cols);
  int r = 0;
  std::vector<int> idx, sizes;
  for (Var p : parts) {
    const int nr = static_cast<int>(t.value(p).rows());
    v.middleRows(r, nr) = t.value(p);
    idx.push_back(p.i);
    sizes.push_back(nr);
    r += nr;
  }
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    const Mat& g = g_of(tt, self);
    int rr = 0;
    for (size_t k = 0; k < idx.size(); ++k) {
      tt.grad_ref(idx[k]) += g.middleRows(rr, sizes[k]);
      rr += sizes[k];
    }
  });
}

Var concat_cols(Tape& t, const std::vector<Var>& parts) {
  int cols = 0;
  const int rows = static_cast<int>(t.value(parts[0]).rows());
  for (Var p : parts) cols += static_cast<int>(t.value(p).cols());
  Mat v(rows, cols);
  int c = 0;
  std::vector<int> idx, sizes;
  for (Var p : parts) {
    const int nc = static_cast<int>(t.value(p).cols());
    v.middleCols(c, nc) = t.value(p);
    idx.push_back(p.i);
    sizes.push_back(nc);
    c += nc;
  }
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    const Mat& g = g_of(tt, self);
    int cc = 0;
    for (size_t k = 0; k < idx.size(); ++k) {
      tt.grad_ref(idx[k]) += g.middleCols(cc, sizes[k]);
      cc += sizes[k];
    }
  });
}

Var softmax_rows(Tape& t, Var a) {
  Mat v = t.value(a);
  for (int r = 0; r < v.rows(); ++r) {
    const double m = v.row(r).maxCoeff();
    v.row(r) = (v.row(r).array() - m).exp();
    v.row(r) /= v.row(r).sum();
  }
  int ai = a.i;
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    const Mat& g = g_of(tt, self);
    const Mat& y = tt.value(Var{self});
    Mat gy = g.cwiseProduct(y);
    Eigen::VectorXd rowdot = gy.rowwise().sum();
    tt.grad_ref(ai) += gy - y.cwiseProduct(rowdot.replicate(1, y.cols()));
  });
}

Var layernorm_rows(Tape& t, Var a, Var gain, Var bias, double eps) {
  const Mat& x = t.value(a);
  const int d = static_cast<int>(x.cols());
  Eigen::VectorXd mu = x.rowwise().mean();
  Mat centered = x - mu.replicate(1, d);
  Eigen::VectorXd var = centered.array().square().matrix().rowwise().mean();
  Eigen::VectorXd inv_std = (var.array() + eps).rsqrt();
  Mat xhat = centered.cwiseProduct(inv_std.replicate(1, d));
  Mat v = xhat;
  v.array().rowwise() *= t.value(gain).row(0).array();
  v.rowwise() += t.value(bias).row(0);
  int ai = a.i, gi = gain.i, bi = bias.i;
  int self = static_cast<int>(t.size());
  return t.record(std::move(v), [=](Tape& tt) {
    const Mat& g = g_of(tt, self);
    tt.grad_ref(gi) += g.cwiseProduct(xhat).colwise().sum();
    tt.grad_ref(bi) += g.colwise().sum();
    Mat dxhat = g;
    dxhat.array().rowwise() *= tt.value(Var{gi}).row(0).array();
    // per row: dx = inv_std * (dxhat - mean(dxhat) - xhat * mean(dxhat*xhat))
    Eigen::VectorXd m1 = dxhat.rowwise().mean();
    Eigen::VectorXd m2 = dxhat.cwiseProduct(xhat).rowwise().mean();
    Mat dx = dxhat - m1.replicate(1, d) - xhat.cwiseProduct(m2.replicate(1, d));
    dx = dx.cwiseProduct(inv_std.replicate(1, d));
    tt.grad_ref(ai) += dx;
  });
}

}  // namespace swarm::ad
