#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "topoclasp/common.hpp"

namespace topoclasp::ad {

// Dense row-major 64-bit tensor. Everything in the model is rank <= 2;
// scalars are 1x1.
struct Tensor {
  int rows = 0, cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int r, int c, double fill = 0.0)
      : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {}
  static Tensor scalar(double x) {
    Tensor t(1, 1);
    t.v[0] = x;
    return t;
  }

  std::array<int, 2> shape() const { return {rows, cols}; }
  int size() const { return rows * cols; }
  double& at(int i, int j) { return v[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const { return v[static_cast<std::size_t>(i) * cols + j]; }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
};

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<const RowMat> emap(const Tensor& t) {
  return {t.v.data(), t.rows, t.cols};
}
inline Eigen::Map<RowMat> emap(Tensor& t) { return {t.v.data(), t.rows, t.cols}; }

// Reverse-mode tape recorded per minibatch. Nodes are appended in forward
// order; backward() replays the recorded closures in reverse, so every
// consumer has finished accumulating into a node's grad before the node
// itself propagates.
class Tape {
 public:
  using Ref = int;

  Ref input(Tensor t) { return push(std::move(t), nullptr); }

  Ref matmul(Ref a, Ref b, bool trans_a = false, bool trans_b = false) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    int m = trans_a ? ta.cols : ta.rows;
    int k = trans_a ? ta.rows : ta.cols;
    int k2 = trans_b ? tb.cols : tb.rows;
    int n = trans_b ? tb.rows : tb.cols;
    if (k != k2) throw ContractError("matmul: inner dimensions disagree");
    Tensor out(m, n);
    auto am = emap(ta);
    auto bm = emap(tb);
    auto om = emap(out);
    if (!trans_a && !trans_b)
      om.noalias() = am * bm;
    else if (!trans_a && trans_b)
      om.noalias() = am * bm.transpose();
    else if (trans_a && !trans_b)
      om.noalias() = am.transpose() * bm;
    else
      om.noalias() = am.transpose() * bm.transpose();
    return push(std::move(out), [a, b, trans_a, trans_b](Tape& t, Ref self) {
      auto dc = emap(t.gradient(self));
      auto am = emap(t.val(a));
      auto bm = emap(t.val(b));
      auto da = emap(t.gradient(a));
      auto db = emap(t.gradient(b));
      if (!trans_a) {
        if (!trans_b)
          da.noalias() += dc * bm.transpose();
        else
          da.noalias() += dc * bm;
      } else {
        if (!trans_b)
          da.noalias() += bm * dc.transpose();
        else
          da.noalias() += bm.transpose() * dc.transpose();
      }
      if (!trans_b) {
        if (!trans_a)
          db.noalias() += am.transpose() * dc;
        else
          db.noalias() += am * dc;
      } else {
        if (!trans_a)
          db.noalias() += dc.transpose() * am;
        else
          db.noalias() += dc.transpose() * am.transpose();
      }
    });
  }

  // Elementwise when shapes match; otherwise b must be a row vector that is
  // broadcast over a's rows (bias add).
  Ref add(Ref a, Ref b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    Tensor out = ta;
    if (ta.same_shape(tb)) {
      for (int i = 0; i < out.size(); ++i) out.v[i] += tb.v[i];
      return push(std::move(out), [a, b](Tape& t, Ref self) {
        const Tensor& dc = t.gradient(self);
        Tensor& da = t.gradient(a);
        Tensor& db = t.gradient(b);
        for (int i = 0; i < dc.size(); ++i) {
          da.v[i] += dc.v[i];
          db.v[i] += dc.v[i];
        }
      });
    }
    if (tb.rows != 1 || tb.cols != ta.cols)
      throw ContractError("add: shapes incompatible");
    for (int i = 0; i < ta.rows; ++i)
      for (int j = 0; j < ta.cols; ++j) out.at(i, j) += tb.v[j];
    return push(std::move(out), [a, b](Tape& t, Ref self) {
      const Tensor& dc = t.gradient(self);
      Tensor& da = t.gradient(a);
      Tensor& db = t.gradient(b);
      for (int i = 0; i < dc.size(); ++i) da.v[i] += dc.v[i];
      for (int i = 0; i < dc.rows; ++i)
        for (int j = 0; j < dc.cols; ++j) db.v[j] += dc.at(i, j);
    });
  }

  // Gradient at exactly 0 is 0.
  Ref relu(Ref a) {
    Tensor out = val(a);
    // NaN propagates (x==x is false) so poisoned inputs surface in the loss.
    for (double& x : out.v) x = x > 0.0 ? x : (x == x ? 0.0 : x);
    return push(std::move(out), [a](Tape& t, Ref self) {
      const Tensor& dc = t.gradient(self);
      const Tensor& x = t.val(a);
      Tensor& da = t.gradient(a);
      for (int i = 0; i < dc.size(); ++i)
        if (x.v[i] > 0.0) da.v[i] += dc.v[i];
    });
  }

  Ref concat_cols(Ref a, Ref b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (ta.rows != tb.rows) throw ContractError("concat_cols: row counts differ");
    Tensor out(ta.rows, ta.cols + tb.cols);
    for (int i = 0; i < ta.rows; ++i) {
      for (int j = 0; j < ta.cols; ++j) out.at(i, j) = ta.at(i, j);
      for (int j = 0; j < tb.cols; ++j) out.at(i, ta.cols + j) = tb.at(i, j);
    }
    return push(std::move(out), [a, b](Tape& t, Ref self) {
      const Tensor& dc = t.gradient(self);
      Tensor& da = t.gradient(a);
      Tensor& db = t.gradient(b);
      for (int i = 0; i < da.rows; ++i) {
        for (int j = 0; j < da.cols; ++j) da.at(i, j) += dc.at(i, j);
        for (int j = 0; j < db.cols; ++j) db.at(i, j) += dc.at(i, da.cols + j);
      }
    });
  }

  // Mean of the rows of x that fall in each segment; every segment must be
  // non-empty.
  Ref segment_mean(Ref x, std::vector<int> seg, int num_segments) {
    const Tensor& tx = val(x);
    if (static_cast<int>(seg.size()) != tx.rows)
      throw ContractError("segment_mean: segment ids must cover every row");
    std::vector<int> count(num_segments, 0);
    for (int s : seg) {
      if (s < 0 || s >= num_segments) throw ContractError("segment_mean: id out of range");
      ++count[s];
    }
    for (int c : count)
      if (c == 0) throw ContractError("segment_mean: empty segment");
    Tensor out(num_segments, tx.cols);
    for (int i = 0; i < tx.rows; ++i)
      for (int j = 0; j < tx.cols; ++j) out.at(seg[i], j) += tx.at(i, j);
    for (int s = 0; s < num_segments; ++s)
      for (int j = 0; j < tx.cols; ++j) out.at(s, j) /= count[s];
    return push(std::move(out),
                [x, seg = std::move(seg), count = std::move(count)](Tape& t, Ref self) {
                  const Tensor& dc = t.gradient(self);
                  Tensor& dx = t.gradient(x);
                  for (int i = 0; i < dx.rows; ++i) {
                    double inv = 1.0 / count[seg[i]];
                    for (int j = 0; j < dx.cols; ++j)
                      dx.at(i, j) += dc.at(seg[i], j) * inv;
                  }
                });
  }

  // Row-wise x / max(||x||_2, eps) with eps = 1e-12.
  Ref l2_normalize_rows(Ref x) {
    constexpr double kEps = 1e-12;
    const Tensor& tx = val(x);
    Tensor out(tx.rows, tx.cols);
    std::vector<double> norms(tx.rows);
    for (int i = 0; i < tx.rows; ++i) {
      double sq = 0.0;
      for (int j = 0; j < tx.cols; ++j) sq += tx.at(i, j) * tx.at(i, j);
      norms[i] = std::max(std::sqrt(sq), kEps);
      for (int j = 0; j < tx.cols; ++j) out.at(i, j) = tx.at(i, j) / norms[i];
    }
    return push(std::move(out), [x, norms = std::move(norms)](Tape& t, Ref self) {
      const Tensor& dc = t.gradient(self);
      const Tensor& y = t.val(self);
      const Tensor& tx = t.val(x);
      Tensor& dx = t.gradient(x);
      for (int i = 0; i < tx.rows; ++i) {
        double n = norms[i];
        double sq = 0.0;
        for (int j = 0; j < tx.cols; ++j) sq += tx.at(i, j) * tx.at(i, j);
        if (std::sqrt(sq) > kEps) {
          double dot = 0.0;
          for (int j = 0; j < tx.cols; ++j) dot += y.at(i, j) * dc.at(i, j);
          for (int j = 0; j < tx.cols; ++j)
            dx.at(i, j) += (dc.at(i, j) - y.at(i, j) * dot) / n;
        } else {
          for (int j = 0; j < tx.cols; ++j) dx.at(i, j) += dc.at(i, j) / n;
        }
      }
    });
  }

  // Multiply by a compile-time-known constant.
  Ref scale(Ref x, double c) {
    Tensor out = val(x);
    for (double& e : out.v) e *= c;
    return push(std::move(out), [x, c](Tape& t, Ref self) {
      const Tensor& dc = t.gradient(self);
      Tensor& dx = t.gradient(x);
      for (int i = 0; i < dc.size(); ++i) dx.v[i] += c * dc.v[i];
    });
  }

  // Multiply by a learnable 1x1 scalar node.
  Ref scalar_mul(Ref x, Ref s) {
    const Tensor& ts = val(s);
    if (ts.size() != 1) throw ContractError("scalar_mul: s must be 1x1");
    double c = ts.v[0];
    Tensor out = val(x);
    for (double& e : out.v) e *= c;
    return push(std::move(out), [x, s](Tape& t, Ref self) {
      const Tensor& dc = t.gradient(self);
      const Tensor& tx = t.val(x);
      double c = t.val(s).v[0];
      Tensor& dx = t.gradient(x);
      Tensor& ds = t.gradient(s);
      double acc = 0.0;
      for (int i = 0; i < dc.size(); ++i) {
        dx.v[i] += c * dc.v[i];
        acc += dc.v[i] * tx.v[i];
      }
      ds.v[0] += acc;
    });
  }

  // Row-wise log(sum(exp(x))), max-shifted for stability. Output is rows x 1.
  Ref logsumexp_rows(Ref x) {
    const Tensor& tx = val(x);
    Tensor out(tx.rows, 1);
    for (int i = 0; i < tx.rows; ++i) {
      double m = tx.at(i, 0);
      for (int j = 1; j < tx.cols; ++j) m = std::max(m, tx.at(i, j));
      double s = 0.0;
      for (int j = 0; j < tx.cols; ++j) s += std::exp(tx.at(i, j) - m);
      out.at(i, 0) = m + std::log(s);
    }
    return push(std::move(out), [x](Tape& t, Ref self) {
      const Tensor& dc = t.gradient(self);
      const Tensor& y = t.val(self);
      const Tensor& tx = t.val(x);
      Tensor& dx = t.gradient(x);
      for (int i = 0; i < tx.rows; ++i)
        for (int j = 0; j < tx.cols; ++j)
          dx.at(i, j) += dc.at(i, 0) * std::exp(tx.at(i, j) - y.at(i, 0));
    });
  }

  Ref gather_rows(Ref x, std::vector<int> idx) {
    const Tensor& tx = val(x);
    for (int i : idx)
      if (i < 0 || i >= tx.rows) throw ContractError("gather_rows: index out of range");
    Tensor out(static_cast<int>(idx.size()), tx.cols);
    for (std::size_t k = 0; k < idx.size(); ++k)
      for (int j = 0; j < tx.cols; ++j)
        out.at(static_cast<int>(k), j) = tx.at(idx[k], j);
    return push(std::move(out), [x, idx = std::move(idx)](Tape& t, Ref self) {
      const Tensor& dc = t.gradient(self);
      Tensor& dx = t.gradient(x);
      for (std::size_t k = 0; k < idx.size(); ++k)
        for (int j = 0; j < dx.cols; ++j)
          dx.at(idx[k], j) += dc.at(static_cast<int>(k), j);
    });
  }

  // Adjoint of gather_rows: out[idx[k]] += x[k]. Rows of `out` that no index
  // touches stay zero.
  Ref scatter_add_rows(Ref x, std::vector<int> idx, int out_rows) {
    const Tensor& tx = val(x);
    if (static_cast<int>(idx.size()) != tx.rows)
      throw ContractError("scatter_add_rows: one index per input row");
    for (int i : idx)
      if (i < 0 || i >= out_rows) throw ContractError("scatter_add_rows: index out of range");
    Tensor out(out_rows, tx.cols);
    for (std::size_t k = 0; k < idx.size(); ++k)
      for (int j = 0; j < tx.cols; ++j)
        out.at(idx[k], j) += tx.at(static_cast<int>(k), j);
    return push(std::move(out), [x, idx = std::move(idx)](Tape& t, Ref self) {
      const Tensor& dc = t.gradient(self);
      Tensor& dx = t.gradient(x);
      for (std::size_t k = 0; k < idx.size(); ++k)
        for (int j = 0; j < dx.cols; ++j)
          dx.at(static_cast<int>(k), j) += dc.at(idx[k], j);
    });
  }

  // y[i] = x[i, col[i]]; output rows x 1.
  Ref row_select(Ref x, std::vector<int> col) {
    const Tensor& tx = val(x);
    if (static_cast<int>(col.size()) != tx.rows)
      throw ContractError("row_select: one column per row");
    for (int c : col)
      if (c < 0 || c >= tx.cols) throw ContractError("row_select: column out of range");
    Tensor out(tx.rows, 1);
    for (int i = 0; i < tx.rows; ++i) out.at(i, 0) = tx.at(i, col[i]);
    return push(std::move(out), [x, col = std::move(col)](Tape& t, Ref self) {
      const Tensor& dc = t.gradient(self);
      Tensor& dx = t.gradient(x);
      for (int i = 0; i < dx.rows; ++i) dx.at(i, col[i]) += dc.at(i, 0);
    });
  }

  Ref sum(Ref x) {
    const Tensor& tx = val(x);
    double s = 0.0;
    for (double e : tx.v) s += e;
    return push(Tensor::scalar(s), [x](Tape& t, Ref self) {
      double d = t.gradient(self).v[0];
      Tensor& dx = t.gradient(x);
      for (double& e : dx.v) e += d;
    });
  }

  const Tensor& val(Ref r) const { return nodes_[static_cast<std::size_t>(r)].value; }
  Tensor& gradient(Ref r) { return nodes_[static_cast<std::size_t>(r)].grad; }
  const Tensor& gradient(Ref r) const { return nodes_[static_cast<std::size_t>(r)].grad; }
  std::size_t num_nodes() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and accumulates into every node's grad.
  void backward(Ref loss) {
    if (val(loss).size() != 1) throw ContractError("backward: loss must be scalar");
    for (auto& n : nodes_) n.grad = Tensor(n.value.rows, n.value.cols);
    nodes_[static_cast<std::size_t>(loss)].grad.v[0] = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i)
      if (nodes_[static_cast<std::size_t>(i)].back)
        nodes_[static_cast<std::size_t>(i)].back(*this, i);
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Tape&, Ref)> back;
  };

  Ref push(Tensor value, std::function<void(Tape&, Ref)> back) {
    nodes_.push_back({std::move(value), Tensor(), std::move(back)});
    return static_cast<Ref>(nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Gradient checking

struct GradCheckGroup {
  std::string name;
  Tensor* value;    // mutated in place while probing
  Tensor analytic;  // same shape; from a tape backward pass
};

struct GradCheckReport {
  bool pass = false;
  bool finite = true;
  double max_rel_err = 0.0;
  std::string worst_group;
  std::vector<std::pair<std::string, double>> group_max_rel_err;
};

// Central differences (f(x+h) - f(x-h)) / 2h per coordinate against the
// supplied analytic gradients. Relative error uses an absolute floor so
// genuinely zero gradients are not divided by rounding noise:
//   rel = |a - n| / (max(|a|, |n|) + 1e-6).
inline GradCheckReport grad_check(const std::function<double()>& loss_fn,
                                  std::vector<GradCheckGroup>& groups, double h,
                                  double tol) {
  GradCheckReport report;
  for (auto& g : groups) {
    double group_worst = 0.0;
    for (int i = 0; i < g.value->size(); ++i) {
      double saved = g.value->v[i];
      g.value->v[i] = saved + h;
      double up = loss_fn();
      g.value->v[i] = saved - h;
      double down = loss_fn();
      g.value->v[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        report.finite = false;
        report.pass = false;
        report.worst_group = g.name;
        return report;
      }
      double numeric = (up - down) / (2.0 * h);
      double analytic = g.analytic.v[i];
      double rel = std::abs(analytic - numeric) /
                   (std::max(std::abs(analytic), std::abs(numeric)) + 1e-6);
      group_worst = std::max(group_worst, rel);
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_group = g.name;
      }
    }
    report.group_max_rel_err.emplace_back(g.name, group_worst);
  }
  report.pass = report.finite && report.max_rel_err <= tol;
  return report;
}

// ---------------------------------------------------------------------------
// Adam

// Standard bias-corrected Adam over a fixed list of parameter tensors. State
// slots are positional, so callers must pass the same parameter order every
// step.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<Tensor*>& params,
            const std::vector<const Tensor*>& grads) {
    if (params.size() != grads.size())
      throw ContractError("adam: params/grads size mismatch");
    if (state_.empty()) {
      state_.resize(params.size());
      for (std::size_t k = 0; k < params.size(); ++k) {
        state_[k].m = Tensor(params[k]->rows, params[k]->cols);
        state_[k].v = Tensor(params[k]->rows, params[k]->cols);
      }
    }
    ++step_count_;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      Tensor& p = *params[k];
      const Tensor& g = *grads[k];
      Slot& s = state_[k];
      if (!p.same_shape(g) || !p.same_shape(s.m))
        throw ContractError("adam: shape mismatch");
      for (int i = 0; i < p.size(); ++i) {
        s.m.v[i] = beta1_ * s.m.v[i] + (1.0 - beta1_) * g.v[i];
        s.v.v[i] = beta2_ * s.v.v[i] + (1.0 - beta2_) * g.v[i] * g.v[i];
        double m_hat = s.m.v[i] / bc1;
        double v_hat = s.v.v[i] / bc2;
        p.v[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
      }
    }
  }

  long step_count() const { return step_count_; }

 private:
  struct Slot {
    Tensor m, v;
  };
  double lr_, beta1_, beta2_, eps_;
  std::vector<Slot> state_;
  long step_count_ = 0;
};

}  // namespace topoclasp::ad
