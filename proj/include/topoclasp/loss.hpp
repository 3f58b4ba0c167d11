#pragma once

#include <vector>

#include "topoclasp/autodiff.hpp"
#include "topoclasp/common.hpp"

namespace topoclasp {

// Mean softmax cross-entropy: mean_i [logsumexp(logits_i) - logits_i[y_i]].
inline ad::Tape::Ref cross_entropy(ad::Tape& tape, ad::Tape::Ref logits,
                                   const std::vector<int>& labels) {
  const int rows = tape.val(logits).rows;
  const int cols = tape.val(logits).cols;
  if (static_cast<int>(labels.size()) != rows)
    throw ContractError("cross_entropy: one label per row");
  for (int y : labels)
    if (y < 0 || y >= cols) throw ContractError("cross_entropy: label out of range");
  ad::Tape::Ref lse = tape.logsumexp_rows(logits);
  ad::Tape::Ref picked = tape.row_select(logits, labels);
  ad::Tape::Ref diff = tape.add(lse, tape.scale(picked, -1.0));
  return tape.scale(tape.sum(diff), 1.0 / static_cast<double>(rows));
}

// Bidirectional InfoNCE. Rows of a and b are l2-normalized, similarities are
// divided by tau, and the two directional losses (a against all b, b against
// all a) are averaged; positives sit on the diagonal.
inline ad::Tape::Ref info_nce(ad::Tape& tape, ad::Tape::Ref a, ad::Tape::Ref b,
                              double tau) {
  if (!(tau > 0.0)) throw ConfigError("info_nce: tau must be > 0");
  const ad::Tensor& ta = tape.val(a);
  const ad::Tensor& tb = tape.val(b);
  if (ta.rows != tb.rows || ta.cols != tb.cols)
    throw ContractError("info_nce: views must share shape");
  int n = ta.rows;
  std::vector<int> diag(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) diag[static_cast<std::size_t>(i)] = i;
  ad::Tape::Ref za = tape.l2_normalize_rows(a);
  ad::Tape::Ref zb = tape.l2_normalize_rows(b);
  ad::Tape::Ref sim_ab = tape.scale(tape.matmul(za, zb, false, true), 1.0 / tau);
  ad::Tape::Ref sim_ba = tape.scale(tape.matmul(zb, za, false, true), 1.0 / tau);
  ad::Tape::Ref d1 = tape.add(tape.logsumexp_rows(sim_ab),
                              tape.scale(tape.row_select(sim_ab, diag), -1.0));
  ad::Tape::Ref d2 = tape.add(tape.logsumexp_rows(sim_ba),
                              tape.scale(tape.row_select(sim_ba, diag), -1.0));
  return tape.scale(tape.sum(tape.add(d1, d2)), 1.0 / (2.0 * static_cast<double>(n)));
}

// L = L_cls + alpha * L_con.
inline ad::Tape::Ref joint_loss(ad::Tape& tape, ad::Tape::Ref cls,
                                ad::Tape::Ref con, double alpha) {
  return tape.add(cls, tape.scale(con, alpha));
}

}  // namespace topoclasp
