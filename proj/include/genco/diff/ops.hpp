// Copyright 2026 The genco Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "genco/diff/kernels.hpp"
#include "genco/diff/tape.hpp"

namespace genco::diff {

namespace detail {
inline void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}
}  // namespace detail

/// Gathers table rows. A row index of -1 marks a masked slot: it yields a
/// zero vector and receives no gradient. Gradients scatter-add into
/// table.grad directly.
template <typename Scalar>
Var embed_lookup(Tape<Scalar>& tape, Parameter<Scalar>& table, std::span<const int> rows) {
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  Tensor<Scalar> out = Tensor<Scalar>::Zero(n, table.value.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const int r = rows[i];
    if (r < 0) continue;
    if (r >= table.value.rows())
      throw std::out_of_range("embed_lookup: id " + std::to_string(r) + " outside table '" +
                              table.name + "'");
    out.row(i) = table.value.row(r);
  }
  tape.note_parameter(table);
  std::vector<int> ids(rows.begin(), rows.end());
  Parameter<Scalar>* t = &table;
  return tape.record_external(
      std::move(out), table.trainable,
      [t, ids = std::move(ids)](Tape<Scalar>& tp, int self) {
        const auto& g = tp.grad(self);
        for (std::size_t i = 0; i < ids.size(); ++i)
          if (ids[i] >= 0) t->grad.row(ids[i]) += g.row(static_cast<Eigen::Index>(i));
      },
      "embed_lookup");
}

/// Same, with an explicit validity mask aligned with `ids`.
template <typename Scalar>
Var embed_lookup(Tape<Scalar>& tape, Parameter<Scalar>& table, std::span<const int> ids,
                 const MaskVector& valid) {
  detail::require(valid.size() == static_cast<Eigen::Index>(ids.size()),
                  "embed_lookup: mask does not align with ids");
  std::vector<int> rows(ids.begin(), ids.end());
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (!valid[static_cast<Eigen::Index>(i)]) rows[i] = -1;
  return embed_lookup(tape, table, std::span<const int>(rows));
}

template <typename Scalar>
Var matmul(Tape<Scalar>& tape, Var x, Var w) {
  const auto& X = tape.value(x);
  const auto& W = tape.value(w);
  detail::require(X.cols() == W.rows(), "matmul: shape mismatch");
  Tensor<Scalar> out = X * W;
  return tape.record(std::move(out), {x, w},
                     [x, w](Tape<Scalar>& t, int self) {
                       const auto& g = t.grad(self);
                       if (t.needs_grad(x)) t.grad(x).noalias() += g * t.value(w).transpose();
                       if (t.needs_grad(w)) t.grad(w).noalias() += t.value(x).transpose() * g;
                     },
                     "matmul");
}

/// x W + b with b a 1 x out row broadcast over the batch.
template <typename Scalar>
Var dense(Tape<Scalar>& tape, Var x, Var w, Var b) {
  const auto& X = tape.value(x);
  const auto& W = tape.value(w);
  const auto& B = tape.value(b);
  detail::require(X.cols() == W.rows(), "dense: input width does not match weight rows");
  detail::require(B.rows() == 1 && B.cols() == W.cols(), "dense: bias shape mismatch");
  Tensor<Scalar> out = X * W;
  out.rowwise() += B.row(0);
  return tape.record(std::move(out), {x, w, b},
                     [x, w, b](Tape<Scalar>& t, int self) {
                       const auto& g = t.grad(self);
                       if (t.needs_grad(x)) t.grad(x).noalias() += g * t.value(w).transpose();
                       if (t.needs_grad(w)) t.grad(w).noalias() += t.value(x).transpose() * g;
                       if (t.needs_grad(b)) t.grad(b) += g.colwise().sum();
                     },
                     "dense");
}

template <typename Scalar>
Var relu(Tape<Scalar>& tape, Var x) {
  Tensor<Scalar> out = tape.value(x).cwiseMax(Scalar(0));
  return tape.record(std::move(out), {x},
                     [x](Tape<Scalar>& t, int self) {
                       const auto& g = t.grad(self);
                       t.grad(x).array() +=
                           (t.value(x).array() > Scalar(0)).template cast<Scalar>() * g.array();
                     },
                     "relu");
}

template <typename Scalar>
Var add(Tape<Scalar>& tape, Var a, Var b) {
  detail::require(tape.value(a).rows() == tape.value(b).rows() &&
                      tape.value(a).cols() == tape.value(b).cols(),
                  "add: shape mismatch");
  Tensor<Scalar> out = tape.value(a) + tape.value(b);
  return tape.record(std::move(out), {a, b},
                     [a, b](Tape<Scalar>& t, int self) {
                       const auto& g = t.grad(self);
                       if (t.needs_grad(a)) t.grad(a) += g;
                       if (t.needs_grad(b)) t.grad(b) += g;
                     },
                     "add");
}

template <typename Scalar>
Var scale(Tape<Scalar>& tape, Var a, Scalar c) {
  Tensor<Scalar> out = tape.value(a) * c;
  return tape.record(std::move(out), {a},
                     [a, c](Tape<Scalar>& t, int self) { t.grad(a) += t.grad(self) * c; },
                     "scale");
}

/// Column-wise concatenation; all inputs share the row count.
template <typename Scalar>
Var concat_cols(Tape<Scalar>& tape, const std::vector<Var>& parts) {
  detail::require(!parts.empty(), "concat_cols: no inputs");
  const Eigen::Index rows = tape.value(parts.front()).rows();
  Eigen::Index cols = 0;
  bool needs = false;
  for (Var p : parts) {
    detail::require(tape.value(p).rows() == rows, "concat_cols: row count mismatch");
    cols += tape.value(p).cols();
    needs = needs || tape.needs_grad(p);
  }
  Tensor<Scalar> out(rows, cols);
  Eigen::Index c = 0;
  for (Var p : parts) {
    out.middleCols(c, tape.value(p).cols()) = tape.value(p);
    c += tape.value(p).cols();
  }
  return tape.record_external(std::move(out), needs,
                              [parts](Tape<Scalar>& t, int self) {
                                const auto& g = t.grad(self);
                                Eigen::Index off = 0;
                                for (Var p : parts) {
                                  const Eigen::Index w = t.value(p).cols();
                                  if (t.needs_grad(p)) t.grad(p) += g.middleCols(off, w);
                                  off += w;
                                }
                              },
                              "concat_cols");
}

/// Row-major reinterpretation with the same element count.
template <typename Scalar>
Var reshape(Tape<Scalar>& tape, Var x, Eigen::Index rows, Eigen::Index cols) {
  const auto& X = tape.value(x);
  detail::require(X.size() == rows * cols, "reshape: element count mismatch");
  Tensor<Scalar> out = Eigen::Map<const Tensor<Scalar>>(X.data(), rows, cols);
  const Eigen::Index r0 = X.rows(), c0 = X.cols();
  return tape.record(std::move(out), {x},
                     [x, r0, c0](Tape<Scalar>& t, int self) {
                       const auto& g = t.grad(self);
                       t.grad(x) += Eigen::Map<const Tensor<Scalar>>(g.data(), r0, c0);
                     },
                     "reshape");
}

/// out.row(i) = x.row(index[i]); backward scatter-adds.
template <typename Scalar>
Var gather_rows(Tape<Scalar>& tape, Var x, std::vector<int> index) {
  const auto& X = tape.value(x);
  Tensor<Scalar> out(static_cast<Eigen::Index>(index.size()), X.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    detail::require(index[i] >= 0 && index[i] < X.rows(), "gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = X.row(index[i]);
  }
  return tape.record(std::move(out), {x},
                     [x, index = std::move(index)](Tape<Scalar>& t, int self) {
                       const auto& g = t.grad(self);
                       auto& gx = t.grad(x);
                       for (std::size_t i = 0; i < index.size(); ++i)
                         gx.row(index[i]) += g.row(static_cast<Eigen::Index>(i));
                     },
                     "gather_rows");
}

/// Mean of each segment's rows; an empty segment yields a zero row.
template <typename Scalar>
Var segment_mean(Tape<Scalar>& tape, Var x, std::vector<Segment> segments) {
  const auto& X = tape.value(x);
  Tensor<Scalar> out = Tensor<Scalar>::Zero(static_cast<Eigen::Index>(segments.size()), X.cols());
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto& seg = segments[s];
    if (seg.size == 0) continue;
    out.row(static_cast<Eigen::Index>(s)) =
        X.middleRows(seg.begin, seg.size).colwise().sum() / static_cast<Scalar>(seg.size);
  }
  return tape.record(std::move(out), {x},
                     [x, segments = std::move(segments)](Tape<Scalar>& t, int self) {
                       const auto& g = t.grad(self);
                       auto& gx = t.grad(x);
                       for (std::size_t s = 0; s < segments.size(); ++s) {
                         const auto& seg = segments[s];
                         if (seg.size == 0) continue;
                         const auto row = (g.row(static_cast<Eigen::Index>(s)) /
                                           static_cast<Scalar>(seg.size))
                                              .eval();
                         for (int r = seg.begin; r < seg.end(); ++r) gx.row(r) += row;
                       }
                     },
                     "segment_mean");
}

/// Log-softmax of an R x 1 score column within each segment. Rows outside
/// every segment are left at 0 and receive no gradient.
template <typename Scalar>
Var segment_log_softmax(Tape<Scalar>& tape, Var scores, std::vector<Segment> segments) {
  const auto& S = tape.value(scores);
  detail::require(S.cols() == 1, "segment_log_softmax: scores must be a column");
  Tensor<Scalar> out = Tensor<Scalar>::Zero(S.rows(), 1);
  for (const auto& seg : segments) {
    if (seg.size == 0) continue;
    auto block = S.middleRows(seg.begin, seg.size);
    const Scalar mx = block.maxCoeff();
    const Scalar lse = mx + std::log((block.array() - mx).exp().sum());
    out.middleRows(seg.begin, seg.size) = block.array() - lse;
  }
  return tape.record(std::move(out), {scores},
                     [scores, segments = std::move(segments)](Tape<Scalar>& t, int self) {
                       const auto& g = t.grad(self);
                       const auto& y = t.value(Var{self});
                       auto& gs = t.grad(scores);
                       for (const auto& seg : segments) {
                         if (seg.size == 0) continue;
                         const Scalar total = g.middleRows(seg.begin, seg.size).sum();
                         gs.middleRows(seg.begin, seg.size).array() +=
                             g.middleRows(seg.begin, seg.size).array() -
                             y.middleRows(seg.begin, seg.size).array().exp() * total;
                       }
                     },
                     "segment_log_softmax");
}

/// Softmax of an R x 1 score column within each segment.
template <typename Scalar>
Var segment_softmax(Tape<Scalar>& tape, Var scores, std::vector<Segment> segments) {
  const auto& S = tape.value(scores);
  detail::require(S.cols() == 1, "segment_softmax: scores must be a column");
  Tensor<Scalar> out = Tensor<Scalar>::Zero(S.rows(), 1);
  for (const auto& seg : segments) {
    if (seg.size == 0) continue;
    out.middleRows(seg.begin, seg.size) =
        masked_softmax(S.middleRows(seg.begin, seg.size).col(0), MaskVector::Constant(seg.size, true));
  }
  return tape.record(std::move(out), {scores},
                     [scores, segments = std::move(segments)](Tape<Scalar>& t, int self) {
                       const auto& g = t.grad(self);
                       const auto& y = t.value(Var{self});
                       auto& gs = t.grad(scores);
                       for (const auto& seg : segments) {
                         if (seg.size == 0) continue;
                         auto yb = y.middleRows(seg.begin, seg.size).array();
                         auto gb = g.middleRows(seg.begin, seg.size).array();
                         const Scalar dot = (yb * gb).sum();
                         gs.middleRows(seg.begin, seg.size).array() += yb * (gb - dot);
                       }
                     },
                     "segment_softmax");
}

/// out.row(s) = sum over rows r of segment s of w[r] * F.row(r).
template <typename Scalar>
Var segment_weighted_sum(Tape<Scalar>& tape, Var weights, Var features,
                         std::vector<Segment> segments) {
  const auto& W = tape.value(weights);
  const auto& F = tape.value(features);
  detail::require(W.cols() == 1 && W.rows() == F.rows(), "segment_weighted_sum: shape mismatch");
  Tensor<Scalar> out = Tensor<Scalar>::Zero(static_cast<Eigen::Index>(segments.size()), F.cols());
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto& seg = segments[s];
    for (int r = seg.begin; r < seg.end(); ++r)
      out.row(static_cast<Eigen::Index>(s)) += W(r, 0) * F.row(r);
  }
  return tape.record(std::move(out), {weights, features},
                     [weights, features, segments = std::move(segments)](Tape<Scalar>& t, int self) {
                       const auto& g = t.grad(self);
                       const bool gw = t.needs_grad(weights), gf = t.needs_grad(features);
                       for (std::size_t s = 0; s < segments.size(); ++s) {
                         const auto& seg = segments[s];
                         const auto gs = g.row(static_cast<Eigen::Index>(s));
                         for (int r = seg.begin; r < seg.end(); ++r) {
                           if (gw) t.grad(weights)(r, 0) += gs.dot(t.value(features).row(r));
                           if (gf) t.grad(features).row(r) += t.value(weights)(r, 0) * gs;
                         }
                       }
                     },
                     "segment_weighted_sum");
}

/// Masked attention applied independently to row groups of Q, K, V: within
/// group g, local query a attends to local key b iff masks[g](a, b).
template <typename Scalar>
Var grouped_attention(Tape<Scalar>& tape, Var q, Var k, Var v, std::vector<Segment> groups,
                      std::vector<Mask> masks, int heads = 1) {
  const auto& Q = tape.value(q);
  const auto& K = tape.value(k);
  const auto& V = tape.value(v);
  detail::require(Q.rows() == K.rows() && K.rows() == V.rows() && Q.cols() == K.cols(),
                  "grouped_attention: shape mismatch");
  detail::require(groups.size() == masks.size(), "grouped_attention: one mask per group");
  Tensor<Scalar> out = Tensor<Scalar>::Zero(Q.rows(), V.cols());
  auto weights = std::make_shared<std::vector<std::vector<Tensor<Scalar>>>>();
  weights->reserve(groups.size());
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& g = groups[gi];
    if (g.size == 0) {
      weights->emplace_back();
      continue;
    }
    auto res = masked_attention(Q.middleRows(g.begin, g.size), K.middleRows(g.begin, g.size),
                                V.middleRows(g.begin, g.size), masks[gi], heads);
    out.middleRows(g.begin, g.size) = res.output;
    weights->push_back(std::move(res.weights));
  }
  return tape.record(
      std::move(out), {q, k, v},
      [q, k, v, groups = std::move(groups), weights, heads](Tape<Scalar>& t, int self) {
        const auto& G = t.grad(self);
        const auto& Q = t.value(q);
        const auto& K = t.value(k);
        const auto& V = t.value(v);
        const Eigen::Index hk = Q.cols() / heads, hv = V.cols() / heads;
        const Scalar inv_sqrt = Scalar(1) / std::sqrt(static_cast<Scalar>(hk));
        const bool gq = t.needs_grad(q), gk = t.needs_grad(k), gv = t.needs_grad(v);
        for (std::size_t gi = 0; gi < groups.size(); ++gi) {
          const auto& g = groups[gi];
          if (g.size == 0) continue;
          for (int h = 0; h < heads; ++h) {
            const auto& A = (*weights)[gi][h];
            const auto dO = G.block(g.begin, h * hv, g.size, hv);
            const auto Vh = V.block(g.begin, h * hv, g.size, hv);
            if (gv) t.grad(v).block(g.begin, h * hv, g.size, hv).noalias() += A.transpose() * dO;
            if (!gq && !gk) continue;
            Tensor<Scalar> dA = dO * Vh.transpose();
            Vector<Scalar> rowdot = (dA.array() * A.array()).rowwise().sum();
            Tensor<Scalar> dS = (A.array() * (dA.array().colwise() - rowdot.array())).matrix() * inv_sqrt;
            if (gq)
              t.grad(q).block(g.begin, h * hk, g.size, hk).noalias() +=
                  dS * K.block(g.begin, h * hk, g.size, hk);
            if (gk)
              t.grad(k).block(g.begin, h * hk, g.size, hk).noalias() +=
                  dS.transpose() * Q.block(g.begin, h * hk, g.size, hk);
          }
        }
      },
      "grouped_attention");
}

struct BatchNormOptions {
  double eps = 1e-5;
  /// running <- momentum * running + (1 - momentum) * batch statistic
  double momentum = 0.99;
};

/// Per-column standardization. Train mode uses (biased) batch statistics and
/// updates the running estimates; inference mode reads the running
/// estimates only.
template <typename Scalar>
Var batch_norm(Tape<Scalar>& tape, Var x, Var scale_v, Var shift_v, Parameter<Scalar>& running_mean,
               Parameter<Scalar>& running_var, Mode mode, const BatchNormOptions& opt = {}) {
  const auto& X = tape.value(x);
  const Eigen::Index n = X.rows(), d = X.cols();
  detail::require(tape.value(scale_v).cols() == d && tape.value(shift_v).cols() == d &&
                      running_mean.value.cols() == d && running_var.value.cols() == d,
                  "batch_norm: feature width mismatch");
  const Scalar eps = static_cast<Scalar>(opt.eps);
  tape.note_parameter(running_mean);
  tape.note_parameter(running_var);

  Tensor<Scalar> mean, var;
  if (mode == Mode::kTrain) {
    if (n < 2) throw std::invalid_argument("batch_norm: train mode needs a batch of at least 2");
    mean = X.colwise().mean();
    var = (X.rowwise() - mean.row(0)).array().square().colwise().mean();
    const Scalar m = static_cast<Scalar>(opt.momentum);
    const Scalar unbias = static_cast<Scalar>(n) / static_cast<Scalar>(n - 1);
    running_mean.value = m * running_mean.value + (Scalar(1) - m) * mean;
    running_var.value = m * running_var.value + (Scalar(1) - m) * unbias * var;
  } else {
    mean = running_mean.value;
    var = running_var.value;
  }
  Tensor<Scalar> inv_std = (var.array() + eps).rsqrt();
  Tensor<Scalar> xhat = ((X.rowwise() - mean.row(0)).array().rowwise() * inv_std.row(0).array()).matrix();
  Tensor<Scalar> out = (xhat.array().rowwise() * tape.value(scale_v).row(0).array()).matrix();
  out.rowwise() += tape.value(shift_v).row(0);
  const bool train = mode == Mode::kTrain;
  return tape.record(
      std::move(out), {x, scale_v, shift_v},
      [x, scale_v, shift_v, xhat = std::move(xhat), inv_std = std::move(inv_std), train](
          Tape<Scalar>& t, int self) {
        const auto& g = t.grad(self);
        if (t.needs_grad(scale_v)) t.grad(scale_v) += (g.array() * xhat.array()).colwise().sum().matrix();
        if (t.needs_grad(shift_v)) t.grad(shift_v) += g.colwise().sum();
        if (!t.needs_grad(x)) return;
        Tensor<Scalar> dxhat = (g.array().rowwise() * t.value(scale_v).row(0).array()).matrix();
        if (!train) {
          t.grad(x) += (dxhat.array().rowwise() * inv_std.row(0).array()).matrix();
          return;
        }
        const Scalar n = static_cast<Scalar>(g.rows());
        Tensor<Scalar> sum_d = dxhat.colwise().sum();
        Tensor<Scalar> sum_dx = (dxhat.array() * xhat.array()).colwise().sum();
        Tensor<Scalar> dx = ((dxhat.array() * n).rowwise() - sum_d.row(0).array() -
                             (xhat.array().rowwise() * sum_dx.row(0).array()))
                                .matrix();
        t.grad(x) += ((dx.array().rowwise() * inv_std.row(0).array()) / n).matrix();
      },
      "batch_norm");
}

/// Mean full binary cross-entropy of an N x 1 score column.
template <typename Scalar>
Var sigmoid_bce_mean(Tape<Scalar>& tape, Var scores, std::vector<Scalar> labels) {
  const auto& S = tape.value(scores);
  detail::require(S.cols() == 1 && S.rows() == static_cast<Eigen::Index>(labels.size()),
                  "sigmoid_bce_mean: labels do not align with scores");
  detail::require(!labels.empty(), "sigmoid_bce_mean: empty batch");
  Scalar total = 0;
  for (Eigen::Index i = 0; i < S.rows(); ++i) total += sigmoid_bce(S(i, 0), labels[i]);
  const Scalar n = static_cast<Scalar>(labels.size());
  Tensor<Scalar> out(1, 1);
  out(0, 0) = total / n;
  return tape.record(std::move(out), {scores},
                     [scores, labels = std::move(labels), n](Tape<Scalar>& t, int self) {
                       const Scalar g = t.grad(self)(0, 0);
                       const auto& S = t.value(scores);
                       auto& gs = t.grad(scores);
                       for (Eigen::Index i = 0; i < S.rows(); ++i)
                         gs(i, 0) += g * (sigmoid(S(i, 0)) - labels[i]) / n;
                     },
                     "sigmoid_bce_mean");
}

/// sum_i weights[i] * x[i] over an N x 1 column.
template <typename Scalar>
Var weighted_sum(Tape<Scalar>& tape, Var x, std::vector<Scalar> weights) {
  const auto& X = tape.value(x);
  detail::require(X.cols() == 1 && X.rows() == static_cast<Eigen::Index>(weights.size()),
                  "weighted_sum: weights do not align");
  Tensor<Scalar> out(1, 1);
  out(0, 0) = X.col(0).dot(Eigen::Map<const Vector<Scalar>>(weights.data(), X.rows()));
  return tape.record(std::move(out), {x},
                     [x, weights = std::move(weights)](Tape<Scalar>& t, int self) {
                       const Scalar g = t.grad(self)(0, 0);
                       t.grad(x).col(0) +=
                           g * Eigen::Map<const Vector<Scalar>>(weights.data(),
                                                                static_cast<Eigen::Index>(weights.size()));
                     },
                     "weighted_sum");
}

}  // namespace genco::diff
