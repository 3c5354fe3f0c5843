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
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace genco::diff {

/// Dense row-major tensor. Everything in the model is rank <= 2; vectors are
/// n x 1 columns unless stated otherwise.
template <typename Scalar>
using Tensor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// true = slot participates.
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MaskVector = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// Contiguous run of rows.
struct Segment {
  int begin = 0;
  int size = 0;
  int end() const { return begin + size; }
};

class EmptyMaskError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

/// -[y log sigmoid(s) + (1-y) log(1 - sigmoid(s))] in log-sum-exp form.
template <typename Scalar>
Scalar sigmoid_bce(Scalar score, Scalar label) {
  return std::max(score, Scalar(0)) - score * label + std::log1p(std::exp(-std::abs(score)));
}

/// Softmax over the valid entries; masked entries get exactly 0. Throws
/// EmptyMaskError when nothing is valid.
template <typename Derived>
Vector<typename Derived::Scalar> masked_softmax(const Eigen::MatrixBase<Derived>& scores,
                                                const MaskVector& mask) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = scores.size();
  if (mask.size() != n) throw std::invalid_argument("masked_softmax: mask size mismatch");
  Scalar max = -std::numeric_limits<Scalar>::infinity();
  for (Eigen::Index i = 0; i < n; ++i)
    if (mask[i]) max = std::max(max, scores(i));
  if (max == -std::numeric_limits<Scalar>::infinity())
    throw EmptyMaskError("masked_softmax: all slots are masked");
  Vector<Scalar> out = Vector<Scalar>::Zero(n);
  Scalar total = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    out[i] = std::exp(scores(i) - max);
    total += out[i];
  }
  return out / total;
}

template <typename Derived>
Vector<typename Derived::Scalar> masked_softmax(const Eigen::MatrixBase<Derived>& scores) {
  return masked_softmax(scores, MaskVector::Constant(scores.size(), true));
}

template <typename Scalar>
struct AttentionResult {
  Tensor<Scalar> output;                 // nq x dv
  std::vector<Tensor<Scalar>> weights;   // per head, nq x nk
};

/// Scaled dot-product attention, softmax(Q K^T / sqrt(d)) V, where query row
/// a may only attend to keys b with key_mask(a, b). The model dimension is
/// split evenly over `heads`. Throws EmptyMaskError when some query row has
/// no valid key.
template <typename DQ, typename DK, typename DV>
AttentionResult<typename DQ::Scalar> masked_attention(const Eigen::MatrixBase<DQ>& query,
                                                      const Eigen::MatrixBase<DK>& keys,
                                                      const Eigen::MatrixBase<DV>& values,
                                                      const Mask& key_mask, int heads = 1) {
  using Scalar = typename DQ::Scalar;
  const Eigen::Index nq = query.rows(), nk = keys.rows();
  const Eigen::Index dk = query.cols(), dv = values.cols();
  if (keys.cols() != dk || values.rows() != nk)
    throw std::invalid_argument("masked_attention: shape mismatch");
  if (key_mask.rows() != nq || key_mask.cols() != nk)
    throw std::invalid_argument("masked_attention: mask shape mismatch");
  if (heads < 1 || dk % heads != 0 || dv % heads != 0)
    throw std::invalid_argument("masked_attention: head count must divide the model dimension");
  const Eigen::Index hk = dk / heads, hv = dv / heads;
  const Scalar inv_sqrt = Scalar(1) / std::sqrt(static_cast<Scalar>(hk));

  AttentionResult<Scalar> out{Tensor<Scalar>::Zero(nq, dv), {}};
  out.weights.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    Tensor<Scalar> scores =
        (query.middleCols(h * hk, hk) * keys.middleCols(h * hk, hk).transpose()) * inv_sqrt;
    Tensor<Scalar> weights(nq, nk);
    for (Eigen::Index a = 0; a < nq; ++a)
      weights.row(a) = masked_softmax(scores.row(a).transpose(), key_mask.row(a).transpose())
                           .transpose();
    out.output.middleCols(h * hv, hv) = weights * values.middleCols(h * hv, hv);
    out.weights.push_back(std::move(weights));
  }
  return out;
}

/// Per-key mask broadcast over all queries.
template <typename DQ, typename DK, typename DV>
AttentionResult<typename DQ::Scalar> masked_attention(const Eigen::MatrixBase<DQ>& query,
                                                      const Eigen::MatrixBase<DK>& keys,
                                                      const Eigen::MatrixBase<DV>& values,
                                                      const MaskVector& key_mask, int heads = 1) {
  Mask full(query.rows(), keys.rows());
  for (Eigen::Index a = 0; a < full.rows(); ++a) full.row(a) = key_mask.transpose();
  return masked_attention(query, keys, values, full, heads);
}

}  // namespace genco::diff
