// core/include/mmcap/ops.hpp

// Copyright 2026  The mmcap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mmcap/rng.hpp"
#include "mmcap/tensor.hpp"

// Differentiable primitives. 2-D operands are [rows x cols] row-major;
// "row-wise" ops act on the last axis of any rank.

namespace mmcap {

template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);
template <typename T> Tensor<T> sum(const Tensor<T>& a);

/// x[m x n] + bias[n] broadcast over rows.
template <typename T> Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias);

/// a[m x k] . b[k x n]
template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
/// a[m x k] . b[n x k]^T
template <typename T> Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b);

/// x . w + b, with w stored [in x out].
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  return add_bias(matmul(x, w), b);
}

/// Softmax along `axis`, max-subtracted.
template <typename T> Tensor<T> softmax(const Tensor<T>& x, std::size_t axis);
/// Normalizes the last axis; gain and bias have the last axis' extent.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps);
/// x * Phi(x), exact erf form.
template <typename T> Tensor<T> gelu(const Tensor<T>& x);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& x);

/// Inverted dropout: keeps each element with probability 1-p and scales by
/// 1/(1-p). Identity when p == 0.
template <typename T> Tensor<T> dropout(const Tensor<T>& x, double p, Rng& rng);

/// Rows of table[V x d] selected by ids -> [ids.size() x d]. Backward
/// scatter-adds into the table.
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& table, std::span<const std::int32_t> ids);

/// Multiplies row r by keep[r] (0 or 1).
template <typename T>
Tensor<T> mask_rows(const Tensor<T>& x, std::span<const std::uint8_t> keep);

/// Multi-head scaled dot-product attention over a batch packed as rows.
struct AttentionSpec {
  std::size_t batch = 1;
  std::size_t query_len = 0;
  std::size_t key_len = 0;
  std::size_t heads = 1;
  /// batch*key_len flags; empty means every key is visible. A query whose
  /// visible key set is empty produces a zero output row.
  std::span<const std::uint8_t> key_mask;
  /// Query i may only see keys j <= i.
  bool causal = false;
  double dropout = 0.0;
  Rng* rng = nullptr;
};

/// q[batch*query_len x d], k and v [batch*key_len x d] -> [batch*query_len x d].
/// Heads split d evenly; no projections are applied here.
template <typename T>
Tensor<T> attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                    const AttentionSpec& spec);

/// Mean negative log-likelihood over positions with loss_mask set.
/// Throws DataError when no position is selected.
template <typename T>
Tensor<T> masked_cross_entropy(const Tensor<T>& logits, std::span<const std::int32_t> targets,
                               std::span<const std::uint8_t> loss_mask);

/// Mean binary cross-entropy of sigmoid(logits[n x 1]) against labels in {0,1}.
template <typename T>
Tensor<T> binary_cross_entropy_with_logits(const Tensor<T>& logits,
                                           std::span<const std::uint8_t> labels);

}  // namespace mmcap
