// core/src/ops.cpp

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

#include "mmcap/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "mmcap/error.hpp"

namespace mmcap {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapC = Eigen::Map<const RowMat<T>>;
template <typename T>
using Map = Eigen::Map<RowMat<T>>;

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " differ");
}

template <typename T>
void require_matrix(const Tensor<T>& a, const char* op) {
  if (a.rank() != 2)
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_str(a.shape()));
}

template <typename T>
bool wants(const detail::TensorNode<T>& n, std::size_t i) {
  return n.parents[i]->requires_grad;
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> out(a.numel());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return Tensor<T>::make_result(a.shape(), std::move(out), {a, b}, [](auto& n) {
    for (std::size_t p = 0; p < 2; ++p)
      if (wants(n, p)) {
        auto& g = n.parents[p]->grad;
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
      }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  std::vector<T> out(a.numel());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return Tensor<T>::make_result(a.shape(), std::move(out), {a, b}, [](auto& n) {
    if (wants(n, 0))
      for (std::size_t i = 0; i < n.grad.size(); ++i) n.parents[0]->grad[i] += n.grad[i];
    if (wants(n, 1))
      for (std::size_t i = 0; i < n.grad.size(); ++i) n.parents[1]->grad[i] -= n.grad[i];
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> out(a.numel());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return Tensor<T>::make_result(a.shape(), std::move(out), {a, b}, [](auto& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i) pa.grad[i] += n.grad[i] * pb.value[i];
    if (pb.requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i) pb.grad[i] += n.grad[i] * pa.value[i];
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.data().begin(), a.data().end());
  for (auto& v : out) v *= factor;
  return Tensor<T>::make_result(a.shape(), std::move(out), {a}, [factor](auto& n) {
    auto& g = n.parents[0]->grad;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * n.grad[i];
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T s = 0;
  for (T v : a.data()) s += v;
  return Tensor<T>::make_result({}, {s}, {a}, [](auto& n) {
    auto& g = n.parents[0]->grad;
    for (auto& v : g) v += n.grad[0];
  });
}

template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias) {
  const std::size_t m = x.rows(), c = x.cols();
  if (bias.numel() != c)
    throw DimensionError("add_bias: bias " + shape_str(bias.shape()) + " for input " +
                         shape_str(x.shape()));
  std::vector<T> out(x.data().begin(), x.data().end());
  auto b = bias.data();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] += b[j];
  return Tensor<T>::make_result(x.shape(), std::move(out), {x, bias}, [m, c](auto& n) {
    if (wants(n, 0)) {
      auto& g = n.parents[0]->grad;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
    if (wants(n, 1)) {
      auto& g = n.parents[1]->grad;
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t j = 0; j < c; ++j) g[j] += n.grad[r * c + j];
    }
  });
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k)
    throw DimensionError("matmul: inner extents differ, " + shape_str(a.shape()) + " . " +
                         shape_str(b.shape()));
  std::vector<T> out(m * n, T(0));
  if (m && n && k) Map<T>(out.data(), m, n).noalias() = MapC<T>(a.data().data(), m, k) * MapC<T>(b.data().data(), k, n);
  return Tensor<T>::make_result({m, n}, std::move(out), {a, b}, [m, k, n](auto& node) {
    if (!m || !n || !k) return;
    MapC<T> g(node.grad.data(), m, n);
    auto& pa = *node.parents[0];
    auto& pb = *node.parents[1];
    if (pa.requires_grad)
      Map<T>(pa.grad.data(), m, k).noalias() += g * MapC<T>(pb.value.data(), k, n).transpose();
    if (pb.requires_grad)
      Map<T>(pb.grad.data(), k, n).noalias() += MapC<T>(pa.value.data(), m, k).transpose() * g;
  });
}

template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k)
    throw DimensionError("matmul_nt: inner extents differ, " + shape_str(a.shape()) + " . " +
                         shape_str(b.shape()) + "^T");
  std::vector<T> out(m * n, T(0));
  if (m && n && k)
    Map<T>(out.data(), m, n).noalias() =
        MapC<T>(a.data().data(), m, k) * MapC<T>(b.data().data(), n, k).transpose();
  return Tensor<T>::make_result({m, n}, std::move(out), {a, b}, [m, k, n](auto& node) {
    if (!m || !n || !k) return;
    MapC<T> g(node.grad.data(), m, n);
    auto& pa = *node.parents[0];
    auto& pb = *node.parents[1];
    if (pa.requires_grad)
      Map<T>(pa.grad.data(), m, k).noalias() += g * MapC<T>(pb.value.data(), n, k);
    if (pb.requires_grad)
      Map<T>(pb.grad.data(), n, k).noalias() += g.transpose() * MapC<T>(pa.value.data(), m, k);
  });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  const auto& shape = x.shape();
  if (axis >= shape.size())
    throw DimensionError("softmax: axis " + std::to_string(axis) + " for " + shape_str(shape));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  const std::size_t len = shape[axis];
  auto in = x.data();
  std::vector<T> out(in.size());
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t s = 0; s < inner; ++s) {
      const std::size_t base = o * len * inner + s;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t i = 0; i < len; ++i) mx = std::max(mx, in[base + i * inner]);
      T z = 0;
      for (std::size_t i = 0; i < len; ++i) {
        T e = std::exp(in[base + i * inner] - mx);
        out[base + i * inner] = e;
        z += e;
      }
      for (std::size_t i = 0; i < len; ++i) out[base + i * inner] /= z;
    }
  return Tensor<T>::make_result(shape, std::move(out), {x}, [outer, inner, len](auto& n) {
    auto& g = n.parents[0]->grad;
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t s = 0; s < inner; ++s) {
        const std::size_t base = o * len * inner + s;
        T dot = 0;
        for (std::size_t i = 0; i < len; ++i) dot += n.grad[base + i * inner] * n.value[base + i * inner];
        for (std::size_t i = 0; i < len; ++i) {
          const std::size_t at = base + i * inner;
          g[at] += n.value[at] * (n.grad[at] - dot);
        }
      }
  });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps) {
  const std::size_t m = x.rows(), c = x.cols();
  if (c == 0) throw DimensionError("layer_norm: empty normalized axis");
  if (gain.numel() != c || bias.numel() != c)
    throw DimensionError("layer_norm: gain/bias extent must be " + std::to_string(c));
  auto in = x.data();
  auto gv = gain.data(), bv = bias.data();
  std::vector<T> out(in.size()), xhat(in.size()), inv_std(m);
  for (std::size_t r = 0; r < m; ++r) {
    const T* row = in.data() + r * c;
    T mean = 0;
    for (std::size_t j = 0; j < c; ++j) mean += row[j];
    mean /= T(c);
    T var = 0;
    for (std::size_t j = 0; j < c; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= T(c);
    const T is = T(1) / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t j = 0; j < c; ++j) {
      const T h = (row[j] - mean) * is;
      xhat[r * c + j] = h;
      out[r * c + j] = h * gv[j] + bv[j];
    }
  }
  return Tensor<T>::make_result(
      x.shape(), std::move(out), {x, gain, bias},
      [m, c, xhat = std::move(xhat), inv_std = std::move(inv_std)](auto& n) {
        auto& px = *n.parents[0];
        auto& pg = *n.parents[1];
        auto& pb = *n.parents[2];
        for (std::size_t r = 0; r < m; ++r) {
          const T* go = n.grad.data() + r * c;
          const T* h = xhat.data() + r * c;
          if (pg.requires_grad)
            for (std::size_t j = 0; j < c; ++j) pg.grad[j] += go[j] * h[j];
          if (pb.requires_grad)
            for (std::size_t j = 0; j < c; ++j) pb.grad[j] += go[j];
          if (px.requires_grad) {
            T mean_dh = 0, mean_dh_h = 0;
            for (std::size_t j = 0; j < c; ++j) {
              const T dh = go[j] * pg.value[j];
              mean_dh += dh;
              mean_dh_h += dh * h[j];
            }
            mean_dh /= T(c);
            mean_dh_h /= T(c);
            for (std::size_t j = 0; j < c; ++j) {
              const T dh = go[j] * pg.value[j];
              px.grad[r * c + j] += inv_std[r] * (dh - mean_dh - h[j] * mean_dh_h);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  constexpr T kInvSqrt2 = T(0.70710678118654752440);
  constexpr T kInvSqrt2Pi = T(0.39894228040143267794);
  auto in = x.data();
  std::vector<T> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i)
    out[i] = in[i] * T(0.5) * (T(1) + std::erf(in[i] * kInvSqrt2));
  return Tensor<T>::make_result(x.shape(), std::move(out), {x}, [](auto& n) {
    auto& p = *n.parents[0];
    for (std::size_t i = 0; i < p.grad.size(); ++i) {
      const T v = p.value[i];
      const T cdf = T(0.5) * (T(1) + std::erf(v * kInvSqrt2));
      const T pdf = kInvSqrt2Pi * std::exp(T(-0.5) * v * v);
      p.grad[i] += n.grad[i] * (cdf + v * pdf);
    }
  });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  auto in = x.data();
  std::vector<T> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    const T v = in[i];
    out[i] = v >= 0 ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
  }
  return Tensor<T>::make_result(x.shape(), std::move(out), {x}, [](auto& n) {
    auto& g = n.parents[0]->grad;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * n.value[i] * (T(1) - n.value[i]);
  });
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, Rng& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) throw ContractError("dropout probability must be < 1");
  const T keep_scale = T(1.0 / (1.0 - p));
  auto in = x.data();
  std::vector<T> mask(in.size()), out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    mask[i] = uniform01(rng) < p ? T(0) : keep_scale;
    out[i] = in[i] * mask[i];
  }
  return Tensor<T>::make_result(x.shape(), std::move(out), {x}, [mask = std::move(mask)](auto& n) {
    auto& g = n.parents[0]->grad;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * mask[i];
  });
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& table, std::span<const std::int32_t> ids) {
  require_matrix(table, "gather_rows");
  const std::size_t v = table.dim(0), d = table.dim(1);
  std::vector<std::int32_t> idx(ids.begin(), ids.end());
  for (auto id : idx)
    if (id < 0 || static_cast<std::size_t>(id) >= v)
      throw DimensionError("gather_rows: row " + std::to_string(id) + " outside table of " +
                           std::to_string(v) + " rows");
  auto src = table.data();
  std::vector<T> out(idx.size() * d);
  for (std::size_t r = 0; r < idx.size(); ++r)
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(idx[r] * d), d,
                out.begin() + static_cast<std::ptrdiff_t>(r * d));
  const std::size_t count = idx.size();
  return Tensor<T>::make_result({count, d}, std::move(out), {table},
                                [d, idx = std::move(idx)](auto& n) {
                                  auto& g = n.parents[0]->grad;
                                  for (std::size_t r = 0; r < idx.size(); ++r)
                                    for (std::size_t j = 0; j < d; ++j)
                                      g[static_cast<std::size_t>(idx[r]) * d + j] += n.grad[r * d + j];
                                });
}

template <typename T>
Tensor<T> mask_rows(const Tensor<T>& x, std::span<const std::uint8_t> keep) {
  const std::size_t m = x.rows(), c = x.cols();
  if (keep.size() != m)
    throw DimensionError("mask_rows: " + std::to_string(keep.size()) + " flags for " +
                         std::to_string(m) + " rows");
  std::vector<std::uint8_t> k(keep.begin(), keep.end());
  std::vector<T> out(x.data().begin(), x.data().end());
  for (std::size_t r = 0; r < m; ++r)
    if (!k[r]) std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(r * c), c, T(0));
  return Tensor<T>::make_result(x.shape(), std::move(out), {x}, [c, k = std::move(k)](auto& n) {
    auto& g = n.parents[0]->grad;
    for (std::size_t r = 0; r < k.size(); ++r)
      if (k[r])
        for (std::size_t j = 0; j < c; ++j) g[r * c + j] += n.grad[r * c + j];
  });
}

template <typename T>
Tensor<T> attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                    const AttentionSpec& spec) {
  require_matrix(q, "attention");
  require_matrix(k, "attention");
  require_matrix(v, "attention");
  const std::size_t B = spec.batch, Lq = spec.query_len, Lk = spec.key_len, H = spec.heads;
  const std::size_t D = q.dim(1);
  if (H == 0 || D % H != 0)
    throw DimensionError("attention: width " + std::to_string(D) + " not divisible into " +
                         std::to_string(H) + " heads");
  if (q.dim(0) != B * Lq || k.dim(0) != B * Lk || v.dim(0) != B * Lk || k.dim(1) != D ||
      v.dim(1) != D)
    throw DimensionError("attention: q " + shape_str(q.shape()) + ", k " + shape_str(k.shape()) +
                         ", v " + shape_str(v.shape()) + " inconsistent with batch " +
                         std::to_string(B) + " x (" + std::to_string(Lq) + ", " +
                         std::to_string(Lk) + ")");
  if (!spec.key_mask.empty() && spec.key_mask.size() != B * Lk)
    throw DimensionError("attention: key mask has " + std::to_string(spec.key_mask.size()) +
                         " flags, expected " + std::to_string(B * Lk));
  if (spec.dropout > 0.0 && spec.rng == nullptr)
    throw ContractError("attention: dropout needs a random generator");

  const std::size_t dh = D / H;
  const T scl = T(1) / std::sqrt(T(dh));
  const bool use_drop = spec.dropout > 0.0;
  const T keep_scale = use_drop ? T(1.0 / (1.0 - spec.dropout)) : T(1);
  std::vector<std::uint8_t> kmask(spec.key_mask.begin(), spec.key_mask.end());
  const bool causal = spec.causal;

  auto visible = [&kmask, causal, Lk](std::size_t b, std::size_t i, std::size_t j) {
    if (causal && j > i) return false;
    return kmask.empty() || kmask[b * Lk + j] != 0;
  };

  auto Q = q.data(), K = k.data(), V = v.data();
  // probs[b][h][i][j] before dropout; drop holds the multiplier applied after.
  std::vector<T> probs(B * H * Lq * Lk, T(0));
  std::vector<T> drop;
  if (use_drop) drop.assign(probs.size(), T(0));
  std::vector<T> out(B * Lq * D, T(0));
  std::vector<T> scores(Lk);

  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t i = 0; i < Lq; ++i) {
        const T* qi = Q.data() + (b * Lq + i) * D + h * dh;
        T mx = -std::numeric_limits<T>::infinity();
        bool any = false;
        for (std::size_t j = 0; j < Lk; ++j) {
          if (!visible(b, i, j)) continue;
          const T* kj = K.data() + (b * Lk + j) * D + h * dh;
          T s = 0;
          for (std::size_t e = 0; e < dh; ++e) s += qi[e] * kj[e];
          s *= scl;
          scores[j] = s;
          mx = std::max(mx, s);
          any = true;
        }
        if (!any) continue;
        T* p = probs.data() + ((b * H + h) * Lq + i) * Lk;
        T z = 0;
        for (std::size_t j = 0; j < Lk; ++j) {
          if (!visible(b, i, j)) continue;
          p[j] = std::exp(scores[j] - mx);
          z += p[j];
        }
        T* o = out.data() + (b * Lq + i) * D + h * dh;
        for (std::size_t j = 0; j < Lk; ++j) {
          if (!visible(b, i, j)) continue;
          p[j] /= z;
          T w = p[j];
          if (use_drop) {
            T m = uniform01(*spec.rng) < spec.dropout ? T(0) : keep_scale;
            drop[((b * H + h) * Lq + i) * Lk + j] = m;
            w *= m;
          }
          if (w == T(0)) continue;
          const T* vj = V.data() + (b * Lk + j) * D + h * dh;
          for (std::size_t e = 0; e < dh; ++e) o[e] += w * vj[e];
        }
      }

  return Tensor<T>::make_result(
      {B * Lq, D}, std::move(out), {q, k, v},
      [B, Lq, Lk, H, D, dh, scl, use_drop, probs = std::move(probs),
       drop = std::move(drop)](auto& n) {
        auto& pq = *n.parents[0];
        auto& pk = *n.parents[1];
        auto& pv = *n.parents[2];
        std::vector<T> dp(Lk);
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t h = 0; h < H; ++h)
            for (std::size_t i = 0; i < Lq; ++i) {
              const std::size_t prow = ((b * H + h) * Lq + i) * Lk;
              const T* p = probs.data() + prow;
              const T* go = n.grad.data() + (b * Lq + i) * D + h * dh;
              T dot = 0;
              for (std::size_t j = 0; j < Lk; ++j) {
                if (p[j] == T(0)) {
                  dp[j] = 0;
                  continue;
                }
                const T m = use_drop ? drop[prow + j] : T(1);
                const T* vj = pv.value.data() + (b * Lk + j) * D + h * dh;
                T g = 0;
                for (std::size_t e = 0; e < dh; ++e) g += go[e] * vj[e];
                dp[j] = g * m;
                dot += dp[j] * p[j];
                if (pv.requires_grad && m != T(0)) {
                  T* gv = pv.grad.data() + (b * Lk + j) * D + h * dh;
                  const T w = p[j] * m;
                  for (std::size_t e = 0; e < dh; ++e) gv[e] += w * go[e];
                }
              }
              if (!pq.requires_grad && !pk.requires_grad) continue;
              const T* qi = pq.value.data() + (b * Lq + i) * D + h * dh;
              T* gq = pq.requires_grad ? pq.grad.data() + (b * Lq + i) * D + h * dh : nullptr;
              for (std::size_t j = 0; j < Lk; ++j) {
                if (p[j] == T(0)) continue;
                const T ds = p[j] * (dp[j] - dot) * scl;
                if (ds == T(0)) continue;
                const T* kj = pk.value.data() + (b * Lk + j) * D + h * dh;
                if (gq)
                  for (std::size_t e = 0; e < dh; ++e) gq[e] += ds * kj[e];
                if (pk.requires_grad) {
                  T* gk = pk.grad.data() + (b * Lk + j) * D + h * dh;
                  for (std::size_t e = 0; e < dh; ++e) gk[e] += ds * qi[e];
                }
              }
            }
      });
}

template <typename T>
Tensor<T> masked_cross_entropy(const Tensor<T>& logits, std::span<const std::int32_t> targets,
                               std::span<const std::uint8_t> loss_mask) {
  const std::size_t L = logits.rows(), V = logits.cols();
  if (targets.size() != L || loss_mask.size() != L)
    throw DimensionError("masked_cross_entropy: " + std::to_string(L) + " rows but " +
                         std::to_string(targets.size()) + " targets and " +
                         std::to_string(loss_mask.size()) + " mask flags");
  std::size_t count = 0;
  for (std::size_t i = 0; i < L; ++i)
    if (loss_mask[i]) {
      if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= V)
        throw DimensionError("masked_cross_entropy: target " + std::to_string(targets[i]) +
                             " outside vocabulary of " + std::to_string(V));
      ++count;
    }
  if (count == 0) throw DataError("masked_cross_entropy: degenerate batch, loss mask is empty");

  auto x = logits.data();
  // Softmax of the selected rows, kept for the backward pass.
  std::vector<T> soft;
  std::vector<std::size_t> rows;
  std::vector<std::int32_t> tgt;
  soft.reserve(count * V);
  T total = 0;
  for (std::size_t i = 0; i < L; ++i) {
    if (!loss_mask[i]) continue;
    const T* row = x.data() + i * V;
    const T mx = *std::max_element(row, row + V);
    T z = 0;
    for (std::size_t j = 0; j < V; ++j) z += std::exp(row[j] - mx);
    const T lse = mx + std::log(z);
    total += lse - row[targets[i]];
    for (std::size_t j = 0; j < V; ++j) soft.push_back(std::exp(row[j] - lse));
    rows.push_back(i);
    tgt.push_back(targets[i]);
  }
  const T inv = T(1) / T(count);
  return Tensor<T>::make_result(
      {}, {total * inv}, {logits},
      [V, inv, soft = std::move(soft), rows = std::move(rows), tgt = std::move(tgt)](auto& n) {
        auto& g = n.parents[0]->grad;
        const T go = n.grad[0] * inv;
        for (std::size_t r = 0; r < rows.size(); ++r) {
          T* gr = g.data() + rows[r] * V;
          const T* s = soft.data() + r * V;
          for (std::size_t j = 0; j < V; ++j) gr[j] += go * s[j];
          gr[tgt[r]] -= go;
        }
      });
}

template <typename T>
Tensor<T> binary_cross_entropy_with_logits(const Tensor<T>& logits,
                                           std::span<const std::uint8_t> labels) {
  const std::size_t n = logits.numel();
  if (labels.size() != n)
    throw DimensionError("binary_cross_entropy: " + std::to_string(n) + " logits, " +
                         std::to_string(labels.size()) + " labels");
  if (n == 0) throw DataError("binary_cross_entropy: empty batch");
  auto x = logits.data();
  std::vector<T> y(labels.begin(), labels.end());
  T total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    // log(1 + e^x) - y x, evaluated without overflow.
    const T v = x[i];
    total += std::max(v, T(0)) - v * y[i] + std::log1p(std::exp(-std::abs(v)));
  }
  const T inv = T(1) / T(n);
  return Tensor<T>::make_result({}, {total * inv}, {logits}, [inv, y = std::move(y)](auto& node) {
    auto& p = *node.parents[0];
    const T go = node.grad[0] * inv;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const T v = p.value[i];
      const T s = v >= 0 ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
      p.grad[i] += go * (s - y[i]);
    }
  });
}

#define MMCAP_INSTANTIATE_OPS(T)                                                             \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> scale(const Tensor<T>&, T);                                             \
  template Tensor<T> sum(const Tensor<T>&);                                                  \
  template Tensor<T> add_bias(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> matmul_nt(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> softmax(const Tensor<T>&, std::size_t);                                 \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);    \
  template Tensor<T> gelu(const Tensor<T>&);                                                 \
  template Tensor<T> sigmoid(const Tensor<T>&);                                              \
  template Tensor<T> dropout(const Tensor<T>&, double, Rng&);                                \
  template Tensor<T> gather_rows(const Tensor<T>&, std::span<const std::int32_t>);           \
  template Tensor<T> mask_rows(const Tensor<T>&, std::span<const std::uint8_t>);             \
  template Tensor<T> attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,         \
                               const AttentionSpec&);                                        \
  template Tensor<T> masked_cross_entropy(const Tensor<T>&, std::span<const std::int32_t>,   \
                                          std::span<const std::uint8_t>);                    \
  template Tensor<T> binary_cross_entropy_with_logits(const Tensor<T>&,                      \
                                                      std::span<const std::uint8_t>);

MMCAP_INSTANTIATE_OPS(float)
MMCAP_INSTANTIATE_OPS(double)

#undef MMCAP_INSTANTIATE_OPS

double normal01(Rng& rng) {
  // Avoid log(0) by drawing from (0, 1].
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925 * u2);
}

}  // namespace mmcap
