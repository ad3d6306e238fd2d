// core/src/optim.cpp

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

#include "mmcap/optim.hpp"

#include <algorithm>
#include <cmath>

#include "mmcap/error.hpp"

namespace mmcap {

double lr_schedule(std::int64_t t, double lr_max, std::int64_t warmup) {
  if (t < 1) throw ContractError("lr_schedule: step index must be >= 1, got " + std::to_string(t));
  if (warmup < 1) throw ContractError("lr_schedule: warm-up must be >= 1");
  const double td = static_cast<double>(t), w = static_cast<double>(warmup);
  if (t <= warmup) return lr_max * td / w;
  return lr_max * std::sqrt(w / td);
}

template <typename T>
double adam_step(std::span<Tensor<T>> params, AdamState<T>& state) {
  if (state.step < 0) throw ContractError("adam_step: negative step counter");
  if (state.m.empty() && state.v.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
  }
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw DimensionError("adam_step: optimizer state tracks " + std::to_string(state.m.size()) +
                         " parameters, given " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::size_t n = params[i].numel();
    if (state.m[i].empty()) state.m[i].assign(n, T(0));
    if (state.v[i].empty()) state.v[i].assign(n, T(0));
    if (state.m[i].size() != n || state.v[i].size() != n)
      throw DimensionError("adam_step: moment size mismatch for parameter " + std::to_string(i) +
                           " of shape " + shape_str(params[i].shape()));
  }

  const std::int64_t t = state.step + 1;
  const auto& c = state.config;
  const double lr = lr_schedule(t, c.lr_max, c.warmup);
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
  const T b1 = T(c.beta1), b2 = T(c.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) continue;
    auto g = params[i].grad();
    auto w = params[i].mutable_data();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = b1 * m[j] + (T(1) - b1) * g[j];
      v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
      const double mhat = static_cast<double>(m[j]) / bc1;
      const double vhat = static_cast<double>(v[j]) / bc2;
      w[j] = static_cast<T>(static_cast<double>(w[j]) - lr * mhat / (std::sqrt(vhat) + c.eps));
    }
  }
  state.step = t;
  return lr;
}

template double adam_step<float>(std::span<Tensor<float>>, AdamState<float>&);
template double adam_step<double>(std::span<Tensor<double>>, AdamState<double>&);

}  // namespace mmcap
