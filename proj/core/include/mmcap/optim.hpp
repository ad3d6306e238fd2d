// core/include/mmcap/optim.hpp

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

#include "mmcap/tensor.hpp"

namespace mmcap {

struct AdamConfig {
  double lr_max = 1e-4;
  std::int64_t warmup = 4000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// lr_max * min(t / warmup, sqrt(warmup / t)), t >= 1.
double lr_schedule(std::int64_t t, double lr_max, std::int64_t warmup);

template <typename T>
struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  // Moments, one entry per parameter in the order passed to adam_step.
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
};

/// One bias-corrected Adam update with learning rate lr_schedule(step + 1).
/// Parameters without a gradient slot are left alone (their moments too).
/// Returns the learning rate used.
template <typename T>
double adam_step(std::span<Tensor<T>> params, AdamState<T>& state);

extern template double adam_step<float>(std::span<Tensor<float>>, AdamState<float>&);
extern template double adam_step<double>(std::span<Tensor<double>>, AdamState<double>&);

}  // namespace mmcap
