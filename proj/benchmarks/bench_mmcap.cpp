// benchmarks/bench_mmcap.cpp

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

#include <benchmark/benchmark.h>

#include "mmcap/decode.hpp"
#include "mmcap/metrics.hpp"
#include "mmcap/objectives.hpp"
#include "mmcap/ops.hpp"
#include "mmcap/synthetic.hpp"

namespace mmcap {
namespace {

Tensor<float> random_tensor(std::size_t r, std::size_t c, Rng& rng, bool grad = false) {
  std::vector<float> v(r * c);
  for (auto& x : v) x = static_cast<float>(normal01(rng));
  return Tensor<float>::from({r, c}, std::move(v), grad);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  auto a = random_tensor(n, n, rng), b = random_tensor(n, n, rng);
  NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b).data().data());
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_AttentionForwardBackward(benchmark::State& state) {
  const std::size_t B = 32, L = static_cast<std::size_t>(state.range(0)), d = 128;
  Rng rng(2);
  auto q = random_tensor(B * L, d, rng, true), k = random_tensor(B * L, d, rng, true),
       v = random_tensor(B * L, d, rng, true);
  AttentionSpec spec{B, L, L, 8, {}, true};
  for (auto _ : state) {
    auto out = sum(attention(q, k, v, spec));
    out.backward();
    q.clear_grad();
    k.clear_grad();
    v.clear_grad();
  }
}
BENCHMARK(BM_AttentionForwardBackward)->Arg(16)->Arg(40)->Unit(benchmark::kMillisecond);

struct TrainWorld {
  SyntheticWorld world{5, 16};
  Vocabulary vocab;
  Dataset data;
  TrainWorld() {
    Rng rng(3);
    std::vector<SyntheticVideo> videos;
    for (int i = 0; i < 16; ++i) videos.push_back(world.make_video("v" + std::to_string(i), 4, rng));
    std::vector<std::string> corpus;
    for (auto& v : videos)
      for (auto& s : v.segments) corpus.insert(corpus.end(), {s.asr, s.caption});
    vocab = train_bpe(corpus, 300);
    for (auto& v : videos)
      for (std::size_t i = 0; i < v.segments.size(); ++i)
        data.add_segment(vocab, v.id, static_cast<std::int64_t>(i), v.segments[i].asr, v.segments[i].frames,
                         v.segments[i].caption);
  }
  ModelConfig config(std::size_t d) const {
    auto c = ModelConfig::preset("E2vidD2");
    c.d_model = d;
    c.vocab_size = vocab.size();
    c.video_feature_dim = 16;
    return c;
  }
};

void BM_TrainingStep(benchmark::State& state) {
  static TrainWorld w;
  Model<float> m(w.config(static_cast<std::size_t>(state.range(0))), 1);
  TrainerConfig tc;
  tc.schedule = make_schedule(Strategy::kUniD, true);
  Trainer t(m, w.data, tc);
  std::int64_t it = 0;
  for (auto _ : state) benchmark::DoNotOptimize(t.run_iteration(it++));
}
BENCHMARK(BM_TrainingStep)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_BeamSearch(benchmark::State& state) {
  static TrainWorld w;
  Model<float> m(w.config(64), 1);
  std::vector<std::size_t> idx{0, 1, 2, 3};
  DecodeOptions opt{static_cast<std::size_t>(state.range(0)), 16};
  for (auto _ : state) benchmark::DoNotOptimize(predict_captions(m, w.vocab, w.data, idx, true, opt));
}
BENCHMARK(BM_BeamSearch)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Metrics(benchmark::State& state) {
  SyntheticWorld world(9, 4);
  Rng rng(4);
  std::vector<Words> c, r;
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    c.push_back(eval_tokenize(world.random_caption(rng)));
    r.push_back(eval_tokenize(world.random_asr_sentence(rng)));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(bleu(c, r, 4));
    benchmark::DoNotOptimize(rouge_l(c, r));
    benchmark::DoNotOptimize(cider_d(c, r));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Metrics)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace mmcap

BENCHMARK_MAIN();
