// core/src/model.cpp

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

#include "mmcap/model.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "mmcap/error.hpp"
#include "mmcap/ops.hpp"

namespace mmcap {

namespace {

constexpr char kCheckpointMagic[] = "MMCKPT1";
constexpr int kConfigVersion = 1;
constexpr double kNormEps = 1e-5;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Rows of every example that has at least one visible key.
std::vector<std::uint8_t> rows_with_keys(std::span<const std::uint8_t> key_mask, std::size_t batch,
                                         std::size_t key_len, std::size_t query_len) {
  std::vector<std::uint8_t> keep(batch * query_len, 0);
  for (std::size_t b = 0; b < batch; ++b) {
    bool any = false;
    for (std::size_t j = 0; j < key_len && !any; ++j) any = key_mask[b * key_len + j] != 0;
    if (any) std::fill_n(keep.begin() + static_cast<std::ptrdiff_t>(b * query_len), query_len, 1);
  }
  return keep;
}

std::vector<std::int32_t> default_positions(std::size_t batch, std::size_t len) {
  std::vector<std::int32_t> pos(batch * len);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < len; ++i) pos[b * len + i] = static_cast<std::int32_t>(i);
  return pos;
}

}  // namespace

// ---------------------------------------------------------------------------
// ModelConfig

void ModelConfig::validate() const {
  if (d_model == 0 || heads == 0 || d_model % heads != 0)
    throw ConfigError("model: d_model " + std::to_string(d_model) + " must be a positive multiple of heads " +
                      std::to_string(heads));
  if (encoder_layers == 0 || decoder_layers == 0) throw ConfigError("model: layer counts must be >= 1");
  if (vocab_size <= static_cast<std::size_t>(kNumSpecialTokens))
    throw ConfigError("model: vocab_size must exceed the reserved ids");
  if (max_text_positions == 0 || max_video_positions == 0)
    throw ConfigError("model: position tables must be non-empty");
  if (use_video && video_feature_dim == 0) throw ConfigError("model: video_feature_dim must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0) || !(attention_dropout >= 0.0 && attention_dropout < 1.0))
    throw ConfigError("model: dropout must lie in [0, 1)");
  if (!(init_std > 0.0)) throw ConfigError("model: init_std must be positive");
}

ModelConfig ModelConfig::preset(const std::string& name) {
  ModelConfig c;
  if (name == "E2D2") {
    c.use_video = false;
  } else if (name == "E2D6") {
    c.use_video = false;
    c.decoder_layers = 6;
  } else if (name == "E2vidD2") {
  } else if (name == "E2vidD6") {
    c.decoder_layers = 6;
  } else {
    throw ConfigError("unknown model size '" + name + "' (expected E2D2, E2D6, E2vidD2 or E2vidD6)");
  }
  return c;
}

std::string ModelConfig::preset_name() const {
  return "E" + std::to_string(encoder_layers) + (use_video ? "vid" : "") + "D" +
         std::to_string(decoder_layers);
}

std::string ModelConfig::to_text() const {
  std::ostringstream o;
  o << "version=" << kConfigVersion << "\n"
    << "d_model=" << d_model << "\n"
    << "heads=" << heads << "\n"
    << "encoder_layers=" << encoder_layers << "\n"
    << "decoder_layers=" << decoder_layers << "\n"
    << "ffn_dim=" << ffn_dim << "\n"
    << "vocab_size=" << vocab_size << "\n"
    << "max_text_positions=" << max_text_positions << "\n"
    << "max_video_positions=" << max_video_positions << "\n"
    << "video_feature_dim=" << video_feature_dim << "\n"
    << "use_video=" << (use_video ? 1 : 0) << "\n"
    << "tie_output=" << (tie_output ? 1 : 0) << "\n"
    << "dropout=" << format_double(dropout) << "\n"
    << "attention_dropout=" << format_double(attention_dropout) << "\n"
    << "init_std=" << format_double(init_std) << "\n";
  return o.str();
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  ModelConfig c;
  std::istringstream in(text);
  std::string line;
  bool versioned = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("model config: malformed line '" + line + "'");
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    try {
      auto sz = [&value] { return static_cast<std::size_t>(std::stoull(value)); };
      if (key == "version") {
        if (std::stoi(value) != kConfigVersion) throw ConfigError("model config: unsupported version " + value);
        versioned = true;
      } else if (key == "d_model") c.d_model = sz();
      else if (key == "heads") c.heads = sz();
      else if (key == "encoder_layers") c.encoder_layers = sz();
      else if (key == "decoder_layers") c.decoder_layers = sz();
      else if (key == "ffn_dim") c.ffn_dim = sz();
      else if (key == "vocab_size") c.vocab_size = sz();
      else if (key == "max_text_positions") c.max_text_positions = sz();
      else if (key == "max_video_positions") c.max_video_positions = sz();
      else if (key == "video_feature_dim") c.video_feature_dim = sz();
      else if (key == "use_video") c.use_video = sz() != 0;
      else if (key == "tie_output") c.tie_output = sz() != 0;
      else if (key == "dropout") c.dropout = std::stod(value);
      else if (key == "attention_dropout") c.attention_dropout = std::stod(value);
      else if (key == "init_std") c.init_std = std::stod(value);
      else throw ConfigError("model config: unknown key '" + key + "'");
    } catch (const std::logic_error&) {
      throw ConfigError("model config: bad value for '" + key + "'");
    }
  }
  if (!versioned) throw ConfigError("model config: missing version");
  return c;
}

// ---------------------------------------------------------------------------
// ParameterStore

template <typename T>
Tensor<T>& ParameterStore<T>::add(const std::string& name, Shape shape) {
  if (contains(name)) throw ContractError("parameter '" + name + "' defined twice");
  index_[name] = tensors_.size();
  names_.push_back(name);
  tensors_.push_back(Tensor<T>::zeros(std::move(shape), true));
  return tensors_.back();
}

template <typename T>
const Tensor<T>& ParameterStore<T>::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("no parameter named '" + name + "'");
  return tensors_[it->second];
}

template <typename T>
Tensor<T>& ParameterStore<T>::get(const std::string& name) {
  return const_cast<Tensor<T>&>(std::as_const(*this).get(name));
}

template <typename T>
std::size_t ParameterStore<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.numel();
  return n;
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (auto& t : tensors_) t.clear_grad();
}

// ---------------------------------------------------------------------------
// Model construction

template <typename T>
Model<T>::Model(const ModelConfig& config, std::uint64_t seed) : config_(config), seed_(seed) {
  config_.validate();
  build();
  for (const auto& name : params_.names()) reinitialize(name, seed_);
}

template <typename T>
void Model<T>::reinitialize(const std::string& name, std::uint64_t seed) {
  auto values = params_.get(name).mutable_data();
  if (ends_with(name, ".g")) {
    std::fill(values.begin(), values.end(), T(1));
  } else if (ends_with(name, ".b")) {
    std::fill(values.begin(), values.end(), T(0));
  } else {
    Rng rng = make_rng(seed, RngStream::kInit, fnv1a(name));
    for (auto& v : values) v = static_cast<T>(config_.init_std * normal01(rng));
  }
}

template <typename T>
void Model<T>::add_linear(const std::string& prefix, std::size_t in, std::size_t out) {
  params_.add(prefix + ".w", {in, out});
  params_.add(prefix + ".b", {out});
}

template <typename T>
void Model<T>::add_attention(const std::string& prefix) {
  for (const char* part : {".q", ".k", ".v", ".o"})
    add_linear(prefix + part, config_.d_model, config_.d_model);
}

template <typename T>
void Model<T>::add_norm(const std::string& prefix) {
  params_.add(prefix + ".g", {config_.d_model});
  params_.add(prefix + ".b", {config_.d_model});
}

template <typename T>
void Model<T>::add_ffn(const std::string& prefix) {
  add_linear(prefix + ".fc1", config_.d_model, config_.ffn());
  add_linear(prefix + ".fc2", config_.ffn(), config_.d_model);
}

template <typename T>
void Model<T>::build() {
  const std::size_t d = config_.d_model;
  params_.add("embed.tok", {config_.vocab_size, d});
  params_.add("embed.text_pos", {config_.max_text_positions, d});
  params_.add("embed.style", {2, d});
  if (config_.use_video) {
    params_.add("embed.video_pos", {config_.max_video_positions, d});
    add_linear("video_proj.fc1", config_.video_feature_dim, d);
    add_linear("video_proj.fc2", d, d);
    add_norm("video_proj.ln");
  }
  std::vector<std::string> streams{"text_enc"};
  if (config_.use_video) streams.push_back("video_enc");
  for (std::size_t l = 0; l < config_.encoder_layers; ++l) {
    for (const auto& s : streams) {
      const std::string pre = s + "." + std::to_string(l);
      add_norm(pre + ".ln_self");
      add_attention(pre + ".self");
      if (config_.use_video) {
        add_norm(pre + ".ln_cross_q");
        add_norm(pre + ".ln_cross_kv");
        add_attention(pre + ".cross");
      }
      add_norm(pre + ".ln_ffn");
      add_ffn(pre + ".ffn");
    }
  }
  for (const auto& s : streams) add_norm(s + ".ln_f");

  for (std::size_t l = 0; l < config_.decoder_layers; ++l) {
    const std::string pre = "dec." + std::to_string(l);
    add_norm(pre + ".ln_self");
    add_attention(pre + ".self");
    add_norm(pre + ".ln_text");
    add_attention(pre + ".text_attn");
    if (config_.use_video) {
      add_norm(pre + ".ln_video");
      add_attention(pre + ".video_attn");
    }
    add_norm(pre + ".ln_ffn");
    add_ffn(pre + ".ffn");
  }
  add_norm("dec.ln_f");
  if (!config_.tie_output) add_linear("out", d, config_.vocab_size);

  for (const char* head : {"cls.align", "cls.order"}) {
    add_linear(std::string(head) + ".fc1", d, d);
    add_linear(std::string(head) + ".fc2", d, 1);
  }
}

// ---------------------------------------------------------------------------
// Building blocks

template <typename T>
Tensor<T> Model<T>::drop(const Tensor<T>& x, const ForwardOptions& opts) const {
  if (!opts.train || config_.dropout == 0.0) return x;
  if (opts.rng == nullptr) throw ContractError("training forward pass needs a random generator");
  return dropout(x, config_.dropout, *opts.rng);
}

template <typename T>
Tensor<T> Model<T>::norm(const std::string& prefix, const Tensor<T>& x) const {
  return layer_norm(x, p(prefix + ".g"), p(prefix + ".b"), static_cast<T>(kNormEps));
}

template <typename T>
Tensor<T> Model<T>::ffn(const std::string& prefix, const Tensor<T>& x, const ForwardOptions& opts) const {
  auto h = gelu(linear(x, p(prefix + ".fc1.w"), p(prefix + ".fc1.b")));
  return linear(drop(h, opts), p(prefix + ".fc2.w"), p(prefix + ".fc2.b"));
}

template <typename T>
Tensor<T> Model<T>::attend(const std::string& prefix, const Tensor<T>& q_in, const Tensor<T>& kv_in,
                           const AttentionArgs& args, const ForwardOptions& opts) const {
  auto q = linear(q_in, p(prefix + ".q.w"), p(prefix + ".q.b"));
  auto k = linear(kv_in, p(prefix + ".k.w"), p(prefix + ".k.b"));
  auto v = linear(kv_in, p(prefix + ".v.w"), p(prefix + ".v.b"));
  AttentionSpec spec;
  spec.batch = args.batch;
  spec.query_len = args.query_len;
  spec.key_len = args.key_len;
  spec.heads = config_.heads;
  spec.key_mask = args.key_mask;
  spec.causal = args.causal;
  if (opts.train && config_.attention_dropout > 0.0) {
    if (opts.rng == nullptr) throw ContractError("training forward pass needs a random generator");
    spec.dropout = config_.attention_dropout;
    spec.rng = opts.rng;
  }
  auto out = linear(attention(q, k, v, spec), p(prefix + ".o.w"), p(prefix + ".o.b"));
  if (args.drop_empty && !args.key_mask.empty()) {
    auto keep = rows_with_keys(args.key_mask, args.batch, args.key_len, args.query_len);
    out = mask_rows(out, std::span<const std::uint8_t>(keep));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Forward pass

template <typename T>
Tensor<T> Model<T>::embed_text(const TokenGrid& grid, std::span<const std::int32_t> positions,
                               const ForwardOptions& opts) const {
  if (grid.length > config_.max_text_positions)
    throw ContractError("text of length " + std::to_string(grid.length) + " exceeds " +
                        std::to_string(config_.max_text_positions) + " positions");
  if (grid.styles.size() != grid.batch)
    throw DimensionError("token grid has " + std::to_string(grid.styles.size()) + " styles for " +
                         std::to_string(grid.batch) + " rows");
  std::vector<std::int32_t> pos;
  if (positions.empty()) {
    pos = default_positions(grid.batch, grid.length);
  } else {
    if (positions.size() != grid.ids.size())
      throw DimensionError("positions: " + std::to_string(positions.size()) + " for " +
                           std::to_string(grid.ids.size()) + " tokens");
    pos.assign(positions.begin(), positions.end());
    for (auto q : pos)
      if (q < 0 || static_cast<std::size_t>(q) >= config_.max_text_positions)
        throw ContractError("position " + std::to_string(q) + " outside the position table");
  }
  std::vector<std::int32_t> styles(grid.ids.size());
  for (std::size_t b = 0; b < grid.batch; ++b)
    std::fill_n(styles.begin() + static_cast<std::ptrdiff_t>(b * grid.length), grid.length,
                static_cast<std::int32_t>(grid.styles[b]));
  auto x = add(add(gather_rows(p("embed.tok"), std::span<const std::int32_t>(grid.ids)),
                   gather_rows(p("embed.text_pos"), std::span<const std::int32_t>(pos))),
               gather_rows(p("embed.style"), std::span<const std::int32_t>(styles)));
  return drop(x, opts);
}

template <typename T>
Tensor<T> Model<T>::project_video(const FrameGrid& frames, const ForwardOptions& opts) const {
  if (!config_.use_video) throw ContractError("text-only model has no video stream");
  const std::size_t rows = frames.batch * frames.length;
  if (rows == 0) return Tensor<T>::zeros({0, config_.d_model});
  if (frames.dim != config_.video_feature_dim)
    throw DimensionError("frame features of dim " + std::to_string(frames.dim) + ", model expects " +
                         std::to_string(config_.video_feature_dim));
  if (frames.length > config_.max_video_positions)
    throw ContractError(std::to_string(frames.length) + " frames exceed " +
                        std::to_string(config_.max_video_positions) + " video positions");
  auto x = Tensor<T>::from({rows, frames.dim}, std::vector<T>(frames.values.begin(), frames.values.end()));
  auto h = gelu(linear(x, p("video_proj.fc1.w"), p("video_proj.fc1.b")));
  h = norm("video_proj.ln", linear(h, p("video_proj.fc2.w"), p("video_proj.fc2.b")));
  auto pos = default_positions(frames.batch, frames.length);
  h = add(h, gather_rows(p("embed.video_pos"), std::span<const std::int32_t>(pos)));
  return drop(h, opts);
}

template <typename T>
EncoderOutput<T> Model<T>::encode(const TokenGrid* text, const FrameGrid* video,
                                  const ForwardOptions& opts) const {
  const bool has_text = text != nullptr && text->batch > 0 && text->length > 0;
  const bool has_video = config_.use_video && video != nullptr && video->length > 0 && video->any();
  if (!has_text && !has_video) throw ContractError("encode: no input stream present");
  if (has_text && has_video && text->batch != video->batch)
    throw DimensionError("encode: text batch " + std::to_string(text->batch) + " vs video batch " +
                         std::to_string(video->batch));

  EncoderOutput<T> out;
  out.batch = has_text ? text->batch : video->batch;
  Tensor<T> t, v;
  if (has_text) {
    out.text_len = text->length;
    out.text_mask = text->mask;
    out.text_ids = text->ids;
    t = embed_text(*text, {}, opts);
  }
  if (has_video) {
    out.video_len = video->length;
    out.video_mask = video->mask;
    v = project_video(*video, opts);
  }
  const std::size_t B = out.batch, Lt = out.text_len, Lv = out.video_len;
  const std::span<const std::uint8_t> tmask(out.text_mask), vmask(out.video_mask);

  for (std::size_t l = 0; l < config_.encoder_layers; ++l) {
    const std::string tp = "text_enc." + std::to_string(l), vp = "video_enc." + std::to_string(l);
    if (has_text) {
      auto n = norm(tp + ".ln_self", t);
      t = add(t, drop(attend(tp + ".self", n, n, {B, Lt, Lt, tmask}, opts), opts));
    }
    if (has_video) {
      auto n = norm(vp + ".ln_self", v);
      v = add(v, drop(attend(vp + ".self", n, n, {B, Lv, Lv, vmask}, opts), opts));
    }
    if (has_text && has_video) {
      auto tq = norm(tp + ".ln_cross_q", t), tkv = norm(tp + ".ln_cross_kv", t);
      auto vq = norm(vp + ".ln_cross_q", v), vkv = norm(vp + ".ln_cross_kv", v);
      AttentionArgs t_to_v{B, Lt, Lv, vmask, false, true};
      AttentionArgs v_to_t{B, Lv, Lt, tmask, false, true};
      t = add(t, drop(attend(tp + ".cross", tq, vkv, t_to_v, opts), opts));
      v = add(v, drop(attend(vp + ".cross", vq, tkv, v_to_t, opts), opts));
    }
    if (has_text) t = add(t, drop(ffn(tp + ".ffn", norm(tp + ".ln_ffn", t), opts), opts));
    if (has_video) v = add(v, drop(ffn(vp + ".ffn", norm(vp + ".ln_ffn", v), opts), opts));
  }
  if (has_text) out.text = norm("text_enc.ln_f", t);
  if (has_video) out.video = norm("video_enc.ln_f", v);
  return out;
}

template <typename T>
Tensor<T> Model<T>::decode_forward(const TokenGrid& inputs, std::span<const std::int32_t> positions,
                                   const EncoderOutput<T>& enc, std::span<const std::uint8_t> hide_text,
                                   const ForwardOptions& opts) const {
  if (inputs.batch != enc.batch)
    throw DimensionError("decoder batch " + std::to_string(inputs.batch) + " vs encoder batch " +
                         std::to_string(enc.batch));
  if (!hide_text.empty() && hide_text.size() != enc.batch)
    throw DimensionError("hide flags: " + std::to_string(hide_text.size()) + " for batch " +
                         std::to_string(enc.batch));
  if (inputs.length > config_.max_text_positions)
    throw ContractError("decoder input of length " + std::to_string(inputs.length) + " exceeds " +
                        std::to_string(config_.max_text_positions) + " positions");
  const std::size_t B = inputs.batch, L = inputs.length;

  std::vector<std::int32_t> pos = positions.empty() ? default_positions(B, L)
                                                    : std::vector<std::int32_t>(positions.begin(), positions.end());
  if (pos.size() != B * L)
    throw DimensionError("positions: " + std::to_string(pos.size()) + " for " + std::to_string(B * L) + " tokens");
  for (auto q : pos)
    if (q < 0 || static_cast<std::size_t>(q) >= config_.max_text_positions)
      throw ContractError("position " + std::to_string(q) + " outside the position table");
  std::vector<std::int32_t> styles(B * L);
  for (std::size_t b = 0; b < B; ++b)
    std::fill_n(styles.begin() + static_cast<std::ptrdiff_t>(b * L), L, static_cast<std::int32_t>(inputs.styles.at(b)));
  auto x = add(add(gather_rows(p("embed.tok"), std::span<const std::int32_t>(inputs.ids)),
                   gather_rows(p("embed.text_pos"), std::span<const std::int32_t>(pos))),
               gather_rows(p("embed.style"), std::span<const std::int32_t>(styles)));
  x = drop(x, opts);

  std::vector<std::uint8_t> text_keys = enc.text_mask;
  if (!hide_text.empty())
    for (std::size_t b = 0; b < B; ++b)
      if (hide_text[b]) std::fill_n(text_keys.begin() + static_cast<std::ptrdiff_t>(b * enc.text_len), enc.text_len, 0);
  const bool use_video = config_.use_video && enc.has_video();

  for (std::size_t l = 0; l < config_.decoder_layers; ++l) {
    const std::string pre = "dec." + std::to_string(l);
    auto n = norm(pre + ".ln_self", x);
    AttentionArgs self{B, L, L, std::span<const std::uint8_t>(inputs.mask), true, false};
    x = add(x, drop(attend(pre + ".self", n, n, self, opts), opts));
    if (enc.has_text()) {
      AttentionArgs a{B, L, enc.text_len, std::span<const std::uint8_t>(text_keys), false, true};
      x = add(x, drop(attend(pre + ".text_attn", norm(pre + ".ln_text", x), enc.text, a, opts), opts));
    }
    if (use_video) {
      AttentionArgs a{B, L, enc.video_len, std::span<const std::uint8_t>(enc.video_mask), false, true};
      x = add(x, drop(attend(pre + ".video_attn", norm(pre + ".ln_video", x), enc.video, a, opts), opts));
    }
    x = add(x, drop(ffn(pre + ".ffn", norm(pre + ".ln_ffn", x), opts), opts));
  }
  x = norm("dec.ln_f", x);
  if (config_.tie_output) return matmul_nt(x, p("embed.tok"));
  return linear(x, p("out.w"), p("out.b"));
}

template <typename T>
Tensor<T> Model<T>::cls_logits(ClsTask task, const EncoderOutput<T>& enc) const {
  if (!enc.has_text()) throw ContractError("classification needs the text stream");
  std::vector<std::int32_t> rows(enc.batch);
  for (std::size_t b = 0; b < enc.batch; ++b) {
    if (enc.text_ids.at(b * enc.text_len) != kCls)
      throw ContractError("classification needs CLS at text position 0 (example " + std::to_string(b) + ")");
    rows[b] = static_cast<std::int32_t>(b * enc.text_len);
  }
  const std::string head = task == ClsTask::kAlignment ? "cls.align" : "cls.order";
  auto h = gather_rows(enc.text, std::span<const std::int32_t>(rows));
  h = gelu(linear(h, p(head + ".fc1.w"), p(head + ".fc1.b")));
  return linear(h, p(head + ".fc2.w"), p(head + ".fc2.b"));
}

template <typename T>
std::vector<double> Model<T>::cls_predict(ClsTask task, const EncoderOutput<T>& enc) const {
  auto probs = sigmoid(cls_logits(task, enc));
  return std::vector<double>(probs.data().begin(), probs.data().end());
}

// ---------------------------------------------------------------------------
// Checkpoints

const CheckpointTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

template <typename T>
void save_checkpoint(const Model<T>& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open " + path + " for writing");
  out.write(kCheckpointMagic, 7);
  const std::string config = model.config().to_text();
  binio::write_u32(out, static_cast<std::uint32_t>(config.size()));
  out.write(config.data(), static_cast<std::streamsize>(config.size()));
  const auto& store = model.params();
  binio::write_u32(out, static_cast<std::uint32_t>(store.size()));
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& name = store.names()[i];
    const auto& t = store.tensors()[i];
    binio::write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    binio::write_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (auto e : t.shape()) binio::write_u32(out, static_cast<std::uint32_t>(e));
    for (T v : t.data()) binio::write_f32(out, static_cast<float>(v));
  }
  if (!out) throw CheckpointError("write failed: " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  char magic[7];
  if (!in.read(magic, 7) || std::memcmp(magic, kCheckpointMagic, 7) != 0)
    throw CheckpointError(path + ": not a checkpoint (bad magic)");
  auto fail = [&path](const std::string& what) { return CheckpointError(path + ": " + what); };
  std::uint32_t len = 0;
  if (!binio::read_u32(in, len) || len > (1u << 20)) throw fail("bad config block");
  std::string text(len, '\0');
  if (!in.read(text.data(), len)) throw fail("truncated config block");
  Checkpoint ckpt;
  try {
    ckpt.config = ModelConfig::from_text(text);
  } catch (const ConfigError& e) {
    throw fail(e.what());
  }
  std::uint32_t count = 0;
  if (!binio::read_u32(in, count)) throw fail("truncated tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointTensor t;
    if (!binio::read_u32(in, len) || len > 4096) throw fail("bad tensor name");
    t.name.resize(len);
    if (!in.read(t.name.data(), len)) throw fail("truncated tensor name");
    std::uint32_t rank = 0;
    if (!binio::read_u32(in, rank) || rank > 8) throw fail("bad rank for tensor '" + t.name + "'");
    for (std::uint32_t r = 0; r < rank; ++r) {
      std::uint32_t e = 0;
      if (!binio::read_u32(in, e)) throw fail("truncated shape for tensor '" + t.name + "'");
      t.shape.push_back(e);
    }
    t.values.resize(shape_numel(t.shape));
    for (auto& v : t.values)
      if (!binio::read_f32(in, v)) throw fail("truncated values for tensor '" + t.name + "'");
    ckpt.tensors.push_back(std::move(t));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw fail("trailing bytes");
  return ckpt;
}

template <typename T>
std::vector<std::string> load_parameters(Model<T>& model, const Checkpoint& ckpt, bool strict) {
  auto& store = model.params();
  std::vector<std::string> loaded;
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& name = store.names()[i];
    const auto* src = ckpt.find(name);
    if (src == nullptr) {
      if (strict) throw CheckpointError("checkpoint lacks tensor '" + name + "'");
      continue;
    }
    auto& dst = store.tensors()[i];
    if (src->shape != dst.shape())
      throw CheckpointError("tensor '" + name + "': checkpoint shape " + shape_str(src->shape) +
                            ", model shape " + shape_str(dst.shape()));
    auto out = dst.mutable_data();
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = static_cast<T>(src->values[j]);
    loaded.push_back(name);
  }
  if (strict && ckpt.tensors.size() != loaded.size())
    throw CheckpointError("checkpoint has tensors the model does not define");
  return loaded;
}

template <typename T>
Model<T> load_checkpoint(const std::string& path) {
  auto ckpt = read_checkpoint(path);
  Model<T> model(ckpt.config, 0);
  load_parameters(model, ckpt, true);
  return model;
}

template class ParameterStore<float>;
template class ParameterStore<double>;
template class Model<float>;
template class Model<double>;
template void save_checkpoint<float>(const Model<float>&, const std::string&);
template void save_checkpoint<double>(const Model<double>&, const std::string&);
template std::vector<std::string> load_parameters<float>(Model<float>&, const Checkpoint&, bool);
template std::vector<std::string> load_parameters<double>(Model<double>&, const Checkpoint&, bool);
template Model<float> load_checkpoint<float>(const std::string&);
template Model<double> load_checkpoint<double>(const std::string&);

}  // namespace mmcap
