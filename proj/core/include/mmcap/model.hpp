// core/include/mmcap/model.hpp

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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mmcap/corpus.hpp"
#include "mmcap/rng.hpp"
#include "mmcap/tensor.hpp"

namespace mmcap {

struct ModelConfig {
  std::size_t d_model = 128;
  std::size_t heads = 8;
  std::size_t encoder_layers = 2;  // per stream
  std::size_t decoder_layers = 2;
  std::size_t ffn_dim = 0;         // 0 means 4 * d_model
  std::size_t vocab_size = 0;
  std::size_t max_text_positions = kMaxTextSubwords + 1;
  std::size_t max_video_positions = kMaxFrames;
  std::size_t video_feature_dim = kDefaultFeatureDim;
  bool use_video = true;
  bool tie_output = true;
  double dropout = 0.1;
  double attention_dropout = 0.1;
  double init_std = 0.02;

  std::size_t ffn() const { return ffn_dim == 0 ? 4 * d_model : ffn_dim; }
  /// Throws ConfigError on inconsistent settings.
  void validate() const;

  /// "E2D2", "E2D6", "E2vidD2", "E2vidD6" (vocabulary size left at 0).
  static ModelConfig preset(const std::string& name);
  std::string preset_name() const;

  /// Versioned key=value lines.
  std::string to_text() const;
  static ModelConfig from_text(const std::string& text);

  bool operator==(const ModelConfig&) const = default;
};

/// Named weights in creation order.
template <typename T>
class ParameterStore {
 public:
  Tensor<T>& add(const std::string& name, Shape shape);
  const Tensor<T>& get(const std::string& name) const;
  Tensor<T>& get(const std::string& name);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const std::vector<std::string>& names() const { return names_; }
  std::vector<Tensor<T>>& tensors() { return tensors_; }
  const std::vector<Tensor<T>>& tensors() const { return tensors_; }
  std::size_t size() const { return tensors_.size(); }
  std::size_t parameter_count() const;
  void zero_grad();

 private:
  std::vector<std::string> names_;
  std::vector<Tensor<T>> tensors_;
  std::map<std::string, std::size_t> index_;
};

struct ForwardOptions {
  bool train = false;  // enables dropout
  Rng* rng = nullptr;  // required when train and dropout > 0
};

/// Final-layer encoder states, rows packed as [batch * length x d].
template <typename T>
struct EncoderOutput {
  std::size_t batch = 0;
  Tensor<T> text;
  std::size_t text_len = 0;
  std::vector<std::uint8_t> text_mask;
  std::vector<TokenId> text_ids;
  Tensor<T> video;
  std::size_t video_len = 0;
  std::vector<std::uint8_t> video_mask;

  bool has_text() const { return text.defined(); }
  bool has_video() const { return video.defined(); }
};

enum class ClsTask { kAlignment, kOrdering };

/// Two-stream encoder (text, video) with cross-modal attention at every
/// layer, and a text decoder attending to both streams.
///
/// Blocks are pre-norm. Per encoder layer and stream: self-attention, then
/// attention from this stream to the other one, then a feed-forward net.
/// Decoder layers: causal self-attention, attention to text states,
/// attention to video states, feed-forward. Attention over an example whose
/// keys are all masked contributes nothing.
template <typename T>
class Model {
 public:
  Model(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ParameterStore<T>& params() { return params_; }
  const ParameterStore<T>& params() const { return params_; }
  /// Draws fresh values for one tensor (same rule as construction).
  void reinitialize(const std::string& name, std::uint64_t seed);

  /// token + position + style embedding for a padded grid -> [B*L x d].
  /// `positions` gives one position per cell (empty: 0..L-1 per row).
  Tensor<T> embed_text(const TokenGrid& grid, std::span<const std::int32_t> positions,
                       const ForwardOptions& opts) const;
  /// Two-layer perceptron with layer norm, plus video position -> [B*L x d].
  Tensor<T> project_video(const FrameGrid& frames, const ForwardOptions& opts) const;

  /// Either stream may be null (or empty); at least one must be present.
  EncoderOutput<T> encode(const TokenGrid* text, const FrameGrid* video,
                          const ForwardOptions& opts) const;

  /// Logits [B*L x V] for decoder inputs `inputs` (BOS-shifted targets).
  /// `hide_text` (per example, may be empty) removes the text states from
  /// that example's view.
  Tensor<T> decode_forward(const TokenGrid& inputs, std::span<const std::int32_t> positions,
                           const EncoderOutput<T>& enc, std::span<const std::uint8_t> hide_text,
                           const ForwardOptions& opts) const;

  /// Head logits [B x 1] from the CLS state (text position 0).
  Tensor<T> cls_logits(ClsTask task, const EncoderOutput<T>& enc) const;
  /// sigmoid(cls_logits), one probability per example.
  std::vector<double> cls_predict(ClsTask task, const EncoderOutput<T>& enc) const;

 private:
  struct AttentionArgs {
    std::size_t batch, query_len, key_len;
    std::span<const std::uint8_t> key_mask;
    bool causal = false;
    bool drop_empty = false;  // zero the rows of examples with no visible key
  };

  void build();
  void add_attention(const std::string& prefix);
  void add_norm(const std::string& prefix);
  void add_ffn(const std::string& prefix);
  void add_linear(const std::string& prefix, std::size_t in, std::size_t out);

  const Tensor<T>& p(const std::string& name) const { return params_.get(name); }
  Tensor<T> norm(const std::string& prefix, const Tensor<T>& x) const;
  Tensor<T> ffn(const std::string& prefix, const Tensor<T>& x, const ForwardOptions& opts) const;
  Tensor<T> attend(const std::string& prefix, const Tensor<T>& q_in, const Tensor<T>& kv_in,
                   const AttentionArgs& args, const ForwardOptions& opts) const;
  Tensor<T> drop(const Tensor<T>& x, const ForwardOptions& opts) const;

  ModelConfig config_;
  std::uint64_t seed_;
  ParameterStore<T> params_;
};

extern template class ParameterStore<float>;
extern template class ParameterStore<double>;
extern template class Model<float>;
extern template class Model<double>;

// ---------------------------------------------------------------------------
// Checkpoints

struct CheckpointTensor {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

struct Checkpoint {
  ModelConfig config;
  std::vector<CheckpointTensor> tensors;

  const CheckpointTensor* find(const std::string& name) const;
};

/// Layout: "MMCKPT1", u32 config length, config text, u32 tensor count, then
/// per tensor {u32 name length, name, u32 rank, u32 extents, f32 values};
/// integers and floats little-endian.
template <typename T>
void save_checkpoint(const Model<T>& model, const std::string& path);
Checkpoint read_checkpoint(const std::string& path);

/// Copies checkpoint tensors into the model. With `strict`, every model
/// tensor must be present; otherwise only names the two share are loaded
/// and the rest keep their values. Shape disagreement always throws
/// CheckpointError naming the tensor. Returns the names loaded.
template <typename T>
std::vector<std::string> load_parameters(Model<T>& model, const Checkpoint& ckpt, bool strict);

/// Builds the model described by the checkpoint and loads it strictly.
template <typename T>
Model<T> load_checkpoint(const std::string& path);

}  // namespace mmcap
