// tools/cli/commands.cpp

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

#include "commands.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "json.hpp"
#include "mmcap/decode.hpp"
#include "mmcap/error.hpp"
#include "mmcap/metrics.hpp"
#include "mmcap/objectives.hpp"

namespace mmcap::cli {

namespace fs = std::filesystem;

namespace {

/// Exclusive lock on out/.lock for the lifetime of the run.
class OutputLock {
 public:
  explicit OutputLock(const fs::path& dir) {
    fs::create_directories(dir);
    const auto path = (dir / ".lock").string();
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0) throw Error("cannot create lock file " + path);
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw Error("output directory " + dir.string() + " is in use by another run");
    }
  }
  ~OutputLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  int fd_ = -1;
};

fs::path out_dir(const RunConfig& c) { return fs::path(c.required("out")); }

std::string output_path(const RunConfig& c, const std::string& fallback) {
  const auto& v = c.str("output");
  return v.empty() ? (out_dir(c) / fallback).string() : v;
}

void write_text(const fs::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw Error("cannot write " + tmp);
    f << text;
    if (!f) throw Error("write failed: " + tmp);
  }
  fs::rename(tmp, path);
}

void echo_config(const RunConfig& c) { write_text(out_dir(c) / "config.resolved", c.resolved_text()); }

std::uint64_t seed_of(const RunConfig& c) { return static_cast<std::uint64_t>(c.integer("seed")); }

}  // namespace

// ---------------------------------------------------------------------------

void cmd_segment(const RunConfig& c, std::ostream& out) {
  const auto input = c.required("input");
  const auto output = output_path(c, "segments.jsonl");
  OutputLock lock(out_dir(c));
  echo_config(c);
  const double gap = c.real("gap");
  const auto max_words = c.count("max_words");
  const auto max_frames = c.count("max_frames");
  if (gap < 0 || max_words == 0) throw ConfigError("gap must be >= 0 and max_words > 0");

  const fs::path in_dir = fs::path(input).parent_path();
  const fs::path dst_dir = fs::absolute(fs::path(output)).parent_path();
  std::ifstream in(input);
  if (!in) throw DataError("cannot open " + input);
  std::string line;
  long n = 0;
  std::size_t videos = 0, segments = 0;
  {
  SegmentWriter writer(output + ".tmp", RecordKind::kAsrVideo);
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string video_id, frames_path;
    std::vector<TimedToken> tokens;
    try {
      auto j = nlohmann::json::parse(line);
      for (const char* key : {"video_id", "tokens"})
        if (!j.contains(key)) throw DataError(input + ": missing field \"" + std::string(key) + "\"", n);
      video_id = j.at("video_id").get<std::string>();
      for (const auto& t : j.at("tokens")) tokens.push_back({t.at("w").get<std::string>(), t.at("t").get<double>()});
      if (j.contains("frames_path")) frames_path = j.at("frames_path").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(input + ": " + e.what(), n);
    }
    std::vector<AsrSegment> segs;
    try {
      segs = segment_asr(tokens, video_id, gap, max_words);
    } catch (const DataError& e) {
      throw DataError(input + ": video " + video_id + ": " + e.what(), n);
    }
    std::size_t available = 0;
    std::string stored_frames;
    if (!frames_path.empty()) {
      fs::path fp(frames_path);
      if (fp.is_relative()) fp = in_dir / fp;
      available = read_frame_file(fp.string()).count();
      stored_frames = fs::relative(fs::absolute(fp), dst_dir).generic_string();
    }
    for (const auto& s : segs) {
      SegmentRecord r;
      r.video_id = video_id;
      r.seg_index = s.index;
      r.tokens = s.tokens;
      if (!stored_frames.empty()) {
        const auto slice = pair_frames(s, available, max_frames);
        r.frames_path = stored_frames;
        r.frame_offset = static_cast<std::int64_t>(slice.offset);
        r.frame_count = static_cast<std::int64_t>(slice.count);
      }
      writer.write(r);
      ++segments;
    }
    ++videos;
  }
  }
  fs::rename(output + ".tmp", output);
  out << "segments " << segments << " from " << videos << " videos -> " << output << '\n';
}

// ---------------------------------------------------------------------------

void cmd_train_bpe(const RunConfig& c, std::ostream& out) {
  const auto output = output_path(c, "vocab.txt");
  OutputLock lock(out_dir(c));
  echo_config(c);
  std::vector<std::string> corpus;
  for (const auto& p : c.list("segments"))
    for (const auto& r : load_segments(p, RecordKind::kAsrVideo)) corpus.push_back(r.asr_text());
  for (const auto& p : c.list("cap_text"))
    for (const auto& r : load_segments(p, RecordKind::kCapText)) corpus.push_back(r.text);
  for (const auto& p : c.list("finetune"))
    for (const auto& r : load_segments(p, RecordKind::kAsrVideoCap)) {
      corpus.push_back(r.asr_text());
      corpus.push_back(r.caption);
    }
  if (corpus.empty()) throw ConfigError("train-bpe: no input files (segments, cap_text or finetune)");
  auto vocab = train_bpe(corpus, c.count("vocab_size"));
  vocab.save(output + ".tmp");
  fs::rename(output + ".tmp", output);
  out << "vocabulary " << vocab.size() << " tokens (" << vocab.merges().size() << " merges) from "
      << corpus.size() << " lines -> " << output << '\n';
}

// ---------------------------------------------------------------------------

namespace {

ModelConfig model_config(const RunConfig& c, std::size_t vocab_size, std::size_t data_feature_dim) {
  ModelConfig m = ModelConfig::preset(c.str("model"));
  m.d_model = c.count("d_model");
  m.heads = c.count("heads");
  m.ffn_dim = c.count("ffn_dim");
  m.dropout = c.real("dropout");
  m.attention_dropout = m.dropout;
  m.vocab_size = vocab_size;
  m.max_text_positions = c.count("max_text") + 1;
  m.max_video_positions = c.count("max_frames");
  const auto dim = c.count("video_feature_dim");
  m.video_feature_dim = dim != 0 ? dim : (data_feature_dim != 0 ? data_feature_dim : kDefaultFeatureDim);
  m.validate();
  return m;
}

std::size_t feature_dim_of(const Dataset& d) {
  for (const auto& s : d.segments())
    if (!s.frames.empty()) return s.frames.dim();
  return 0;
}

template <typename F>
auto named(const char* key, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

}  // namespace

void cmd_train(const RunConfig& c, std::ostream& out) {
  const bool pre = c.command() == "pretrain";
  const auto strategy = named("strategy", [&] { return parse_strategy(c.str("strategy")); });
  if (is_pretraining(strategy) != pre)
    throw ConfigError("strategy: " + c.str("strategy") + " is not a " + c.command() + " strategy");
  named("model", [&] { return ModelConfig::preset(c.str("model")); });
  const auto epochs = static_cast<std::int64_t>(c.count("epochs"));
  const auto per_epoch = static_cast<std::int64_t>(c.count("iterations_per_epoch"));
  if (per_epoch == 0) throw ConfigError("iterations_per_epoch must be positive");
  if (c.count("batch_size") == 0) throw ConfigError("batch_size must be positive");
  const auto vocab_path = c.required("vocab");
  const auto train_files = c.list("train");
  if (train_files.empty() && c.list("cap_text").empty()) throw ConfigError("train: at least one data file is required");

  const fs::path dir = out_dir(c);
  OutputLock lock(dir);
  echo_config(c);

  const auto vocab = Vocabulary::load(vocab_path);
  Dataset data(c.count("max_text"), c.count("max_frames"));
  FrameStore frames;
  for (const auto& p : train_files) data.load_segments(vocab, p, pre ? RecordKind::kAsrVideo : RecordKind::kAsrVideoCap, frames);
  for (const auto& p : c.list("cap_text")) data.load_segments(vocab, p, RecordKind::kCapText, frames);
  const auto mc = model_config(c, vocab.size(), feature_dim_of(data));

  TrainerConfig tc;
  tc.schedule = named("strategy", [&] { return make_schedule(strategy, mc.use_video, c.real("hide_fraction")); });
  tc.batch_size = c.count("batch_size");
  tc.mask_ratio = c.real("mask_ratio");
  tc.seed = seed_of(c);
  tc.adam.lr_max = c.real("lr");
  tc.adam.warmup = c.integer("warmup");

  const auto ckpt_path = (dir / "model.ckpt").string();
  const auto state_path = (dir / "train.state").string();
  const bool resuming = c.flag("resume") && fs::exists(ckpt_path) && fs::exists(state_path);
  Model<float> model(mc, seed_of(c));
  if (resuming) {
    auto ckpt = read_checkpoint(ckpt_path);
    if (!(ckpt.config == mc)) throw ConfigError("checkpoint in " + dir.string() + " was written with a different model configuration");
    load_parameters(model, ckpt, true);
  } else if (!pre && !c.str("init").empty()) {
    auto loaded = load_parameters(model, read_checkpoint(c.str("init")), false);
    out << "initialized " << loaded.size() << " of " << model.params().size() << " tensors from " << c.str("init") << '\n';
  }
  Trainer trainer(model, data, tc);
  std::int64_t start = 0;
  if (resuming) {
    start = load_training_state(state_path, trainer.optimizer());
    out << "resuming at iteration " << start << '\n';
  } else {
    fs::remove(dir / "train_log.csv");
  }
  TrainingLog log((dir / "train_log.csv").string());
  const std::int64_t total = epochs * per_epoch;
  for (std::int64_t it = start; it < total;) {
    const std::int64_t epoch = it / per_epoch, end = std::min(total, (epoch + 1) * per_epoch);
    double sum = 0.0;
    std::size_t steps = 0;
    for (; it < end; ++it) {
      for (std::size_t s = 0; s < tc.schedule.steps.size(); ++s) {
        const auto t0 = std::chrono::steady_clock::now();
        auto r = trainer.run_training_step(s, it);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        if (!std::isfinite(r.loss)) throw Error("loss became " + std::to_string(r.loss) + " at iteration " + std::to_string(it));
        log.write(epoch, it, r, ms);
        sum += r.loss;
        ++steps;
      }
    }
    save_checkpoint(model, ckpt_path + ".tmp");
    save_training_state(state_path + ".tmp", trainer.optimizer(), it);
    fs::rename(ckpt_path + ".tmp", ckpt_path);
    fs::rename(state_path + ".tmp", state_path);
    out << "epoch " << epoch + 1 << '/' << epochs << " mean loss " << sum / static_cast<double>(steps) << '\n';
  }
  out << "checkpoint -> " << ckpt_path << '\n';
}

// ---------------------------------------------------------------------------

void cmd_predict(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto ckpt_path = c.required("checkpoint");
  const auto input = c.required("input");
  const auto output = output_path(c, "predictions.jsonl");
  DecodeOptions opt{c.count("beam"), c.count("max_len")};
  if (opt.beam == 0) throw ConfigError("beam must be at least 1");
  OutputLock lock(out_dir(c));
  echo_config(c);
  auto model = load_checkpoint<float>(ckpt_path);
  const auto vocab = Vocabulary::load(c.required("vocab"));
  if (vocab.size() != model.config().vocab_size)
    throw DataError("vocabulary has " + std::to_string(vocab.size()) + " tokens, checkpoint expects " +
                    std::to_string(model.config().vocab_size));
  Dataset data(c.count("max_text"), c.count("max_frames"));
  FrameStore frames;
  data.load_segments(vocab, input, RecordKind::kAsrVideo, frames);
  const bool want_video = c.flag("use_video");
  if (want_video && !model.config().use_video && feature_dim_of(data) != 0)
    err << "warning: text-only checkpoint; the video stream of " << input << " is ignored\n";
  std::vector<std::size_t> idx(data.segments().size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  auto preds = predict_captions(model, vocab, data, idx, want_video, opt, c.count("batch_size"));
  write_predictions(output + ".tmp", preds);
  fs::rename(output + ".tmp", output);
  out << "predictions " << preds.size() << " -> " << output << '\n';
}

// ---------------------------------------------------------------------------

namespace {

TagTable tag_table(const std::string& spec, bool default_standard, bool& use) {
  use = true;
  if (spec == "standard" || (spec.empty() && default_standard)) return TagTable::standard();
  if (spec.empty() || spec == "none") {
    use = false;
    return {};
  }
  return TagTable::load(spec);
}

std::string command_summary(const std::string& name) {
  static const std::map<std::string, std::string> summaries{
      {"segment", "split timed ASR tokens into segments"},
      {"train-bpe", "learn a BPE vocabulary"},
      {"pretrain", "pretrain on unlabeled segments and caption text"},
      {"finetune", "train captioning on labeled segments"},
      {"predict", "caption segments with a checkpoint"},
      {"eval", "score predictions, a constant baseline or annotator agreement"},
  };
  return summaries.at(name);
}

}  // namespace

void cmd_eval(const RunConfig& c, std::ostream& out) {
  const auto mode = c.str("mode");
  const bool constant = mode.rfind("constant:", 0) == 0;
  if (mode != "standard" && mode != "agreement" && !constant)
    throw ConfigError("mode: expected standard, constant:<caption> or agreement, got '" + mode + "'");
  bool use_tags = false;
  const auto tags = tag_table(c.str("tags"), mode != "standard", use_tags);
  auto norm = [&](const std::string& s) { return use_tags ? tags.standardize(s) : s; };
  const auto refs_path = c.required("references");
  const fs::path dir = out_dir(c);
  OutputLock lock(dir);
  echo_config(c);

  EvalReport report;
  std::string title;
  if (mode == "agreement") {
    auto anns = load_annotations(refs_path);
    auto pool = agreement_pool(anns, use_tags ? &tags : nullptr);
    report = evaluate_agreement(pool);
    title = "annotator agreement (" + std::to_string(pool.size()) + " pairs)";
  } else {
    auto refs = load_segments(refs_path, RecordKind::kAsrVideoCap);
    std::vector<std::string> ref_text, cand;
    std::vector<std::pair<std::string, std::int64_t>> ids;
    for (const auto& r : refs) {
      ref_text.push_back(norm(r.caption));
      ids.emplace_back(r.video_id, r.seg_index);
    }
    if (constant) {
      const auto caption = mode.substr(9);
      cand.assign(refs.size(), caption);
      title = "constant baseline \"" + caption + "\"";
    } else {
      auto preds = read_predictions(c.required("predictions"));
      if (preds.size() != refs.size())
        throw DataError(std::to_string(preds.size()) + " predictions for " + std::to_string(refs.size()) + " references");
      for (std::size_t i = 0; i < refs.size(); ++i) {
        if (preds[i].video_id != refs[i].video_id || preds[i].seg_index != refs[i].seg_index)
          throw DataError("first mismatch at segment " + std::to_string(i + 1) + ": prediction " + preds[i].video_id +
                          "#" + std::to_string(preds[i].seg_index) + " vs reference " + refs[i].video_id + "#" +
                          std::to_string(refs[i].seg_index));
        cand.push_back(norm(preds[i].caption));
      }
      title = "predictions " + c.str("predictions");
    }
    report = evaluate(cand, ref_text, ids);
  }
  write_text(dir / "report.txt", report.to_table(title));
  write_text(dir / "report.csv", report.summary_csv());
  write_text(dir / "segments.csv", report.segments_csv());
  out << report.to_table(title);
}

// ---------------------------------------------------------------------------

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"mmcap: multimodal captioning pipeline", "mmcap"};
  app.require_subcommand(1);
  struct Options {
    std::string config;
    std::int64_t seed = 0;
    std::string out;
    bool desk = false;
    std::vector<std::string> sets;
  };
  std::map<std::string, Options> options;
  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name, command_summary(name));
    auto& o = options[name];
    sub->add_option("--config", o.config, "key = value configuration file");
    sub->add_option("--seed", o.seed, "random seed (overrides the config)");
    sub->add_option("--out", o.out, "output directory (overrides the config)");
    sub->add_flag("--desk", o.desk, "small defaults for quick runs");
    sub->add_option("--set", o.sets, "key=value override (repeatable)");
  }
  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  const auto* sub = app.get_subcommands().front();
  const auto name = sub->get_name();
  const auto& o = options[name];
  try {
    auto config = make_run_config(name, o.desk);
    if (!o.config.empty()) config.apply_file(o.config);
    for (const auto& kv : o.sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (sub->count("--seed")) config.set("seed", std::to_string(o.seed));
    if (sub->count("--out")) config.set("out", o.out);
    config.integer("seed");
    if (name == "segment") cmd_segment(config, out);
    else if (name == "train-bpe") cmd_train_bpe(config, out);
    else if (name == "pretrain" || name == "finetune") cmd_train(config, out);
    else if (name == "predict") cmd_predict(config, out, err);
    else cmd_eval(config, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace mmcap::cli
