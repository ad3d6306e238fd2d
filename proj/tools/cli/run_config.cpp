// tools/cli/run_config.cpp

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

#include "run_config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mmcap/error.hpp"

namespace mmcap::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig::RunConfig(std::string command, std::vector<KeySpec> keys)
    : command_(std::move(command)), keys_(std::move(keys)) {
  for (const auto& k : keys_) values_[k.name] = k.value;
}

void RunConfig::apply_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  apply_text(ss.str(), path);
}

void RunConfig::apply_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(n) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    if (!has(key))
      throw ConfigError(origin + ":" + std::to_string(n) + ": unknown key '" + key + "' for " + command_);
    values_[key] = trim(line.substr(eq + 1));
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!has(key)) throw ConfigError("unknown key '" + key + "' for " + command_);
  values_[key] = value;
}

const std::string& RunConfig::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key '" + key + "' for " + command_);
  return it->second;
}

const std::string& RunConfig::required(const std::string& key) const {
  const auto& v = str(key);
  if (v.empty()) throw ConfigError(key + ": a value is required for " + command_);
  return v;
}

std::int64_t RunConfig::integer(const std::string& key) const {
  const auto& v = str(key);
  char* end = nullptr;
  errno = 0;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || errno != 0) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return x;
}

std::size_t RunConfig::count(const std::string& key) const {
  const auto x = integer(key);
  if (x < 0) throw ConfigError(key + ": must not be negative");
  return static_cast<std::size_t>(x);
}

double RunConfig::real(const std::string& key) const {
  const auto& v = str(key);
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno != 0) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

bool RunConfig::flag(const std::string& key) const {
  const auto& v = str(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> RunConfig::list(const std::string& key) const {
  std::vector<std::string> out;
  std::stringstream ss(str(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string RunConfig::resolved_text() const {
  std::ostringstream os;
  os << "# mmcap " << command_ << '\n';
  for (const auto& k : keys_) os << k.name << " = " << values_.at(k.name) << '\n';
  return os.str();
}

namespace {

std::vector<KeySpec> model_keys(const std::string& strategy, const std::string& epochs) {
  return {
      {"model", "E2vidD2", "E2D2 | E2D6 | E2vidD2 | E2vidD6"},
      {"d_model", "128", "hidden size"},
      {"heads", "8", "attention heads"},
      {"ffn_dim", "0", "feed-forward size (0: 4 x d_model)"},
      {"dropout", "0.1", "dropout rate"},
      {"video_feature_dim", "0", "frame feature size (0: taken from the data)"},
      {"vocab", "", "vocabulary file"},
      {"strategy", strategy, "training objective"},
      {"epochs", epochs, "epochs"},
      {"iterations_per_epoch", "3125", "iterations per epoch"},
      {"batch_size", "32", "examples per step"},
      {"lr", "1e-4", "peak learning rate"},
      {"warmup", "4000", "warm-up steps"},
      {"mask_ratio", "0.5", "masked fraction of a MASS sequence"},
      {"hide_fraction", "0.25", "MASSdrop: probability of hiding the text stream"},
      {"max_text", "240", "subwords per text input"},
      {"max_frames", "40", "frames per segment"},
      {"resume", "true", "continue from the checkpoint in out/ when present"},
  };
}

void append(std::vector<KeySpec>& a, std::vector<KeySpec> b) { a.insert(a.end(), b.begin(), b.end()); }

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"segment", "train-bpe", "pretrain", "finetune", "predict", "eval"};
  return names;
}

RunConfig make_run_config(const std::string& command, bool desk) {
  std::vector<KeySpec> keys{{"seed", "1", "random seed"}, {"out", "", "output directory"}};
  if (command == "segment") {
    append(keys, {{"input", "", "timed ASR file (JSONL)"},
                  {"output", "", "segment file (default out/segments.jsonl)"},
                  {"gap", "2.0", "split when words are more than this many seconds apart"},
                  {"max_words", "320", "words per segment"},
                  {"max_frames", "40", "frames per segment"}});
  } else if (command == "train-bpe") {
    append(keys, {{"segments", "", "asr+video segment files"},
                  {"cap_text", "", "cap-text files"},
                  {"finetune", "", "asr+video+cap files (ASR and captions)"},
                  {"vocab_size", desk ? "1000" : "8192", "target vocabulary size"},
                  {"output", "", "vocabulary file (default out/vocab.txt)"}});
  } else if (command == "pretrain" || command == "finetune") {
    const bool pre = command == "pretrain";
    append(keys, model_keys(pre ? "MASSvid" : "BiD", pre ? "200" : "30"));
    append(keys, {{"train", "", pre ? "asr+video segment files" : "asr+video+cap segment files"},
                  {"cap_text", "", "cap-text files"}});
    if (!pre) append(keys, {{"init", "", "checkpoint to start from (matching tensors only)"}});
  } else if (command == "predict") {
    append(keys, {{"checkpoint", "", "model checkpoint"},
                  {"vocab", "", "vocabulary file"},
                  {"input", "", "asr+video segment file"},
                  {"output", "", "prediction file (default out/predictions.jsonl)"},
                  {"beam", "4", "beam width"},
                  {"max_len", "32", "generated tokens"},
                  {"use_video", "true", "feed frames when the model has a video stream"},
                  {"batch_size", "32", "segments encoded together"},
                  {"max_text", "240", "subwords per text input"},
                  {"max_frames", "40", "frames per segment"}});
  } else if (command == "eval") {
    append(keys, {{"predictions", "", "prediction file (standard mode)"},
                  {"references", "", "asr+video+cap file, or annotation file in agreement mode"},
                  {"mode", "standard", "standard | constant:<caption> | agreement"},
                  {"tags", "", "tag table: standard | none | TSV path (default: standard except in standard mode)"}});
  } else {
    throw ConfigError("unknown command '" + command + "'");
  }
  RunConfig config(command, std::move(keys));
  if (desk && (command == "pretrain" || command == "finetune")) {
    config.set("epochs", "2");
    config.set("iterations_per_epoch", "50");
    config.set("warmup", "100");
    config.set("lr", "1e-3");
    config.set("d_model", "64");
    config.set("heads", "4");
    config.set("batch_size", "16");
  }
  return config;
}

}  // namespace mmcap::cli
