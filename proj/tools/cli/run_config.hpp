// tools/cli/run_config.hpp

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
#include <string>
#include <vector>

namespace mmcap::cli {

struct KeySpec {
  std::string name;
  std::string value;  // default
  std::string help;
};

/// Command settings as key = value pairs. Every key must be declared by the
/// command; values are validated when read.
class RunConfig {
 public:
  RunConfig(std::string command, std::vector<KeySpec> keys);

  const std::string& command() const { return command_; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  /// "key = value" lines; '#' starts a comment. Unknown keys raise
  /// ConfigError naming the key and line.
  void apply_file(const std::string& path);
  void apply_text(const std::string& text, const std::string& origin = "<text>");
  void set(const std::string& key, const std::string& value);

  const std::string& str(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  std::size_t count(const std::string& key) const;  // non-negative integer
  double real(const std::string& key) const;
  bool flag(const std::string& key) const;
  /// Comma-separated, blanks dropped.
  std::vector<std::string> list(const std::string& key) const;
  /// Throws ConfigError when the value is empty.
  const std::string& required(const std::string& key) const;

  /// Every key in declaration order, "key = value" per line.
  std::string resolved_text() const;
  const std::vector<KeySpec>& keys() const { return keys_; }

 private:
  std::string command_;
  std::vector<KeySpec> keys_;
  std::map<std::string, std::string> values_;
};

/// Declared keys and defaults for a subcommand; `desk` shrinks training
/// and model sizes for quick runs.
RunConfig make_run_config(const std::string& command, bool desk);

const std::vector<std::string>& command_names();

}  // namespace mmcap::cli
