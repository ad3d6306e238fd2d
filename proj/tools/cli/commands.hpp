// tools/cli/commands.hpp

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

#include <iosfwd>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace mmcap::cli {

/// Parses arguments, runs one subcommand and maps failures to exit codes:
/// 0 success, 1 data or runtime error, 2 configuration error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Subcommands on a resolved configuration. They throw on failure.
void cmd_segment(const RunConfig& config, std::ostream& out);
void cmd_train_bpe(const RunConfig& config, std::ostream& out);
void cmd_train(const RunConfig& config, std::ostream& out);  // pretrain and finetune
void cmd_predict(const RunConfig& config, std::ostream& out, std::ostream& err);
void cmd_eval(const RunConfig& config, std::ostream& out);

}  // namespace mmcap::cli
