#pragma once

#include <string>
#include <vector>

#include "crosstag/config.hpp"
#include "crosstag/evaluator.hpp"
#include "crosstag/types.hpp"

namespace crosstag {

inline constexpr const char* kToolVersion = "0.1.0";

// Reads a tagged CoNLL-U file and a line-parallel plain-text target file
// into parallel pairs with stable ids p000000, p000001, ...
std::vector<ParallelPair> load_parallel_corpus(const std::string& source_conllu_path,
                                               const std::string& target_plain_path,
                                               const TagSet& tags);

// Stage drivers behind the CLI subcommands. Each writes its outputs plus a
// run_<command>.meta record (config snapshot, input digests, version, wall
// time) into its output directory. All data outputs are byte-identical
// across reruns with the same config and inputs.
void cmd_synth(const RunConfig& config);
void cmd_align(const RunConfig& config);
void cmd_project(const RunConfig& config);
void cmd_calibrate(const RunConfig& config);
void cmd_train(const RunConfig& config);
void cmd_tag(const RunConfig& config);
EvalReport cmd_eval(const RunConfig& config);
EvalReport cmd_pipeline(const RunConfig& config);

}  // namespace crosstag
