#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "crosstag/synth.hpp"
#include "crosstag/tagger.hpp"

namespace crosstag {

// Flat key=value run configuration with section-prefixed keys
// ("aligner.alpha=0.1"). Unknown keys are rejected; command-line overrides
// win over file values. A serialized snapshot is stored with every run.
struct RunConfig {
    int threads = 1;
    std::uint64_t seed = 1;

    // aligner
    int aligner_iterations = 5;
    double aligner_alpha = 0.1;
    std::string aligner_symmetrization = "intersection";
    bool aligner_filter_before_symmetrize = false;
    bool aligner_model2 = false;
    int aligner_model2_iterations = 5;

    // projector
    double projector_min_relative_freq = 0.2;
    double projector_min_coverage = 0.75;
    long projector_top_k = 0;  // 0 = unlimited

    // tagger (seed is injected from the run seed)
    TaggerConfig tagger;
    std::uint64_t tagger_word_min_count = 1;
    std::uint64_t tagger_affix_min_count = 1;

    // evaluator
    bool eval_exclude_punct = false;

    // multisource
    bool multisource_enabled = true;

    // synth
    SynthSpec synth;
    int synth_num_sources = 1;
    int synth_test_sentences = 50;
    std::string synth_out_dir;

    // per-command I/O
    std::string align_source, align_target, align_out_dir;
    std::string project_source, project_target, project_alignments, project_out_prefix;
    std::string project_language = "L0";
    std::string calibrate_manifest, calibrate_out_prefix;
    std::string train_corpus, train_model_out;
    std::string tag_model, tag_input, tag_output;
    std::string tag_input_format = "plain";  // plain | conllu
    std::string eval_pred, eval_gold, eval_report_prefix, eval_model;
    std::string pipeline_data_dir, pipeline_out_dir;

    void set(const std::string& key, const std::string& value);
    void validate() const;
    std::string snapshot() const;  // sorted key=value lines
};

RunConfig parse_config_text(std::string_view text);
RunConfig parse_config_file(const std::string& path);

}  // namespace crosstag
