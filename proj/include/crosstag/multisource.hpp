#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "crosstag/projector.hpp"
#include "crosstag/types.hpp"

namespace crosstag {

// K projected renderings of mutually parallel source sentences. The
// renderings come from different translation systems, so they may differ
// in length and surface forms.
struct RenderingGroup {
    std::string group_id;
    std::vector<ProjectedSentence> renderings;
    std::vector<std::string> source_languages;  // same order as renderings
};

// form -> per-tag vote counts. Every non-NULL-tagged occurrence of the
// form in any rendering contributes one vote for its tag.
using VoteTally = std::unordered_map<std::string, std::vector<std::uint32_t>>;

// Forms whose exact surface string occurs in at least two distinct
// renderings (case-sensitive).
std::set<std::string> find_overlapping_words(const RenderingGroup& group);

VoteTally vote(const RenderingGroup& group, std::size_t num_tags);

// Returns the chosen rendering with every overlapping-word occurrence
// retagged to the argmax of its tally. Ties prefer the rendering's own
// tag when it is among the tied maxima, otherwise the smallest tag index.
// Non-overlapping tokens are untouched; coverage is recomputed.
ProjectedSentence calibrate(const RenderingGroup& group, std::size_t best, std::size_t num_tags);

struct LanguageStats {
    double mean_coverage = 0.0;
    double mean_link_prob = 0.0;
};

// Corpus-level quality proxy per source language, keyed by language name.
using CorpusStats = std::map<std::string, LanguageStats>;

CorpusStats compute_corpus_stats(const std::vector<ProjectedSentence>& corpus);
void merge_corpus_stats(CorpusStats& into, const std::string& language,
                        const std::vector<ProjectedSentence>& corpus);

// Index of the rendering whose source language maximizes
// mean_coverage * mean_link_prob over the whole corpus; ties go to the
// smaller rendering index. Constant per corpus, not per group.
std::size_t select_best_rendering(const RenderingGroup& group, const CorpusStats& stats);

// Group manifest: "group_id<TAB>file:line<TAB>..." with 1-based line
// numbers addressing sentences inside per-source projected corpus files.
struct GroupFileRef {
    std::string path;
    std::size_t line = 0;  // 1-based sentence ordinal
};

struct GroupRef {
    std::string group_id;
    std::vector<GroupFileRef> renderings;
};

std::string write_group_manifest(const std::vector<GroupRef>& groups);
std::vector<GroupRef> parse_group_manifest(std::string_view text);

}  // namespace crosstag
