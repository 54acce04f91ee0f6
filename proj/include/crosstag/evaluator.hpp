#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "crosstag/projector.hpp"
#include "crosstag/types.hpp"

namespace crosstag {

struct TagScore {
    double precision = 0.0;
    double recall = 0.0;     // also reported as per-tag accuracy
    double f1 = 0.0;
    std::uint64_t support = 0;
};

struct MulticatCell {
    bool present = false;    // pair absent from the test language
    double accuracy = 0.0;
    std::uint64_t support = 0;
};

struct EvalReport {
    double token_accuracy = 0.0;
    double macro_f1 = 0.0;
    std::map<TagId, TagScore> per_tag;                      // tags with support > 0
    std::map<std::string, MulticatCell> multicat;           // "VERB&NOUN" etc. plus "All"
    std::uint64_t token_count = 0;
    double oov_rate = 0.0;
};

// Token accuracy, per-tag precision/recall/F1 and macro-F1 over tags with
// support. exclude_punct drops tokens whose gold tag is PUNCT. known_forms,
// when given, feeds oov_rate (fraction of evaluated tokens whose lowercased
// form is absent).
EvalReport score(const std::vector<TaggedSentence>& pred,
                 const std::vector<TaggedSentence>& gold, const TagSet& tags,
                 bool exclude_punct = false,
                 const std::set<std::string>* known_forms = nullptr);

// Accuracy over gold occurrences of forms that occur in gold with both
// tags of a pair. The "All" row covers forms with >= 2 distinct gold tags.
std::map<std::string, MulticatCell> multicat_accuracy(
    const std::vector<TaggedSentence>& pred, const std::vector<TaggedSentence>& gold,
    const TagSet& tags, const std::vector<std::pair<TagId, TagId>>& pairs);

struct DensityDelta {
    double delta_examples = 0.0;  // (|after| - |before|) / |before|
    double delta_density = 0.0;   // relative change in mean coverage
};

DensityDelta density_stats(const std::vector<ProjectedSentence>& before,
                           const std::vector<ProjectedSentence>& after);

struct PearsonResult {
    double r = 0.0;
    double p_value = 1.0;  // two-sided, t approximation with n-2 dof
};

PearsonResult pearson(const std::vector<double>& xs, const std::vector<double>& ys);

// Report serializations: a human-readable table and a "key<TAB>value"
// machine-readable file. Per-tag rows follow TagSet order.
std::string format_report(const EvalReport& report, const TagSet& tags);
std::string report_to_tsv(const EvalReport& report, const TagSet& tags);

}  // namespace crosstag
