#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "crosstag/aligner.hpp"
#include "crosstag/types.hpp"

namespace crosstag {

struct ProjectedSentence {
    std::string pair_id;
    TaggedSentence tokens;        // target side; tags may be NULL
    double coverage = 0.0;        // (#non-NULL) / length, recomputed after every transform
    double avg_link_prob = 0.0;   // mean posterior over the links actually used
    std::string source_language;
};

double compute_coverage(const TaggedSentence& s);

// Target token j receives the tag carried by its highest-probability link
// (ties: smaller source index); unlinked tokens stay NULL.
ProjectedSentence project_tokens(const ParallelPair& pair, const Alignment& alignment);

// Per-form tag frequency counts over non-NULL projected tags. A tag is
// allowed for a form iff its relative frequency among that form's non-NULL
// tags reaches the threshold; unseen forms are unconstrained.
class TypeDictionary {
public:
    TypeDictionary(std::size_t num_tags, double min_relative_freq);

    void add(const std::string& form, TagId tag);
    bool seen(const std::string& form) const;
    std::vector<TagId> allowed_tags(const std::string& form) const;
    bool is_allowed(const std::string& form, TagId tag) const;
    double min_relative_freq() const { return min_relative_freq_; }
    const std::vector<std::uint64_t>* counts(const std::string& form) const;

private:
    std::size_t num_tags_;
    double min_relative_freq_;
    std::unordered_map<std::string, std::vector<std::uint64_t>> counts_;
};

TypeDictionary build_type_dictionary(const std::vector<ProjectedSentence>& corpus,
                                     double min_relative_freq, std::size_t num_tags);

// Token repair: allowed tags stay, a uniquely-allowed tag replaces a
// disallowed one, everything else turns NULL. Coverage is recomputed.
ProjectedSentence apply_type_constraints(const ProjectedSentence& s, const TypeDictionary& dict);

// Coverage filter, then sort by avg_link_prob descending (ties keep input
// order), then truncate to top_k.
std::vector<ProjectedSentence> select_training_sentences(
    const std::vector<ProjectedSentence>& corpus, double min_coverage, std::size_t top_k);

// Sidecar metadata: "pair_id<TAB>coverage<TAB>avg_link_prob<TAB>source_language".
std::string write_projected_meta(const std::vector<ProjectedSentence>& corpus);
void apply_projected_meta(std::string_view meta_text, std::vector<ProjectedSentence>& corpus);

// Convenience bundle: CoNLL-U body plus the sidecar above.
std::string write_projected_conllu(const std::vector<ProjectedSentence>& corpus,
                                   const TagSet& tags);
std::vector<ProjectedSentence> parse_projected_corpus(std::string_view conllu_text,
                                                      std::string_view meta_text,
                                                      const TagSet& tags);

}  // namespace crosstag
