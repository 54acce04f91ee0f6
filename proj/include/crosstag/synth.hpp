#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crosstag/aligner.hpp"
#include "crosstag/multisource.hpp"
#include "crosstag/types.hpp"

namespace crosstag {

// Synthetic parallel corpora with known gold alignments and tags. The
// lexicon is tag-preserving by construction and every target form carries
// a tag-determined suffix, so the tagger's affix path sees real signal.
struct SynthSpec {
    std::uint64_t seed = 1;
    int vocab_size = 100;    // per-side vocabulary budget
    int lexicon_size = 0;    // concepts in the lexicon; 0 means vocab_size
    int ambiguity = 1;       // target variants per concept (k-ambiguous lexicon)
    std::vector<double> tag_weights;  // over the tag set; empty = uniform
    double swap_prob = 0.0;  // local swap probability on the target side
    double drop_prob = 0.0;  // source-token drop: the target token stays, unaligned
    // Fraction of concepts whose source tag is systematically wrong in this
    // language (every occurrence carries the same wrong tag).
    double tag_noise = 0.0;
    int num_sentences = 100;
    int sentence_offset = 0;  // shifts the content stream (held-out splits)
    int min_len = 5;
    int max_len = 9;
    std::string language = "L0";

    int effective_lexicon_size() const { return lexicon_size > 0 ? lexicon_size : vocab_size; }
    void validate(const TagSet& tags) const;
};

struct SynthCorpus {
    std::vector<ParallelPair> pairs;
    std::vector<Alignment> gold_alignments;        // lexicon-induced links, prob 1
    std::vector<TaggedSentence> gold_target_tags;  // target rendering, gold tags
};

// Deterministic given the seed; sentence content depends only on
// (seed, index) while noise additionally keys on the language, so corpora
// generated for different languages are mutually parallel.
SynthCorpus generate(const SynthSpec& spec, const TagSet& tags);

struct SynthGroup {
    RenderingGroup group;
    TaggedSentence gold;  // gold tags of the shared underlying sentence
};

// K renderings of one underlying sentence; each rendering's projected tags
// are corrupted independently with the given probability.
SynthGroup make_rendering_group(const SynthSpec& spec, int k, double disagreement,
                                const TagSet& tags);

}  // namespace crosstag
