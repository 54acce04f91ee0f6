#include "crosstag/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include "crosstag/io_util.hpp"

namespace crosstag {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt, std::uint64_t index = 0) {
    return splitmix64(splitmix64(seed ^ salt) ^ index);
}

constexpr std::uint64_t kLexiconSalt = 0x4c455849ull;   // lexicon stream
constexpr std::uint64_t kSentenceSalt = 0x53454e54ull;  // sentence content stream
constexpr std::uint64_t kNoiseSalt = 0x4e4f4953ull;     // per-language noise stream
constexpr std::uint64_t kCorruptSalt = 0x434f5252ull;   // per-language tag corruption
constexpr std::uint64_t kGroupSalt = 0x47525550ull;     // rendering-group stream

struct Lexicon {
    std::vector<TagId> concept_tags;
    std::vector<std::string> source_forms;               // per concept, language-specific
    std::vector<std::vector<std::string>> target_forms;  // per concept, per variant
};

// Two-letter tag code, so length-3 suffixes "_cc" determine the tag.
std::string tag_code(TagId tag) {
    const char c = static_cast<char>('a' + tag % 26);
    return std::string{c, c};
}

TagId sample_tag(std::mt19937_64& rng, const std::vector<double>& cumulative) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng) * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    auto idx = static_cast<std::size_t>(it - cumulative.begin());
    if (idx >= cumulative.size())
        idx = cumulative.size() - 1;
    return static_cast<TagId>(idx);
}

// The lexicon stream is language-independent: corpora generated for
// different languages share concepts, tags and target surface forms.
Lexicon build_lexicon(const SynthSpec& spec, const TagSet& tags) {
    std::mt19937_64 rng(derive_seed(spec.seed, kLexiconSalt));
    std::vector<double> cumulative;
    double acc = 0.0;
    for (std::size_t t = 0; t < tags.size(); ++t) {
        acc += spec.tag_weights.empty() ? 1.0 : spec.tag_weights[t];
        cumulative.push_back(acc);
    }
    const int n = spec.effective_lexicon_size();
    Lexicon lex;
    lex.concept_tags.reserve(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c) {
        const TagId tag = sample_tag(rng, cumulative);
        lex.concept_tags.push_back(tag);
        lex.source_forms.push_back(spec.language + "w" + std::to_string(c));
        std::vector<std::string> variants;
        for (int v = 0; v < spec.ambiguity; ++v) {
            std::string form = "w" + std::to_string(c);
            if (spec.ambiguity > 1)
                form += "v" + std::to_string(v);
            form += "_" + tag_code(tag);
            variants.push_back(std::move(form));
        }
        lex.target_forms.push_back(std::move(variants));
    }
    return lex;
}

std::vector<int> sample_concepts(const SynthSpec& spec, std::uint64_t sentence_index) {
    std::mt19937_64 rng(derive_seed(spec.seed, kSentenceSalt, sentence_index));
    std::uniform_int_distribution<int> len_dist(spec.min_len, spec.max_len);
    std::uniform_int_distribution<int> concept_dist(0, spec.effective_lexicon_size() - 1);
    const int len = len_dist(rng);
    std::vector<int> concepts(static_cast<std::size_t>(len));
    for (auto& c : concepts)
        c = concept_dist(rng);
    return concepts;
}

TagId corrupt_tag(TagId gold, std::mt19937_64& rng, std::size_t num_tags) {
    std::uniform_int_distribution<int> dist(0, static_cast<int>(num_tags) - 2);
    int draw = dist(rng);
    if (draw >= gold)
        ++draw;  // uniform over the other tags
    return static_cast<TagId>(draw);
}

}  // namespace

void SynthSpec::validate(const TagSet& tags) const {
    if (vocab_size < 1)
        throw ConfigError("synth: vocab_size must be >= 1");
    if (effective_lexicon_size() > vocab_size)
        throw ConfigError("synth: vocabulary smaller than lexicon (" +
                          std::to_string(vocab_size) + " < " +
                          std::to_string(effective_lexicon_size()) + ")");
    if (ambiguity < 1)
        throw ConfigError("synth: ambiguity must be >= 1");
    if (!tag_weights.empty()) {
        if (tag_weights.size() != tags.size())
            throw ConfigError("synth: tag_weights must match the tag set size");
        double sum = 0.0;
        for (double w : tag_weights) {
            if (w < 0.0)
                throw ConfigError("synth: tag weights must be non-negative");
            sum += w;
        }
        if (sum <= 0.0)
            throw ConfigError("synth: tag weights must not all be zero");
    }
    auto check_prob = [](double p, const char* name) {
        if (p < 0.0 || p > 1.0)
            throw ConfigError(std::string("synth: ") + name + " must lie in [0, 1]");
    };
    check_prob(swap_prob, "swap_prob");
    check_prob(drop_prob, "drop_prob");
    check_prob(tag_noise, "tag_noise");
    if (num_sentences < 1)
        throw ConfigError("synth: num_sentences must be >= 1");
    if (sentence_offset < 0)
        throw ConfigError("synth: sentence_offset must be >= 0");
    if (min_len < 1 || max_len < min_len)
        throw ConfigError("synth: sentence length range is invalid");
    if (language.empty())
        throw ConfigError("synth: language name must not be empty");
}

SynthCorpus generate(const SynthSpec& spec, const TagSet& tags) {
    spec.validate(tags);
    const Lexicon lex = build_lexicon(spec, tags);
    const std::uint64_t lang_hash = fnv1a64(spec.language);

    // Systematic annotation noise: a corrupted concept carries the same
    // wrong tag on every source occurrence in this language, the way a
    // word pair with diverging grammar is consistently misprojected.
    std::vector<TagId> source_tag(lex.concept_tags);
    if (spec.tag_noise > 0.0) {
        std::mt19937_64 corrupt(derive_seed(spec.seed ^ lang_hash, kCorruptSalt));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (auto& tag : source_tag)
            if (unit(corrupt) < spec.tag_noise)
                tag = corrupt_tag(tag, corrupt, tags.size());
    }

    SynthCorpus corpus;
    corpus.pairs.reserve(static_cast<std::size_t>(spec.num_sentences));
    char id_buf[32];

    for (int s = 0; s < spec.num_sentences; ++s) {
        const auto stream_index = static_cast<std::uint64_t>(s + spec.sentence_offset);
        const auto concepts = sample_concepts(spec, stream_index);
        const auto len = concepts.size();
        std::mt19937_64 noise(derive_seed(spec.seed ^ lang_hash, kNoiseSalt, stream_index));
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        std::vector<bool> dropped(len, false);
        std::size_t kept = 0;
        for (std::size_t i = 0; i < len; ++i) {
            dropped[i] = unit(noise) < spec.drop_prob;
            if (!dropped[i]) ++kept;
        }
        if (kept == 0)
            dropped[0] = false;  // both sides must stay non-empty

        // Local swaps compose left to right over the target order.
        std::vector<std::size_t> order(len);
        for (std::size_t i = 0; i < len; ++i) order[i] = i;
        for (std::size_t i = 0; i + 1 < len; ++i)
            if (unit(noise) < spec.swap_prob)
                std::swap(order[i], order[i + 1]);

        std::vector<int> variant(len, 0);
        if (spec.ambiguity > 1) {
            std::uniform_int_distribution<int> vd(0, spec.ambiguity - 1);
            for (auto& v : variant)
                v = vd(noise);
        }

        ParallelPair pair;
        std::snprintf(id_buf, sizeof(id_buf), "%s-%06d", spec.language.c_str(), s);
        pair.pair_id = id_buf;

        std::vector<int> src_pos(len, -1);
        for (std::size_t i = 0; i < len; ++i) {
            if (dropped[i])
                continue;
            const int c = concepts[i];
            src_pos[i] = static_cast<int>(pair.source.size());
            pair.source.tokens.emplace_back(lex.source_forms[static_cast<std::size_t>(c)],
                                            source_tag[static_cast<std::size_t>(c)]);
        }

        Alignment gold;
        gold.pair_id = pair.pair_id;
        gold.direction = LinkDirection::symmetrized;
        TaggedSentence gold_tags;
        for (std::size_t t = 0; t < len; ++t) {
            const std::size_t p = order[t];
            const int c = concepts[p];
            const auto& form =
                lex.target_forms[static_cast<std::size_t>(c)][static_cast<std::size_t>(variant[p])];
            pair.target.tokens.emplace_back(form);
            gold_tags.tokens.emplace_back(form, lex.concept_tags[static_cast<std::size_t>(c)]);
            if (!dropped[p])
                gold.links.push_back({src_pos[p], static_cast<int>(t), 1.0});
        }
        std::sort(gold.links.begin(), gold.links.end(), [](const auto& a, const auto& b) {
            return std::make_pair(a.src, a.tgt) < std::make_pair(b.src, b.tgt);
        });

        corpus.pairs.push_back(std::move(pair));
        corpus.gold_alignments.push_back(std::move(gold));
        corpus.gold_target_tags.push_back(std::move(gold_tags));
    }
    return corpus;
}

SynthGroup make_rendering_group(const SynthSpec& spec, int k, double disagreement,
                                const TagSet& tags) {
    spec.validate(tags);
    if (k < 1)
        throw ContractError("make_rendering_group: k must be >= 1");
    if (disagreement < 0.0 || disagreement > 1.0)
        throw ContractError("make_rendering_group: disagreement must lie in [0, 1]");

    const Lexicon lex = build_lexicon(spec, tags);
    std::mt19937_64 content(derive_seed(spec.seed, kGroupSalt));
    std::uniform_int_distribution<int> len_dist(spec.min_len, spec.max_len);
    std::uniform_int_distribution<int> concept_dist(0, spec.effective_lexicon_size() - 1);
    const int len = len_dist(content);
    std::vector<int> concepts(static_cast<std::size_t>(len));
    for (auto& c : concepts)
        c = concept_dist(content);

    SynthGroup out;
    out.group.group_id = "g0";
    for (std::size_t t = 0; t < concepts.size(); ++t) {
        const int c = concepts[t];
        out.gold.tokens.emplace_back(lex.target_forms[static_cast<std::size_t>(c)][0],
                                     lex.concept_tags[static_cast<std::size_t>(c)]);
    }

    for (int r = 0; r < k; ++r) {
        std::mt19937_64 noise(
            derive_seed(spec.seed, kGroupSalt ^ kNoiseSalt, static_cast<std::uint64_t>(r)));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        ProjectedSentence rendering;
        rendering.pair_id = "g0-S" + std::to_string(r);
        rendering.source_language = "S" + std::to_string(r);
        rendering.avg_link_prob = 1.0;
        for (const auto& gold_tok : out.gold.tokens) {
            TagId tag = gold_tok.tag;
            if (disagreement > 0.0 && unit(noise) < disagreement)
                tag = corrupt_tag(tag, noise, tags.size());
            rendering.tokens.tokens.emplace_back(gold_tok.form, tag);
        }
        rendering.coverage = compute_coverage(rendering.tokens);
        out.group.renderings.push_back(std::move(rendering));
        out.group.source_languages.push_back("S" + std::to_string(r));
    }
    return out;
}

}  // namespace crosstag
