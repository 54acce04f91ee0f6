#include "crosstag/projector.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "crosstag/corpus.hpp"
#include "crosstag/io_util.hpp"

namespace crosstag {

double compute_coverage(const TaggedSentence& s) {
    if (s.empty())
        return 0.0;
    std::size_t tagged = 0;
    for (const auto& tok : s.tokens)
        if (tok.has_tag()) ++tagged;
    return static_cast<double>(tagged) / static_cast<double>(s.size());
}

ProjectedSentence project_tokens(const ParallelPair& pair, const Alignment& alignment) {
    if (!alignment.pair_id.empty() && alignment.pair_id != pair.pair_id)
        throw ContractError("alignment pair id '" + alignment.pair_id +
                            "' does not match pair '" + pair.pair_id + "'");
    for (const auto& tok : pair.source.tokens)
        if (!tok.has_tag())
            throw ContractError("projection requires a fully tagged source side (pair '" +
                                pair.pair_id + "')");

    const int src_len = static_cast<int>(pair.source.size());
    const int tgt_len = static_cast<int>(pair.target.size());

    // Best link per target token: highest probability, ties to the smaller
    // source index. Links arrive sorted by (src,tgt), so a strict > keeps
    // the smaller src on ties.
    std::vector<const AlignmentLink*> best(static_cast<std::size_t>(tgt_len), nullptr);
    for (const auto& link : alignment.links) {
        if (link.src < 0 || link.src >= src_len || link.tgt < 0 || link.tgt >= tgt_len)
            throw ContractError("alignment link out of sentence bounds (pair '" +
                                pair.pair_id + "')");
        const AlignmentLink*& slot = best[static_cast<std::size_t>(link.tgt)];
        if (slot == nullptr || link.prob > slot->prob ||
            (link.prob == slot->prob && link.src < slot->src))
            slot = &link;
    }

    ProjectedSentence out;
    out.pair_id = pair.pair_id;
    out.tokens.tokens.reserve(pair.target.size());
    double prob_sum = 0.0;
    std::size_t used = 0;
    for (int j = 0; j < tgt_len; ++j) {
        Token tok = pair.target.tokens[static_cast<std::size_t>(j)];
        const AlignmentLink* link = best[static_cast<std::size_t>(j)];
        if (link != nullptr) {
            tok.tag = pair.source.tokens[static_cast<std::size_t>(link->src)].tag;
            prob_sum += link->prob;
            ++used;
        } else {
            tok.tag = kNullTag;
        }
        out.tokens.tokens.push_back(std::move(tok));
    }
    out.coverage = compute_coverage(out.tokens);
    out.avg_link_prob = used == 0 ? 0.0 : prob_sum / static_cast<double>(used);
    return out;
}

TypeDictionary::TypeDictionary(std::size_t num_tags, double min_relative_freq)
    : num_tags_(num_tags), min_relative_freq_(min_relative_freq) {
    if (min_relative_freq <= 0.0 || min_relative_freq > 1.0)
        throw ContractError("min_relative_freq must lie in (0, 1]");
}

void TypeDictionary::add(const std::string& form, TagId tag) {
    if (tag == kNullTag)
        return;
    if (tag < 0 || static_cast<std::size_t>(tag) >= num_tags_)
        throw ContractError("type dictionary tag index out of range");
    auto& counts = counts_[form];
    if (counts.empty())
        counts.assign(num_tags_, 0);
    ++counts[static_cast<std::size_t>(tag)];
}

bool TypeDictionary::seen(const std::string& form) const {
    return counts_.find(form) != counts_.end();
}

const std::vector<std::uint64_t>* TypeDictionary::counts(const std::string& form) const {
    auto it = counts_.find(form);
    return it == counts_.end() ? nullptr : &it->second;
}

std::vector<TagId> TypeDictionary::allowed_tags(const std::string& form) const {
    std::vector<TagId> allowed;
    auto it = counts_.find(form);
    if (it == counts_.end()) {
        allowed.resize(num_tags_);
        std::iota(allowed.begin(), allowed.end(), 0);
        return allowed;
    }
    const auto& counts = it->second;
    const double total = static_cast<double>(
        std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
    for (std::size_t t = 0; t < num_tags_; ++t) {
        if (counts[t] == 0) continue;
        if (static_cast<double>(counts[t]) / total >= min_relative_freq_)
            allowed.push_back(static_cast<TagId>(t));
    }
    return allowed;
}

bool TypeDictionary::is_allowed(const std::string& form, TagId tag) const {
    auto it = counts_.find(form);
    if (it == counts_.end())
        return true;
    const auto& counts = it->second;
    if (tag < 0 || static_cast<std::size_t>(tag) >= num_tags_ ||
        counts[static_cast<std::size_t>(tag)] == 0)
        return false;
    const double total = static_cast<double>(
        std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
    return static_cast<double>(counts[static_cast<std::size_t>(tag)]) / total >=
           min_relative_freq_;
}

TypeDictionary build_type_dictionary(const std::vector<ProjectedSentence>& corpus,
                                     double min_relative_freq, std::size_t num_tags) {
    TypeDictionary dict(num_tags, min_relative_freq);
    for (const auto& sentence : corpus)
        for (const auto& tok : sentence.tokens.tokens)
            dict.add(tok.form, tok.tag);
    return dict;
}

ProjectedSentence apply_type_constraints(const ProjectedSentence& s, const TypeDictionary& dict) {
    ProjectedSentence out = s;
    for (auto& tok : out.tokens.tokens) {
        if (!tok.has_tag())
            continue;
        if (dict.is_allowed(tok.form, tok.tag))
            continue;
        const auto allowed = dict.allowed_tags(tok.form);
        tok.tag = allowed.size() == 1 ? allowed.front() : kNullTag;
    }
    out.coverage = compute_coverage(out.tokens);
    return out;
}

std::vector<ProjectedSentence> select_training_sentences(
    const std::vector<ProjectedSentence>& corpus, double min_coverage, std::size_t top_k) {
    if (min_coverage < 0.0 || min_coverage > 1.0)
        throw ContractError("min_coverage must lie in [0, 1]");
    if (top_k < 1)
        throw ContractError("top_k must be >= 1");
    std::vector<ProjectedSentence> kept;
    for (const auto& s : corpus)
        if (s.coverage >= min_coverage)
            kept.push_back(s);
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        return a.avg_link_prob > b.avg_link_prob;
    });
    if (kept.size() > top_k)
        kept.resize(top_k);
    return kept;
}

std::string write_projected_meta(const std::vector<ProjectedSentence>& corpus) {
    std::ostringstream out;
    for (const auto& s : corpus)
        out << s.pair_id << '\t' << format_double(s.coverage) << '\t'
            << format_double(s.avg_link_prob) << '\t' << s.source_language << '\n';
    return out.str();
}

void apply_projected_meta(std::string_view meta_text, std::vector<ProjectedSentence>& corpus) {
    std::istringstream in{std::string(meta_text)};
    std::string line;
    std::size_t line_no = 0;
    std::size_t idx = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line, '\t');
        if (fields.size() != 4)
            throw ParseError("projected metadata line must have 4 fields", line_no);
        if (idx >= corpus.size())
            throw ParseError("more metadata rows than sentences", line_no);
        auto& s = corpus[idx++];
        s.pair_id = fields[0];
        s.coverage = parse_double(fields[1]);
        s.avg_link_prob = parse_double(fields[2]);
        s.source_language = fields[3];
    }
    if (idx != corpus.size())
        throw ContractError("fewer metadata rows than sentences");
}

std::string write_projected_conllu(const std::vector<ProjectedSentence>& corpus,
                                   const TagSet& tags) {
    std::vector<TaggedSentence> sentences;
    sentences.reserve(corpus.size());
    for (const auto& s : corpus)
        sentences.push_back(s.tokens);
    return write_conllu_text(sentences, tags);
}

std::vector<ProjectedSentence> parse_projected_corpus(std::string_view conllu_text,
                                                      std::string_view meta_text,
                                                      const TagSet& tags) {
    auto sentences = parse_conllu_text(conllu_text, tags);
    std::vector<ProjectedSentence> corpus;
    corpus.reserve(sentences.size());
    for (auto& s : sentences) {
        ProjectedSentence p;
        p.tokens = std::move(s);
        p.coverage = compute_coverage(p.tokens);
        corpus.push_back(std::move(p));
    }
    apply_projected_meta(meta_text, corpus);
    return corpus;
}

}  // namespace crosstag
