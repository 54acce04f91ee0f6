#include "crosstag/multisource.hpp"

#include <algorithm>
#include <sstream>

#include "crosstag/io_util.hpp"

namespace crosstag {

std::set<std::string> find_overlapping_words(const RenderingGroup& group) {
    std::unordered_map<std::string, std::uint32_t> rendering_count;
    for (const auto& rendering : group.renderings) {
        std::set<std::string> seen;
        for (const auto& tok : rendering.tokens.tokens)
            seen.insert(tok.form);
        for (const auto& form : seen)
            ++rendering_count[form];
    }
    std::set<std::string> overlapping;
    for (const auto& [form, n] : rendering_count)
        if (n >= 2)
            overlapping.insert(form);
    return overlapping;
}

VoteTally vote(const RenderingGroup& group, std::size_t num_tags) {
    VoteTally tally;
    for (const auto& rendering : group.renderings) {
        for (const auto& tok : rendering.tokens.tokens) {
            if (!tok.has_tag())
                continue;
            if (tok.tag < 0 || static_cast<std::size_t>(tok.tag) >= num_tags)
                throw ContractError("vote: tag index out of range for form '" + tok.form + "'");
            auto& counts = tally[tok.form];
            if (counts.empty())
                counts.assign(num_tags, 0);
            ++counts[static_cast<std::size_t>(tok.tag)];
        }
    }
    return tally;
}

ProjectedSentence calibrate(const RenderingGroup& group, std::size_t best, std::size_t num_tags) {
    if (group.renderings.empty())
        throw ContractError("calibrate: empty rendering group");
    if (best >= group.renderings.size())
        throw ContractError("calibrate: rendering index " + std::to_string(best) +
                            " out of range (group '" + group.group_id + "')");

    const auto overlapping = find_overlapping_words(group);
    const auto tally = vote(group, num_tags);

    ProjectedSentence out = group.renderings[best];
    for (auto& tok : out.tokens.tokens) {
        if (!overlapping.count(tok.form))
            continue;
        auto it = tally.find(tok.form);
        if (it == tally.end())
            continue;  // every occurrence NULL: nothing to vote on
        const auto& counts = it->second;
        std::uint32_t max_count = 0;
        for (auto c : counts)
            max_count = std::max(max_count, c);
        if (max_count == 0)
            continue;
        if (tok.has_tag() && counts[static_cast<std::size_t>(tok.tag)] == max_count)
            continue;  // own tag is among the tied maxima
        for (std::size_t t = 0; t < counts.size(); ++t) {
            if (counts[t] == max_count) {
                tok.tag = static_cast<TagId>(t);
                break;
            }
        }
    }
    out.coverage = compute_coverage(out.tokens);
    return out;
}

CorpusStats compute_corpus_stats(const std::vector<ProjectedSentence>& corpus) {
    CorpusStats stats;
    std::map<std::string, std::vector<const ProjectedSentence*>> by_language;
    for (const auto& s : corpus)
        by_language[s.source_language].push_back(&s);
    for (const auto& [language, sentences] : by_language) {
        LanguageStats ls;
        for (const auto* s : sentences) {
            ls.mean_coverage += s->coverage;
            ls.mean_link_prob += s->avg_link_prob;
        }
        const double n = static_cast<double>(sentences.size());
        ls.mean_coverage /= n;
        ls.mean_link_prob /= n;
        stats[language] = ls;
    }
    return stats;
}

void merge_corpus_stats(CorpusStats& into, const std::string& language,
                        const std::vector<ProjectedSentence>& corpus) {
    if (corpus.empty())
        throw ContractError("corpus stats require at least one sentence for " + language);
    LanguageStats ls;
    for (const auto& s : corpus) {
        ls.mean_coverage += s.coverage;
        ls.mean_link_prob += s.avg_link_prob;
    }
    const double n = static_cast<double>(corpus.size());
    ls.mean_coverage /= n;
    ls.mean_link_prob /= n;
    into[language] = ls;
}

std::size_t select_best_rendering(const RenderingGroup& group, const CorpusStats& stats) {
    if (group.renderings.empty())
        throw ContractError("select_best_rendering: empty rendering group");
    if (group.source_languages.size() != group.renderings.size())
        throw ContractError("select_best_rendering: language list does not match renderings");
    std::size_t best = 0;
    double best_score = -1.0;
    for (std::size_t i = 0; i < group.source_languages.size(); ++i) {
        auto it = stats.find(group.source_languages[i]);
        if (it == stats.end())
            throw ContractError("no corpus stats for source language '" +
                                group.source_languages[i] + "'");
        const double score = it->second.mean_coverage * it->second.mean_link_prob;
        if (score > best_score) {
            best_score = score;
            best = i;
        }
    }
    return best;
}

std::string write_group_manifest(const std::vector<GroupRef>& groups) {
    std::ostringstream out;
    for (const auto& g : groups) {
        out << g.group_id;
        for (const auto& r : g.renderings)
            out << '\t' << r.path << ':' << r.line;
        out << '\n';
    }
    return out.str();
}

std::vector<GroupRef> parse_group_manifest(std::string_view text) {
    std::vector<GroupRef> groups;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        auto fields = split(line, '\t');
        if (fields.size() < 2)
            throw ParseError("group manifest line needs a group id and at least one rendering",
                             line_no);
        GroupRef g;
        g.group_id = fields[0];
        for (std::size_t i = 1; i < fields.size(); ++i) {
            auto colon = fields[i].rfind(':');
            if (colon == std::string::npos)
                throw ParseError("rendering reference must look like path:line", line_no);
            GroupFileRef ref;
            ref.path = fields[i].substr(0, colon);
            long n = parse_long(fields[i].substr(colon + 1));
            if (n < 1)
                throw ParseError("rendering line numbers are 1-based", line_no);
            ref.line = static_cast<std::size_t>(n);
            g.renderings.push_back(std::move(ref));
        }
        groups.push_back(std::move(g));
    }
    return groups;
}

}  // namespace crosstag
