#include "crosstag/aligner.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "crosstag/io_util.hpp"
#include "crosstag/parallel.hpp"

namespace crosstag {

namespace {

constexpr const char* kNullForm = "<NULL>";
constexpr std::size_t kEmBlockSize = 256;

std::uint64_t pair_key(int e, int f) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(e)) << 32) |
           static_cast<std::uint32_t>(f);
}

std::uint64_t len_key(int l, int m) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(l)) << 32) |
           static_cast<std::uint32_t>(m);
}

struct EncodedCorpus {
    // e_sents exclude the NULL word; it is implicit at slot 0.
    std::vector<std::vector<int>> e_sents;
    std::vector<std::vector<int>> f_sents;
};

EncodedCorpus encode_corpus(const std::vector<ParallelPair>& pairs,
                            TrainDirection direction, TranslationTable& table) {
    EncodedCorpus corpus;
    corpus.e_sents.reserve(pairs.size());
    corpus.f_sents.reserve(pairs.size());
    for (const auto& pair : pairs) {
        if (pair.source.empty() || pair.target.empty())
            throw ContractError("parallel pair '" + pair.pair_id + "' has an empty side");
        const TaggedSentence& e_side =
            direction == TrainDirection::forward ? pair.source : pair.target;
        const TaggedSentence& f_side =
            direction == TrainDirection::forward ? pair.target : pair.source;
        std::vector<int> e_ids, f_ids;
        e_ids.reserve(e_side.size());
        f_ids.reserve(f_side.size());
        for (const auto& tok : e_side.tokens)
            e_ids.push_back(table.add_source_form(tok.form));
        for (const auto& tok : f_side.tokens)
            f_ids.push_back(table.add_target_form(tok.form));
        corpus.e_sents.push_back(std::move(e_ids));
        corpus.f_sents.push_back(std::move(f_ids));
    }
    return corpus;
}

struct EmBlockResult {
    std::unordered_map<std::uint64_t, double> counts;   // (e,f) -> expected count
    std::unordered_map<int, double> totals;             // e -> row total
    std::unordered_map<std::uint64_t, std::vector<double>> q_counts;  // (l,m) -> flat [j*(l+1)+i]
    double log_likelihood = 0.0;
};

}  // namespace

Symmetrization parse_symmetrization(const std::string& name) {
    if (name == "intersection") return Symmetrization::intersection;
    if (name == "union") return Symmetrization::union_all;
    if (name == "grow_diag_final") return Symmetrization::grow_diag_final;
    throw ConfigError("unknown symmetrization heuristic: " + name);
}

const char* symmetrization_name(Symmetrization s) {
    switch (s) {
        case Symmetrization::intersection: return "intersection";
        case Symmetrization::union_all: return "union";
        case Symmetrization::grow_diag_final: return "grow_diag_final";
    }
    return "?";
}

TranslationTable::TranslationTable() {
    source_forms_.push_back(kNullForm);
    source_index_.emplace(kNullForm, kNullWord);
    rows_.emplace_back();
}

int TranslationTable::source_index(const std::string& form) const {
    auto it = source_index_.find(form);
    return it == source_index_.end() ? -1 : it->second;
}

int TranslationTable::target_index(const std::string& form) const {
    auto it = target_index_.find(form);
    return it == target_index_.end() ? -1 : it->second;
}

int TranslationTable::add_source_form(const std::string& form) {
    auto [it, inserted] = source_index_.emplace(form, source_vocab_size());
    if (inserted) {
        source_forms_.push_back(form);
        rows_.emplace_back();
    }
    return it->second;
}

int TranslationTable::add_target_form(const std::string& form) {
    auto [it, inserted] = target_index_.emplace(form, target_vocab_size());
    if (inserted)
        target_forms_.push_back(form);
    return it->second;
}

double TranslationTable::prob(int e, int f) const {
    if (e < 0 || e >= source_vocab_size() || f < 0)
        return kFloorProb;
    const auto& row = rows_[static_cast<std::size_t>(e)];
    auto it = row.find(f);
    return it == row.end() ? kFloorProb : it->second;
}

double TranslationTable::prob(const std::string& e_form, const std::string& f_form) const {
    return prob(source_index(e_form), target_index(f_form));
}

void TranslationTable::set_prob(int e, int f, double p) {
    if (e < 0 || e >= source_vocab_size())
        throw ContractError("translation table source index out of range");
    rows_[static_cast<std::size_t>(e)][f] = p;
}

const std::unordered_map<int, double>& TranslationTable::row(int e) const {
    if (e < 0 || e >= source_vocab_size())
        throw ContractError("translation table source index out of range");
    return rows_[static_cast<std::size_t>(e)];
}

std::string TranslationTable::serialize() const {
    std::ostringstream out;
    for (int e = 0; e < source_vocab_size(); ++e) {
        const auto& row = rows_[static_cast<std::size_t>(e)];
        std::vector<std::pair<int, double>> entries(row.begin(), row.end());
        std::sort(entries.begin(), entries.end());
        for (const auto& [f, p] : entries)
            out << source_forms_[static_cast<std::size_t>(e)] << '\t'
                << target_forms_.at(static_cast<std::size_t>(f)) << '\t'
                << format_double(p) << '\n';
    }
    return out.str();
}

TranslationTable TranslationTable::deserialize(std::string_view text) {
    TranslationTable table;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line, '\t');
        if (fields.size() != 3)
            throw ParseError("translation table line must have 3 fields", line_no);
        int e = table.add_source_form(fields[0]);
        int f = table.add_target_form(fields[1]);
        table.set_prob(e, f, parse_double(fields[2]));
    }
    return table;
}

double DistortionTable::prob(int i, int j, int l, int m) const {
    const std::vector<double>* row = find_row(l, m);
    if (row == nullptr || i < 0 || i > l || j < 0 || j >= m)
        return 1.0 / static_cast<double>(l + 1);  // uniform fallback
    return (*row)[static_cast<std::size_t>(j) * static_cast<std::size_t>(l + 1) +
                  static_cast<std::size_t>(i)];
}

std::vector<double>& DistortionTable::row(int l, int m) {
    auto& r = table_[len_key(l, m)];
    if (r.empty())
        r.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(l + 1),
                 1.0 / static_cast<double>(l + 1));
    return r;
}

const std::vector<double>* DistortionTable::find_row(int l, int m) const {
    auto it = table_.find(len_key(l, m));
    return it == table_.end() ? nullptr : &it->second;
}

namespace {

// One EM sweep. Uses the distortion table when with_distortion is set
// (Model 2); otherwise the alignment prior is uniform (Model 1). Returns
// the corpus log-likelihood under the parameters seen on entry.
double em_iteration(const EncodedCorpus& corpus, TranslationTable& table,
                    DistortionTable* distortion, bool with_distortion, int threads) {
    const std::size_t n = corpus.e_sents.size();
    const std::size_t num_blocks = (n + kEmBlockSize - 1) / kEmBlockSize;
    std::vector<EmBlockResult> blocks(num_blocks);

    for_each_block(n, kEmBlockSize, threads, [&](std::size_t b, std::size_t begin, std::size_t end) {
        EmBlockResult& out = blocks[b];
        std::vector<double> post;
        for (std::size_t s = begin; s < end; ++s) {
            const auto& es = corpus.e_sents[s];
            const auto& fs = corpus.f_sents[s];
            const int l = static_cast<int>(es.size());
            const int m = static_cast<int>(fs.size());
            std::vector<double>* qc = nullptr;
            if (with_distortion) {
                auto& flat = out.q_counts[len_key(l, m)];
                if (flat.empty())
                    flat.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(l + 1), 0.0);
                qc = &flat;
            }
            post.resize(static_cast<std::size_t>(l) + 1);
            for (int j = 0; j < m; ++j) {
                const int f = fs[static_cast<std::size_t>(j)];
                double z = 0.0;
                for (int i = 0; i <= l; ++i) {
                    const int e = i == 0 ? TranslationTable::kNullWord
                                         : es[static_cast<std::size_t>(i - 1)];
                    double w = table.prob(e, f);
                    if (with_distortion)
                        w *= distortion->prob(i, j, l, m);
                    else
                        w /= static_cast<double>(l + 1);
                    post[static_cast<std::size_t>(i)] = w;
                    z += w;
                }
                out.log_likelihood += std::log(z);
                for (int i = 0; i <= l; ++i) {
                    const int e = i == 0 ? TranslationTable::kNullWord
                                         : es[static_cast<std::size_t>(i - 1)];
                    const double c = post[static_cast<std::size_t>(i)] / z;
                    out.counts[pair_key(e, f)] += c;
                    out.totals[e] += c;
                    if (with_distortion)
                        (*qc)[static_cast<std::size_t>(j) * static_cast<std::size_t>(l + 1) +
                              static_cast<std::size_t>(i)] += c;
                }
            }
        }
    });

    // Merge in block order: per-key addition order is fixed regardless of
    // thread count, so results are bitwise reproducible.
    double ll = 0.0;
    std::unordered_map<std::uint64_t, double> counts;
    std::unordered_map<int, double> totals;
    std::unordered_map<std::uint64_t, std::vector<double>> q_counts;
    for (auto& blk : blocks) {
        ll += blk.log_likelihood;
        for (const auto& [key, c] : blk.counts)
            counts[key] += c;
        for (const auto& [e, c] : blk.totals)
            totals[e] += c;
        for (auto& [lm, flat] : blk.q_counts) {
            auto& acc = q_counts[lm];
            if (acc.empty())
                acc.assign(flat.size(), 0.0);
            for (std::size_t k = 0; k < flat.size(); ++k)
                acc[k] += flat[k];
        }
    }

    // M-step: row-normalize expected counts.
    for (const auto& [key, c] : counts) {
        const int e = static_cast<int>(key >> 32);
        const int f = static_cast<int>(key & 0xffffffffu);
        table.set_prob(e, f, c / totals.at(e));
    }
    if (with_distortion) {
        for (auto& [lm, flat] : q_counts) {
            const int l = static_cast<int>(lm >> 32);
            const int m = static_cast<int>(lm & 0xffffffffu);
            auto& row = distortion->row(l, m);
            for (int j = 0; j < m; ++j) {
                double z = 0.0;
                for (int i = 0; i <= l; ++i)
                    z += flat[static_cast<std::size_t>(j) * static_cast<std::size_t>(l + 1) +
                              static_cast<std::size_t>(i)];
                if (z <= 0.0) continue;
                for (int i = 0; i <= l; ++i) {
                    const std::size_t idx =
                        static_cast<std::size_t>(j) * static_cast<std::size_t>(l + 1) +
                        static_cast<std::size_t>(i);
                    row[idx] = flat[idx] / z;
                }
            }
        }
    }
    return ll;
}

}  // namespace

AlignmentModel train_ibm1(const std::vector<ParallelPair>& pairs, const AlignerOptions& options) {
    if (pairs.empty())
        throw ContractError("alignment training requires a non-empty corpus");
    if (options.iterations < 1)
        throw ContractError("alignment training requires iterations >= 1");
    if (options.model2 && options.model2_iterations < 1)
        throw ContractError("model 2 refinement requires model2_iterations >= 1");

    AlignmentModel model;
    model.table.direction = options.direction;
    EncodedCorpus corpus = encode_corpus(pairs, options.direction, model.table);

    // Uniform initialization over co-occurring pairs.
    {
        std::unordered_map<int, std::set<int>> support;
        for (std::size_t s = 0; s < corpus.e_sents.size(); ++s) {
            for (int f : corpus.f_sents[s]) {
                support[TranslationTable::kNullWord].insert(f);
                for (int e : corpus.e_sents[s])
                    support[e].insert(f);
            }
        }
        for (const auto& [e, fs] : support) {
            const double uniform = 1.0 / static_cast<double>(fs.size());
            for (int f : fs)
                model.table.set_prob(e, f, uniform);
        }
    }

    for (int it = 0; it < options.iterations; ++it)
        model.log_likelihood.push_back(
            em_iteration(corpus, model.table, nullptr, false, options.threads));

    if (options.model2) {
        for (int it = 0; it < options.model2_iterations; ++it)
            model.log_likelihood.push_back(
                em_iteration(corpus, model.table, &model.distortion, true, options.threads));
    }
    return model;
}

namespace {

// For each f-token, the argmax-posterior e-slot (0 = NULL) and its
// posterior. Ties resolve to the earliest slot scanned: real tokens in
// index order first, the NULL word only on a strict win.
struct SlotChoice {
    int slot = 0;  // 0 = NULL, otherwise 1-based e-token position
    double posterior = 0.0;
};

SlotChoice choose_slot(const TranslationTable& table, const DistortionTable* distortion,
                       const std::vector<int>& e_ids, int f_id, int j, int m) {
    const int l = static_cast<int>(e_ids.size());
    double best = -1.0;
    int best_slot = 0;
    double denom = 0.0;
    for (int i = 1; i <= l; ++i) {
        double w = table.prob(e_ids[static_cast<std::size_t>(i - 1)], f_id);
        if (distortion != nullptr)
            w *= distortion->prob(i, j, l, m);
        denom += w;
        if (w > best) {
            best = w;
            best_slot = i;
        }
    }
    double null_w = table.prob(TranslationTable::kNullWord, f_id);
    if (distortion != nullptr)
        null_w *= distortion->prob(0, j, l, m);
    denom += null_w;
    if (null_w > best) {
        best = null_w;
        best_slot = 0;
    }
    SlotChoice choice;
    choice.slot = best_slot;
    choice.posterior = denom > 0.0 ? best / denom : 0.0;
    return choice;
}

Alignment align_with(const TranslationTable& table, const DistortionTable* distortion,
                     const ParallelPair& pair) {
    Alignment result;
    result.pair_id = pair.pair_id;
    const bool forward = table.direction == TrainDirection::forward;
    result.direction = forward ? LinkDirection::forward : LinkDirection::backward;

    const TaggedSentence& e_side = forward ? pair.source : pair.target;
    const TaggedSentence& f_side = forward ? pair.target : pair.source;
    std::vector<int> e_ids;
    e_ids.reserve(e_side.size());
    for (const auto& tok : e_side.tokens)
        e_ids.push_back(table.source_index(tok.form));
    const int m = static_cast<int>(f_side.size());
    for (int j = 0; j < m; ++j) {
        const int f_id = table.target_index(f_side.tokens[static_cast<std::size_t>(j)].form);
        SlotChoice choice = choose_slot(table, distortion, e_ids, f_id, j, m);
        if (choice.slot == 0)
            continue;  // NULL word: f-token stays unaligned
        AlignmentLink link;
        if (forward) {
            link.src = choice.slot - 1;
            link.tgt = j;
        } else {
            link.src = j;
            link.tgt = choice.slot - 1;
        }
        link.prob = choice.posterior;
        result.links.push_back(link);
    }
    std::sort(result.links.begin(), result.links.end(), [](const auto& a, const auto& b) {
        return std::make_pair(a.src, a.tgt) < std::make_pair(b.src, b.tgt);
    });
    return result;
}

}  // namespace

Alignment posterior_align(const TranslationTable& table, const ParallelPair& pair) {
    return align_with(table, nullptr, pair);
}

Alignment posterior_align(const AlignmentModel& model, const ParallelPair& pair) {
    return align_with(model.table, model.distortion.empty() ? nullptr : &model.distortion, pair);
}

Alignment symmetrize(const Alignment& fwd, const Alignment& bwd, Symmetrization method) {
    if (fwd.pair_id != bwd.pair_id)
        throw ContractError("symmetrize: mismatched pair ids '" + fwd.pair_id + "' vs '" +
                            bwd.pair_id + "'");
    using Key = std::pair<int, int>;
    std::map<Key, double> fp, bp;
    for (const auto& link : fwd.links)
        fp[{link.src, link.tgt}] = link.prob;
    for (const auto& link : bwd.links)
        bp[{link.src, link.tgt}] = link.prob;

    auto sym_prob = [&](const Key& k) {
        auto fit = fp.find(k);
        auto bit = bp.find(k);
        const double pf = fit == fp.end() ? TranslationTable::kFloorProb : fit->second;
        const double pb = bit == bp.end() ? TranslationTable::kFloorProb : bit->second;
        return std::sqrt(pf * pb);
    };

    std::set<Key> chosen;
    std::vector<Key> union_keys;
    for (const auto& [k, p] : fp) union_keys.push_back(k);
    for (const auto& [k, p] : bp)
        if (fp.find(k) == fp.end()) union_keys.push_back(k);
    std::sort(union_keys.begin(), union_keys.end());

    switch (method) {
        case Symmetrization::intersection:
            for (const auto& [k, p] : fp)
                if (bp.count(k)) chosen.insert(k);
            break;
        case Symmetrization::union_all:
            chosen.insert(union_keys.begin(), union_keys.end());
            break;
        case Symmetrization::grow_diag_final: {
            std::set<int> src_covered, tgt_covered;
            for (const auto& [k, p] : fp)
                if (bp.count(k)) {
                    chosen.insert(k);
                    src_covered.insert(k.first);
                    tgt_covered.insert(k.second);
                }
            auto neighbor_of_chosen = [&](const Key& k) {
                for (int di = -1; di <= 1; ++di)
                    for (int dj = -1; dj <= 1; ++dj) {
                        if (di == 0 && dj == 0) continue;
                        if (chosen.count({k.first + di, k.second + dj})) return true;
                    }
                return false;
            };
            bool changed = true;
            while (changed) {
                changed = false;
                for (const auto& k : union_keys) {
                    if (chosen.count(k)) continue;
                    if ((!src_covered.count(k.first) || !tgt_covered.count(k.second)) &&
                        neighbor_of_chosen(k)) {
                        chosen.insert(k);
                        src_covered.insert(k.first);
                        tgt_covered.insert(k.second);
                        changed = true;
                    }
                }
            }
            auto final_pass = [&](const std::map<Key, double>& side) {
                for (const auto& [k, p] : side) {
                    if (chosen.count(k)) continue;
                    if (!src_covered.count(k.first) || !tgt_covered.count(k.second)) {
                        chosen.insert(k);
                        src_covered.insert(k.first);
                        tgt_covered.insert(k.second);
                    }
                }
            };
            final_pass(fp);
            final_pass(bp);
            break;
        }
    }

    Alignment result;
    result.pair_id = fwd.pair_id;
    result.direction = LinkDirection::symmetrized;
    for (const auto& k : chosen)
        result.links.push_back({k.first, k.second, sym_prob(k)});
    return result;
}

Alignment filter_links(const Alignment& a, double alpha) {
    if (alpha < 0.0 || alpha > 1.0)
        throw ContractError("alpha must lie in [0, 1]");
    Alignment result;
    result.pair_id = a.pair_id;
    result.direction = a.direction;
    for (const auto& link : a.links)
        if (link.prob >= alpha)
            result.links.push_back(link);
    return result;
}

void write_alignments(std::ostream& out, const std::vector<Alignment>& alignments) {
    for (const auto& a : alignments) {
        bool first = true;
        for (const auto& link : a.links) {
            if (!first) out << ' ';
            out << link.src << '-' << link.tgt << ':' << format_double(link.prob, 6);
            first = false;
        }
        out << '\n';
    }
}

std::string write_alignments_text(const std::vector<Alignment>& alignments) {
    std::ostringstream out;
    write_alignments(out, alignments);
    return out.str();
}

std::vector<Alignment> parse_alignments(std::istream& in) {
    std::vector<Alignment> result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        Alignment a;
        a.direction = LinkDirection::symmetrized;
        for (const auto& item : split_ws(line)) {
            auto dash = item.find('-');
            auto colon = item.find(':', dash == std::string::npos ? 0 : dash);
            if (dash == std::string::npos || colon == std::string::npos)
                throw ParseError("malformed alignment link '" + item + "'", line_no);
            AlignmentLink link;
            link.src = static_cast<int>(parse_long(item.substr(0, dash)));
            link.tgt = static_cast<int>(parse_long(item.substr(dash + 1, colon - dash - 1)));
            link.prob = parse_double(item.substr(colon + 1));
            a.links.push_back(link);
        }
        result.push_back(std::move(a));
    }
    return result;
}

std::vector<Alignment> parse_alignments_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_alignments(in);
}

}  // namespace crosstag
