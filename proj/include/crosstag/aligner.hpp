#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "crosstag/types.hpp"

namespace crosstag {

enum class TrainDirection {
    forward,   // t(target form | source form): each target token picks a source token
    backward,  // t(source form | target form): each source token picks a target token
};

enum class LinkDirection { forward, backward, symmetrized };

enum class Symmetrization { intersection, union_all, grow_diag_final };

Symmetrization parse_symmetrization(const std::string& name);
const char* symmetrization_name(Symmetrization s);

// Lexical translation table t(f|e) learned by EM. Source index 0 is the
// distinguished NULL word; every stored row sums to 1 within 1e-6.
class TranslationTable {
public:
    static constexpr int kNullWord = 0;
    // Unknown forms and unseen co-occurrences fall back to this probability
    // so posteriors never divide by zero.
    static constexpr double kFloorProb = 1e-9;

    TranslationTable();

    TrainDirection direction = TrainDirection::forward;

    int source_index(const std::string& form) const;  // -1 if absent
    int target_index(const std::string& form) const;
    int add_source_form(const std::string& form);
    int add_target_form(const std::string& form);
    int source_vocab_size() const { return static_cast<int>(source_forms_.size()); }
    int target_vocab_size() const { return static_cast<int>(target_forms_.size()); }
    const std::string& source_form(int e) const { return source_forms_.at(static_cast<std::size_t>(e)); }
    const std::string& target_form(int f) const { return target_forms_.at(static_cast<std::size_t>(f)); }

    double prob(int e, int f) const;  // kFloorProb for unseen entries
    double prob(const std::string& e_form, const std::string& f_form) const;
    void set_prob(int e, int f, double p);

    const std::unordered_map<int, double>& row(int e) const;

    std::string serialize() const;  // "e_form<TAB>f_form<TAB>prob"
    static TranslationTable deserialize(std::string_view text);

private:
    std::vector<std::string> source_forms_;  // [0] is the NULL word
    std::vector<std::string> target_forms_;
    std::unordered_map<std::string, int> source_index_;
    std::unordered_map<std::string, int> target_index_;
    std::vector<std::unordered_map<int, double>> rows_;  // rows_[e][f] = t(f|e)
};

struct AlignmentLink {
    int src = 0;
    int tgt = 0;
    double prob = 0.0;
};

struct Alignment {
    std::string pair_id;
    LinkDirection direction = LinkDirection::forward;
    std::vector<AlignmentLink> links;  // unique (src,tgt), sorted by (src,tgt)
};

struct AlignerOptions {
    int iterations = 5;
    TrainDirection direction = TrainDirection::forward;
    int threads = 1;
    bool model2 = false;       // IBM Model 2 distortion refinement
    int model2_iterations = 5;
};

// Distortion table q(i | j, l, m) for the optional Model 2 refinement,
// keyed by observed (source length l, target length m). Slot i == 0 is
// the NULL word; real source positions are 1..l.
class DistortionTable {
public:
    bool empty() const { return table_.empty(); }
    double prob(int i, int j, int l, int m) const;
    std::vector<double>& row(int l, int m);  // created on demand, size m*(l+1)
    const std::vector<double>* find_row(int l, int m) const;

private:
    std::unordered_map<std::uint64_t, std::vector<double>> table_;
};

struct AlignmentModel {
    TranslationTable table;
    DistortionTable distortion;            // empty unless options.model2
    std::vector<double> log_likelihood;    // one entry per EM iteration
};

// IBM Model 1 EM with a source-side NULL word, uniform initialization over
// co-occurring pairs, all accumulation in float64. When options.model2 is
// set, runs Model 2 EM (jointly re-estimating t and q) after the Model 1
// iterations. Throws ContractError on an empty corpus or iterations < 1.
AlignmentModel train_ibm1(const std::vector<ParallelPair>& pairs, const AlignerOptions& options);

// Per-token argmax-posterior alignment. Under the forward direction each
// target token j links to argmax_i p(a_j = i | f, e); tokens whose argmax
// is the NULL word stay unaligned. Ties go to the smaller source index.
Alignment posterior_align(const TranslationTable& table, const ParallelPair& pair);
Alignment posterior_align(const AlignmentModel& model, const ParallelPair& pair);

// Combines the two directional alignments. Symmetrized link probability is
// the geometric mean of the directional posteriors (a missing direction
// contributes the floor probability).
Alignment symmetrize(const Alignment& fwd, const Alignment& bwd, Symmetrization method);

// Keeps exactly the links with prob >= alpha.
Alignment filter_links(const Alignment& a, double alpha);

// One line per pair: space-separated "src-tgt:prob" with 6 significant
// digits (Pharaoh format extended with the posterior).
void write_alignments(std::ostream& out, const std::vector<Alignment>& alignments);
std::string write_alignments_text(const std::vector<Alignment>& alignments);
std::vector<Alignment> parse_alignments(std::istream& in);
std::vector<Alignment> parse_alignments_text(std::string_view text);

}  // namespace crosstag
