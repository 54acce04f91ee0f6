#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "crosstag/corpus.hpp"
#include "crosstag/types.hpp"

namespace crosstag {

struct TaggerConfig {
    int word_embedding_size = 64;
    int affix_embedding_size = 64;
    int hidden_nodes = 128;      // concatenated BiLSTM output width (64 per direction)
    double dropout_rate = 0.7;   // drop probability, inverted dropout
    int dropout_layers = 2;      // site 1: after embedding concat, site 2: after BiLSTM concat
    double learning_rate = 1e-3;
    double decay_rate = 0.1;
    double l2_coefficient = 1e-4;  // decoupled weight decay
    int epochs = 20;
    std::string optimizer = "adam";
    int affix_max_len = 4;
    std::uint64_t seed = 1;
    // Default schedule is inverse-time decay lr/(1 + decay_rate*epoch);
    // the flag switches to step decay lr*(1 - decay_rate)^epoch.
    bool step_decay = false;
    double clip_norm = 5.0;  // global gradient norm

    void validate() const;
    double epoch_learning_rate(int epoch) const;
};

struct FeatureVector {
    int word = Vocabulary::kUnk;
    std::vector<int> affixes;  // at most 2 * affix_max_len entries
};

// Code-point-aware prefixes ("ka^") and suffixes ("^as") of lengths
// 1..min(max_len, length); the position marker keeps a length-n prefix
// distinct from the equal-length suffix.
std::vector<std::string> affix_strings(const std::string& form, int max_len);

// Word lookup is over the lowercased form; affixes keep original case.
FeatureVector extract_features(const std::string& form, const Vocabulary& words,
                               const Vocabulary& affixes, int affix_max_len);

struct TaggerVocabs {
    Vocabulary words;    // lowercased forms
    Vocabulary affixes;
};

TaggerVocabs build_tagger_vocabs(const std::vector<TaggedSentence>& corpus, int affix_max_len,
                                 std::uint64_t word_min_count = 1,
                                 std::uint64_t affix_min_count = 1);

struct LstmBlock {
    // Stacked gate weights, rows [i; f; o; g], each H x (In + H).
    Eigen::MatrixXd w;
    Eigen::VectorXd b;
};

struct AdamState {
    Eigen::MatrixXd word_m, word_v, affix_m, affix_v;
    LstmBlock fwd_m, fwd_v, bwd_m, bwd_v;
    Eigen::MatrixXd out_w_m, out_w_v;
    Eigen::VectorXd out_b_m, out_b_v;
    std::int64_t step = 0;
};

class TaggerModel {
public:
    TaggerModel(TaggerConfig config, TagSet tags, Vocabulary words, Vocabulary affixes);

    const TaggerConfig& config() const { return config_; }
    const TagSet& tags() const { return tags_; }
    const Vocabulary& word_vocab() const { return words_; }
    const Vocabulary& affix_vocab() const { return affixes_; }

    int input_size() const { return config_.word_embedding_size + config_.affix_embedding_size; }
    int lstm_hidden() const { return config_.hidden_nodes / 2; }
    int num_tags() const { return static_cast<int>(tags_.size()); }

    // Parameter blocks (public: training, checking and serialization all
    // address them directly).
    Eigen::MatrixXd word_emb;   // |V| x We
    Eigen::MatrixXd affix_emb;  // |A| x Ae
    LstmBlock fwd, bwd;
    Eigen::MatrixXd out_w;      // |T| x hidden_nodes
    Eigen::VectorXd out_b;
    AdamState adam;

    void zero_parameters();
    bool parameters_finite() const;

    struct BlockView {
        std::string name;
        double* data;
        std::size_t size;
    };
    std::vector<BlockView> parameter_blocks();

    std::string serialize() const;  // versioned JSON container
    static TaggerModel deserialize(std::string_view text);

private:
    TaggerConfig config_;
    TagSet tags_;
    Vocabulary words_;
    Vocabulary affixes_;
};

struct LstmTrace {
    // Columns indexed by processing step; proc[k] maps a step to its token.
    Eigen::MatrixXd z;  // (In+H) x T: [x_t; h_{t-1}]
    Eigen::MatrixXd i, f, o, g, c, tanh_c, h;  // H x T
};

struct ForwardCache {
    std::vector<FeatureVector> features;
    Eigen::MatrixXd x;      // In x T, after dropout site 1
    Eigen::MatrixXd mask1;  // In x T
    Eigen::MatrixXd u;      // hidden x T, after dropout site 2
    Eigen::MatrixXd mask2;
    LstmTrace fwd, bwd;
};

struct ForwardResult {
    Eigen::MatrixXd scores;  // T x |tags|
    ForwardCache cache;
};

// Deterministic given the model, mode and RNG state. rng is consumed only
// in train mode with a positive dropout rate.
ForwardResult forward(const TaggerModel& model, const std::vector<FeatureVector>& sentence,
                      bool train_mode, std::mt19937_64* rng = nullptr);

struct LossResult {
    double loss = 0.0;
    Eigen::MatrixXd dscores;  // zero rows at NULL positions
    std::size_t labeled = 0;
};

// Mean cross-entropy over non-NULL positions; NULL positions contribute
// exactly zero loss and zero gradient.
LossResult masked_loss(const Eigen::MatrixXd& scores, const std::vector<TagId>& tags);

struct Gradients {
    std::map<int, Eigen::VectorXd> word_rows;   // touched embedding rows only
    std::map<int, Eigen::VectorXd> affix_rows;
    LstmBlock fwd, bwd;
    Eigen::MatrixXd out_w;
    Eigen::VectorXd out_b;

    double squared_norm() const;
    void scale(double factor);
};

Gradients backward(const TaggerModel& model, const ForwardCache& cache,
                   const Eigen::MatrixXd& dscores);

struct TrainExample {
    std::vector<FeatureVector> features;
    std::vector<TagId> tags;
};

struct TrainHistory {
    std::vector<double> epoch_loss;  // mean per-sentence loss
};

// Adam with decoupled weight decay, per-sentence updates, per-epoch seeded
// shuffling, global-norm clipping. Aborts with a diagnostic naming the
// offending sentence if the loss goes non-finite.
TrainHistory train(TaggerModel& model, const std::vector<TrainExample>& corpus);

std::vector<TagId> predict(const TaggerModel& model, const std::vector<FeatureVector>& sentence);
std::vector<TaggedSentence> predict_corpus(const TaggerModel& model,
                                           const std::vector<TaggedSentence>& sentences);

TrainExample make_example(const TaggedSentence& sentence, const TaggerModel& model);

// Central finite differences against the analytic gradient on a sampled
// coordinate subset covering every parameter block (>= 200 coordinates on
// full-size models). Runs in inference mode; requires epsilon > 0.
double gradient_check(TaggerModel& model, const std::vector<FeatureVector>& sentence,
                      const std::vector<TagId>& tags, double epsilon);

}  // namespace crosstag
