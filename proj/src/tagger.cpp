#include "crosstag/tagger.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "json.hpp"

#include "crosstag/io_util.hpp"

namespace crosstag {

namespace {

using json = nlohmann::json;

constexpr int kModelVersion = 1;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

std::string lowercase_ascii(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Byte offsets of UTF-8 code point starts, plus the end offset.
std::vector<std::size_t> utf8_boundaries(const std::string& s) {
    std::vector<std::size_t> starts;
    for (std::size_t i = 0; i < s.size(); ++i)
        if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80)
            starts.push_back(i);
    starts.push_back(s.size());
    return starts;
}

}  // namespace

void TaggerConfig::validate() const {
    if (word_embedding_size < 1 || affix_embedding_size < 1)
        throw ConfigError("embedding sizes must be >= 1");
    if (hidden_nodes < 2 || hidden_nodes % 2 != 0)
        throw ConfigError("hidden_nodes must be an even number >= 2");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw ConfigError("dropout_rate must lie in [0, 1)");
    if (dropout_layers < 0 || dropout_layers > 2)
        throw ConfigError("dropout_layers must be 0, 1 or 2");
    if (learning_rate < 0.0)
        throw ConfigError("learning_rate must be >= 0");
    if (decay_rate < 0.0)
        throw ConfigError("decay_rate must be >= 0");
    if (l2_coefficient < 0.0)
        throw ConfigError("l2_coefficient must be >= 0");
    if (epochs < 1)
        throw ConfigError("epochs must be >= 1");
    if (optimizer != "adam")
        throw ConfigError("unsupported optimizer: " + optimizer);
    if (affix_max_len < 1)
        throw ConfigError("affix_max_len must be >= 1");
    if (clip_norm <= 0.0)
        throw ConfigError("clip_norm must be > 0");
}

double TaggerConfig::epoch_learning_rate(int epoch) const {
    if (step_decay)
        return learning_rate * std::pow(1.0 - decay_rate, epoch);
    return learning_rate / (1.0 + decay_rate * static_cast<double>(epoch));
}

std::vector<std::string> affix_strings(const std::string& form, int max_len) {
    const auto bounds = utf8_boundaries(form);
    const int n = static_cast<int>(bounds.size()) - 1;  // code points
    std::vector<std::string> affixes;
    if (n <= 0)
        return affixes;
    const int limit = std::min(max_len, n);
    for (int len = 1; len <= limit; ++len)
        affixes.push_back(form.substr(0, bounds[static_cast<std::size_t>(len)]) + "^");
    for (int len = 1; len <= limit; ++len) {
        const std::size_t start = bounds[static_cast<std::size_t>(n - len)];
        affixes.push_back("^" + form.substr(start));
    }
    return affixes;
}

FeatureVector extract_features(const std::string& form, const Vocabulary& words,
                               const Vocabulary& affixes, int affix_max_len) {
    FeatureVector fv;
    fv.word = words.lookup(lowercase_ascii(form));
    for (const auto& a : affix_strings(form, affix_max_len))
        fv.affixes.push_back(affixes.lookup(a));
    return fv;
}

TaggerVocabs build_tagger_vocabs(const std::vector<TaggedSentence>& corpus, int affix_max_len,
                                 std::uint64_t word_min_count, std::uint64_t affix_min_count) {
    std::map<std::string, std::uint64_t> word_counts;
    std::map<std::string, std::uint64_t> affix_counts;
    for (const auto& s : corpus) {
        for (const auto& tok : s.tokens) {
            ++word_counts[lowercase_ascii(tok.form)];
            for (const auto& a : affix_strings(tok.form, affix_max_len))
                ++affix_counts[a];
        }
    }
    TaggerVocabs vocabs;
    vocabs.words = build_vocabulary_from_counts(word_counts, word_min_count);
    vocabs.affixes = build_vocabulary_from_counts(affix_counts, affix_min_count);
    return vocabs;
}

TaggerModel::TaggerModel(TaggerConfig config, TagSet tags, Vocabulary words, Vocabulary affixes)
    : config_(std::move(config)),
      tags_(std::move(tags)),
      words_(std::move(words)),
      affixes_(std::move(affixes)) {
    config_.validate();
    const int in = input_size();
    const int h = lstm_hidden();
    const int k = num_tags();

    std::mt19937_64 rng(config_.seed);
    auto uniform_fill = [&rng](Eigen::MatrixXd& m, double limit) {
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                m(r, c) = dist(rng);
    };

    word_emb.resize(words_.size(), config_.word_embedding_size);
    affix_emb.resize(affixes_.size(), config_.affix_embedding_size);
    uniform_fill(word_emb, 0.1);
    uniform_fill(affix_emb, 0.1);

    auto init_lstm = [&](LstmBlock& blk) {
        blk.w.resize(4 * h, in + h);
        const double limit = std::sqrt(6.0 / static_cast<double>(in + 2 * h));
        uniform_fill(blk.w, limit);
        blk.b = Eigen::VectorXd::Zero(4 * h);
        blk.b.segment(h, h).setOnes();  // forget gate bias
    };
    init_lstm(fwd);
    init_lstm(bwd);

    out_w.resize(k, config_.hidden_nodes);
    uniform_fill(out_w, std::sqrt(6.0 / static_cast<double>(config_.hidden_nodes + k)));
    out_b = Eigen::VectorXd::Zero(k);

    adam.word_m = Eigen::MatrixXd::Zero(word_emb.rows(), word_emb.cols());
    adam.word_v = adam.word_m;
    adam.affix_m = Eigen::MatrixXd::Zero(affix_emb.rows(), affix_emb.cols());
    adam.affix_v = adam.affix_m;
    auto zero_lstm = [&](LstmBlock& blk) {
        blk.w = Eigen::MatrixXd::Zero(4 * h, in + h);
        blk.b = Eigen::VectorXd::Zero(4 * h);
    };
    zero_lstm(adam.fwd_m);
    zero_lstm(adam.fwd_v);
    zero_lstm(adam.bwd_m);
    zero_lstm(adam.bwd_v);
    adam.out_w_m = Eigen::MatrixXd::Zero(k, config_.hidden_nodes);
    adam.out_w_v = adam.out_w_m;
    adam.out_b_m = Eigen::VectorXd::Zero(k);
    adam.out_b_v = adam.out_b_m;
}

void TaggerModel::zero_parameters() {
    word_emb.setZero();
    affix_emb.setZero();
    fwd.w.setZero();
    fwd.b.setZero();
    bwd.w.setZero();
    bwd.b.setZero();
    out_w.setZero();
    out_b.setZero();
}

bool TaggerModel::parameters_finite() const {
    auto ok = [](const Eigen::MatrixXd& m) { return m.allFinite(); };
    return ok(word_emb) && ok(affix_emb) && ok(fwd.w) && ok(fwd.b) && ok(bwd.w) && ok(bwd.b) &&
           ok(out_w) && ok(out_b);
}

std::vector<TaggerModel::BlockView> TaggerModel::parameter_blocks() {
    return {
        {"word_emb", word_emb.data(), static_cast<std::size_t>(word_emb.size())},
        {"affix_emb", affix_emb.data(), static_cast<std::size_t>(affix_emb.size())},
        {"fwd_w", fwd.w.data(), static_cast<std::size_t>(fwd.w.size())},
        {"fwd_b", fwd.b.data(), static_cast<std::size_t>(fwd.b.size())},
        {"bwd_w", bwd.w.data(), static_cast<std::size_t>(bwd.w.size())},
        {"bwd_b", bwd.b.data(), static_cast<std::size_t>(bwd.b.size())},
        {"out_w", out_w.data(), static_cast<std::size_t>(out_w.size())},
        {"out_b", out_b.data(), static_cast<std::size_t>(out_b.size())},
    };
}

namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& v) {
    return (1.0 / (1.0 + (-v.array()).exp())).matrix();
}

LstmTrace run_lstm(const LstmBlock& params, const Eigen::MatrixXd& x, bool reverse, int h) {
    const Eigen::Index in = x.rows();
    const Eigen::Index t_len = x.cols();
    LstmTrace trace;
    trace.z.resize(in + h, t_len);
    trace.i.resize(h, t_len);
    trace.f.resize(h, t_len);
    trace.o.resize(h, t_len);
    trace.g.resize(h, t_len);
    trace.c.resize(h, t_len);
    trace.tanh_c.resize(h, t_len);
    trace.h.resize(h, t_len);

    for (Eigen::Index k = 0; k < t_len; ++k)
        trace.z.col(k).head(in) = x.col(reverse ? t_len - 1 - k : k);

    // Input contribution for every step in one product; the recurrent part
    // stays sequential.
    Eigen::MatrixXd gate_in = params.w.leftCols(in) * trace.z.topRows(in);
    gate_in.colwise() += params.b;

    Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd a(4 * h);
    for (Eigen::Index k = 0; k < t_len; ++k) {
        trace.z.col(k).tail(h) = h_prev;
        a.noalias() = params.w.rightCols(h) * h_prev;
        a += gate_in.col(k);
        trace.i.col(k) = sigmoid(a.head(h));
        trace.f.col(k) = sigmoid(a.segment(h, h));
        trace.o.col(k) = sigmoid(a.segment(2 * h, h));
        trace.g.col(k) = a.tail(h).array().tanh();
        trace.c.col(k) =
            trace.f.col(k).cwiseProduct(c_prev) + trace.i.col(k).cwiseProduct(trace.g.col(k));
        trace.tanh_c.col(k) = trace.c.col(k).array().tanh();
        trace.h.col(k) = trace.o.col(k).cwiseProduct(trace.tanh_c.col(k));
        h_prev = trace.h.col(k);
        c_prev = trace.c.col(k);
    }
    return trace;
}

// dh_top is indexed by token; trace columns by processing step. Per-step
// work covers only the recurrent coupling; weight and input gradients are
// batched products over the whole sentence.
void lstm_backward(const LstmBlock& params, const LstmTrace& trace,
                   const Eigen::MatrixXd& dh_top, bool reverse, int h, LstmBlock& grads,
                   Eigen::MatrixXd& dx) {
    const Eigen::Index in = dx.rows();
    const Eigen::Index t_len = dx.cols();
    Eigen::MatrixXd da_all(4 * h, t_len);
    Eigen::VectorXd dh_chain = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd dc_chain = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd da(4 * h);
    for (Eigen::Index k = t_len - 1; k >= 0; --k) {
        const Eigen::Index t = reverse ? t_len - 1 - k : k;
        const Eigen::VectorXd dh = dh_top.col(t) + dh_chain;
        const auto i = trace.i.col(k);
        const auto f = trace.f.col(k);
        const auto o = trace.o.col(k);
        const auto g = trace.g.col(k);
        const auto tc = trace.tanh_c.col(k);
        const Eigen::VectorXd dout = dh.cwiseProduct(tc);
        const Eigen::VectorXd dc =
            (dh.array() * o.array() * (1.0 - tc.array().square())).matrix() + dc_chain;
        da.head(h) = (dc.array() * g.array() * i.array() * (1.0 - i.array())).matrix();
        if (k > 0) {
            da.segment(h, h) =
                (dc.array() * trace.c.col(k - 1).array() * f.array() * (1.0 - f.array()))
                    .matrix();
        } else {
            da.segment(h, h).setZero();  // c_{-1} = 0
        }
        da.segment(2 * h, h) = (dout.array() * o.array() * (1.0 - o.array())).matrix();
        da.tail(h) = (dc.array() * i.array() * (1.0 - g.array().square())).matrix();
        da_all.col(k) = da;
        dh_chain.noalias() = params.w.rightCols(h).transpose() * da;
        dc_chain = dc.cwiseProduct(trace.f.col(k));
    }
    grads.w.noalias() += da_all * trace.z.transpose();
    grads.b += da_all.rowwise().sum();
    const Eigen::MatrixXd dx_steps = params.w.leftCols(in).transpose() * da_all;
    for (Eigen::Index k = 0; k < t_len; ++k)
        dx.col(reverse ? t_len - 1 - k : k) += dx_steps.col(k);
}

}  // namespace

ForwardResult forward(const TaggerModel& model, const std::vector<FeatureVector>& sentence,
                      bool train_mode, std::mt19937_64* rng) {
    if (sentence.empty())
        throw ContractError("forward: empty sentence");
    const int in = model.input_size();
    const int h = model.lstm_hidden();
    const int hid = model.config().hidden_nodes;
    const int we = model.config().word_embedding_size;
    const int ae = model.config().affix_embedding_size;
    const Eigen::Index t_len = static_cast<Eigen::Index>(sentence.size());

    ForwardResult result;
    ForwardCache& cache = result.cache;
    cache.features = sentence;

    Eigen::MatrixXd x(in, t_len);
    for (Eigen::Index t = 0; t < t_len; ++t) {
        const FeatureVector& fv = sentence[static_cast<std::size_t>(t)];
        if (fv.word < 0 || fv.word >= model.word_emb.rows())
            throw ContractError("forward: word index out of range");
        x.col(t).head(we) = model.word_emb.row(fv.word).transpose();
        Eigen::VectorXd affix_mean = Eigen::VectorXd::Zero(ae);
        if (!fv.affixes.empty()) {
            for (int a : fv.affixes) {
                if (a < 0 || a >= model.affix_emb.rows())
                    throw ContractError("forward: affix index out of range");
                affix_mean += model.affix_emb.row(a).transpose();
            }
            affix_mean /= static_cast<double>(fv.affixes.size());
        }
        x.col(t).tail(ae) = affix_mean;
    }

    const double rate = model.config().dropout_rate;
    const bool dropping = train_mode && rate > 0.0;
    auto draw_mask = [&](Eigen::Index rows, Eigen::Index cols, bool enabled) {
        Eigen::MatrixXd mask = Eigen::MatrixXd::Ones(rows, cols);
        if (enabled && dropping) {
            if (rng == nullptr)
                throw ContractError("forward: train-mode dropout needs an RNG");
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            const double keep = 1.0 - rate;
            for (Eigen::Index c = 0; c < cols; ++c)
                for (Eigen::Index r = 0; r < rows; ++r)
                    mask(r, c) = unit(*rng) < keep ? 1.0 / keep : 0.0;
        }
        return mask;
    };

    cache.mask1 = draw_mask(in, t_len, model.config().dropout_layers >= 1);
    cache.x = x.cwiseProduct(cache.mask1);

    cache.fwd = run_lstm(model.fwd, cache.x, false, h);
    cache.bwd = run_lstm(model.bwd, cache.x, true, h);

    Eigen::MatrixXd u(hid, t_len);
    for (Eigen::Index t = 0; t < t_len; ++t) {
        u.col(t).head(h) = cache.fwd.h.col(t);
        u.col(t).tail(h) = cache.bwd.h.col(t_len - 1 - t);
    }
    cache.mask2 = draw_mask(hid, t_len, model.config().dropout_layers >= 2);
    cache.u = u.cwiseProduct(cache.mask2);

    result.scores.resize(t_len, model.num_tags());
    for (Eigen::Index t = 0; t < t_len; ++t)
        result.scores.row(t) = (model.out_w * cache.u.col(t) + model.out_b).transpose();
    return result;
}

LossResult masked_loss(const Eigen::MatrixXd& scores, const std::vector<TagId>& tags) {
    if (static_cast<std::size_t>(scores.rows()) != tags.size())
        throw ContractError("masked_loss: tag sequence length does not match scores");
    LossResult result;
    result.dscores = Eigen::MatrixXd::Zero(scores.rows(), scores.cols());
    for (Eigen::Index t = 0; t < scores.rows(); ++t) {
        const TagId tag = tags[static_cast<std::size_t>(t)];
        if (tag == kNullTag)
            continue;
        if (tag < 0 || tag >= scores.cols())
            throw ContractError("masked_loss: tag index out of range");
        const Eigen::VectorXd row = scores.row(t).transpose();
        const double m = row.maxCoeff();
        const Eigen::VectorXd ex = (row.array() - m).exp();
        const double z = ex.sum();
        result.loss += std::log(z) + m - row(tag);
        result.dscores.row(t) = (ex / z).transpose();
        result.dscores(t, tag) -= 1.0;
        ++result.labeled;
    }
    if (result.labeled > 0) {
        result.loss /= static_cast<double>(result.labeled);
        result.dscores /= static_cast<double>(result.labeled);
    }
    return result;
}

double Gradients::squared_norm() const {
    double total = 0.0;
    for (const auto& [row, g] : word_rows) total += g.squaredNorm();
    for (const auto& [row, g] : affix_rows) total += g.squaredNorm();
    total += fwd.w.squaredNorm() + fwd.b.squaredNorm();
    total += bwd.w.squaredNorm() + bwd.b.squaredNorm();
    total += out_w.squaredNorm() + out_b.squaredNorm();
    return total;
}

void Gradients::scale(double factor) {
    for (auto& [row, g] : word_rows) g *= factor;
    for (auto& [row, g] : affix_rows) g *= factor;
    fwd.w *= factor;
    fwd.b *= factor;
    bwd.w *= factor;
    bwd.b *= factor;
    out_w *= factor;
    out_b *= factor;
}

Gradients backward(const TaggerModel& model, const ForwardCache& cache,
                   const Eigen::MatrixXd& dscores) {
    const int in = model.input_size();
    const int h = model.lstm_hidden();
    const int hid = model.config().hidden_nodes;
    const int we = model.config().word_embedding_size;
    const int ae = model.config().affix_embedding_size;
    const Eigen::Index t_len = cache.x.cols();

    Gradients grads;
    grads.fwd.w = Eigen::MatrixXd::Zero(4 * h, in + h);
    grads.fwd.b = Eigen::VectorXd::Zero(4 * h);
    grads.bwd.w = Eigen::MatrixXd::Zero(4 * h, in + h);
    grads.bwd.b = Eigen::VectorXd::Zero(4 * h);
    grads.out_w = Eigen::MatrixXd::Zero(model.num_tags(), hid);
    grads.out_b = Eigen::VectorXd::Zero(model.num_tags());

    Eigen::MatrixXd du(hid, t_len);
    for (Eigen::Index t = 0; t < t_len; ++t) {
        const Eigen::VectorXd ds = dscores.row(t).transpose();
        grads.out_w.noalias() += ds * cache.u.col(t).transpose();
        grads.out_b += ds;
        du.col(t) = model.out_w.transpose() * ds;
    }
    du = du.cwiseProduct(cache.mask2);

    Eigen::MatrixXd dh_fwd = du.topRows(h);
    Eigen::MatrixXd dh_bwd = du.bottomRows(h);

    Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(in, t_len);
    lstm_backward(model.fwd, cache.fwd, dh_fwd, false, h, grads.fwd, dx);
    lstm_backward(model.bwd, cache.bwd, dh_bwd, true, h, grads.bwd, dx);
    dx = dx.cwiseProduct(cache.mask1);

    for (Eigen::Index t = 0; t < t_len; ++t) {
        const FeatureVector& fv = cache.features[static_cast<std::size_t>(t)];
        auto wit = grads.word_rows.find(fv.word);
        if (wit == grads.word_rows.end())
            wit = grads.word_rows.emplace(fv.word, Eigen::VectorXd::Zero(we)).first;
        wit->second += dx.col(t).head(we);
        if (!fv.affixes.empty()) {
            const Eigen::VectorXd share =
                dx.col(t).tail(ae) / static_cast<double>(fv.affixes.size());
            for (int a : fv.affixes) {
                auto ait = grads.affix_rows.find(a);
                if (ait == grads.affix_rows.end())
                    ait = grads.affix_rows.emplace(a, Eigen::VectorXd::Zero(ae)).first;
                ait->second += share;
            }
        }
    }
    return grads;
}

namespace {

struct AdamStepConfig {
    double lr;
    double weight_decay;
    double bc1;
    double bc2;
};

// theta/m/v/g are coefficient-wise (array) expressions of matching shape.
template <typename Theta, typename M, typename V, typename G>
void adam_step(Theta&& theta, M&& m, V&& v, const G& g, double decay,
               const AdamStepConfig& cfg) {
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
    v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g.square();
    theta -= cfg.lr * (m / cfg.bc1) / ((v / cfg.bc2).sqrt() + kAdamEps);
    if (decay > 0.0)
        theta -= cfg.lr * decay * theta;
}

void apply_update(TaggerModel& model, const Gradients& grads, const AdamStepConfig& cfg) {
    const double wd = cfg.weight_decay;
    // Sparse embedding rows: moments and weight decay advance only for the
    // rows this sentence touched.
    for (const auto& [row, g] : grads.word_rows)
        adam_step(model.word_emb.row(row).array(), model.adam.word_m.row(row).array(),
                  model.adam.word_v.row(row).array(), g.transpose().array(), wd, cfg);
    for (const auto& [row, g] : grads.affix_rows)
        adam_step(model.affix_emb.row(row).array(), model.adam.affix_m.row(row).array(),
                  model.adam.affix_v.row(row).array(), g.transpose().array(), wd, cfg);
    adam_step(model.fwd.w.array(), model.adam.fwd_m.w.array(), model.adam.fwd_v.w.array(),
              grads.fwd.w.array(), wd, cfg);
    adam_step(model.fwd.b.array(), model.adam.fwd_m.b.array(), model.adam.fwd_v.b.array(),
              grads.fwd.b.array(), 0.0, cfg);
    adam_step(model.bwd.w.array(), model.adam.bwd_m.w.array(), model.adam.bwd_v.w.array(),
              grads.bwd.w.array(), wd, cfg);
    adam_step(model.bwd.b.array(), model.adam.bwd_m.b.array(), model.adam.bwd_v.b.array(),
              grads.bwd.b.array(), 0.0, cfg);
    adam_step(model.out_w.array(), model.adam.out_w_m.array(), model.adam.out_w_v.array(),
              grads.out_w.array(), wd, cfg);
    adam_step(model.out_b.array(), model.adam.out_b_m.array(), model.adam.out_b_v.array(),
              grads.out_b.array(), 0.0, cfg);
}

}  // namespace

TrainHistory train(TaggerModel& model, const std::vector<TrainExample>& corpus) {
    if (corpus.empty())
        throw ContractError("train: empty corpus");
    const TaggerConfig& config = model.config();
    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainHistory history;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = config.epoch_learning_rate(epoch);
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t n = 0; n < order.size(); ++n) {
            const std::size_t idx = order[n];
            const TrainExample& ex = corpus[idx];
            ForwardResult fr = forward(model, ex.features, true, &rng);
            LossResult loss = masked_loss(fr.scores, ex.tags);
            if (!std::isfinite(loss.loss))
                throw ContractError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                    ", sentence " + std::to_string(idx));
            loss_sum += loss.loss;
            if (loss.labeled == 0)
                continue;  // all-NULL sentence: no training signal
            Gradients grads = backward(model, fr.cache, loss.dscores);
            const double norm = std::sqrt(grads.squared_norm());
            if (norm > config.clip_norm)
                grads.scale(config.clip_norm / norm);
            model.adam.step += 1;
            AdamStepConfig step{};
            step.lr = lr;
            step.weight_decay = config.l2_coefficient;
            step.bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(model.adam.step));
            step.bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(model.adam.step));
            apply_update(model, grads, step);
        }
        history.epoch_loss.push_back(loss_sum / static_cast<double>(corpus.size()));
        if (!model.parameters_finite())
            throw ContractError("train: non-finite parameter after epoch " +
                                std::to_string(epoch));
    }
    return history;
}

std::vector<TagId> predict(const TaggerModel& model, const std::vector<FeatureVector>& sentence) {
    const Eigen::MatrixXd scores = forward(model, sentence, false).scores;
    std::vector<TagId> tags;
    tags.reserve(sentence.size());
    for (Eigen::Index t = 0; t < scores.rows(); ++t) {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < scores.cols(); ++k)
            if (scores(t, k) > scores(t, best))
                best = k;
        tags.push_back(static_cast<TagId>(best));
    }
    return tags;
}

TrainExample make_example(const TaggedSentence& sentence, const TaggerModel& model) {
    TrainExample ex;
    ex.features.reserve(sentence.size());
    ex.tags.reserve(sentence.size());
    for (const auto& tok : sentence.tokens) {
        ex.features.push_back(extract_features(tok.form, model.word_vocab(), model.affix_vocab(),
                                               model.config().affix_max_len));
        ex.tags.push_back(tok.tag);
    }
    return ex;
}

std::vector<TaggedSentence> predict_corpus(const TaggerModel& model,
                                           const std::vector<TaggedSentence>& sentences) {
    std::vector<TaggedSentence> out;
    out.reserve(sentences.size());
    for (const auto& s : sentences) {
        TrainExample ex = make_example(s, model);
        const auto tags = predict(model, ex.features);
        TaggedSentence tagged = s;
        for (std::size_t t = 0; t < tags.size(); ++t)
            tagged.tokens[t].tag = tags[t];
        out.push_back(std::move(tagged));
    }
    return out;
}

double gradient_check(TaggerModel& model, const std::vector<FeatureVector>& sentence,
                      const std::vector<TagId>& tags, double epsilon) {
    if (epsilon <= 0.0)
        throw ContractError("gradient_check: epsilon must be > 0");

    ForwardResult fr = forward(model, sentence, false);
    LossResult loss = masked_loss(fr.scores, tags);
    Gradients grads = backward(model, fr.cache, loss.dscores);

    auto loss_at = [&]() {
        return masked_loss(forward(model, sentence, false).scores, tags).loss;
    };

    // Analytic gradient lookup per block coordinate; untouched embedding
    // rows have an exactly-zero gradient.
    auto analytic = [&](const std::string& block, std::size_t idx) -> double {
        if (block == "word_emb" || block == "affix_emb") {
            const auto& rows = block == "word_emb" ? grads.word_rows : grads.affix_rows;
            const Eigen::Index num_rows =
                block == "word_emb" ? model.word_emb.rows() : model.affix_emb.rows();
            const Eigen::Index r = static_cast<Eigen::Index>(idx) % num_rows;
            const Eigen::Index c = static_cast<Eigen::Index>(idx) / num_rows;
            auto it = rows.find(static_cast<int>(r));
            return it == rows.end() ? 0.0 : it->second(c);
        }
        if (block == "fwd_w") return grads.fwd.w.data()[idx];
        if (block == "fwd_b") return grads.fwd.b.data()[idx];
        if (block == "bwd_w") return grads.bwd.w.data()[idx];
        if (block == "bwd_b") return grads.bwd.b.data()[idx];
        if (block == "out_w") return grads.out_w.data()[idx];
        if (block == "out_b") return grads.out_b.data()[idx];
        throw ContractError("gradient_check: unknown block " + block);
    };

    std::mt19937_64 rng(0x5eed5eedull ^ model.config().seed);

    // Candidate coordinates per block. Embedding candidates focus on rows
    // the sentence touches (plus one untouched row, expected zero).
    auto emb_candidates = [&](const Eigen::MatrixXd& emb, bool word) {
        std::set<int> touched;
        for (const auto& fv : sentence) {
            if (word) {
                touched.insert(fv.word);
            } else {
                for (int a : fv.affixes) touched.insert(a);
            }
        }
        std::vector<std::size_t> cand;
        const Eigen::Index num_rows = emb.rows();
        for (int r : touched)
            for (Eigen::Index c = 0; c < emb.cols(); ++c)
                cand.push_back(static_cast<std::size_t>(c * num_rows + r));
        for (Eigen::Index r = 0; r < num_rows; ++r) {
            if (!touched.count(static_cast<int>(r))) {
                cand.push_back(static_cast<std::size_t>(r));  // column 0 of an untouched row
                break;
            }
        }
        return cand;
    };

    double max_rel = 0.0;
    constexpr std::size_t kPerBlock = 30;
    for (const auto& block : model.parameter_blocks()) {
        std::vector<std::size_t> candidates;
        if (block.name == "word_emb") {
            candidates = emb_candidates(model.word_emb, true);
        } else if (block.name == "affix_emb") {
            candidates = emb_candidates(model.affix_emb, false);
        } else {
            candidates.resize(block.size);
            for (std::size_t i = 0; i < block.size; ++i) candidates[i] = i;
        }
        std::size_t take = std::min(kPerBlock, candidates.size());
        for (std::size_t i = 0; i < take; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
            std::swap(candidates[i], candidates[pick(rng)]);
            const std::size_t idx = candidates[i];
            double* p = block.data + idx;
            const double saved = *p;
            *p = saved + epsilon;
            const double plus = loss_at();
            *p = saved - epsilon;
            const double minus = loss_at();
            *p = saved;
            const double numeric = (plus - minus) / (2.0 * epsilon);
            const double a = analytic(block.name, idx);
            // Coordinates below 1e-5 in magnitude compare on an absolute
            // scale; central differences carry ~1e-11 noise in float64.
            const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-5});
            max_rel = std::max(max_rel, std::fabs(a - numeric) / denom);
        }
    }
    return max_rel;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json data = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            data.push_back(m(r, c));
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols,
                                 const std::string& name) {
    if (j.at("rows").get<Eigen::Index>() != rows || j.at("cols").get<Eigen::Index>() != cols)
        throw ContractError("model parameter '" + name + "' has unexpected shape");
    const auto& data = j.at("data");
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw ContractError("model parameter '" + name + "' has truncated data");
    Eigen::MatrixXd m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = data[k++].get<double>();
    return m;
}

Eigen::VectorXd vector_from_json(const json& j, Eigen::Index size, const std::string& name) {
    return matrix_from_json(j, size, 1, name);
}

json vocab_to_json(const Vocabulary& vocab) {
    json out = json::array();
    for (int i = Vocabulary::kNumReserved; i < vocab.size(); ++i)
        out.push_back(json::array({vocab.form(i), vocab.count(i)}));
    return out;
}

Vocabulary vocab_from_json(const json& j) {
    Vocabulary vocab;
    for (const auto& entry : j)
        vocab.add_entry(entry.at(0).get<std::string>(), entry.at(1).get<std::uint64_t>());
    return vocab;
}

json config_to_json(const TaggerConfig& c) {
    return json{{"word_embedding_size", c.word_embedding_size},
                {"affix_embedding_size", c.affix_embedding_size},
                {"hidden_nodes", c.hidden_nodes},
                {"dropout_rate", c.dropout_rate},
                {"dropout_layers", c.dropout_layers},
                {"learning_rate", c.learning_rate},
                {"decay_rate", c.decay_rate},
                {"l2_coefficient", c.l2_coefficient},
                {"epochs", c.epochs},
                {"optimizer", c.optimizer},
                {"affix_max_len", c.affix_max_len},
                {"seed", c.seed},
                {"step_decay", c.step_decay},
                {"clip_norm", c.clip_norm}};
}

TaggerConfig config_from_json(const json& j) {
    TaggerConfig c;
    c.word_embedding_size = j.at("word_embedding_size").get<int>();
    c.affix_embedding_size = j.at("affix_embedding_size").get<int>();
    c.hidden_nodes = j.at("hidden_nodes").get<int>();
    c.dropout_rate = j.at("dropout_rate").get<double>();
    c.dropout_layers = j.at("dropout_layers").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.decay_rate = j.at("decay_rate").get<double>();
    c.l2_coefficient = j.at("l2_coefficient").get<double>();
    c.epochs = j.at("epochs").get<int>();
    c.optimizer = j.at("optimizer").get<std::string>();
    c.affix_max_len = j.at("affix_max_len").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.step_decay = j.at("step_decay").get<bool>();
    c.clip_norm = j.at("clip_norm").get<double>();
    return c;
}

}  // namespace

std::string TaggerModel::serialize() const {
    json j;
    j["format"] = "crosstag-tagger";
    j["version"] = kModelVersion;
    j["config"] = config_to_json(config_);
    j["tags"] = tags_.symbols();
    j["word_vocab"] = vocab_to_json(words_);
    j["affix_vocab"] = vocab_to_json(affixes_);
    j["params"] = json{{"word_emb", matrix_to_json(word_emb)},
                       {"affix_emb", matrix_to_json(affix_emb)},
                       {"fwd_w", matrix_to_json(fwd.w)},
                       {"fwd_b", matrix_to_json(fwd.b)},
                       {"bwd_w", matrix_to_json(bwd.w)},
                       {"bwd_b", matrix_to_json(bwd.b)},
                       {"out_w", matrix_to_json(out_w)},
                       {"out_b", matrix_to_json(out_b)}};
    j["adam"] = json{{"step", adam.step},
                     {"word_m", matrix_to_json(adam.word_m)},
                     {"word_v", matrix_to_json(adam.word_v)},
                     {"affix_m", matrix_to_json(adam.affix_m)},
                     {"affix_v", matrix_to_json(adam.affix_v)},
                     {"fwd_m_w", matrix_to_json(adam.fwd_m.w)},
                     {"fwd_m_b", matrix_to_json(adam.fwd_m.b)},
                     {"fwd_v_w", matrix_to_json(adam.fwd_v.w)},
                     {"fwd_v_b", matrix_to_json(adam.fwd_v.b)},
                     {"bwd_m_w", matrix_to_json(adam.bwd_m.w)},
                     {"bwd_m_b", matrix_to_json(adam.bwd_m.b)},
                     {"bwd_v_w", matrix_to_json(adam.bwd_v.w)},
                     {"bwd_v_b", matrix_to_json(adam.bwd_v.b)},
                     {"out_w_m", matrix_to_json(adam.out_w_m)},
                     {"out_w_v", matrix_to_json(adam.out_w_v)},
                     {"out_b_m", matrix_to_json(adam.out_b_m)},
                     {"out_b_v", matrix_to_json(adam.out_b_v)}};
    return j.dump();
}

TaggerModel TaggerModel::deserialize(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ContractError(std::string("model file is not valid JSON: ") + e.what());
    }
    if (j.value("format", "") != "crosstag-tagger")
        throw ContractError("not a tagger model file");
    const int version = j.value("version", -1);
    if (version != kModelVersion)
        throw ContractError("unsupported tagger model version " + std::to_string(version) +
                            " (expected " + std::to_string(kModelVersion) + ")");

    TaggerConfig config = config_from_json(j.at("config"));
    TagSet tags(j.at("tags").get<std::vector<std::string>>());
    Vocabulary words = vocab_from_json(j.at("word_vocab"));
    Vocabulary affixes = vocab_from_json(j.at("affix_vocab"));
    TaggerModel model(config, tags, std::move(words), std::move(affixes));

    const int in = model.input_size();
    const int h = model.lstm_hidden();
    const int k = model.num_tags();
    const auto& params = j.at("params");
    model.word_emb = matrix_from_json(params.at("word_emb"), model.word_vocab().size(),
                                      config.word_embedding_size, "word_emb");
    model.affix_emb = matrix_from_json(params.at("affix_emb"), model.affix_vocab().size(),
                                       config.affix_embedding_size, "affix_emb");
    model.fwd.w = matrix_from_json(params.at("fwd_w"), 4 * h, in + h, "fwd_w");
    model.fwd.b = vector_from_json(params.at("fwd_b"), 4 * h, "fwd_b");
    model.bwd.w = matrix_from_json(params.at("bwd_w"), 4 * h, in + h, "bwd_w");
    model.bwd.b = vector_from_json(params.at("bwd_b"), 4 * h, "bwd_b");
    model.out_w = matrix_from_json(params.at("out_w"), k, config.hidden_nodes, "out_w");
    model.out_b = vector_from_json(params.at("out_b"), k, "out_b");

    const auto& adam = j.at("adam");
    model.adam.step = adam.at("step").get<std::int64_t>();
    model.adam.word_m = matrix_from_json(adam.at("word_m"), model.word_vocab().size(),
                                         config.word_embedding_size, "word_m");
    model.adam.word_v = matrix_from_json(adam.at("word_v"), model.word_vocab().size(),
                                         config.word_embedding_size, "word_v");
    model.adam.affix_m = matrix_from_json(adam.at("affix_m"), model.affix_vocab().size(),
                                          config.affix_embedding_size, "affix_m");
    model.adam.affix_v = matrix_from_json(adam.at("affix_v"), model.affix_vocab().size(),
                                          config.affix_embedding_size, "affix_v");
    model.adam.fwd_m.w = matrix_from_json(adam.at("fwd_m_w"), 4 * h, in + h, "fwd_m_w");
    model.adam.fwd_m.b = vector_from_json(adam.at("fwd_m_b"), 4 * h, "fwd_m_b");
    model.adam.fwd_v.w = matrix_from_json(adam.at("fwd_v_w"), 4 * h, in + h, "fwd_v_w");
    model.adam.fwd_v.b = vector_from_json(adam.at("fwd_v_b"), 4 * h, "fwd_v_b");
    model.adam.bwd_m.w = matrix_from_json(adam.at("bwd_m_w"), 4 * h, in + h, "bwd_m_w");
    model.adam.bwd_m.b = vector_from_json(adam.at("bwd_m_b"), 4 * h, "bwd_m_b");
    model.adam.bwd_v.w = matrix_from_json(adam.at("bwd_v_w"), 4 * h, in + h, "bwd_v_w");
    model.adam.bwd_v.b = vector_from_json(adam.at("bwd_v_b"), 4 * h, "bwd_v_b");
    model.adam.out_w_m = matrix_from_json(adam.at("out_w_m"), k, config.hidden_nodes, "out_w_m");
    model.adam.out_w_v = matrix_from_json(adam.at("out_w_v"), k, config.hidden_nodes, "out_w_v");
    model.adam.out_b_m = vector_from_json(adam.at("out_b_m"), k, "out_b_m");
    model.adam.out_b_v = vector_from_json(adam.at("out_b_v"), k, "out_b_v");
    return model;
}

}  // namespace crosstag
