#include "crosstag/evaluator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "crosstag/io_util.hpp"

namespace crosstag {

namespace {

std::string lowercase(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

void check_shapes(const std::vector<TaggedSentence>& pred,
                  const std::vector<TaggedSentence>& gold) {
    if (pred.empty())
        throw ContractError("score: empty prediction set");
    if (pred.size() != gold.size())
        throw ContractError("score: sentence count mismatch (pred " +
                            std::to_string(pred.size()) + ", gold " +
                            std::to_string(gold.size()) + ")");
    for (std::size_t s = 0; s < pred.size(); ++s)
        if (pred[s].size() != gold[s].size())
            throw ContractError("score: token count mismatch at sentence " + std::to_string(s) +
                                " (pred " + std::to_string(pred[s].size()) + ", gold " +
                                std::to_string(gold[s].size()) + ")");
}

// Regularized incomplete beta via Lentz's continued fraction.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-14;
    constexpr double kFpMin = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps)
            break;
    }
    return h;
}

double reg_incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

EvalReport score(const std::vector<TaggedSentence>& pred,
                 const std::vector<TaggedSentence>& gold, const TagSet& tags,
                 bool exclude_punct, const std::set<std::string>* known_forms) {
    check_shapes(pred, gold);
    const TagId punct = tags.find("PUNCT");

    EvalReport report;
    const std::size_t num_tags = tags.size();
    std::vector<std::uint64_t> gold_count(num_tags, 0), pred_count(num_tags, 0),
        correct_count(num_tags, 0);
    std::uint64_t matches = 0, total = 0, oov = 0;

    for (std::size_t s = 0; s < pred.size(); ++s) {
        for (std::size_t t = 0; t < gold[s].size(); ++t) {
            const Token& g = gold[s].tokens[t];
            const Token& p = pred[s].tokens[t];
            if (!g.has_tag())
                continue;  // no reference tag for this token
            if (exclude_punct && g.tag == punct)
                continue;
            ++total;
            ++gold_count[static_cast<std::size_t>(g.tag)];
            if (p.has_tag())
                ++pred_count[static_cast<std::size_t>(p.tag)];
            if (p.has_tag() && p.tag == g.tag) {
                ++matches;
                ++correct_count[static_cast<std::size_t>(g.tag)];
            }
            if (known_forms != nullptr && !known_forms->count(lowercase(g.form)))
                ++oov;
        }
    }
    if (total == 0)
        throw ContractError("score: no scorable tokens");

    report.token_count = total;
    report.token_accuracy = static_cast<double>(matches) / static_cast<double>(total);
    report.oov_rate =
        known_forms == nullptr ? 0.0 : static_cast<double>(oov) / static_cast<double>(total);

    double f1_sum = 0.0;
    std::size_t f1_n = 0;
    for (std::size_t t = 0; t < num_tags; ++t) {
        if (gold_count[t] == 0)
            continue;
        TagScore ts;
        ts.support = gold_count[t];
        ts.recall = static_cast<double>(correct_count[t]) / static_cast<double>(gold_count[t]);
        ts.precision = pred_count[t] == 0 ? 0.0
                                          : static_cast<double>(correct_count[t]) /
                                                static_cast<double>(pred_count[t]);
        ts.f1 = (ts.precision + ts.recall) == 0.0
                    ? 0.0
                    : 2.0 * ts.precision * ts.recall / (ts.precision + ts.recall);
        f1_sum += ts.f1;
        ++f1_n;
        report.per_tag[static_cast<TagId>(t)] = ts;
    }
    report.macro_f1 = f1_n == 0 ? 0.0 : f1_sum / static_cast<double>(f1_n);
    return report;
}

std::map<std::string, MulticatCell> multicat_accuracy(
    const std::vector<TaggedSentence>& pred, const std::vector<TaggedSentence>& gold,
    const TagSet& tags, const std::vector<std::pair<TagId, TagId>>& pairs) {
    check_shapes(pred, gold);

    // Gold tag inventory per form.
    std::unordered_map<std::string, std::set<TagId>> form_tags;
    for (const auto& s : gold)
        for (const auto& tok : s.tokens)
            if (tok.has_tag())
                form_tags[tok.form].insert(tok.tag);

    struct Counter {
        std::uint64_t total = 0;
        std::uint64_t correct = 0;
    };
    std::vector<Counter> pair_counters(pairs.size());
    Counter all_counter;

    for (std::size_t s = 0; s < gold.size(); ++s) {
        for (std::size_t t = 0; t < gold[s].size(); ++t) {
            const Token& g = gold[s].tokens[t];
            const Token& p = pred[s].tokens[t];
            if (!g.has_tag())
                continue;
            const auto& tag_set = form_tags.at(g.form);
            const bool correct = p.has_tag() && p.tag == g.tag;
            if (tag_set.size() >= 2) {
                ++all_counter.total;
                if (correct) ++all_counter.correct;
            }
            for (std::size_t k = 0; k < pairs.size(); ++k) {
                if (tag_set.count(pairs[k].first) && tag_set.count(pairs[k].second)) {
                    ++pair_counters[k].total;
                    if (correct) ++pair_counters[k].correct;
                }
            }
        }
    }

    std::map<std::string, MulticatCell> result;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const std::string key =
            tags.symbol(pairs[k].first) + "&" + tags.symbol(pairs[k].second);
        MulticatCell cell;
        cell.present = pair_counters[k].total > 0;
        cell.support = pair_counters[k].total;
        cell.accuracy = cell.present ? static_cast<double>(pair_counters[k].correct) /
                                           static_cast<double>(pair_counters[k].total)
                                     : 0.0;
        result[key] = cell;
    }
    MulticatCell all;
    all.present = all_counter.total > 0;
    all.support = all_counter.total;
    all.accuracy = all.present ? static_cast<double>(all_counter.correct) /
                                     static_cast<double>(all_counter.total)
                               : 0.0;
    result["All"] = all;
    return result;
}

DensityDelta density_stats(const std::vector<ProjectedSentence>& before,
                           const std::vector<ProjectedSentence>& after) {
    if (before.empty())
        throw ContractError("density_stats: empty 'before' corpus");
    auto mean_coverage = [](const std::vector<ProjectedSentence>& corpus) {
        double sum = 0.0;
        for (const auto& s : corpus)
            sum += s.coverage;
        return corpus.empty() ? 0.0 : sum / static_cast<double>(corpus.size());
    };
    const double before_density = mean_coverage(before);
    if (before_density <= 0.0)
        throw ContractError("density_stats: 'before' corpus has zero annotation density");
    DensityDelta delta;
    delta.delta_examples = (static_cast<double>(after.size()) -
                            static_cast<double>(before.size())) /
                           static_cast<double>(before.size());
    delta.delta_density = (mean_coverage(after) - before_density) / before_density;
    return delta;
}

PearsonResult pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size())
        throw ContractError("pearson: series lengths differ");
    const std::size_t n = xs.size();
    if (n < 3)
        throw ContractError("pearson: need at least 3 points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw ContractError("pearson: zero variance in input series");

    PearsonResult result;
    result.r = sxy / std::sqrt(sxx * syy);
    result.r = std::clamp(result.r, -1.0, 1.0);
    const double df = static_cast<double>(n - 2);
    const double r2 = result.r * result.r;
    if (r2 >= 1.0) {
        result.p_value = 0.0;
        return result;
    }
    const double t2 = df * r2 / (1.0 - r2);
    result.p_value = reg_incomplete_beta(0.5 * df, 0.5, df / (df + t2));
    return result;
}

std::string format_report(const EvalReport& report, const TagSet& tags) {
    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "tokens %llu  accuracy %.4f  macro_f1 %.4f  oov_rate %.4f\n",
                  static_cast<unsigned long long>(report.token_count), report.token_accuracy,
                  report.macro_f1, report.oov_rate);
    out << buf;
    out << "\ntag        prec    recall  f1      support\n";
    for (std::size_t t = 0; t < tags.size(); ++t) {
        auto it = report.per_tag.find(static_cast<TagId>(t));
        if (it == report.per_tag.end())
            continue;
        const TagScore& ts = it->second;
        std::snprintf(buf, sizeof(buf), "%-10s %.4f  %.4f  %.4f  %llu\n",
                      tags.symbol(static_cast<TagId>(t)).c_str(), ts.precision, ts.recall,
                      ts.f1, static_cast<unsigned long long>(ts.support));
        out << buf;
    }
    if (!report.multicat.empty()) {
        out << "\nmulti-category words\n";
        for (const auto& [key, cell] : report.multicat) {
            if (!cell.present) {
                std::snprintf(buf, sizeof(buf), "%-14s -\n", key.c_str());
            } else {
                std::snprintf(buf, sizeof(buf), "%-14s %.4f  (support %llu)\n", key.c_str(),
                              cell.accuracy, static_cast<unsigned long long>(cell.support));
            }
            out << buf;
        }
    }
    return out.str();
}

std::string report_to_tsv(const EvalReport& report, const TagSet& tags) {
    std::ostringstream out;
    out << "token_count\t" << report.token_count << '\n';
    out << "token_accuracy\t" << format_double(report.token_accuracy) << '\n';
    out << "macro_f1\t" << format_double(report.macro_f1) << '\n';
    out << "oov_rate\t" << format_double(report.oov_rate) << '\n';
    for (std::size_t t = 0; t < tags.size(); ++t) {
        auto it = report.per_tag.find(static_cast<TagId>(t));
        if (it == report.per_tag.end())
            continue;
        const std::string& sym = tags.symbol(static_cast<TagId>(t));
        const TagScore& ts = it->second;
        out << "tag." << sym << ".precision\t" << format_double(ts.precision) << '\n';
        out << "tag." << sym << ".recall\t" << format_double(ts.recall) << '\n';
        out << "tag." << sym << ".f1\t" << format_double(ts.f1) << '\n';
        out << "tag." << sym << ".support\t" << ts.support << '\n';
    }
    for (const auto& [key, cell] : report.multicat) {
        out << "multicat." << key << "\t"
            << (cell.present ? format_double(cell.accuracy) : std::string("absent")) << '\n';
        out << "multicat." << key << ".support\t" << cell.support << '\n';
    }
    return out.str();
}

}  // namespace crosstag
