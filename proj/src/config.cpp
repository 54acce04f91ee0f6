#include "crosstag/config.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>
#include <vector>

#include "crosstag/io_util.hpp"

namespace crosstag {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("key '" + key + "' expects true/false, got '" + value + "'");
}

int parse_int(const std::string& key, const std::string& value) {
    try {
        return static_cast<int>(parse_long(value));
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects an integer, got '" + value + "'");
    }
}

long parse_longv(const std::string& key, const std::string& value) {
    try {
        return parse_long(value);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects an integer, got '" + value + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        return std::stoull(value);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects an unsigned integer, got '" + value + "'");
    }
}

double parse_dbl(const std::string& key, const std::string& value) {
    try {
        return parse_double(value);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects a number, got '" + value + "'");
    }
}

struct KeyDef {
    std::string name;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

const std::vector<KeyDef>& key_registry() {
    static const std::vector<KeyDef> keys = [] {
        std::vector<KeyDef> k;
        auto add = [&k](const std::string& name, auto setter, auto getter) {
            k.push_back({name, setter, getter});
        };
        auto int_key = [&](const std::string& name, int RunConfig::*field) {
            add(name,
                [name, field](RunConfig& c, const std::string& v) { c.*field = parse_int(name, v); },
                [field](const RunConfig& c) { return std::to_string(c.*field); });
        };
        auto long_key = [&](const std::string& name, long RunConfig::*field) {
            add(name,
                [name, field](RunConfig& c, const std::string& v) { c.*field = parse_longv(name, v); },
                [field](const RunConfig& c) { return std::to_string(c.*field); });
        };
        auto u64_key = [&](const std::string& name, std::uint64_t RunConfig::*field) {
            add(name,
                [name, field](RunConfig& c, const std::string& v) { c.*field = parse_u64(name, v); },
                [field](const RunConfig& c) { return std::to_string(c.*field); });
        };
        auto dbl_key = [&](const std::string& name, double RunConfig::*field) {
            add(name,
                [name, field](RunConfig& c, const std::string& v) { c.*field = parse_dbl(name, v); },
                [field](const RunConfig& c) { return format_double(c.*field); });
        };
        auto bool_key = [&](const std::string& name, bool RunConfig::*field) {
            add(name,
                [name, field](RunConfig& c, const std::string& v) { c.*field = parse_bool(name, v); },
                [field](const RunConfig& c) { return c.*field ? "true" : "false"; });
        };
        auto str_key = [&](const std::string& name, std::string RunConfig::*field) {
            add(name, [field](RunConfig& c, const std::string& v) { c.*field = v; },
                [field](const RunConfig& c) { return c.*field; });
        };

        int_key("threads", &RunConfig::threads);
        u64_key("seed", &RunConfig::seed);

        int_key("aligner.iterations", &RunConfig::aligner_iterations);
        dbl_key("aligner.alpha", &RunConfig::aligner_alpha);
        str_key("aligner.symmetrization", &RunConfig::aligner_symmetrization);
        bool_key("aligner.filter_before_symmetrize", &RunConfig::aligner_filter_before_symmetrize);
        bool_key("aligner.model2", &RunConfig::aligner_model2);
        int_key("aligner.model2_iterations", &RunConfig::aligner_model2_iterations);

        dbl_key("projector.min_relative_freq", &RunConfig::projector_min_relative_freq);
        dbl_key("projector.min_coverage", &RunConfig::projector_min_coverage);
        long_key("projector.top_k", &RunConfig::projector_top_k);

        auto tagger_int = [&](const std::string& name, int TaggerConfig::*field) {
            add(name,
                [name, field](RunConfig& c, const std::string& v) {
                    c.tagger.*field = parse_int(name, v);
                },
                [field](const RunConfig& c) { return std::to_string(c.tagger.*field); });
        };
        auto tagger_dbl = [&](const std::string& name, double TaggerConfig::*field) {
            add(name,
                [name, field](RunConfig& c, const std::string& v) {
                    c.tagger.*field = parse_dbl(name, v);
                },
                [field](const RunConfig& c) { return format_double(c.tagger.*field); });
        };
        tagger_int("tagger.word_embedding_size", &TaggerConfig::word_embedding_size);
        tagger_int("tagger.affix_embedding_size", &TaggerConfig::affix_embedding_size);
        tagger_int("tagger.hidden_nodes", &TaggerConfig::hidden_nodes);
        tagger_dbl("tagger.dropout_rate", &TaggerConfig::dropout_rate);
        tagger_int("tagger.dropout_layers", &TaggerConfig::dropout_layers);
        tagger_dbl("tagger.learning_rate", &TaggerConfig::learning_rate);
        tagger_dbl("tagger.decay_rate", &TaggerConfig::decay_rate);
        tagger_dbl("tagger.l2_coefficient", &TaggerConfig::l2_coefficient);
        tagger_int("tagger.epochs", &TaggerConfig::epochs);
        add("tagger.optimizer",
            [](RunConfig& c, const std::string& v) { c.tagger.optimizer = v; },
            [](const RunConfig& c) { return c.tagger.optimizer; });
        tagger_int("tagger.affix_max_len", &TaggerConfig::affix_max_len);
        add("tagger.step_decay",
            [](RunConfig& c, const std::string& v) {
                c.tagger.step_decay = parse_bool("tagger.step_decay", v);
            },
            [](const RunConfig& c) { return c.tagger.step_decay ? "true" : "false"; });
        tagger_dbl("tagger.clip_norm", &TaggerConfig::clip_norm);
        u64_key("tagger.word_min_count", &RunConfig::tagger_word_min_count);
        u64_key("tagger.affix_min_count", &RunConfig::tagger_affix_min_count);

        bool_key("evaluator.exclude_punct", &RunConfig::eval_exclude_punct);
        bool_key("multisource.enabled", &RunConfig::multisource_enabled);

        auto synth_int = [&](const std::string& name, int SynthSpec::*field) {
            add(name,
                [name, field](RunConfig& c, const std::string& v) {
                    c.synth.*field = parse_int(name, v);
                },
                [field](const RunConfig& c) { return std::to_string(c.synth.*field); });
        };
        auto synth_dbl = [&](const std::string& name, double SynthSpec::*field) {
            add(name,
                [name, field](RunConfig& c, const std::string& v) {
                    c.synth.*field = parse_dbl(name, v);
                },
                [field](const RunConfig& c) { return format_double(c.synth.*field); });
        };
        synth_int("synth.vocab_size", &SynthSpec::vocab_size);
        synth_int("synth.lexicon_size", &SynthSpec::lexicon_size);
        synth_int("synth.ambiguity", &SynthSpec::ambiguity);
        synth_dbl("synth.swap_prob", &SynthSpec::swap_prob);
        synth_dbl("synth.drop_prob", &SynthSpec::drop_prob);
        synth_dbl("synth.tag_noise", &SynthSpec::tag_noise);
        synth_int("synth.num_sentences", &SynthSpec::num_sentences);
        synth_int("synth.min_len", &SynthSpec::min_len);
        synth_int("synth.max_len", &SynthSpec::max_len);
        int_key("synth.num_sources", &RunConfig::synth_num_sources);
        int_key("synth.test_sentences", &RunConfig::synth_test_sentences);
        str_key("synth.out_dir", &RunConfig::synth_out_dir);

        str_key("align.source", &RunConfig::align_source);
        str_key("align.target", &RunConfig::align_target);
        str_key("align.out_dir", &RunConfig::align_out_dir);

        str_key("project.source", &RunConfig::project_source);
        str_key("project.target", &RunConfig::project_target);
        str_key("project.alignments", &RunConfig::project_alignments);
        str_key("project.out_prefix", &RunConfig::project_out_prefix);
        str_key("project.language", &RunConfig::project_language);

        str_key("calibrate.manifest", &RunConfig::calibrate_manifest);
        str_key("calibrate.out_prefix", &RunConfig::calibrate_out_prefix);

        str_key("train.corpus", &RunConfig::train_corpus);
        str_key("train.model_out", &RunConfig::train_model_out);

        str_key("tag.model", &RunConfig::tag_model);
        str_key("tag.input", &RunConfig::tag_input);
        str_key("tag.output", &RunConfig::tag_output);
        str_key("tag.input_format", &RunConfig::tag_input_format);

        str_key("eval.pred", &RunConfig::eval_pred);
        str_key("eval.gold", &RunConfig::eval_gold);
        str_key("eval.report_prefix", &RunConfig::eval_report_prefix);
        str_key("eval.model", &RunConfig::eval_model);

        str_key("pipeline.data_dir", &RunConfig::pipeline_data_dir);
        str_key("pipeline.out_dir", &RunConfig::pipeline_out_dir);
        return k;
    }();
    return keys;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    for (const auto& def : key_registry()) {
        if (def.name == key) {
            def.set(*this, value);
            return;
        }
    }
    throw ConfigError("unknown configuration key: '" + key + "'");
}

void RunConfig::validate() const {
    if (threads < 1)
        throw ConfigError("threads must be >= 1");
    if (aligner_iterations < 1)
        throw ConfigError("aligner.iterations must be >= 1");
    if (aligner_alpha < 0.0 || aligner_alpha > 1.0)
        throw ConfigError("aligner.alpha must lie in [0, 1]");
    parse_symmetrization(aligner_symmetrization);
    if (aligner_model2_iterations < 1)
        throw ConfigError("aligner.model2_iterations must be >= 1");
    if (projector_min_relative_freq <= 0.0 || projector_min_relative_freq > 1.0)
        throw ConfigError("projector.min_relative_freq must lie in (0, 1]");
    if (projector_min_coverage < 0.0 || projector_min_coverage > 1.0)
        throw ConfigError("projector.min_coverage must lie in [0, 1]");
    if (projector_top_k < 0)
        throw ConfigError("projector.top_k must be >= 0 (0 = unlimited)");
    try {
        tagger.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("tagger.") + e.what());
    }
    if (tagger_word_min_count < 1 || tagger_affix_min_count < 1)
        throw ConfigError("tagger vocabulary min counts must be >= 1");
    if (synth_num_sources < 1)
        throw ConfigError("synth.num_sources must be >= 1");
    if (synth_test_sentences < 1)
        throw ConfigError("synth.test_sentences must be >= 1");
    if (tag_input_format != "plain" && tag_input_format != "conllu")
        throw ConfigError("tag.input_format must be 'plain' or 'conllu'");
}

std::string RunConfig::snapshot() const {
    std::vector<std::pair<std::string, std::string>> entries;
    for (const auto& def : key_registry())
        entries.emplace_back(def.name, def.get(*this));
    std::sort(entries.begin(), entries.end());
    std::ostringstream out;
    for (const auto& [k, v] : entries)
        out << k << '=' << v << '\n';
    return out.str();
}

RunConfig parse_config_text(std::string_view text) {
    RunConfig config;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#')
            continue;
        auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              " is not key=value: '" + stripped + "'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + " has an empty key");
        config.set(key, value);
    }
    return config;
}

RunConfig parse_config_file(const std::string& path) {
    return parse_config_text(read_text_file(path));
}

}  // namespace crosstag
