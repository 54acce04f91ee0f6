#include "crosstag/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <sstream>

#include "crosstag/corpus.hpp"
#include "crosstag/io_util.hpp"
#include "crosstag/multisource.hpp"
#include "crosstag/parallel.hpp"
#include "crosstag/projector.hpp"
#include "crosstag/synth.hpp"
#include "crosstag/tagger.hpp"

namespace fs = std::filesystem;

namespace crosstag {

namespace {

class RunMeta {
public:
    RunMeta(std::string command, const RunConfig& config)
        : command_(std::move(command)),
          snapshot_(config.snapshot()),
          start_(std::chrono::steady_clock::now()) {}

    void add_input(const std::string& path, std::string_view content) {
        inputs_.emplace_back(path, hex64(fnv1a64(content)));
    }

    void write(const fs::path& out_dir) const {
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - start_)
                                 .count();
        std::ostringstream out;
        out << "command=" << command_ << '\n';
        out << "version=" << kToolVersion << '\n';
        out << "wall_time_ms=" << elapsed << '\n';
        for (const auto& [path, digest] : inputs_)
            out << "input." << path << '=' << digest << '\n';
        std::istringstream snap(snapshot_);
        std::string line;
        while (std::getline(snap, line))
            out << "config." << line << '\n';
        write_text_file((out_dir / ("run_" + command_ + ".meta")).string(), out.str());
    }

private:
    std::string command_;
    std::string snapshot_;
    std::chrono::steady_clock::time_point start_;
    std::vector<std::pair<std::string, std::string>> inputs_;
};

void ensure_dir(const std::string& path) {
    if (path.empty())
        throw ConfigError("output directory not configured");
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec)
        throw IoError("cannot create directory " + path + ": " + ec.message());
}

std::string require(const std::string& value, const char* key) {
    if (value.empty())
        throw ConfigError(std::string("missing required config key: ") + key);
    return value;
}

std::string meta_path_for(const std::string& conllu_path) {
    // "X.conllu" pairs with sidecar "X.meta.tsv"
    const std::string suffix = ".conllu";
    if (conllu_path.size() > suffix.size() &&
        conllu_path.compare(conllu_path.size() - suffix.size(), suffix.size(), suffix) == 0)
        return conllu_path.substr(0, conllu_path.size() - suffix.size()) + ".meta.tsv";
    return conllu_path + ".meta.tsv";
}

std::string plain_text(const std::vector<TaggedSentence>& sentences) {
    std::ostringstream out;
    for (const auto& s : sentences) {
        for (std::size_t i = 0; i < s.tokens.size(); ++i) {
            if (i) out << ' ';
            out << s.tokens[i].form;
        }
        out << '\n';
    }
    return out.str();
}

struct LoadedRendering {
    std::vector<ProjectedSentence> sentences;
};

SynthSpec synth_spec_for(const RunConfig& config, const std::string& language,
                         int sentence_offset, int num_sentences, bool noiseless) {
    SynthSpec spec = config.synth;
    spec.seed = config.seed;
    spec.language = language;
    spec.sentence_offset = sentence_offset;
    spec.num_sentences = num_sentences;
    if (noiseless) {
        spec.swap_prob = 0.0;
        spec.drop_prob = 0.0;
        spec.tag_noise = 0.0;
    }
    return spec;
}

std::vector<std::string> synth_languages(const RunConfig& config) {
    std::vector<std::string> languages;
    for (int s = 0; s < config.synth_num_sources; ++s)
        languages.push_back("L" + std::to_string(s));
    return languages;
}

// Shared by cmd_align/cmd_project/cmd_pipeline: EM both directions,
// per-pair posterior alignment, symmetrization, alpha filtering.
struct AlignedCorpus {
    AlignmentModel forward_model;
    AlignmentModel backward_model;
    std::vector<Alignment> alignments;  // symmetrized + filtered
};

AlignedCorpus align_corpus(const std::vector<ParallelPair>& pairs, const RunConfig& config) {
    AlignerOptions fwd_opts;
    fwd_opts.iterations = config.aligner_iterations;
    fwd_opts.direction = TrainDirection::forward;
    fwd_opts.threads = config.threads;
    fwd_opts.model2 = config.aligner_model2;
    fwd_opts.model2_iterations = config.aligner_model2_iterations;
    AlignerOptions bwd_opts = fwd_opts;
    bwd_opts.direction = TrainDirection::backward;

    AlignedCorpus out;
    out.forward_model = train_ibm1(pairs, fwd_opts);
    out.backward_model = train_ibm1(pairs, bwd_opts);

    const Symmetrization method = parse_symmetrization(config.aligner_symmetrization);
    out.alignments.reserve(pairs.size());
    for (const auto& pair : pairs) {
        Alignment fwd = posterior_align(out.forward_model, pair);
        Alignment bwd = posterior_align(out.backward_model, pair);
        if (config.aligner_filter_before_symmetrize) {
            fwd = filter_links(fwd, config.aligner_alpha);
            bwd = filter_links(bwd, config.aligner_alpha);
            out.alignments.push_back(symmetrize(fwd, bwd, method));
        } else {
            out.alignments.push_back(
                filter_links(symmetrize(fwd, bwd, method), config.aligner_alpha));
        }
    }
    return out;
}

std::vector<ProjectedSentence> project_corpus(const std::vector<ParallelPair>& pairs,
                                              const std::vector<Alignment>& alignments,
                                              const std::string& language,
                                              const RunConfig& config, const TagSet& tags) {
    if (pairs.size() != alignments.size())
        throw ContractError("projection: pair count (" + std::to_string(pairs.size()) +
                            ") does not match alignment count (" +
                            std::to_string(alignments.size()) + ")");
    // Pure per-sentence transforms: parallel workers write disjoint slots,
    // so the result does not depend on the thread count.
    std::vector<ProjectedSentence> projected(pairs.size());
    for_each_block(pairs.size(), 64, config.threads,
                   [&](std::size_t, std::size_t begin, std::size_t end) {
                       for (std::size_t i = begin; i < end; ++i) {
                           projected[i] = project_tokens(pairs[i], alignments[i]);
                           projected[i].source_language = language;
                       }
                   });
    const TypeDictionary dict =
        build_type_dictionary(projected, config.projector_min_relative_freq, tags.size());
    for_each_block(projected.size(), 64, config.threads,
                   [&](std::size_t, std::size_t begin, std::size_t end) {
                       for (std::size_t i = begin; i < end; ++i)
                           projected[i] = apply_type_constraints(projected[i], dict);
                   });
    return projected;
}

std::size_t effective_top_k(const RunConfig& config, std::size_t corpus_size) {
    return config.projector_top_k > 0 ? static_cast<std::size_t>(config.projector_top_k)
                                      : std::max<std::size_t>(corpus_size, 1);
}

std::string loss_history_tsv(const TrainHistory& history) {
    std::ostringstream out;
    out << "epoch\tloss\n";
    for (std::size_t e = 0; e < history.epoch_loss.size(); ++e)
        out << e << '\t' << format_double(history.epoch_loss[e]) << '\n';
    return out.str();
}

TaggerModel train_tagger_on(const std::vector<ProjectedSentence>& corpus,
                            const RunConfig& config, const TagSet& tags,
                            TrainHistory* history_out) {
    if (corpus.empty())
        throw ContractError("tagger training corpus is empty after selection");
    std::vector<TaggedSentence> sentences;
    sentences.reserve(corpus.size());
    for (const auto& p : corpus)
        sentences.push_back(p.tokens);

    TaggerConfig tagger_config = config.tagger;
    tagger_config.seed = config.seed;
    TaggerVocabs vocabs =
        build_tagger_vocabs(sentences, tagger_config.affix_max_len,
                            config.tagger_word_min_count, config.tagger_affix_min_count);
    TaggerModel model(tagger_config, tags, std::move(vocabs.words), std::move(vocabs.affixes));

    std::vector<TrainExample> examples;
    examples.reserve(sentences.size());
    for (const auto& s : sentences)
        examples.push_back(make_example(s, model));
    TrainHistory history = train(model, examples);
    if (history_out != nullptr)
        *history_out = history;
    return model;
}

EvalReport evaluate_predictions(const std::vector<TaggedSentence>& pred,
                                const std::vector<TaggedSentence>& gold, const TagSet& tags,
                                const RunConfig& config,
                                const std::set<std::string>* known_forms) {
    EvalReport report = score(pred, gold, tags, config.eval_exclude_punct, known_forms);
    const std::vector<std::pair<TagId, TagId>> pairs = {
        {tags.index_of("VERB"), tags.index_of("NOUN")},
        {tags.index_of("VERB"), tags.index_of("ADJ")},
        {tags.index_of("NOUN"), tags.index_of("ADJ")},
    };
    report.multicat = multicat_accuracy(pred, gold, tags, pairs);
    return report;
}

std::set<std::string> model_known_forms(const TaggerModel& model) {
    std::set<std::string> forms;
    for (int i = Vocabulary::kNumReserved; i < model.word_vocab().size(); ++i)
        forms.insert(model.word_vocab().form(i));
    return forms;
}

void write_eval_reports(const EvalReport& report, const TagSet& tags,
                        const std::string& prefix) {
    write_text_file(prefix + ".txt", format_report(report, tags));
    write_text_file(prefix + ".tsv", report_to_tsv(report, tags));
}

}  // namespace

std::vector<ParallelPair> load_parallel_corpus(const std::string& source_conllu_path,
                                               const std::string& target_plain_path,
                                               const TagSet& tags) {
    const auto source = parse_conllu_text(read_text_file(source_conllu_path), tags);
    const auto target = parse_plain_text(read_text_file(target_plain_path));
    if (source.size() != target.sentences.size())
        throw ContractError("parallel corpus mismatch: " + std::to_string(source.size()) +
                            " source sentences vs " + std::to_string(target.sentences.size()) +
                            " target sentences");
    std::vector<ParallelPair> pairs;
    pairs.reserve(source.size());
    char id_buf[16];
    for (std::size_t i = 0; i < source.size(); ++i) {
        std::snprintf(id_buf, sizeof(id_buf), "p%06zu", i);
        ParallelPair pair;
        pair.pair_id = id_buf;
        pair.source = source[i];
        pair.target = target.sentences[i];
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

void cmd_synth(const RunConfig& config) {
    config.validate();
    const TagSet tags;
    RunMeta meta("synth", config);
    const std::string out_dir = require(config.synth_out_dir, "synth.out_dir");
    ensure_dir(out_dir);
    const fs::path out(out_dir);

    const auto languages = synth_languages(config);
    std::vector<GroupRef> groups(static_cast<std::size_t>(config.synth.num_sentences));
    for (std::size_t g = 0; g < groups.size(); ++g) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "g%06zu", g);
        groups[g].group_id = buf;
    }

    for (const auto& language : languages) {
        const SynthSpec spec =
            synth_spec_for(config, language, 0, config.synth.num_sentences, false);
        const SynthCorpus corpus = generate(spec, tags);

        std::vector<TaggedSentence> sources, targets_plain;
        for (const auto& pair : corpus.pairs) {
            sources.push_back(pair.source);
            targets_plain.push_back(pair.target);
        }
        write_text_file((out / ("src_" + language + ".conllu")).string(),
                        write_conllu_text(sources, tags));
        write_text_file((out / ("tgt_" + language + ".txt")).string(),
                        plain_text(targets_plain));
        write_text_file((out / ("gold_" + language + ".align")).string(),
                        write_alignments_text(corpus.gold_alignments));
        write_text_file((out / ("gold_tgt_" + language + ".conllu")).string(),
                        write_conllu_text(corpus.gold_target_tags, tags));
        for (std::size_t g = 0; g < groups.size(); ++g)
            groups[g].renderings.push_back({"proj_" + language + ".conllu", g + 1});
    }

    // Held-out evaluation set: fresh noiseless sentences from the same lexicon.
    const SynthSpec test_spec = synth_spec_for(config, "T", config.synth.num_sentences,
                                               config.synth_test_sentences, true);
    const SynthCorpus test_corpus = generate(test_spec, tags);
    write_text_file((out / "test.conllu").string(),
                    write_conllu_text(test_corpus.gold_target_tags, tags));
    write_text_file((out / "test.txt").string(), plain_text(test_corpus.gold_target_tags));

    std::ostringstream langs;
    for (const auto& language : languages)
        langs << language << '\n';
    write_text_file((out / "languages.txt").string(), langs.str());
    write_text_file((out / "groups.tsv").string(), write_group_manifest(groups));
    meta.write(out);
}

void cmd_align(const RunConfig& config) {
    config.validate();
    const TagSet tags;
    RunMeta meta("align", config);
    const std::string source_path = require(config.align_source, "align.source");
    const std::string target_path = require(config.align_target, "align.target");
    const std::string out_dir = require(config.align_out_dir, "align.out_dir");
    ensure_dir(out_dir);
    const fs::path out(out_dir);

    meta.add_input(source_path, read_text_file(source_path));
    meta.add_input(target_path, read_text_file(target_path));

    const auto pairs = load_parallel_corpus(source_path, target_path, tags);
    const AlignedCorpus aligned = align_corpus(pairs, config);

    write_text_file((out / "ttable_forward.tsv").string(), aligned.forward_model.table.serialize());
    write_text_file((out / "ttable_backward.tsv").string(),
                    aligned.backward_model.table.serialize());
    auto ll_text = [](const std::vector<double>& ll) {
        std::ostringstream s;
        for (std::size_t i = 0; i < ll.size(); ++i)
            s << i << '\t' << format_double(ll[i]) << '\n';
        return s.str();
    };
    write_text_file((out / "loglik_forward.tsv").string(),
                    ll_text(aligned.forward_model.log_likelihood));
    write_text_file((out / "loglik_backward.tsv").string(),
                    ll_text(aligned.backward_model.log_likelihood));
    write_text_file((out / "alignments.align").string(),
                    write_alignments_text(aligned.alignments));
    meta.write(out);
}

void cmd_project(const RunConfig& config) {
    config.validate();
    const TagSet tags;
    RunMeta meta("project", config);
    const std::string source_path = require(config.project_source, "project.source");
    const std::string target_path = require(config.project_target, "project.target");
    const std::string align_path = require(config.project_alignments, "project.alignments");
    const std::string prefix = require(config.project_out_prefix, "project.out_prefix");
    ensure_dir(fs::path(prefix).parent_path().string().empty()
                   ? "."
                   : fs::path(prefix).parent_path().string());

    meta.add_input(source_path, read_text_file(source_path));
    meta.add_input(target_path, read_text_file(target_path));
    const std::string align_text = read_text_file(align_path);
    meta.add_input(align_path, align_text);

    const auto pairs = load_parallel_corpus(source_path, target_path, tags);
    auto alignments = parse_alignments_text(align_text);
    for (std::size_t i = 0; i < alignments.size() && i < pairs.size(); ++i)
        alignments[i].pair_id = pairs[i].pair_id;

    const auto projected =
        project_corpus(pairs, alignments, config.project_language, config, tags);
    const auto selected = select_training_sentences(projected, config.projector_min_coverage,
                                                    effective_top_k(config, projected.size()));

    write_text_file(prefix + "_all.conllu", write_projected_conllu(projected, tags));
    write_text_file(prefix + "_all.meta.tsv", write_projected_meta(projected));
    write_text_file(prefix + "_selected.conllu", write_projected_conllu(selected, tags));
    write_text_file(prefix + "_selected.meta.tsv", write_projected_meta(selected));
    meta.write(fs::path(prefix).parent_path().string().empty()
                   ? fs::path(".")
                   : fs::path(prefix).parent_path());
}

void cmd_calibrate(const RunConfig& config) {
    config.validate();
    const TagSet tags;
    RunMeta meta("calibrate", config);
    const std::string manifest_path = require(config.calibrate_manifest, "calibrate.manifest");
    const std::string prefix = require(config.calibrate_out_prefix, "calibrate.out_prefix");

    const std::string manifest_text = read_text_file(manifest_path);
    meta.add_input(manifest_path, manifest_text);
    const auto groups = parse_group_manifest(manifest_text);
    if (groups.empty())
        throw ContractError("calibrate: group manifest is empty");

    const fs::path base = fs::path(manifest_path).parent_path();
    std::map<std::string, LoadedRendering> renderings;
    for (const auto& group : groups) {
        for (const auto& ref : group.renderings) {
            if (renderings.count(ref.path))
                continue;
            const std::string conllu_path = (base / ref.path).string();
            LoadedRendering loaded;
            loaded.sentences = parse_projected_corpus(
                read_text_file(conllu_path), read_text_file(meta_path_for(conllu_path)), tags);
            renderings.emplace(ref.path, std::move(loaded));
        }
    }

    CorpusStats stats;
    for (const auto& [path, loaded] : renderings) {
        if (loaded.sentences.empty())
            throw ContractError("calibrate: rendering file " + path + " is empty");
        merge_corpus_stats(stats, loaded.sentences.front().source_language, loaded.sentences);
    }

    std::vector<ProjectedSentence> calibrated;
    calibrated.reserve(groups.size());
    for (const auto& group_ref : groups) {
        RenderingGroup group;
        group.group_id = group_ref.group_id;
        for (const auto& ref : group_ref.renderings) {
            const auto& loaded = renderings.at(ref.path);
            if (ref.line < 1 || ref.line > loaded.sentences.size())
                throw ContractError("calibrate: line " + std::to_string(ref.line) +
                                    " out of range in " + ref.path);
            group.renderings.push_back(loaded.sentences[ref.line - 1]);
            group.source_languages.push_back(loaded.sentences[ref.line - 1].source_language);
        }
        const std::size_t best = select_best_rendering(group, stats);
        calibrated.push_back(calibrate(group, best, tags.size()));
    }

    write_text_file(prefix + ".conllu", write_projected_conllu(calibrated, tags));
    write_text_file(prefix + ".meta.tsv", write_projected_meta(calibrated));
    meta.write(fs::path(prefix).parent_path().string().empty()
                   ? fs::path(".")
                   : fs::path(prefix).parent_path());
}

void cmd_train(const RunConfig& config) {
    config.validate();
    const TagSet tags;
    RunMeta meta("train", config);
    const std::string corpus_path = require(config.train_corpus, "train.corpus");
    const std::string model_path = require(config.train_model_out, "train.model_out");

    const std::string corpus_text = read_text_file(corpus_path);
    meta.add_input(corpus_path, corpus_text);
    const auto sentences = parse_conllu_text(corpus_text, tags);
    std::vector<ProjectedSentence> corpus;
    corpus.reserve(sentences.size());
    for (const auto& s : sentences) {
        ProjectedSentence p;
        p.tokens = s;
        p.coverage = compute_coverage(p.tokens);
        corpus.push_back(std::move(p));
    }

    TrainHistory history;
    const TaggerModel model = train_tagger_on(corpus, config, tags, &history);
    write_text_file(model_path, model.serialize());
    write_text_file(model_path + ".loss.tsv", loss_history_tsv(history));
    meta.write(fs::path(model_path).parent_path().string().empty()
                   ? fs::path(".")
                   : fs::path(model_path).parent_path());
}

void cmd_tag(const RunConfig& config) {
    config.validate();
    const TagSet tags;
    RunMeta meta("tag", config);
    const std::string model_path = require(config.tag_model, "tag.model");
    const std::string input_path = require(config.tag_input, "tag.input");
    const std::string output_path = require(config.tag_output, "tag.output");

    const std::string model_text = read_text_file(model_path);
    meta.add_input(model_path, model_text);
    const std::string input_text = read_text_file(input_path);
    meta.add_input(input_path, input_text);

    const TaggerModel model = TaggerModel::deserialize(model_text);
    std::vector<TaggedSentence> sentences;
    if (config.tag_input_format == "conllu")
        sentences = parse_conllu_text(input_text, model.tags());
    else
        sentences = parse_plain_text(input_text).sentences;

    const auto tagged = predict_corpus(model, sentences);
    write_text_file(output_path, write_conllu_text(tagged, model.tags()));
    meta.write(fs::path(output_path).parent_path().string().empty()
                   ? fs::path(".")
                   : fs::path(output_path).parent_path());
}

EvalReport cmd_eval(const RunConfig& config) {
    config.validate();
    const TagSet tags;
    RunMeta meta("eval", config);
    const std::string pred_path = require(config.eval_pred, "eval.pred");
    const std::string gold_path = require(config.eval_gold, "eval.gold");
    const std::string prefix = require(config.eval_report_prefix, "eval.report_prefix");

    const std::string pred_text = read_text_file(pred_path);
    const std::string gold_text = read_text_file(gold_path);
    meta.add_input(pred_path, pred_text);
    meta.add_input(gold_path, gold_text);

    const auto pred = parse_conllu_text(pred_text, tags);
    const auto gold = parse_conllu_text(gold_text, tags);

    std::set<std::string> known_forms;
    const std::set<std::string>* known_ptr = nullptr;
    if (!config.eval_model.empty()) {
        const TaggerModel model = TaggerModel::deserialize(read_text_file(config.eval_model));
        known_forms = model_known_forms(model);
        known_ptr = &known_forms;
    }

    const EvalReport report = evaluate_predictions(pred, gold, tags, config, known_ptr);
    write_eval_reports(report, tags, prefix);
    meta.write(fs::path(prefix).parent_path().string().empty()
                   ? fs::path(".")
                   : fs::path(prefix).parent_path());
    return report;
}

EvalReport cmd_pipeline(const RunConfig& config) {
    config.validate();
    const TagSet tags;
    RunMeta meta("pipeline", config);
    const std::string data_dir = require(config.pipeline_data_dir, "pipeline.data_dir");
    const std::string out_dir = require(config.pipeline_out_dir, "pipeline.out_dir");
    ensure_dir(out_dir);
    const fs::path data(data_dir);
    const fs::path out(out_dir);

    auto stage = [](const char* name, auto&& fn) -> decltype(fn()) {
        try {
            return fn();
        } catch (const ConfigError&) {
            throw;
        } catch (const IoError& e) {
            throw IoError(std::string("stage ") + name + ": " + e.what());
        } catch (const std::exception& e) {
            throw ContractError(std::string("stage ") + name + ": " + e.what());
        }
    };

    std::vector<std::string> languages;
    {
        const std::string text = read_text_file((data / "languages.txt").string());
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) languages.push_back(line);
        }
        if (languages.empty())
            throw ContractError("pipeline: languages.txt lists no source languages");
        std::sort(languages.begin(), languages.end());
    }

    // Per-language: alignment then projection with type constraints.
    CorpusStats stats;
    std::map<std::string, std::vector<ProjectedSentence>> projected_by_language;
    std::size_t group_count = 0;
    for (const auto& language : languages) {
        const std::string src_path = (data / ("src_" + language + ".conllu")).string();
        const std::string tgt_path = (data / ("tgt_" + language + ".txt")).string();
        meta.add_input(src_path, read_text_file(src_path));
        meta.add_input(tgt_path, read_text_file(tgt_path));

        const auto pairs = stage("align", [&] {
            return load_parallel_corpus(src_path, tgt_path, tags);
        });
        const AlignedCorpus aligned = stage("align", [&] { return align_corpus(pairs, config); });
        write_text_file((out / ("alignments_" + language + ".align")).string(),
                        write_alignments_text(aligned.alignments));

        const auto projected = stage("project", [&] {
            return project_corpus(pairs, aligned.alignments, language, config, tags);
        });
        write_text_file((out / ("proj_" + language + ".conllu")).string(),
                        write_projected_conllu(projected, tags));
        write_text_file((out / ("proj_" + language + ".meta.tsv")).string(),
                        write_projected_meta(projected));
        merge_corpus_stats(stats, language, projected);
        if (group_count == 0)
            group_count = projected.size();
        else if (group_count != projected.size())
            throw ContractError("pipeline: source corpora are not line-parallel");
        projected_by_language.emplace(language, projected);
    }

    // Calibration across sources (or the best single source).
    std::string best_language = languages.front();
    double best_score = -1.0;
    for (const auto& language : languages) {
        const auto& ls = stats.at(language);
        const double s = ls.mean_coverage * ls.mean_link_prob;
        if (s > best_score) {
            best_score = s;
            best_language = language;
        }
    }

    std::vector<ProjectedSentence> training_corpus;
    if (config.multisource_enabled && languages.size() > 1) {
        std::vector<GroupRef> manifest(group_count);
        for (std::size_t g = 0; g < group_count; ++g) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "g%06zu", g);
            manifest[g].group_id = buf;
            for (const auto& language : languages)
                manifest[g].renderings.push_back({"proj_" + language + ".conllu", g + 1});
        }
        write_text_file((out / "groups.tsv").string(), write_group_manifest(manifest));

        training_corpus = stage("calibrate", [&] {
            std::vector<ProjectedSentence> calibrated;
            calibrated.reserve(group_count);
            for (std::size_t g = 0; g < group_count; ++g) {
                RenderingGroup group;
                group.group_id = manifest[g].group_id;
                for (const auto& language : languages) {
                    group.renderings.push_back(projected_by_language.at(language)[g]);
                    group.source_languages.push_back(language);
                }
                const std::size_t best = select_best_rendering(group, stats);
                calibrated.push_back(calibrate(group, best, tags.size()));
            }
            return calibrated;
        });
        write_text_file((out / "calibrated.conllu").string(),
                        write_projected_conllu(training_corpus, tags));
        write_text_file((out / "calibrated.meta.tsv").string(),
                        write_projected_meta(training_corpus));
    } else {
        training_corpus = projected_by_language.at(best_language);
    }

    const auto selected = stage("select", [&] {
        return select_training_sentences(training_corpus, config.projector_min_coverage,
                                         effective_top_k(config, training_corpus.size()));
    });
    write_text_file((out / "train.conllu").string(), write_projected_conllu(selected, tags));
    write_text_file((out / "train.meta.tsv").string(), write_projected_meta(selected));

    if (config.multisource_enabled && languages.size() > 1) {
        // Relative gain in training examples and annotation density over the
        // best single source, under the same selection thresholds.
        const auto single_selected = select_training_sentences(
            projected_by_language.at(best_language), config.projector_min_coverage,
            effective_top_k(config, group_count));
        if (!single_selected.empty()) {
            const DensityDelta delta = density_stats(single_selected, selected);
            std::ostringstream density;
            density << "baseline_language\t" << best_language << '\n';
            density << "delta_examples\t" << format_double(delta.delta_examples) << '\n';
            density << "delta_density\t" << format_double(delta.delta_density) << '\n';
            write_text_file((out / "density.tsv").string(), density.str());
        }
    }

    TrainHistory history;
    const TaggerModel model =
        stage("train", [&] { return train_tagger_on(selected, config, tags, &history); });
    write_text_file((out / "model.json").string(), model.serialize());
    write_text_file((out / "loss_history.tsv").string(), loss_history_tsv(history));

    const std::string test_plain_path = (data / "test.txt").string();
    const std::string test_gold_path = (data / "test.conllu").string();
    meta.add_input(test_plain_path, read_text_file(test_plain_path));
    meta.add_input(test_gold_path, read_text_file(test_gold_path));

    const auto test_sentences = parse_plain_text(read_text_file(test_plain_path)).sentences;
    const auto tagged = stage("tag", [&] { return predict_corpus(model, test_sentences); });
    write_text_file((out / "pred.conllu").string(), write_conllu_text(tagged, tags));

    const auto gold = parse_conllu_text(read_text_file(test_gold_path), tags);
    const auto known = model_known_forms(model);
    const EvalReport report =
        stage("eval", [&] { return evaluate_predictions(tagged, gold, tags, config, &known); });
    write_eval_reports(report, tags, (out / "report").string());
    meta.write(out);
    return report;
}

}  // namespace crosstag
