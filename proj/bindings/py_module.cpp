#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "crosstag/aligner.hpp"
#include "crosstag/corpus.hpp"
#include "crosstag/evaluator.hpp"
#include "crosstag/multisource.hpp"
#include "crosstag/pipeline.hpp"
#include "crosstag/projector.hpp"
#include "crosstag/synth.hpp"
#include "crosstag/tagger.hpp"

namespace py = pybind11;
using namespace crosstag;

namespace {

// Sentence-level convenience wrappers so python callers work with
// TaggedSentence lists instead of feature vectors.
TaggerModel train_tagger(const std::vector<TaggedSentence>& corpus, TaggerConfig config,
                         std::uint64_t word_min_count, std::uint64_t affix_min_count,
                         TrainHistory* history_out) {
    TaggerVocabs vocabs =
        build_tagger_vocabs(corpus, config.affix_max_len, word_min_count, affix_min_count);
    TaggerModel model(std::move(config), TagSet(), std::move(vocabs.words),
                      std::move(vocabs.affixes));
    std::vector<TrainExample> examples;
    examples.reserve(corpus.size());
    for (const auto& s : corpus)
        examples.push_back(make_example(s, model));
    TrainHistory history = train(model, examples);
    if (history_out != nullptr)
        *history_out = std::move(history);
    return model;
}

double gradient_check_sentence(TaggerModel& model, const TaggedSentence& sentence,
                               double epsilon) {
    const TrainExample ex = make_example(sentence, model);
    return gradient_check(model, ex.features, ex.tags, epsilon);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Cross-lingual POS projection toolkit: EM word alignment, "
              "confidence-filtered tag projection, multi-source voting and a "
              "NULL-masked BiLSTM tagger.";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_IOError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<ContractError>(m, "ContractError", PyExc_RuntimeError);

    m.attr("NULL_TAG") = kNullTag;
#ifdef VERSION_INFO
    m.attr("__version__") = VERSION_INFO;
#else
    m.attr("__version__") = "dev";
#endif

    py::class_<TagSet>(m, "TagSet")
        .def(py::init<>())
        .def(py::init<std::vector<std::string>>())
        .def("__len__", &TagSet::size)
        .def("symbol", &TagSet::symbol)
        .def("index_of", &TagSet::index_of)
        .def("find", &TagSet::find)
        .def_property_readonly("symbols", &TagSet::symbols)
        .def_property_readonly_static("null_marker",
                                      [](py::object) { return TagSet::null_marker(); });

    py::class_<Token>(m, "Token")
        .def(py::init<std::string, TagId>(), py::arg("form"), py::arg("tag") = kNullTag)
        .def_readwrite("form", &Token::form)
        .def_readwrite("tag", &Token::tag)
        .def("has_tag", &Token::has_tag)
        .def("__repr__", [](const Token& t) {
            return "Token('" + t.form + "', " + std::to_string(t.tag) + ")";
        });

    py::class_<TaggedSentence>(m, "TaggedSentence")
        .def(py::init<>())
        .def_readwrite("tokens", &TaggedSentence::tokens)
        .def("__len__", &TaggedSentence::size);

    py::class_<ParallelPair>(m, "ParallelPair")
        .def(py::init<>())
        .def_readwrite("pair_id", &ParallelPair::pair_id)
        .def_readwrite("source", &ParallelPair::source)
        .def_readwrite("target", &ParallelPair::target);

    py::class_<Vocabulary>(m, "Vocabulary")
        .def(py::init<>())
        .def_readonly_static("PAD", &Vocabulary::kPad)
        .def_readonly_static("UNK", &Vocabulary::kUnk)
        .def("lookup", &Vocabulary::lookup)
        .def("contains", &Vocabulary::contains)
        .def("form", &Vocabulary::form)
        .def("count", &Vocabulary::count)
        .def("__len__", &Vocabulary::size)
        .def("serialize", &Vocabulary::serialize)
        .def_static("deserialize", &Vocabulary::deserialize);

    m.def("parse_conllu", &parse_conllu_text, py::arg("text"), py::arg("tags"));
    m.def("parse_plain", [](const std::string& text) {
        auto result = parse_plain_text(text);
        return py::make_tuple(result.sentences, result.blank_lines);
    });
    m.def("write_conllu", &write_conllu_text, py::arg("sentences"), py::arg("tags"));
    m.def("build_vocabulary", &build_vocabulary, py::arg("sentences"), py::arg("min_count"));

    py::enum_<TrainDirection>(m, "TrainDirection")
        .value("forward", TrainDirection::forward)
        .value("backward", TrainDirection::backward);

    py::enum_<LinkDirection>(m, "LinkDirection")
        .value("forward", LinkDirection::forward)
        .value("backward", LinkDirection::backward)
        .value("symmetrized", LinkDirection::symmetrized);

    py::enum_<Symmetrization>(m, "Symmetrization")
        .value("intersection", Symmetrization::intersection)
        .value("union_all", Symmetrization::union_all)
        .value("grow_diag_final", Symmetrization::grow_diag_final);

    py::class_<AlignmentLink>(m, "AlignmentLink")
        .def(py::init([](int src, int tgt, double prob) {
                 return AlignmentLink{src, tgt, prob};
             }),
             py::arg("src"), py::arg("tgt"), py::arg("prob"))
        .def_readwrite("src", &AlignmentLink::src)
        .def_readwrite("tgt", &AlignmentLink::tgt)
        .def_readwrite("prob", &AlignmentLink::prob);

    py::class_<Alignment>(m, "Alignment")
        .def(py::init<>())
        .def_readwrite("pair_id", &Alignment::pair_id)
        .def_readwrite("direction", &Alignment::direction)
        .def_readwrite("links", &Alignment::links);

    py::class_<TranslationTable>(m, "TranslationTable")
        .def(py::init<>())
        .def_readonly_static("FLOOR_PROB", &TranslationTable::kFloorProb)
        .def("prob",
             py::overload_cast<const std::string&, const std::string&>(
                 &TranslationTable::prob, py::const_),
             py::arg("source_form"), py::arg("target_form"))
        .def("serialize", &TranslationTable::serialize)
        .def_static("deserialize", &TranslationTable::deserialize);

    py::class_<AlignerOptions>(m, "AlignerOptions")
        .def(py::init<>())
        .def_readwrite("iterations", &AlignerOptions::iterations)
        .def_readwrite("direction", &AlignerOptions::direction)
        .def_readwrite("threads", &AlignerOptions::threads)
        .def_readwrite("model2", &AlignerOptions::model2)
        .def_readwrite("model2_iterations", &AlignerOptions::model2_iterations);

    py::class_<AlignmentModel>(m, "AlignmentModel")
        .def_readonly("table", &AlignmentModel::table)
        .def_readonly("log_likelihood", &AlignmentModel::log_likelihood);

    m.def("train_ibm1", &train_ibm1, py::arg("pairs"), py::arg("options") = AlignerOptions{},
          py::call_guard<py::gil_scoped_release>());
    m.def("posterior_align",
          py::overload_cast<const AlignmentModel&, const ParallelPair&>(&posterior_align),
          py::arg("model"), py::arg("pair"));
    m.def("symmetrize", &symmetrize, py::arg("fwd"), py::arg("bwd"), py::arg("method"));
    m.def("filter_links", &filter_links, py::arg("alignment"), py::arg("alpha"));
    m.def("write_alignments", &write_alignments_text);
    m.def("parse_alignments", &parse_alignments_text);

    py::class_<ProjectedSentence>(m, "ProjectedSentence")
        .def(py::init<>())
        .def_readwrite("pair_id", &ProjectedSentence::pair_id)
        .def_readwrite("tokens", &ProjectedSentence::tokens)
        .def_readwrite("coverage", &ProjectedSentence::coverage)
        .def_readwrite("avg_link_prob", &ProjectedSentence::avg_link_prob)
        .def_readwrite("source_language", &ProjectedSentence::source_language);

    py::class_<TypeDictionary>(m, "TypeDictionary")
        .def(py::init<std::size_t, double>(), py::arg("num_tags"), py::arg("min_relative_freq"))
        .def("add", &TypeDictionary::add)
        .def("seen", &TypeDictionary::seen)
        .def("allowed_tags", &TypeDictionary::allowed_tags)
        .def("is_allowed", &TypeDictionary::is_allowed);

    m.def("project_tokens", &project_tokens, py::arg("pair"), py::arg("alignment"));
    m.def("build_type_dictionary", &build_type_dictionary, py::arg("corpus"),
          py::arg("min_relative_freq"), py::arg("num_tags"));
    m.def("apply_type_constraints", &apply_type_constraints, py::arg("sentence"),
          py::arg("dictionary"));
    m.def("select_training_sentences", &select_training_sentences, py::arg("corpus"),
          py::arg("min_coverage"), py::arg("top_k"));

    py::class_<RenderingGroup>(m, "RenderingGroup")
        .def(py::init<>())
        .def_readwrite("group_id", &RenderingGroup::group_id)
        .def_readwrite("renderings", &RenderingGroup::renderings)
        .def_readwrite("source_languages", &RenderingGroup::source_languages);

    py::class_<LanguageStats>(m, "LanguageStats")
        .def(py::init<>())
        .def_readwrite("mean_coverage", &LanguageStats::mean_coverage)
        .def_readwrite("mean_link_prob", &LanguageStats::mean_link_prob);

    m.def("find_overlapping_words", &find_overlapping_words);
    m.def("vote", &vote, py::arg("group"), py::arg("num_tags"));
    m.def("calibrate", &calibrate, py::arg("group"), py::arg("best"), py::arg("num_tags"));
    m.def("select_best_rendering", &select_best_rendering, py::arg("group"), py::arg("stats"));
    m.def("compute_corpus_stats", &compute_corpus_stats);

    py::class_<TaggerConfig>(m, "TaggerConfig")
        .def(py::init<>())
        .def_readwrite("word_embedding_size", &TaggerConfig::word_embedding_size)
        .def_readwrite("affix_embedding_size", &TaggerConfig::affix_embedding_size)
        .def_readwrite("hidden_nodes", &TaggerConfig::hidden_nodes)
        .def_readwrite("dropout_rate", &TaggerConfig::dropout_rate)
        .def_readwrite("dropout_layers", &TaggerConfig::dropout_layers)
        .def_readwrite("learning_rate", &TaggerConfig::learning_rate)
        .def_readwrite("decay_rate", &TaggerConfig::decay_rate)
        .def_readwrite("l2_coefficient", &TaggerConfig::l2_coefficient)
        .def_readwrite("epochs", &TaggerConfig::epochs)
        .def_readwrite("optimizer", &TaggerConfig::optimizer)
        .def_readwrite("affix_max_len", &TaggerConfig::affix_max_len)
        .def_readwrite("seed", &TaggerConfig::seed)
        .def_readwrite("step_decay", &TaggerConfig::step_decay)
        .def_readwrite("clip_norm", &TaggerConfig::clip_norm);

    py::class_<TrainHistory>(m, "TrainHistory")
        .def(py::init<>())
        .def_readonly("epoch_loss", &TrainHistory::epoch_loss);

    py::class_<TaggerModel>(m, "TaggerModel")
        .def_property_readonly("config", &TaggerModel::config)
        .def_property_readonly("tags", &TaggerModel::tags)
        .def("serialize", &TaggerModel::serialize)
        .def_static("deserialize", &TaggerModel::deserialize);

    m.def(
        "train_tagger",
        [](const std::vector<TaggedSentence>& corpus, TaggerConfig config,
           std::uint64_t word_min_count, std::uint64_t affix_min_count) {
            TrainHistory history;
            TaggerModel model = train_tagger(corpus, std::move(config), word_min_count,
                                             affix_min_count, &history);
            return py::make_tuple(std::move(model), std::move(history));
        },
        py::arg("corpus"), py::arg("config") = TaggerConfig{}, py::arg("word_min_count") = 1,
        py::arg("affix_min_count") = 1);
    m.def("predict_corpus", &predict_corpus, py::arg("model"), py::arg("sentences"),
          py::call_guard<py::gil_scoped_release>());
    m.def("gradient_check", &gradient_check_sentence, py::arg("model"), py::arg("sentence"),
          py::arg("epsilon") = 1e-5);

    py::class_<TagScore>(m, "TagScore")
        .def_readonly("precision", &TagScore::precision)
        .def_readonly("recall", &TagScore::recall)
        .def_readonly("f1", &TagScore::f1)
        .def_readonly("support", &TagScore::support);

    py::class_<MulticatCell>(m, "MulticatCell")
        .def_readonly("present", &MulticatCell::present)
        .def_readonly("accuracy", &MulticatCell::accuracy)
        .def_readonly("support", &MulticatCell::support);

    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("token_accuracy", &EvalReport::token_accuracy)
        .def_readonly("macro_f1", &EvalReport::macro_f1)
        .def_readonly("per_tag", &EvalReport::per_tag)
        .def_readonly("multicat", &EvalReport::multicat)
        .def_readonly("token_count", &EvalReport::token_count)
        .def_readonly("oov_rate", &EvalReport::oov_rate);

    py::class_<DensityDelta>(m, "DensityDelta")
        .def_readonly("delta_examples", &DensityDelta::delta_examples)
        .def_readonly("delta_density", &DensityDelta::delta_density);

    py::class_<PearsonResult>(m, "PearsonResult")
        .def_readonly("r", &PearsonResult::r)
        .def_readonly("p_value", &PearsonResult::p_value);

    m.def(
        "score",
        [](const std::vector<TaggedSentence>& pred, const std::vector<TaggedSentence>& gold,
           const TagSet& tags, bool exclude_punct) {
            return score(pred, gold, tags, exclude_punct);
        },
        py::arg("pred"), py::arg("gold"), py::arg("tags"), py::arg("exclude_punct") = false);
    m.def("multicat_accuracy", &multicat_accuracy, py::arg("pred"), py::arg("gold"),
          py::arg("tags"), py::arg("pairs"));
    m.def("density_stats", &density_stats, py::arg("before"), py::arg("after"));
    m.def("pearson", &pearson, py::arg("xs"), py::arg("ys"));
    m.def("format_report", &format_report, py::arg("report"), py::arg("tags"));
    m.def("report_to_tsv", &report_to_tsv, py::arg("report"), py::arg("tags"));

    py::class_<SynthSpec>(m, "SynthSpec")
        .def(py::init<>())
        .def_readwrite("seed", &SynthSpec::seed)
        .def_readwrite("vocab_size", &SynthSpec::vocab_size)
        .def_readwrite("lexicon_size", &SynthSpec::lexicon_size)
        .def_readwrite("ambiguity", &SynthSpec::ambiguity)
        .def_readwrite("tag_weights", &SynthSpec::tag_weights)
        .def_readwrite("swap_prob", &SynthSpec::swap_prob)
        .def_readwrite("drop_prob", &SynthSpec::drop_prob)
        .def_readwrite("tag_noise", &SynthSpec::tag_noise)
        .def_readwrite("num_sentences", &SynthSpec::num_sentences)
        .def_readwrite("sentence_offset", &SynthSpec::sentence_offset)
        .def_readwrite("min_len", &SynthSpec::min_len)
        .def_readwrite("max_len", &SynthSpec::max_len)
        .def_readwrite("language", &SynthSpec::language);

    py::class_<SynthCorpus>(m, "SynthCorpus")
        .def_readonly("pairs", &SynthCorpus::pairs)
        .def_readonly("gold_alignments", &SynthCorpus::gold_alignments)
        .def_readonly("gold_target_tags", &SynthCorpus::gold_target_tags);

    py::class_<SynthGroup>(m, "SynthGroup")
        .def_readonly("group", &SynthGroup::group)
        .def_readonly("gold", &SynthGroup::gold);

    m.def("generate", &generate, py::arg("spec"), py::arg("tags"));
    m.def("make_rendering_group", &make_rendering_group, py::arg("spec"), py::arg("k"),
          py::arg("disagreement"), py::arg("tags"));

    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def("set", &RunConfig::set, py::arg("key"), py::arg("value"))
        .def("validate", &RunConfig::validate)
        .def("snapshot", &RunConfig::snapshot);

    m.def("parse_config", &parse_config_text, py::arg("text"));
    m.def("load_parallel_corpus", &load_parallel_corpus, py::arg("source_conllu_path"),
          py::arg("target_plain_path"), py::arg("tags"));
    m.def("cmd_synth", &cmd_synth, py::call_guard<py::gil_scoped_release>());
    m.def("cmd_align", &cmd_align, py::call_guard<py::gil_scoped_release>());
    m.def("cmd_project", &cmd_project, py::call_guard<py::gil_scoped_release>());
    m.def("cmd_calibrate", &cmd_calibrate, py::call_guard<py::gil_scoped_release>());
    m.def("cmd_train", &cmd_train, py::call_guard<py::gil_scoped_release>());
    m.def("cmd_tag", &cmd_tag, py::call_guard<py::gil_scoped_release>());
    m.def("cmd_eval", &cmd_eval, py::call_guard<py::gil_scoped_release>());
    m.def("cmd_pipeline", &cmd_pipeline, py::call_guard<py::gil_scoped_release>());
}
