#include "doctest.h"

#include <filesystem>

#include "crosstag/io_util.hpp"
#include "crosstag/pipeline.hpp"

using namespace crosstag;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "crosstag_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

RunConfig tiny_pipeline_config(const fs::path& data, const fs::path& out) {
    RunConfig config;
    config.seed = 5;
    config.synth.vocab_size = 30;
    config.synth.num_sentences = 60;
    config.synth.min_len = 3;
    config.synth.max_len = 6;
    config.synth_num_sources = 2;
    config.synth_test_sentences = 10;
    config.synth_out_dir = data.string();
    config.aligner_iterations = 4;
    config.projector_min_coverage = 0.0;
    config.tagger.word_embedding_size = 12;
    config.tagger.affix_embedding_size = 12;
    config.tagger.hidden_nodes = 16;
    config.tagger.dropout_rate = 0.1;
    config.tagger.learning_rate = 5e-3;
    config.tagger.decay_rate = 0.02;
    config.tagger.epochs = 30;
    config.pipeline_data_dir = data.string();
    config.pipeline_out_dir = out.string();
    return config;
}

}  // namespace

TEST_CASE("config parsing, overrides and snapshots") {
    auto config = parse_config_text(
        "# comment\n"
        "aligner.alpha = 0.25\n"
        "threads=2\n"
        "\n"
        "tagger.epochs=3\n"
        "multisource.enabled=false\n");
    CHECK(config.aligner_alpha == 0.25);
    CHECK(config.threads == 2);
    CHECK(config.tagger.epochs == 3);
    CHECK_FALSE(config.multisource_enabled);

    SUBCASE("defaults carry the documented values") {
        RunConfig defaults;
        CHECK(defaults.aligner_alpha == 0.1);
        CHECK(defaults.aligner_iterations == 5);
        CHECK(defaults.projector_min_relative_freq == 0.2);
        CHECK(defaults.projector_min_coverage == 0.75);
        CHECK(defaults.tagger.word_embedding_size == 64);
        CHECK(defaults.tagger.affix_embedding_size == 64);
        CHECK(defaults.tagger.hidden_nodes == 128);
        CHECK(defaults.tagger.dropout_rate == 0.7);
        CHECK(defaults.tagger.dropout_layers == 2);
        CHECK(defaults.tagger.learning_rate == 1e-3);
        CHECK(defaults.tagger.decay_rate == 0.1);
        CHECK(defaults.tagger.epochs == 20);
        CHECK(defaults.tagger.optimizer == "adam");
    }
    SUBCASE("unknown keys are rejected") {
        CHECK_THROWS_AS(parse_config_text("aligner.bogus=1\n"), ConfigError);
        RunConfig c;
        CHECK_THROWS_AS(c.set("nope", "1"), ConfigError);
    }
    SUBCASE("malformed lines are rejected") {
        CHECK_THROWS_AS(parse_config_text("just a line\n"), ConfigError);
        CHECK_THROWS_AS(parse_config_text("=value\n"), ConfigError);
    }
    SUBCASE("values are range-checked") {
        RunConfig c;
        c.aligner_alpha = 1.5;
        CHECK_THROWS_AS(c.validate(), ConfigError);
        c = RunConfig{};
        c.threads = 0;
        CHECK_THROWS_AS(c.validate(), ConfigError);
        c = RunConfig{};
        c.aligner_symmetrization = "sideways";
        CHECK_THROWS_AS(c.validate(), ConfigError);
        c = RunConfig{};
        c.tagger.dropout_rate = 1.0;
        CHECK_THROWS_AS(c.validate(), ConfigError);
    }
    SUBCASE("snapshot is sorted, complete and reparsable") {
        const std::string snap = config.snapshot();
        CHECK(snap.find("aligner.alpha=0.25") != std::string::npos);
        CHECK(snap.find("tagger.epochs=3") != std::string::npos);
        auto reparsed = parse_config_text(snap);
        CHECK(reparsed.snapshot() == snap);
    }
}

TEST_CASE("synth command writes a complete corpus layout") {
    const fs::path dir = fresh_dir("synth_cmd");
    RunConfig config;
    config.seed = 7;
    config.synth.vocab_size = 20;
    config.synth.num_sentences = 12;
    config.synth_num_sources = 2;
    config.synth_test_sentences = 4;
    config.synth_out_dir = dir.string();
    cmd_synth(config);

    for (const char* name :
         {"src_L0.conllu", "tgt_L0.txt", "gold_L0.align", "gold_tgt_L0.conllu",
          "src_L1.conllu", "tgt_L1.txt", "languages.txt", "groups.tsv", "test.conllu",
          "test.txt", "run_synth.meta"})
        CHECK(fs::exists(dir / name));

    const TagSet tags;
    auto pairs = load_parallel_corpus((dir / "src_L0.conllu").string(),
                                      (dir / "tgt_L0.txt").string(), tags);
    CHECK(pairs.size() == 12);

    SUBCASE("rerunning reproduces byte-identical data files") {
        const std::string before = read_text_file((dir / "src_L0.conllu").string());
        cmd_synth(config);
        CHECK(read_text_file((dir / "src_L0.conllu").string()) == before);
    }
}

TEST_CASE("align, project, calibrate, train, tag and eval commands chain together") {
    const fs::path data = fresh_dir("cli_data");
    const fs::path work = fresh_dir("cli_work");
    RunConfig config = tiny_pipeline_config(data, work);
    cmd_synth(config);

    config.align_source = (data / "src_L0.conllu").string();
    config.align_target = (data / "tgt_L0.txt").string();
    config.align_out_dir = (work / "align").string();
    cmd_align(config);
    CHECK(fs::exists(work / "align" / "alignments.align"));
    CHECK(fs::exists(work / "align" / "ttable_forward.tsv"));
    CHECK(fs::exists(work / "align" / "loglik_forward.tsv"));

    config.project_source = config.align_source;
    config.project_target = config.align_target;
    config.project_alignments = (work / "align" / "alignments.align").string();
    config.project_out_prefix = (work / "proj_L0").string();
    config.project_language = "L0";
    cmd_project(config);
    CHECK(fs::exists(work / "proj_L0_all.conllu"));
    CHECK(fs::exists(work / "proj_L0_selected.meta.tsv"));

    // calibrate over a manifest pointing at the projected corpus twice
    {
        const std::string all_conllu = read_text_file((work / "proj_L0_all.conllu").string());
        const std::string all_meta = read_text_file((work / "proj_L0_all.meta.tsv").string());
        write_text_file((work / "rend_a.conllu").string(), all_conllu);
        write_text_file((work / "rend_a.meta.tsv").string(), all_meta);
        // second rendering under another language name
        std::string meta_b = all_meta;
        std::string::size_type pos = 0;
        while ((pos = meta_b.find("\tL0\n", pos)) != std::string::npos)
            meta_b.replace(pos, 4, "\tLb\n");
        write_text_file((work / "rend_b.conllu").string(), all_conllu);
        write_text_file((work / "rend_b.meta.tsv").string(), meta_b);
        std::vector<GroupRef> groups;
        for (std::size_t g = 1; g <= 3; ++g)
            groups.push_back({"g" + std::to_string(g),
                              {{"rend_a.conllu", g}, {"rend_b.conllu", g}}});
        write_text_file((work / "groups.tsv").string(), write_group_manifest(groups));
    }
    config.calibrate_manifest = (work / "groups.tsv").string();
    config.calibrate_out_prefix = (work / "calibrated").string();
    cmd_calibrate(config);
    CHECK(fs::exists(work / "calibrated.conllu"));

    config.train_corpus = (work / "proj_L0_selected.conllu").string();
    config.train_model_out = (work / "model.json").string();
    cmd_train(config);
    CHECK(fs::exists(work / "model.json"));
    CHECK(fs::exists(work / "model.json.loss.tsv"));

    config.tag_model = config.train_model_out;
    config.tag_input = (data / "test.txt").string();
    config.tag_output = (work / "pred.conllu").string();
    cmd_tag(config);
    CHECK(fs::exists(work / "pred.conllu"));

    config.eval_pred = config.tag_output;
    config.eval_gold = (data / "test.conllu").string();
    config.eval_report_prefix = (work / "report").string();
    config.eval_model = config.train_model_out;
    auto report = cmd_eval(config);
    CHECK(report.token_count > 0);
    CHECK(fs::exists(work / "report.tsv"));
    CHECK(fs::exists(work / "report.txt"));

    SUBCASE("missing inputs raise IoError") {
        RunConfig broken = config;
        broken.eval_pred = (work / "nope.conllu").string();
        CHECK_THROWS_AS(cmd_eval(broken), IoError);
    }
    SUBCASE("missing config keys raise ConfigError") {
        RunConfig broken = config;
        broken.eval_gold.clear();
        CHECK_THROWS_AS(cmd_eval(broken), ConfigError);
    }
}

TEST_CASE("the end-to-end pipeline runs on a small noiseless corpus") {
    const fs::path data = fresh_dir("pipe_data");
    const fs::path out = fresh_dir("pipe_out");
    RunConfig config = tiny_pipeline_config(data, out);
    cmd_synth(config);
    auto report = cmd_pipeline(config);
    CHECK(report.token_count > 0);
    CHECK(report.token_accuracy > 0.9);
    for (const char* name : {"proj_L0.conllu", "calibrated.conllu", "train.conllu",
                             "model.json", "pred.conllu", "report.tsv", "run_pipeline.meta"})
        CHECK(fs::exists(out / name));

    SUBCASE("single-source mode skips calibration") {
        const fs::path out2 = fresh_dir("pipe_out_single");
        RunConfig single = config;
        single.multisource_enabled = false;
        single.pipeline_out_dir = out2.string();
        auto r2 = cmd_pipeline(single);
        CHECK(r2.token_count == report.token_count);
        CHECK_FALSE(fs::exists(out2 / "calibrated.conllu"));
    }
}
