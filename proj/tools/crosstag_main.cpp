#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "crosstag/pipeline.hpp"

namespace {

constexpr const char* kUsage = R"(crosstag <subcommand> --config <path> [--key value ...]

Subcommands:
  synth      generate a synthetic parallel corpus with gold alignments and tags
  align      train EM translation tables both directions, symmetrize, filter by alpha
  project    project source tags onto aligned target tokens, apply type constraints, select
  calibrate  multi-source voting over a group manifest
  train      train the BiLSTM tagger on a NULL-masked projected corpus
  tag        tag plain or CoNLL-U input with a trained model
  eval       score predictions against gold CoNLL-U
  pipeline   run align -> project -> calibrate -> train -> tag -> eval end to end

Options:
  --config <path>   key=value configuration file (section-prefixed keys)
  --<key> <value>   override any configuration key, e.g. --aligner.alpha 0.2
  --help            show this message

Exit codes: 0 success, 2 config error, 3 I/O error, 4 stage contract violation.
)";

int run(int argc, char** argv) {
    using namespace crosstag;
    if (argc < 2) {
        std::cerr << kUsage;
        return 2;
    }
    const std::string command = argv[1];
    if (command == "--help" || command == "-h" || command == "help") {
        std::cout << kUsage;
        return 0;
    }

    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
    for (int i = 2; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--help" || arg == "-h") {
            std::cout << kUsage;
            return 0;
        }
        if (arg.rfind("--", 0) != 0) {
            std::cerr << "error: unexpected argument '" << arg << "'\n";
            return 2;
        }
        if (i + 1 >= argc) {
            std::cerr << "error: option '" << arg << "' needs a value\n";
            return 2;
        }
        const std::string key = arg.substr(2);
        const std::string value = argv[++i];
        if (key == "config")
            config_path = value;
        else
            overrides.emplace_back(key, value);
    }

    RunConfig config;
    if (!config_path.empty())
        config = parse_config_file(config_path);
    for (const auto& [key, value] : overrides)
        config.set(key, value);

    if (command == "synth") {
        cmd_synth(config);
    } else if (command == "align") {
        cmd_align(config);
    } else if (command == "project") {
        cmd_project(config);
    } else if (command == "calibrate") {
        cmd_calibrate(config);
    } else if (command == "train") {
        cmd_train(config);
    } else if (command == "tag") {
        cmd_tag(config);
    } else if (command == "eval") {
        const EvalReport report = cmd_eval(config);
        std::printf("accuracy %.4f  macro_f1 %.4f  tokens %llu\n", report.token_accuracy,
                    report.macro_f1, static_cast<unsigned long long>(report.token_count));
    } else if (command == "pipeline") {
        const EvalReport report = cmd_pipeline(config);
        std::printf("accuracy %.4f  macro_f1 %.4f  tokens %llu\n", report.token_accuracy,
                    report.macro_f1, static_cast<unsigned long long>(report.token_count));
    } else {
        std::cerr << "error: unknown subcommand '" << command << "'\n" << kUsage;
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const crosstag::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const crosstag::ParseError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 3;
    } catch (const crosstag::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
}
