#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mtlre/commands.hpp"
#include "mtlre/log.hpp"

namespace {

struct CommonArgs {
    std::string config;
    std::string checkpoint;
    std::string corpus;
    std::string example_id;
    std::string out;
    std::optional<std::uint64_t> seed;
};

void add_seed_flag(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&args](std::uint64_t s) { args.seed = s; },
        "Override the config seed");
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* level = std::getenv("MTLRE_LOG")) {
        try {
            mtlre::set_log_level(mtlre::parse_log_level(level));
        } catch (const mtlre::Error& e) {
            std::cerr << "error (validation): " << e.what() << "\n";
            return 2;
        }
    }

    CLI::App app{"Adversarial multi-task relation extraction toolkit"};
    app.require_subcommand(1);
    CommonArgs args;

    CLI::App* gen = app.add_subcommand(
        "gen-synthetic", "Generate synthetic task corpora from a generator config");
    gen->add_option("--config", args.config, "Generator config file")->required();
    gen->add_option("--out", args.out, "Output directory (overrides config)");
    add_seed_flag(gen, args);

    CLI::App* train = app.add_subcommand("train", "Train a model from a run config");
    train->add_option("--config", args.config, "Run config file")->required();
    train->add_option("--out", args.out, "Output directory (overrides config)");
    add_seed_flag(train, args);

    CLI::App* evaluate =
        app.add_subcommand("evaluate", "Score a trained model on the configured corpora");
    evaluate->add_option("--config", args.config, "Run config file")->required();
    evaluate->add_option("--checkpoint", args.checkpoint,
                         "Trained model directory or manifest path")
        ->required();
    evaluate->add_option("--out", args.out, "Output directory (overrides config)");

    CLI::App* cv = app.add_subcommand(
        "cross-validate", "Document-level cross-validation for every cv-split task");
    cv->add_option("--config", args.config, "Run config file")->required();
    cv->add_option("--out", args.out, "Output directory (overrides config)");
    add_seed_flag(cv, args);

    CLI::App* predict =
        app.add_subcommand("predict", "Label a corpus with a trained model");
    predict->add_option("--checkpoint", args.checkpoint,
                        "Trained model directory or manifest path")
        ->required();
    predict->add_option("--corpus", args.corpus, "Corpus to label")->required();
    predict->add_option("--out", args.out, "Output directory (default: out)");

    CLI::App* attn = app.add_subcommand(
        "export-attention", "Write one example's attention weights as CSV");
    attn->add_option("--checkpoint", args.checkpoint,
                     "Trained model directory or manifest path")
        ->required();
    attn->add_option("--corpus", args.corpus, "Corpus holding the example")->required();
    attn->add_option("--example", args.example_id, "Example id to export")->required();
    attn->add_option("--out", args.out, "Output directory (default: out)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            mtlre::cmd_gen_synthetic(args.config, args.out, args.seed);
        } else if (train->parsed()) {
            mtlre::cmd_train(args.config, args.out, args.seed);
        } else if (evaluate->parsed()) {
            mtlre::cmd_evaluate(args.config, args.checkpoint, args.out);
        } else if (cv->parsed()) {
            mtlre::cmd_cross_validate(args.config, args.out, args.seed);
        } else if (predict->parsed()) {
            mtlre::cmd_predict(args.checkpoint, args.corpus, args.out);
        } else if (attn->parsed()) {
            mtlre::cmd_export_attention(args.checkpoint, args.corpus, args.example_id,
                                        args.out);
        }
    } catch (const mtlre::ValidationError& e) {
        std::cerr << "error (validation): " << e.what() << "\n";
        return 2;
    } catch (const mtlre::ParseError& e) {
        std::cerr << "error (parse): " << e.what() << "\n";
        return 3;
    } catch (const mtlre::IoError& e) {
        std::cerr << "error (io): " << e.what() << "\n";
        return 4;
    } catch (const mtlre::LookupError& e) {
        std::cerr << "error (lookup): " << e.what() << "\n";
        return 5;
    } catch (const mtlre::NumericError& e) {
        std::cerr << "error (numeric): " << e.what() << "\n";
        return 6;
    } catch (const std::exception& e) {
        std::cerr << "error (internal): " << e.what() << "\n";
        return 1;
    }
    return 0;
}
