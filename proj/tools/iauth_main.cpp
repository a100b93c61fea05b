#include <CLI11.hpp>

#include <iostream>

#include "iauth/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"implicit behavioral verification pipeline"};
    app.require_subcommand(1);

    std::string config_path = "experiment.conf";
    std::string out_override;
    std::int64_t seed_override = -1;
    app.add_option("--config", config_path, "experiment config file")->capture_default_str();
    app.add_option("--out", out_override, "override output directory");
    app.add_option("--seed", seed_override, "override global seed");

    auto* synth = app.add_subcommand("synth", "generate synthetic user traces");
    auto* fit = app.add_subcommand("fit", "fit per-user behavioral models");
    auto* wedgec = app.add_subcommand("wedge", "generate the wedged attack suite");
    auto* train = app.add_subcommand("train", "train combiner weights and thresholds");
    auto* score = app.add_subcommand("score", "score one trace against one model");
    auto* evalc = app.add_subcommand("eval", "compute metrics over the experiment");

    std::string score_trace, score_model, score_out = "timeline";
    score->add_option("--trace", score_trace, "trace file to score")->required();
    score->add_option("--model", score_model, "model file")->required();
    score->add_option("--out-base", score_out, "output basename under <out>/score/")
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        iauth::RunConfig cfg = iauth::load_run_config(config_path);
        if (!out_override.empty()) cfg.out = out_override;
        if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);

        if (synth->parsed()) iauth::run_synth(cfg);
        if (fit->parsed()) iauth::run_fit(cfg);
        if (wedgec->parsed()) iauth::run_wedge(cfg);
        if (train->parsed()) iauth::run_train(cfg);
        if (score->parsed()) iauth::run_score(cfg, score_trace, score_model, score_out);
        if (evalc->parsed()) iauth::run_eval(cfg);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;   // validation error
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;   // runtime / data error
    }
    return 0;
}
