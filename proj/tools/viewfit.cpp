// Command-line front end for the view-profile analysis pipeline.
//
// Subcommands mirror the pipeline stages so any stage can be rerun from the
// previous stage's artifacts:
//   viewfit pipeline --input corpus.csv --out results/
//   viewfit fit | features | cluster | model | score

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "viewfit/pipeline.hpp"

namespace {

// Minimal TOML-style `key = value` file; values here override flags.
void apply_config_file(const std::string& path, viewfit::PipelineConfig& config) {
    std::ifstream in(path);
    if (!in) throw viewfit::ParseError("cannot open config file: " + path);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\"");
            const auto e = s.find_last_not_of(" \t\"");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) continue;

        if (key == "input") config.input = value;
        else if (key == "format") config.format = value;
        else if (key == "out") config.out = value;
        else if (key == "rmse_threshold") config.rmse_threshold = std::stod(value);
        else if (key == "max_breakpoints") config.fit.max_breakpoints = std::stoi(value);
        else if (key == "convergence_tol") config.fit.convergence_tol = std::stod(value);
        else if (key == "max_iterations") config.fit.max_iterations = std::stoi(value);
        else if (key == "beta_zero_tol") config.fit.beta_zero_tol = std::stod(value);
        else if (key == "min_gap") config.fit.min_gap = std::stod(value);
        else if (key == "k") config.k = std::stoi(value);
        else if (key == "min_cluster_fraction") config.min_cluster_fraction = std::stod(value);
        else if (key == "bins_alpha") config.bins_alpha = std::stoul(value);
        else if (key == "bins_l") config.bins_l = std::stoul(value);
        else if (key == "joint_bins_alpha") config.joint_bins_alpha = std::stoul(value);
        else if (key == "joint_bins_l") config.joint_bins_l = std::stoul(value);
        else if (key == "grid") config.grid = std::stoul(value);
        else if (key == "samples") config.samples_per_model = std::stoul(value);
        else if (key == "seed") config.seed = std::stoull(value);
        else if (key == "control") config.control = value == "true" || value == "1";
        else throw viewfit::ParseError("unknown config key: " + key);
    }
}

void add_common_options(CLI::App* cmd, viewfit::PipelineConfig& config,
                        std::string& config_file) {
    cmd->add_option("--input", config.input, "corpus file (CSV or JSON)");
    cmd->add_option("--format", config.format, "csv | json | auto")
        ->check(CLI::IsMember({"csv", "json", "auto"}));
    cmd->add_option("--out", config.out, "artifact directory");
    cmd->add_option("--rmse-threshold", config.rmse_threshold, "RMSE gate threshold");
    cmd->add_option("--max-breakpoints", config.fit.max_breakpoints,
                    "largest candidate breakpoint count");
    cmd->add_option("--k", config.k, "cluster count per segment group");
    cmd->add_option("--bins-alpha", config.bins_alpha, "angle bins for univariate tables");
    cmd->add_option("--bins-l", config.bins_l, "length bins for univariate tables");
    cmd->add_option("--joint-bins-alpha", config.joint_bins_alpha,
                    "angle bins for joint conditioning");
    cmd->add_option("--joint-bins-l", config.joint_bins_l,
                    "length bins for joint conditioning");
    cmd->add_option("--grid", config.grid, "2-D histogram grid size per axis");
    cmd->add_option("--samples", config.samples_per_model, "synthetic samples per model");
    cmd->add_option("--seed", config.seed, "master seed");
    cmd->add_flag("--control", config.control, "also run the uniform-views control corpus");
    cmd->add_option("--config", config_file, "key=value config file overriding flags");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Piecewise-linear analysis of cumulative view profiles"};
    app.require_subcommand(1);

    viewfit::PipelineConfig config;
    std::string config_file;

    auto* pipeline = app.add_subcommand("pipeline", "run every stage end to end");
    auto* fit = app.add_subcommand("fit", "ingest the corpus and fit segmented regressions");
    auto* features = app.add_subcommand("features", "gate fits and extract segment features");
    auto* cluster = app.add_subcommand("cluster", "cluster features and project with PCA");
    auto* model = app.add_subcommand("model", "fit the four generative models per cluster");
    auto* score = app.add_subcommand("score", "rank models by the histogram epsilon metric");
    for (auto* cmd : {pipeline, fit, features, cluster, model, score})
        add_common_options(cmd, config, config_file);

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_file.empty()) apply_config_file(config_file, config);
        if (pipeline->parsed()) viewfit::run_pipeline(config);
        if (fit->parsed()) viewfit::stage_fit(config);
        if (features->parsed()) viewfit::stage_features(config);
        if (cluster->parsed()) viewfit::stage_cluster(config);
        if (model->parsed()) viewfit::stage_model(config);
        if (score->parsed()) viewfit::stage_score(config);
    } catch (const viewfit::MissingUpstreamArtifact& e) {
        std::cerr << "error: " << e.what() << "\nrun the earlier stages first\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
