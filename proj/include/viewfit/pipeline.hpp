#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "viewfit/adherence.hpp"
#include "viewfit/artifacts.hpp"
#include "viewfit/cluster.hpp"
#include "viewfit/corpus_io.hpp"
#include "viewfit/features.hpp"
#include "viewfit/models.hpp"
#include "viewfit/profile.hpp"
#include "viewfit/segmented.hpp"

namespace viewfit {

struct PipelineConfig {
    std::filesystem::path input;
    std::string format = "auto";  // csv | json | auto (by extension)
    double rmse_threshold = 0.01;
    FitConfig fit;
    int k = 3;
    double min_cluster_fraction = 0.01;  // clusters below this are unassigned
    std::size_t bins_alpha = 10;
    std::size_t bins_l = 10;
    std::size_t joint_bins_alpha = 8;
    std::size_t joint_bins_l = 8;
    std::size_t grid = 20;
    std::size_t samples_per_model = 10000;
    std::size_t angle_hist_bins = 18;
    std::uint64_t seed = 0;
    std::filesystem::path out = "out";
    bool control = false;
};

inline std::string config_canonical(const PipelineConfig& c) {
    std::ostringstream s;
    s << std::setprecision(17);
    s << "input=" << c.input.string() << ";format=" << c.format
      << ";rmse_threshold=" << c.rmse_threshold
      << ";max_breakpoints=" << c.fit.max_breakpoints
      << ";convergence_tol=" << c.fit.convergence_tol
      << ";max_iterations=" << c.fit.max_iterations
      << ";beta_zero_tol=" << c.fit.beta_zero_tol << ";min_gap=" << c.fit.min_gap
      << ";placement=" << (c.fit.initial_placement == FitConfig::Placement::Quantile ? "quantile" : "uniform")
      << ";k=" << c.k << ";min_cluster_fraction=" << c.min_cluster_fraction
      << ";bins_alpha=" << c.bins_alpha << ";bins_l=" << c.bins_l
      << ";joint_bins_alpha=" << c.joint_bins_alpha << ";joint_bins_l=" << c.joint_bins_l
      << ";grid=" << c.grid << ";samples=" << c.samples_per_model
      << ";angle_hist_bins=" << c.angle_hist_bins << ";seed=" << c.seed
      << ";control=" << (c.control ? 1 : 0);
    return s.str();
}

inline std::uint64_t config_hash(const PipelineConfig& c) {
    const std::string s = config_canonical(c);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char ch : s) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace detail {

inline void write_json(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    out << j.dump(2) << '\n';
}

inline json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingUpstreamArtifact(path.string());
    json j;
    in >> j;
    return j;
}

inline std::vector<FitRecord> fit_corpus(const std::vector<NormalizedProfile>& profiles,
                                         const FitConfig& config) {
    std::vector<FitRecord> records;
    records.reserve(profiles.size());
    for (const auto& p : profiles) {
        try {
            FitRecord r;
            r.id = p.id;
            r.fit = fit_auto(p, config);
            r.fit.rmse = compute_rmse(r.fit, p);
            r.rmse = r.fit.rmse;
            records.push_back(std::move(r));
        } catch (const SingularDesign&) {
            // dropped from the fit set; recorded upstream as a skip
        }
    }
    return records;
}

// Largest-remainder apportionment of `total` over `weights`.
inline std::vector<std::size_t> proportional_counts(const std::vector<std::size_t>& weights,
                                                    std::size_t total) {
    double wsum = 0.0;
    for (auto w : weights) wsum += static_cast<double>(w);
    std::vector<std::size_t> counts(weights.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double exact = static_cast<double>(total) * static_cast<double>(weights[i]) / wsum;
        counts[i] = static_cast<std::size_t>(exact);
        assigned += counts[i];
        remainders.push_back({exact - std::floor(exact), i});
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < total && i < remainders.size(); ++i, ++assigned)
        ++counts[remainders[i].second];
    return counts;
}

}  // namespace detail

// Stage 1: ingest + segmented fits (and the optional uniform-views control).
inline void stage_fit(const PipelineConfig& config) {
    std::filesystem::create_directories(config.out);
    CorpusFormat fmt = config.format == "json"  ? CorpusFormat::Json
                       : config.format == "csv" ? CorpusFormat::Csv
                                                : detect_format(config.input);
    const auto corpus = load_corpus(config.input, fmt);

    std::vector<std::pair<std::string, std::string>> skipped;
    const auto profiles = normalize_corpus(corpus, &skipped);
    auto records = detail::fit_corpus(profiles, config.fit);
    save_fits(records, config.out / "fits.json");

    json skipped_json = json::array();
    for (const auto& [id, reason] : skipped)
        skipped_json.push_back({{"id", id}, {"reason", reason}});
    detail::write_json(skipped_json, config.out / "skipped.json");

    if (config.control) {
        ControlConfig ctrl;
        ctrl.h_max = std::max<std::int64_t>(1, max_monthly_views(corpus));
        ctrl.seed = derive_seed(config.seed, "control");
        const auto control = generate_control_corpus(corpus, ctrl);
        const auto control_profiles = normalize_corpus(control);
        save_fits(detail::fit_corpus(control_profiles, config.fit),
                  config.out / "control_fits.json");
    }
}

// Stage 2: RMSE gate, per-segment-count features, statistics.
inline void stage_features(const PipelineConfig& config) {
    const auto records = load_fits(config.out / "fits.json");
    auto [passed, failed] = gate_by_rmse(records, config.rmse_threshold);

    std::map<std::size_t, std::vector<SegmentFeatures>> by_n;
    for (const auto& r : passed)
        by_n[r.fit.n_segments()].push_back(extract_features(r.fit, r.id));

    json summary;
    summary["n_fits"] = records.size();
    summary["n_passed"] = passed.size();
    summary["n_failed"] = failed.size();
    summary["pass_rate"] =
        records.empty() ? 0.0
                        : static_cast<double>(passed.size()) / static_cast<double>(records.size());
    json proportions;
    std::vector<SegmentFeatures> all_passed;
    for (const auto& [n, group] : by_n) {
        proportions[std::to_string(n)] =
            static_cast<double>(group.size()) / static_cast<double>(passed.size());
        save_features_csv(group, config.out / ("features_" + std::to_string(n) + ".csv"));
        all_passed.insert(all_passed.end(), group.begin(), group.end());
        if (group.size() >= 2) {
            try {
                detail::write_json(to_json(correlations(group, n)),
                                   config.out / ("correlations_" + std::to_string(n) + ".json"));
            } catch (const ZeroVariance&) {
                // degenerate group; no correlation report
            }
        }
    }
    summary["segment_count_proportions"] = proportions;
    if (!all_passed.empty())
        summary["angle_histogram"] = angle_histogram(all_passed, config.angle_hist_bins);

    if (std::filesystem::exists(config.out / "control_fits.json")) {
        const auto ctrl = load_fits(config.out / "control_fits.json");
        auto [cpass, cfail] = gate_by_rmse(ctrl, config.rmse_threshold);
        json control;
        control["n_fits"] = ctrl.size();
        control["n_passed"] = cpass.size();
        control["pass_rate"] = ctrl.empty() ? 0.0
                                            : static_cast<double>(cpass.size()) /
                                                  static_cast<double>(ctrl.size());
        std::vector<SegmentFeatures> ctrl_features;
        for (const auto& r : cpass) ctrl_features.push_back(extract_features(r.fit, r.id));
        if (!ctrl_features.empty())
            control["angle_histogram"] = angle_histogram(ctrl_features, config.angle_hist_bins);
        summary["control"] = control;
    }
    detail::write_json(summary, config.out / "summary.json");
}

// Stage 3: clustering, PCA, prototypes, average curves, per segment count.
inline void stage_cluster(const PipelineConfig& config) {
    if (!std::filesystem::exists(config.out / "summary.json"))
        throw MissingUpstreamArtifact((config.out / "summary.json").string());

    for (std::size_t n = 2; n <= static_cast<std::size_t>(config.fit.max_breakpoints) + 1; ++n) {
        const auto path = config.out / ("features_" + std::to_string(n) + ".csv");
        if (!std::filesystem::exists(path)) continue;
        const auto features = load_features_csv(path);
        if (features.size() < 2) continue;

        const auto points = feature_matrix(features);
        const auto dendro = single_linkage(points);
        const auto min_size = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil(config.min_cluster_fraction *
                                                  static_cast<double>(features.size()))));
        const int k = std::min<int>(config.k, static_cast<int>(features.size()));
        const auto assignment = cut(dendro, k, min_size);

        std::ofstream labels(config.out / ("clusters_" + std::to_string(n) + ".csv"));
        for (std::size_t i = 0; i < features.size(); ++i)
            labels << features[i].id << ',' << assignment.labels[i] << '\n';

        const auto n_comp = std::min<std::size_t>(3, points[0].size());
        json plot;
        try {
            const auto proj = pca(points, n_comp);
            std::ofstream scores(config.out / ("pca_" + std::to_string(n) + ".csv"));
            scores << std::setprecision(17);
            for (std::size_t i = 0; i < features.size(); ++i) {
                scores << features[i].id;
                for (std::size_t c = 0; c < n_comp; ++c)
                    scores << ',' << proj.scores(static_cast<Eigen::Index>(i),
                                                 static_cast<Eigen::Index>(c));
                scores << '\n';
            }
            plot["explained_variance_ratio"] = proj.explained_variance_ratio;
            json scatter = json::array();
            for (std::size_t i = 0; i < features.size(); ++i)
                scatter.push_back({{"id", features[i].id},
                                   {"label", assignment.labels[i]},
                                   {"pc1", proj.scores(static_cast<Eigen::Index>(i), 0)},
                                   {"pc2", n_comp > 1
                                               ? proj.scores(static_cast<Eigen::Index>(i), 1)
                                               : 0.0}});
            plot["scatter"] = scatter;
        } catch (const DegenerateCovariance&) {
            plot["degenerate"] = true;
        }
        detail::write_json(plot, config.out / ("cluster_plot_" + std::to_string(n) + ".json"));

        std::vector<std::string> patterns;
        for (const auto& f : features) patterns.push_back(sign_pattern(f));
        const auto tables = prototype_frequencies(assignment, patterns);

        json proto = json::array();
        for (std::size_t c = 0; c < tables.size(); ++c) {
            json entry;
            entry["cluster"] = c;
            entry["modal"] = tables[c].modal;
            entry["frequencies"] = tables[c].frequencies;

            // average curve of the modal-prototype members of this cluster
            std::vector<SegmentFeatures> group;
            for (std::size_t i = 0; i < features.size(); ++i)
                if (assignment.labels[i] == static_cast<int>(c) &&
                    patterns[i] == tables[c].modal)
                    group.push_back(features[i]);
            if (!group.empty()) {
                json poly = json::array();
                for (const auto& [x, y] : average_curve(group))
                    poly.push_back(json::array({x, y}));
                entry["average_curve"] = poly;
                entry["size"] = group.size();
            }
            proto.push_back(entry);
        }
        detail::write_json(proto, config.out / ("prototypes_" + std::to_string(n) + ".json"));
    }
}

// Stage 4: fit the four generative models per cluster within each group.
inline void stage_model(const PipelineConfig& config) {
    bool any = false;
    for (std::size_t n = 1; n <= static_cast<std::size_t>(config.fit.max_breakpoints) + 1; ++n) {
        const auto fpath = config.out / ("features_" + std::to_string(n) + ".csv");
        if (!std::filesystem::exists(fpath)) continue;
        any = true;
        const auto features = load_features_csv(fpath);
        if (features.empty()) continue;

        // cluster labels when stage_cluster produced them; otherwise one group
        std::map<std::string, int> label_of;
        const auto cpath = config.out / ("clusters_" + std::to_string(n) + ".csv");
        if (std::filesystem::exists(cpath)) {
            std::ifstream in(cpath);
            std::string line;
            while (std::getline(in, line)) {
                const auto comma = line.rfind(',');
                if (comma != std::string::npos)
                    label_of[line.substr(0, comma)] = std::stoi(line.substr(comma + 1));
            }
        }
        std::map<int, std::vector<SegmentFeatures>> groups;
        for (const auto& f : features) {
            auto it = label_of.find(f.id);
            const int label = it == label_of.end() ? 0 : it->second;
            if (label >= 0) groups[label].push_back(f);
        }
        if (groups.empty()) groups[0] = features;

        json out = json::array();
        for (const auto& [label, group] : groups) {
            if (group.empty()) continue;
            json entry;
            entry["cluster"] = label;
            entry["size"] = group.size();
            json models;
            models["null"] = to_json(fit_null(n));
            models["independent"] = to_json(fit_independent(group));
            models["markov1_uni"] = to_json(fit_markov1_uni(group, config.bins_alpha));
            models["markov1_multi"] =
                to_json(fit_markov1_multi(group, config.joint_bins_alpha, config.joint_bins_l));
            entry["models"] = models;
            out.push_back(entry);
        }
        detail::write_json(out, config.out / ("models_" + std::to_string(n) + ".json"));
    }
    if (!any) throw MissingUpstreamArtifact((config.out / "features_*.csv").string());
}

// Stage 5: per-cluster sampling, pooled joint-PCA histograms, epsilon ranking.
inline void stage_score(const PipelineConfig& config) {
    bool any = false;
    for (std::size_t n = 1; n <= static_cast<std::size_t>(config.fit.max_breakpoints) + 1; ++n) {
        const auto mpath = config.out / ("models_" + std::to_string(n) + ".json");
        if (!std::filesystem::exists(mpath)) continue;
        any = true;
        const auto features =
            load_features_csv(config.out / ("features_" + std::to_string(n) + ".csv"));
        if (features.size() < 2) continue;
        const auto model_groups = detail::read_json(mpath);
        if (model_groups.empty()) continue;

        std::vector<std::size_t> sizes;
        for (const auto& entry : model_groups)
            sizes.push_back(entry.at("size").get<std::size_t>());
        const auto counts = detail::proportional_counts(sizes, config.samples_per_model);

        json report;
        json scores = json::array();
        std::vector<std::pair<double, json>> ranked;
        for (const std::string kind :
             {"null", "independent", "markov1_uni", "markov1_multi"}) {
            std::vector<SegmentFeatures> synth;
            for (std::size_t g = 0; g < sizes.size(); ++g) {
                if (counts[g] == 0) continue;
                const auto model = model_from_json(model_groups[g].at("models").at(kind));
                auto part = sample(model, counts[g],
                                   derive_seed(config.seed, "score_" + std::to_string(n) + "_" +
                                                                kind + "_" + std::to_string(g)));
                synth.insert(synth.end(), part.begin(), part.end());
            }
            const auto joint = joint_pca(features, synth);
            double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
            auto extend = [&](const std::vector<std::vector<double>>& pts) {
                for (const auto& p : pts) {
                    xlo = std::min(xlo, p[0]);
                    xhi = std::max(xhi, p[0]);
                    const double y = p.size() > 1 ? p[1] : 0.0;
                    ylo = std::min(ylo, y);
                    yhi = std::max(yhi, y);
                }
            };
            extend(joint.real_scores);
            extend(joint.synth_scores);
            auto pad = [](std::vector<std::vector<double>> pts) {
                for (auto& p : pts)
                    if (p.size() < 2) p.push_back(0.0);
                return pts;
            };
            const auto xe = equal_width_edges(xlo, xhi, config.grid);
            const auto ye = equal_width_edges(ylo, yhi, config.grid);
            const auto pi_o = histogram2d(pad(joint.real_scores), xe, ye);
            const auto pi_s = histogram2d(pad(joint.synth_scores), xe, ye);

            Histogram2D diff = pi_o;
            for (std::size_t i = 0; i < diff.masses.size(); ++i)
                diff.masses[i] = std::abs(pi_o.masses[i] - pi_s.masses[i]);

            json entry;
            entry["kind"] = kind;
            entry["epsilon"] = epsilon(pi_o, pi_s);
            entry["n_real"] = features.size();
            entry["n_synth"] = config.samples_per_model;
            entry["grid"] = json::array({config.grid, config.grid});
            entry["real_histogram"] = to_json(pi_o);
            entry["synthetic_histogram"] = to_json(pi_s);
            entry["abs_difference"] = to_json(diff);
            ranked.push_back({entry["epsilon"].get<double>(), entry});
        }
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto& [eps, entry] : ranked) scores.push_back(entry);
        report["scores"] = scores;
        report["best"] = scores[0]["kind"];
        detail::write_json(report, config.out / ("adherence_" + std::to_string(n) + ".json"));
    }
    if (!any) throw MissingUpstreamArtifact((config.out / "models_*.json").string());
}

// Full pipeline: fit -> features -> cluster -> model -> score, plus manifest.
inline void run_pipeline(const PipelineConfig& config) {
    stage_fit(config);
    stage_features(config);
    stage_cluster(config);
    stage_model(config);
    stage_score(config);

    json manifest;
    manifest["config"] = config_canonical(config);
    manifest["config_hash"] = config_hash(config);
    manifest["seed"] = config.seed;
    json artifacts;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(config.out))
        if (entry.is_regular_file() && entry.path().filename() != "manifest.json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files)
        artifacts[f.filename().string()] = hash_file(f);
    manifest["artifacts"] = artifacts;
    detail::write_json(manifest, config.out / "manifest.json");
}

}  // namespace viewfit
