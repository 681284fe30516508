#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "viewfit/adherence.hpp"
#include "viewfit/cluster.hpp"
#include "viewfit/errors.hpp"
#include "viewfit/features.hpp"
#include "viewfit/models.hpp"
#include "viewfit/segmented.hpp"

namespace viewfit {

using nlohmann::json;

struct FitRecord {
    std::string id;
    SegmentedFit fit;
    double rmse = 0.0;  // mirror of fit.rmse for gate_by_rmse
};

inline json to_json(const FitRecord& record) {
    json j;
    j["id"] = record.id;
    j["breakpoints"] = record.fit.breakpoints;
    j["slopes"] = record.fit.segment_slopes();
    j["intercept"] = record.fit.intercept;
    j["rmse"] = record.fit.rmse;
    j["converged"] = record.fit.converged;
    j["n_segments"] = record.fit.n_segments();
    return j;
}

inline FitRecord fit_record_from_json(const json& j) {
    FitRecord record;
    record.id = j.at("id").get<std::string>();
    record.fit.breakpoints = j.at("breakpoints").get<std::vector<double>>();
    const auto slopes = j.at("slopes").get<std::vector<double>>();
    if (slopes.size() != record.fit.breakpoints.size() + 1)
        throw ParseError("fit record " + record.id + ": slopes/breakpoints mismatch");
    record.fit.base_slope = slopes.empty() ? 0.0 : slopes[0];
    for (std::size_t k = 1; k < slopes.size(); ++k)
        record.fit.slope_diffs.push_back(slopes[k] - slopes[k - 1]);
    record.fit.intercept = j.at("intercept").get<double>();
    record.fit.rmse = j.at("rmse").get<double>();
    record.fit.converged = j.at("converged").get<bool>();
    record.rmse = record.fit.rmse;
    return record;
}

inline void save_fits(const std::vector<FitRecord>& records, const std::filesystem::path& path) {
    json arr = json::array();
    for (const auto& r : records) arr.push_back(to_json(r));
    std::ofstream out(path);
    out << arr.dump(2) << '\n';
}

inline std::vector<FitRecord> load_fits(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingUpstreamArtifact(path.string());
    json arr;
    in >> arr;
    std::vector<FitRecord> records;
    for (const auto& j : arr) records.push_back(fit_record_from_json(j));
    return records;
}

// Features CSV: id,n_segments,a1..aN,l1..lN (one segment count per file).
inline void save_features_csv(const std::vector<SegmentFeatures>& features,
                              const std::filesystem::path& path) {
    std::ofstream out(path);
    out << std::setprecision(17);
    for (const auto& f : features) {
        out << f.id << ',' << f.n_segments();
        for (double a : f.angles) out << ',' << a;
        for (double l : f.lengths) out << ',' << l;
        out << '\n';
    }
}

inline std::vector<SegmentFeatures> load_features_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingUpstreamArtifact(path.string());
    std::vector<SegmentFeatures> features;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string token;
        SegmentFeatures f;
        std::getline(row, token, ',');
        f.id = token;
        std::getline(row, token, ',');
        const auto n = static_cast<std::size_t>(std::stoul(token));
        for (std::size_t i = 0; i < n; ++i) {
            std::getline(row, token, ',');
            f.angles.push_back(std::stod(token));
        }
        for (std::size_t i = 0; i < n; ++i) {
            std::getline(row, token, ',');
            f.lengths.push_back(std::stod(token));
        }
        features.push_back(std::move(f));
    }
    return features;
}

inline json to_json(const CorrelationReport& report) {
    json j;
    j["variables"] = report.variables;
    j["rho"] = report.rho;
    return j;
}

inline json to_json(const GaussianKde& kde) {
    json j;
    j["samples"] = kde.samples();
    j["bandwidth"] = kde.bandwidth();
    return j;
}

inline GaussianKde kde_from_json(const json& j) {
    return GaussianKde(j.at("samples").get<std::vector<double>>(),
                       j.at("bandwidth").get<double>());
}

inline json to_json(const BinSpec& spec) {
    return json{{"lo", spec.lo}, {"hi", spec.hi}, {"n", spec.n}};
}

inline BinSpec bin_spec_from_json(const json& j) {
    return BinSpec{j.at("lo").get<double>(), j.at("hi").get<double>(),
                   j.at("n").get<std::size_t>()};
}

inline json to_json(const BinnedTarget& t) {
    json j;
    j["spec"] = to_json(t.spec);
    j["bin_values"] = t.bin_values;
    j["bin_bandwidth"] = t.bin_bandwidth;
    return j;
}

inline BinnedTarget binned_target_from_json(const json& j) {
    BinnedTarget t;
    t.spec = bin_spec_from_json(j.at("spec"));
    t.bin_values = j.at("bin_values").get<std::vector<std::vector<double>>>();
    t.bin_bandwidth = j.at("bin_bandwidth").get<std::vector<double>>();
    return t;
}

inline json to_json(const ConditionalTable& t) {
    json j;
    j["n_cells"] = t.n_cells;
    j["rows"] = t.rows;
    j["marginal"] = t.marginal;
    j["target"] = to_json(t.target);
    return j;
}

inline ConditionalTable conditional_table_from_json(const json& j) {
    ConditionalTable t;
    t.n_cells = j.at("n_cells").get<std::size_t>();
    t.rows = j.at("rows").get<std::vector<std::vector<double>>>();
    t.marginal = j.at("marginal").get<std::vector<double>>();
    t.target = binned_target_from_json(j.at("target"));
    return t;
}

inline json to_json(const InitialJoint& joint) {
    json j;
    j["alpha_spec"] = to_json(joint.alpha_spec);
    j["l_spec"] = to_json(joint.l_spec);
    j["cell_mass"] = joint.cell_mass;
    json cells = json::array();
    for (const auto& pairs : joint.cell_pairs) {
        json cell = json::array();
        for (const auto& [a, l] : pairs) cell.push_back(json::array({a, l}));
        cells.push_back(cell);
    }
    j["cell_pairs"] = cells;
    j["alpha_bandwidth"] = joint.alpha_bandwidth;
    j["l_bandwidth"] = joint.l_bandwidth;
    return j;
}

inline InitialJoint initial_joint_from_json(const json& j) {
    InitialJoint joint;
    joint.alpha_spec = bin_spec_from_json(j.at("alpha_spec"));
    joint.l_spec = bin_spec_from_json(j.at("l_spec"));
    joint.cell_mass = j.at("cell_mass").get<std::vector<double>>();
    for (const auto& cell : j.at("cell_pairs")) {
        std::vector<std::pair<double, double>> pairs;
        for (const auto& p : cell) pairs.emplace_back(p[0].get<double>(), p[1].get<double>());
        joint.cell_pairs.push_back(std::move(pairs));
    }
    joint.alpha_bandwidth = j.at("alpha_bandwidth").get<double>();
    joint.l_bandwidth = j.at("l_bandwidth").get<double>();
    return joint;
}

inline json to_json(const GenerativeModel& model) {
    json j;
    j["kind"] = to_string(model.kind);
    j["n_segments"] = model.n_segments;
    json ak = json::array(), lk = json::array();
    for (const auto& k : model.alpha_kdes) ak.push_back(to_json(k));
    for (const auto& k : model.l_kdes) lk.push_back(to_json(k));
    j["alpha_kdes"] = ak;
    j["l_kdes"] = lk;
    json at = json::array(), lt = json::array();
    for (const auto& t : model.alpha_tables) at.push_back(to_json(t));
    for (const auto& t : model.l_tables) lt.push_back(to_json(t));
    j["alpha_tables"] = at;
    j["l_tables"] = lt;
    if (model.kind == ModelKind::Markov1Multi) j["initial_joint"] = to_json(model.initial_joint);
    return j;
}

inline ModelKind model_kind_from_string(const std::string& s) {
    if (s == "null") return ModelKind::Null;
    if (s == "independent") return ModelKind::Independent;
    if (s == "markov1_uni") return ModelKind::Markov1Uni;
    if (s == "markov1_multi") return ModelKind::Markov1Multi;
    throw ParseError("unknown model kind: " + s);
}

inline GenerativeModel model_from_json(const json& j) {
    GenerativeModel model;
    model.kind = model_kind_from_string(j.at("kind").get<std::string>());
    model.n_segments = j.at("n_segments").get<std::size_t>();
    for (const auto& k : j.at("alpha_kdes")) model.alpha_kdes.push_back(kde_from_json(k));
    for (const auto& k : j.at("l_kdes")) model.l_kdes.push_back(kde_from_json(k));
    for (const auto& t : j.at("alpha_tables"))
        model.alpha_tables.push_back(conditional_table_from_json(t));
    for (const auto& t : j.at("l_tables"))
        model.l_tables.push_back(conditional_table_from_json(t));
    if (j.contains("initial_joint"))
        model.initial_joint = initial_joint_from_json(j.at("initial_joint"));
    return model;
}

inline json to_json(const Histogram2D& h) {
    return json{{"x_edges", h.x_edges}, {"y_edges", h.y_edges}, {"masses", h.masses}};
}

inline json to_json(const AdherenceScore& s) {
    return json{{"kind", to_string(s.kind)}, {"epsilon", s.epsilon},
                {"grid", json::array({s.grid_x, s.grid_y})},
                {"n_real", s.n_real}, {"n_synth", s.n_synth}};
}

// FNV-1a over file bytes; used by the manifest so reruns can be compared.
inline std::uint64_t hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace viewfit
