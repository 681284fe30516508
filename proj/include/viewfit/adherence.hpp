#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "viewfit/cluster.hpp"
#include "viewfit/errors.hpp"
#include "viewfit/features.hpp"
#include "viewfit/models.hpp"

namespace viewfit {

struct Histogram2D {
    std::vector<double> x_edges;  // strictly increasing
    std::vector<double> y_edges;
    std::vector<double> masses;  // row-major (x-cell major), sums to 1

    std::size_t nx() const { return x_edges.size() - 1; }
    std::size_t ny() const { return y_edges.size() - 1; }
};

struct AdherenceScore {
    ModelKind kind = ModelKind::Null;
    double epsilon = 0.0;
    std::size_t grid_x = 0;
    std::size_t grid_y = 0;
    std::size_t n_real = 0;
    std::size_t n_synth = 0;
};

// PCA fitted on the concatenation of both groups; scores come back split so
// group membership is preserved.
struct JointProjection {
    PCAProjection projection;
    std::vector<std::vector<double>> real_scores;   // first two components
    std::vector<std::vector<double>> synth_scores;
};

inline JointProjection joint_pca(const std::vector<SegmentFeatures>& real,
                                 const std::vector<SegmentFeatures>& synthetic) {
    if (real.empty() || synthetic.empty()) throw EmptyInput("joint_pca needs both groups");
    if (real[0].n_segments() != synthetic[0].n_segments()) throw MixedSegmentCounts();

    auto rows = feature_matrix(real);
    const auto synth_rows = feature_matrix(synthetic);
    rows.insert(rows.end(), synth_rows.begin(), synth_rows.end());

    JointProjection out;
    const std::size_t dim = rows[0].size();
    out.projection = pca(rows, std::min<std::size_t>(2, dim));
    const auto n_comp = static_cast<std::size_t>(out.projection.scores.cols());

    auto take = [&](std::size_t from, std::size_t n) {
        std::vector<std::vector<double>> scores(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i].resize(n_comp);
            for (std::size_t c = 0; c < n_comp; ++c)
                scores[i][c] = out.projection.scores(static_cast<Eigen::Index>(from + i),
                                                     static_cast<Eigen::Index>(c));
        }
        return scores;
    };
    out.real_scores = take(0, real.size());
    out.synth_scores = take(real.size(), synthetic.size());
    return out;
}

// Bins 2-D points into a normalized histogram. Boundary points go to the
// higher cell; the topmost edge is inclusive. Points outside are clamped to
// the outermost cells.
inline Histogram2D histogram2d(const std::vector<std::vector<double>>& scores,
                               const std::vector<double>& x_edges,
                               const std::vector<double>& y_edges) {
    if (scores.empty()) throw EmptyInput("no points to histogram");
    if (x_edges.size() < 2 || y_edges.size() < 2)
        throw std::invalid_argument("need at least 2 edges per axis");
    for (std::size_t i = 1; i < x_edges.size(); ++i)
        if (x_edges[i] <= x_edges[i - 1])
            throw std::invalid_argument("x_edges must be strictly increasing");
    for (std::size_t i = 1; i < y_edges.size(); ++i)
        if (y_edges[i] <= y_edges[i - 1])
            throw std::invalid_argument("y_edges must be strictly increasing");

    Histogram2D h;
    h.x_edges = x_edges;
    h.y_edges = y_edges;
    h.masses.assign(h.nx() * h.ny(), 0.0);

    auto locate = [](const std::vector<double>& edges, double v) {
        auto it = std::upper_bound(edges.begin(), edges.end(), v);
        auto idx = static_cast<std::ptrdiff_t>(it - edges.begin()) - 1;
        return static_cast<std::size_t>(
            std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(edges.size()) - 2));
    };
    for (const auto& p : scores) {
        const std::size_t ix = locate(x_edges, p[0]);
        const std::size_t iy = locate(y_edges, p[1]);
        h.masses[ix * h.ny() + iy] += 1.0;
    }
    for (double& m : h.masses) m /= static_cast<double>(scores.size());
    return h;
}

// L1 distance between normalized histograms on identical grids; in [0, 2].
inline double epsilon(const Histogram2D& pi_o, const Histogram2D& pi_s) {
    if (pi_o.x_edges != pi_s.x_edges || pi_o.y_edges != pi_s.y_edges) throw BinMismatch();
    double sum = 0.0;
    for (std::size_t i = 0; i < pi_o.masses.size(); ++i)
        sum += std::abs(pi_o.masses[i] - pi_s.masses[i]);
    return sum;
}

inline std::vector<double> equal_width_edges(double lo, double hi, std::size_t bins) {
    if (!(hi > lo)) hi = lo + 1.0;
    std::vector<double> edges(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i)
        edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    return edges;
}

// Scores one model: sample, project jointly with the real features, histogram
// both clouds on a shared grid spanning the combined score range, take the L1
// difference.
inline AdherenceScore score_model(const std::vector<SegmentFeatures>& real,
                                  const GenerativeModel& model, std::size_t count,
                                  std::uint64_t seed, std::size_t grid = 20) {
    const auto synthetic = sample(model, count, seed);
    const auto joint = joint_pca(real, synthetic);

    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
    double ylo = xlo, yhi = -xlo;
    auto extend = [&](const std::vector<std::vector<double>>& scores) {
        for (const auto& p : scores) {
            xlo = std::min(xlo, p[0]);
            xhi = std::max(xhi, p[0]);
            ylo = std::min(ylo, p.size() > 1 ? p[1] : 0.0);
            yhi = std::max(yhi, p.size() > 1 ? p[1] : 0.0);
        }
    };
    extend(joint.real_scores);
    extend(joint.synth_scores);
    const auto x_edges = equal_width_edges(xlo, xhi, grid);
    const auto y_edges = equal_width_edges(ylo, yhi, grid);

    auto pad = [](std::vector<std::vector<double>> scores) {
        for (auto& p : scores)
            if (p.size() < 2) p.push_back(0.0);
        return scores;
    };
    const auto pi_o = histogram2d(pad(joint.real_scores), x_edges, y_edges);
    const auto pi_s = histogram2d(pad(joint.synth_scores), x_edges, y_edges);

    AdherenceScore s;
    s.kind = model.kind;
    s.epsilon = epsilon(pi_o, pi_s);
    s.grid_x = grid;
    s.grid_y = grid;
    s.n_real = real.size();
    s.n_synth = synthetic.size();
    return s;
}

// Evaluates every model and returns scores sorted ascending by epsilon (best
// first); ties break on ModelKind enumeration order.
inline std::vector<AdherenceScore> rank_models(const std::vector<SegmentFeatures>& real,
                                               const std::vector<GenerativeModel>& models,
                                               std::size_t count, std::uint64_t seed,
                                               std::size_t grid = 20) {
    if (models.empty()) throw EmptyInput("no models to rank");
    std::vector<AdherenceScore> scores;
    for (std::size_t i = 0; i < models.size(); ++i)
        scores.push_back(score_model(real, models[i], count,
                                     derive_seed(seed, "rank_" + to_string(models[i].kind)),
                                     grid));
    std::stable_sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
        if (a.epsilon != b.epsilon) return a.epsilon < b.epsilon;
        return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    });
    return scores;
}

}  // namespace viewfit
