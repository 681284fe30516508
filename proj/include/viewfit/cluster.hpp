#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "viewfit/errors.hpp"
#include "viewfit/features.hpp"

namespace viewfit {

struct Merge {
    int cluster_a = 0;  // cluster ids: leaves 0..n-1, merges n, n+1, ...
    int cluster_b = 0;
    double distance = 0.0;
    int new_size = 0;
};

struct Dendrogram {
    std::vector<Merge> merges;  // n_leaves - 1 entries, distances non-decreasing
    std::size_t n_leaves = 0;
};

// Per-profile cluster label in {0..k-1}, or -1 for unassigned. Labels are
// ordered by cluster size descending (0 = largest).
struct ClusterAssignment {
    std::vector<int> labels;
    int k = 0;
};

namespace detail {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }
    std::size_t find(std::size_t a) {
        while (parent_[a] != a) a = parent_[a] = parent_[parent_[a]];
        return a;
    }
    std::size_t unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
        return a;
    }
    std::size_t size(std::size_t a) { return size_[find(a)]; }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
};

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

}  // namespace detail

// Single-linkage agglomerative clustering via the minimum-spanning-tree
// formulation (Prim's, O(n^2)): the sorted MST edges are exactly the
// single-linkage merge distances. Ties break on lower vertex index.
inline Dendrogram single_linkage(const std::vector<std::vector<double>>& points) {
    const std::size_t n = points.size();
    if (n < 2) throw EmptyInput("need at least 2 points to cluster");
    const std::size_t dim = points[0].size();
    for (const auto& p : points)
        if (p.size() != dim) throw DimensionMismatch();

    // Prim's MST over the implicit complete Euclidean graph.
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> best_from(n, 0);
    std::vector<bool> in_tree(n, false);
    struct Edge {
        std::size_t a, b;
        double dist;
    };
    std::vector<Edge> edges;
    edges.reserve(n - 1);

    std::size_t current = 0;
    in_tree[0] = true;
    for (std::size_t step = 1; step < n; ++step) {
        for (std::size_t v = 0; v < n; ++v) {
            if (in_tree[v]) continue;
            const double d = detail::sq_dist(points[current], points[v]);
            if (d < best[v]) {
                best[v] = d;
                best_from[v] = current;
            }
        }
        std::size_t next = n;
        for (std::size_t v = 0; v < n; ++v)
            if (!in_tree[v] && (next == n || best[v] < best[next])) next = v;
        edges.push_back({std::min(best_from[next], next),
                         std::max(best_from[next], next), std::sqrt(best[next])});
        in_tree[next] = true;
        current = next;
    }

    std::stable_sort(edges.begin(), edges.end(), [](const Edge& l, const Edge& r) {
        if (l.dist != r.dist) return l.dist < r.dist;
        if (l.a != r.a) return l.a < r.a;
        return l.b < r.b;
    });

    Dendrogram dendro;
    dendro.n_leaves = n;
    detail::UnionFind uf(n);
    std::vector<int> cluster_id(n);
    std::iota(cluster_id.begin(), cluster_id.end(), 0);
    int next_id = static_cast<int>(n);
    for (const auto& e : edges) {
        const std::size_t ra = uf.find(e.a);
        const std::size_t rb = uf.find(e.b);
        Merge m;
        m.cluster_a = std::min(cluster_id[ra], cluster_id[rb]);
        m.cluster_b = std::max(cluster_id[ra], cluster_id[rb]);
        m.distance = e.dist;
        const std::size_t root = uf.unite(e.a, e.b);
        m.new_size = static_cast<int>(uf.size(root));
        cluster_id[root] = next_id++;
        dendro.merges.push_back(m);
    }
    return dendro;
}

// Cuts the dendrogram into k clusters by dropping the k-1 largest merges.
// Components smaller than min_size are marked unassigned (-1); surviving
// clusters are relabeled by size descending.
inline ClusterAssignment cut(const Dendrogram& dendro, int k, std::size_t min_size = 1) {
    const std::size_t n = dendro.n_leaves;
    if (k < 1 || static_cast<std::size_t>(k) > n)
        throw InvalidK("k must be in [1, n_leaves]");

    detail::UnionFind uf(n);
    // Merge distances are sorted, so the k-1 largest merges are the last ones.
    // Replaying the merge list needs cluster-id -> representative tracking.
    std::vector<std::size_t> rep(n + dendro.merges.size());
    std::iota(rep.begin(), rep.begin() + static_cast<std::ptrdiff_t>(n), 0);
    const std::size_t keep = n - static_cast<std::size_t>(k);
    for (std::size_t i = 0; i < keep; ++i) {
        const auto& m = dendro.merges[i];
        const std::size_t root =
            uf.unite(rep[static_cast<std::size_t>(m.cluster_a)],
                     rep[static_cast<std::size_t>(m.cluster_b)]);
        rep[n + i] = root;
    }

    std::map<std::size_t, std::size_t> component_size;
    for (std::size_t v = 0; v < n; ++v) ++component_size[uf.find(v)];

    // Order components by size descending, then by root for determinism.
    std::vector<std::pair<std::size_t, std::size_t>> comps(component_size.begin(),
                                                           component_size.end());
    std::sort(comps.begin(), comps.end(), [](const auto& l, const auto& r) {
        if (l.second != r.second) return l.second > r.second;
        return l.first < r.first;
    });
    std::map<std::size_t, int> label_of;
    int next_label = 0;
    for (const auto& [root, size] : comps)
        label_of[root] = size >= min_size ? next_label++ : -1;

    ClusterAssignment out;
    out.k = k;
    out.labels.resize(n);
    for (std::size_t v = 0; v < n; ++v) out.labels[v] = label_of[uf.find(v)];
    return out;
}

struct PCAProjection {
    Eigen::MatrixXd components;  // one orthonormal component per column
    Eigen::VectorXd mean;
    std::vector<double> explained_variance_ratio;  // non-increasing
    Eigen::MatrixXd scores;  // one row per input point
};

// PCA by eigendecomposition of the sample covariance. Sign convention: each
// component's largest-magnitude entry is positive.
inline PCAProjection pca(const std::vector<std::vector<double>>& points,
                         std::size_t n_components) {
    const std::size_t n = points.size();
    if (n < 2) throw EmptyInput("need at least 2 points for PCA");
    const std::size_t dim = points[0].size();
    for (const auto& p : points)
        if (p.size() != dim) throw DimensionMismatch();
    if (n_components < 1 || n_components > dim)
        throw std::invalid_argument("n_components must be in [1, dim]");

    Eigen::MatrixXd data(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j)
            data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = points[i][j];

    PCAProjection out;
    out.mean = data.colwise().mean();
    data.rowwise() -= out.mean.transpose();

    const Eigen::MatrixXd cov = data.transpose() * data / static_cast<double>(n - 1);
    if (cov.cwiseAbs().maxCoeff() < 1e-300) throw DegenerateCovariance();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::VectorXd evals = eig.eigenvalues();  // ascending
    const double total = std::max(evals.sum(), 1e-300);

    out.components.resize(static_cast<Eigen::Index>(dim),
                          static_cast<Eigen::Index>(n_components));
    for (std::size_t c = 0; c < n_components; ++c) {
        const auto src = static_cast<Eigen::Index>(dim - 1 - c);
        Eigen::VectorXd v = eig.eigenvectors().col(src);
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        if (v(imax) < 0.0) v = -v;
        out.components.col(static_cast<Eigen::Index>(c)) = v;
        out.explained_variance_ratio.push_back(std::max(evals(src), 0.0) / total);
    }
    out.scores = data * out.components;
    return out;
}

// Per-cluster normalized frequency of each sign-pattern string.
struct PrototypeTable {
    std::map<std::string, double> frequencies;
    std::string modal;
};

inline std::vector<PrototypeTable> prototype_frequencies(
    const ClusterAssignment& assignment, const std::vector<std::string>& patterns) {
    if (assignment.labels.size() != patterns.size()) throw Misalignment();
    std::vector<std::map<std::string, std::size_t>> counts(
        static_cast<std::size_t>(assignment.k));
    for (std::size_t i = 0; i < patterns.size(); ++i) {
        const int label = assignment.labels[i];
        if (label >= 0) ++counts[static_cast<std::size_t>(label)][patterns[i]];
    }
    std::vector<PrototypeTable> tables;
    for (const auto& cluster : counts) {
        PrototypeTable t;
        std::size_t total = 0;
        for (const auto& [pattern, c] : cluster) total += c;
        std::size_t best = 0;
        for (const auto& [pattern, c] : cluster) {
            t.frequencies[pattern] = static_cast<double>(c) / static_cast<double>(total);
            if (c > best) {
                best = c;
                t.modal = pattern;
            }
        }
        tables.push_back(std::move(t));
    }
    return tables;
}

// Component-wise average of angles and lengths, rebuilt into a polyline that
// starts at (0,0) and is rescaled to end at (1,1).
inline std::vector<std::pair<double, double>> average_curve(
    const std::vector<SegmentFeatures>& group) {
    if (group.empty()) throw EmptyGroup();
    const std::size_t n_seg = group[0].n_segments();
    for (const auto& f : group)
        if (f.n_segments() != n_seg) throw MixedSegmentCounts();

    std::vector<double> mean_angle(n_seg, 0.0), mean_len(n_seg, 0.0);
    for (const auto& f : group)
        for (std::size_t i = 0; i < n_seg; ++i) {
            mean_angle[i] += f.angles[i];
            mean_len[i] += f.lengths[i];
        }
    double len_total = 0.0;
    for (std::size_t i = 0; i < n_seg; ++i) {
        mean_angle[i] /= static_cast<double>(group.size());
        mean_len[i] /= static_cast<double>(group.size());
        len_total += mean_len[i];
    }

    std::vector<std::pair<double, double>> polyline;
    polyline.emplace_back(0.0, 0.0);
    double x = 0.0, y = 0.0;
    for (std::size_t i = 0; i < n_seg; ++i) {
        const double dx = mean_len[i] / len_total;
        x += dx;
        y += degrees_to_slope(mean_angle[i]) * dx;
        polyline.emplace_back(x, y);
    }
    const double y_end = polyline.back().second;
    if (std::abs(y_end) > 1e-300)
        for (auto& [px, py] : polyline) py /= y_end;
    return polyline;
}

}  // namespace viewfit
