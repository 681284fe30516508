#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "viewfit/errors.hpp"
#include "viewfit/segmented.hpp"

namespace viewfit {

// Per-profile segment descriptors: inclination angles in degrees and
// normalized x-extents (extents sum to 1).
struct SegmentFeatures {
    std::string id;
    std::vector<double> angles;   // degrees, in (-90, 90)
    std::vector<double> lengths;  // > 0, sum to 1

    std::size_t n_segments() const { return angles.size(); }
};

inline double slope_to_degrees(double slope) {
    return std::atan(slope) * 180.0 / std::numbers::pi;
}

inline double degrees_to_slope(double degrees) {
    return std::tan(degrees * std::numbers::pi / 180.0);
}

inline SegmentFeatures extract_features(const SegmentedFit& fit, const std::string& id = {}) {
    if (!fit.converged) throw NotConverged("fit did not converge: " + id);
    SegmentFeatures f;
    f.id = id;
    const auto slopes = fit.segment_slopes();
    std::vector<double> bounds;
    bounds.push_back(0.0);
    bounds.insert(bounds.end(), fit.breakpoints.begin(), fit.breakpoints.end());
    bounds.push_back(1.0);
    for (std::size_t i = 0; i < slopes.size(); ++i) {
        f.angles.push_back(slope_to_degrees(slopes[i]));
        f.lengths.push_back(bounds[i + 1] - bounds[i]);
    }
    return f;
}

// Partitions fits by rmse < threshold (strict), preserving order.
template <typename FitLike>
inline std::pair<std::vector<FitLike>, std::vector<FitLike>> gate_by_rmse(
    const std::vector<FitLike>& fits, double threshold) {
    if (!(threshold > 0.0) || !std::isfinite(threshold))
        throw std::invalid_argument("rmse threshold must be finite and positive");
    std::pair<std::vector<FitLike>, std::vector<FitLike>> out;
    for (const auto& f : fits)
        (f.rmse < threshold ? out.first : out.second).push_back(f);
    return out;
}

// '+' if the next segment's angle increased, '-' otherwise (ties count as '-').
inline std::string sign_pattern(const SegmentFeatures& features) {
    if (features.n_segments() < 2) throw TooFewSegments();
    std::string pattern;
    pattern.reserve(features.n_segments() - 1);
    for (std::size_t i = 0; i + 1 < features.angles.size(); ++i)
        pattern.push_back(features.angles[i + 1] > features.angles[i] ? '+' : '-');
    return pattern;
}

struct CorrelationReport {
    std::vector<std::string> variables;  // a1..aN then l1..lN
    std::vector<std::vector<double>> rho;

    double get(std::size_t i, std::size_t j) const { return rho[i][j]; }
};

// Flattens features with uniform segment count N into rows (a1..aN, l1..lN).
inline std::vector<std::vector<double>> feature_matrix(
    const std::vector<SegmentFeatures>& features) {
    std::vector<std::vector<double>> rows;
    rows.reserve(features.size());
    for (const auto& f : features) {
        std::vector<double> row;
        row.reserve(2 * f.n_segments());
        row.insert(row.end(), f.angles.begin(), f.angles.end());
        row.insert(row.end(), f.lengths.begin(), f.lengths.end());
        rows.push_back(std::move(row));
    }
    return rows;
}

inline CorrelationReport correlations(const std::vector<SegmentFeatures>& features,
                                      std::size_t n_segments) {
    if (features.size() < 2) throw EmptyInput("need at least 2 profiles for correlations");
    for (const auto& f : features)
        if (f.n_segments() != n_segments) throw MixedSegmentCounts();

    CorrelationReport report;
    for (std::size_t i = 1; i <= n_segments; ++i) report.variables.push_back("a" + std::to_string(i));
    for (std::size_t i = 1; i <= n_segments; ++i) report.variables.push_back("l" + std::to_string(i));

    const auto rows = feature_matrix(features);
    const std::size_t d = 2 * n_segments;
    const auto n = static_cast<double>(rows.size());

    std::vector<double> mean(d, 0.0), sd(d, 0.0);
    for (const auto& row : rows)
        for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
    for (auto& m : mean) m /= n;
    for (const auto& row : rows)
        for (std::size_t j = 0; j < d; ++j) {
            const double c = row[j] - mean[j];
            sd[j] += c * c;
        }
    for (std::size_t j = 0; j < d; ++j) {
        sd[j] = std::sqrt(sd[j]);
        if (sd[j] == 0.0) throw ZeroVariance(report.variables[j]);
    }

    report.rho.assign(d, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < d; ++i) {
        report.rho[i][i] = 1.0;
        for (std::size_t j = i + 1; j < d; ++j) {
            double cov = 0.0;
            for (const auto& row : rows)
                cov += (row[i] - mean[i]) * (row[j] - mean[j]);
            const double r = std::clamp(cov / (sd[i] * sd[j]), -1.0, 1.0);
            report.rho[i][j] = r;
            report.rho[j][i] = r;
        }
    }
    return report;
}

// Normalized angle histogram over [0, 90); out-of-range angles are clipped
// into the closed-open range.
inline std::vector<double> angle_histogram(const std::vector<SegmentFeatures>& features,
                                           std::size_t bins) {
    if (bins < 2) throw std::invalid_argument("need at least 2 bins");
    if (features.empty()) throw EmptyInput("no features for angle histogram");
    std::vector<double> hist(bins, 0.0);
    double total = 0.0;
    for (const auto& f : features)
        for (double a : f.angles) {
            const double clipped = std::clamp(a, 0.0, std::nextafter(90.0, 0.0));
            auto b = static_cast<std::size_t>(clipped / 90.0 * static_cast<double>(bins));
            b = std::min(b, bins - 1);
            hist[b] += 1.0;
            total += 1.0;
        }
    for (auto& h : hist) h /= total;
    return hist;
}

}  // namespace viewfit
