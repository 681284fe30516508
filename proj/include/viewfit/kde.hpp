#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "viewfit/errors.hpp"
#include "viewfit/rng.hpp"

namespace viewfit {

// 1-D Gaussian kernel density estimate with Silverman's rule-of-thumb
// bandwidth. Sampling draws a training point and adds kernel noise.
class GaussianKde {
public:
    GaussianKde() = default;

    explicit GaussianKde(std::vector<double> samples, double bandwidth = -1.0)
        : samples_(std::move(samples)) {
        if (samples_.empty()) throw EmptyInput("KDE needs at least one sample");
        bandwidth_ = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(samples_);
    }

    double bandwidth() const { return bandwidth_; }
    const std::vector<double>& samples() const { return samples_; }

    double density(double x) const {
        const double inv = 1.0 / bandwidth_;
        double sum = 0.0;
        for (double s : samples_) {
            const double z = (x - s) * inv;
            sum += std::exp(-0.5 * z * z);
        }
        return sum * inv / (std::sqrt(2.0 * std::numbers::pi) * static_cast<double>(samples_.size()));
    }

    double sample(Rng& rng) const {
        const double base = samples_[rng.uniform_int(samples_.size())];
        return base + bandwidth_ * rng.gaussian();
    }

    static double silverman_bandwidth(const std::vector<double>& data) {
        const auto n = static_cast<double>(data.size());
        if (data.size() < 2) return 1e-3;
        double mean = 0.0;
        for (double v : data) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : data) var += (v - mean) * (v - mean);
        const double sd = std::sqrt(var / (n - 1.0));

        std::vector<double> sorted(data);
        std::sort(sorted.begin(), sorted.end());
        const auto q = [&](double p) {
            const double idx = p * (n - 1.0);
            const auto lo = static_cast<std::size_t>(idx);
            const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
            const double w = idx - static_cast<double>(lo);
            return (1.0 - w) * sorted[lo] + w * sorted[hi];
        };
        const double iqr = q(0.75) - q(0.25);

        double spread = sd;
        if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
        if (spread <= 0.0) spread = std::max(std::abs(mean), 1.0) * 1e-6;
        return 0.9 * spread * std::pow(n, -0.2);
    }

private:
    std::vector<double> samples_;
    double bandwidth_ = 1.0;
};

}  // namespace viewfit
