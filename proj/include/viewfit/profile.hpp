#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "viewfit/errors.hpp"
#include "viewfit/rng.hpp"

namespace viewfit {

// Raw per-month view counts for one article. Index 0 is the publication month.
struct ViewProfile {
    std::string id;
    std::vector<std::int64_t> monthly_views;
};

// Cumulative series rescaled to the unit square with the first month dropped.
struct NormalizedProfile {
    std::string id;
    std::vector<double> x;  // strictly increasing, x.front()=0, x.back()=1
    std::vector<double> y;  // non-decreasing, y.back()=1

    std::size_t size() const { return x.size(); }
};

struct ControlConfig {
    std::int64_t h_max = 1;  // largest monthly count observed in the real corpus
    std::uint64_t seed = 0;
};

// Drops month 0, forms cumulative sums of the remainder, and rescales both
// axes to [0,1]. Month index i (0-based after removal) maps to i/(m-1).
inline NormalizedProfile normalize(const ViewProfile& profile) {
    if (profile.monthly_views.size() < 3) throw TooShort(profile.id);
    const std::size_t m = profile.monthly_views.size() - 1;

    std::vector<double> cum(m);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        total += static_cast<double>(profile.monthly_views[i + 1]);
        cum[i] = total;
    }
    if (total <= 0.0) throw AllZeroViews(profile.id);

    NormalizedProfile out;
    out.id = profile.id;
    out.x.resize(m);
    out.y.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        out.x[i] = static_cast<double>(i) / static_cast<double>(m - 1);
        out.y[i] = cum[i] / total;
    }
    return out;
}

// Normalizes a whole corpus, skipping profiles that fail preconditions.
// Skipped ids and reasons are appended to `skipped` when provided.
inline std::vector<NormalizedProfile> normalize_corpus(
    const std::vector<ViewProfile>& corpus,
    std::vector<std::pair<std::string, std::string>>* skipped = nullptr) {
    std::vector<NormalizedProfile> out;
    out.reserve(corpus.size());
    for (const auto& p : corpus) {
        try {
            out.push_back(normalize(p));
        } catch (const TooShort&) {
            if (skipped) skipped->emplace_back(p.id, "too_short");
        } catch (const AllZeroViews&) {
            if (skipped) skipped->emplace_back(p.id, "all_zero_views");
        }
    }
    return out;
}

inline std::int64_t max_monthly_views(const std::vector<ViewProfile>& corpus) {
    std::int64_t h = 0;
    for (const auto& p : corpus)
        for (auto v : p.monthly_views) h = std::max(h, v);
    return h;
}

// One synthetic profile per real profile, same length, monthly views i.i.d.
// discrete uniform on {0, ..., h_max-1}.
inline std::vector<ViewProfile> generate_control_corpus(
    const std::vector<ViewProfile>& real_corpus, const ControlConfig& config) {
    if (real_corpus.empty()) throw EmptyCorpus();
    if (config.h_max < 1) throw std::invalid_argument("h_max must be >= 1");

    Rng rng(derive_seed(config.seed, "control_corpus"));
    std::vector<ViewProfile> out;
    out.reserve(real_corpus.size());
    for (const auto& real : real_corpus) {
        ViewProfile synth;
        synth.id = "ctrl_" + real.id;
        synth.monthly_views.resize(real.monthly_views.size());
        for (auto& v : synth.monthly_views)
            v = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(config.h_max)));
        out.push_back(std::move(synth));
    }
    return out;
}

}  // namespace viewfit
