#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "viewfit/errors.hpp"
#include "viewfit/features.hpp"
#include "viewfit/kde.hpp"
#include "viewfit/rng.hpp"

namespace viewfit {

enum class ModelKind { Null, Independent, Markov1Uni, Markov1Multi };

inline std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Null: return "null";
        case ModelKind::Independent: return "independent";
        case ModelKind::Markov1Uni: return "markov1_uni";
        case ModelKind::Markov1Multi: return "markov1_multi";
    }
    return "unknown";
}

// Equal-width binning over [lo, hi]; values outside are clamped to the
// boundary bins.
struct BinSpec {
    double lo = 0.0;
    double hi = 1.0;
    std::size_t n = 10;

    std::size_t index(double v) const {
        if (hi <= lo) return 0;
        const double t = (v - lo) / (hi - lo) * static_cast<double>(n);
        const auto b = static_cast<std::ptrdiff_t>(std::floor(t));
        return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
            b, 0, static_cast<std::ptrdiff_t>(n) - 1));
    }
    double bin_lo(std::size_t b) const {
        return lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(n);
    }
    double bin_hi(std::size_t b) const { return bin_lo(b + 1); }

    friend bool operator==(const BinSpec&, const BinSpec&) = default;
};

// Binned target variable: the per-bin distribution lives in ConditionalTable
// rows; this holds the empirical values per bin so a selected bin can be
// sampled by resampling + kernel noise (uniform jitter when a bin is sparse).
struct BinnedTarget {
    BinSpec spec;
    std::vector<std::vector<double>> bin_values;
    std::vector<double> bin_bandwidth;

    static BinnedTarget build(const BinSpec& spec, const std::vector<double>& values) {
        BinnedTarget t;
        t.spec = spec;
        t.bin_values.resize(spec.n);
        t.bin_bandwidth.assign(spec.n, 0.0);
        for (double v : values) t.bin_values[spec.index(v)].push_back(v);
        for (std::size_t b = 0; b < spec.n; ++b)
            if (t.bin_values[b].size() >= 2)
                t.bin_bandwidth[b] = GaussianKde::silverman_bandwidth(t.bin_values[b]);
        return t;
    }

    // Stays inside the selected bin so that refitting on sampled output
    // reproduces the bin edges and transition rows.
    double sample_bin(std::size_t b, Rng& rng) const {
        const double lo = spec.bin_lo(b);
        const double hi = spec.bin_hi(b);
        const auto& vals = bin_values[b];
        if (vals.empty()) return rng.uniform(lo, hi);
        for (int attempt = 0; attempt < 100; ++attempt) {
            const double base = vals[rng.uniform_int(vals.size())];
            double v;
            if (bin_bandwidth[b] > 0.0) {
                v = base + bin_bandwidth[b] * rng.gaussian();
            } else {
                // single-value bin: small uniform jitter inside the bin
                v = base + rng.uniform(-0.05, 0.05) * (hi - lo);
            }
            if (v >= lo && v < hi) return v;
        }
        return vals[rng.uniform_int(vals.size())];
    }

    friend bool operator==(const BinnedTarget&, const BinnedTarget&) = default;
};

// P(target bin | conditioning cell). Empty conditioning cells fall back to
// the target's marginal.
struct ConditionalTable {
    std::size_t n_cells = 0;
    std::vector<std::vector<double>> rows;  // n_cells x target bins; empty row = no data
    std::vector<double> marginal;
    BinnedTarget target;

    static ConditionalTable build(std::size_t n_cells, const BinSpec& target_spec,
                                  const std::vector<std::pair<std::size_t, double>>& pairs) {
        ConditionalTable t;
        t.n_cells = n_cells;
        t.rows.assign(n_cells, {});
        std::vector<std::vector<double>> counts(n_cells,
                                                std::vector<double>(target_spec.n, 0.0));
        std::vector<double> marginal_counts(target_spec.n, 0.0);
        std::vector<double> target_values;
        target_values.reserve(pairs.size());
        for (const auto& [cell, value] : pairs) {
            const std::size_t b = target_spec.index(value);
            counts[cell][b] += 1.0;
            marginal_counts[b] += 1.0;
            target_values.push_back(value);
        }
        for (std::size_t c = 0; c < n_cells; ++c) {
            double total = 0.0;
            for (double v : counts[c]) total += v;
            if (total > 0.0) {
                t.rows[c] = counts[c];
                for (double& v : t.rows[c]) v /= total;
            }
        }
        double mtotal = 0.0;
        for (double v : marginal_counts) mtotal += v;
        t.marginal = marginal_counts;
        if (mtotal > 0.0)
            for (double& v : t.marginal) v /= mtotal;
        t.target = BinnedTarget::build(target_spec, target_values);
        return t;
    }

    const std::vector<double>& row(std::size_t cell) const {
        return rows[cell].empty() ? marginal : rows[cell];
    }

    double sample(std::size_t cell, Rng& rng) const {
        const auto& dist = row(cell);
        double u = rng.uniform();
        std::size_t b = dist.size() - 1;
        for (std::size_t i = 0; i < dist.size(); ++i) {
            u -= dist[i];
            if (u <= 0.0) {
                b = i;
                break;
            }
        }
        return target.sample_bin(b, rng);
    }

    friend bool operator==(const ConditionalTable&, const ConditionalTable&) = default;
};

// Binned joint distribution of (alpha_1, l_1) used by the multivariate model's
// initial state; sampling resamples an observed pair with kernel noise.
struct InitialJoint {
    BinSpec alpha_spec;
    BinSpec l_spec;
    std::vector<double> cell_mass;  // alpha-major, size alpha_spec.n * l_spec.n
    std::vector<std::vector<std::pair<double, double>>> cell_pairs;
    double alpha_bandwidth = 0.0;
    double l_bandwidth = 0.0;

    std::size_t cell(double alpha, double l) const {
        return alpha_spec.index(alpha) * l_spec.n + l_spec.index(l);
    }

    static InitialJoint build(const BinSpec& a_spec, const BinSpec& l_spec,
                              const std::vector<std::pair<double, double>>& pairs) {
        InitialJoint j;
        j.alpha_spec = a_spec;
        j.l_spec = l_spec;
        j.cell_mass.assign(a_spec.n * l_spec.n, 0.0);
        j.cell_pairs.resize(a_spec.n * l_spec.n);
        std::vector<double> alphas, ls;
        for (const auto& [a, l] : pairs) {
            const std::size_t c = j.cell(a, l);
            j.cell_mass[c] += 1.0;
            j.cell_pairs[c].push_back({a, l});
            alphas.push_back(a);
            ls.push_back(l);
        }
        for (double& m : j.cell_mass) m /= static_cast<double>(pairs.size());
        if (alphas.size() >= 2) {
            j.alpha_bandwidth = GaussianKde::silverman_bandwidth(alphas);
            j.l_bandwidth = GaussianKde::silverman_bandwidth(ls);
        }
        return j;
    }

    std::pair<double, double> sample(Rng& rng) const {
        double u = rng.uniform();
        std::size_t c = cell_mass.size() - 1;
        for (std::size_t i = 0; i < cell_mass.size(); ++i) {
            u -= cell_mass[i];
            if (u <= 0.0) {
                c = i;
                break;
            }
        }
        if (cell_pairs[c].empty()) {
            const std::size_t ab = c / l_spec.n, lb = c % l_spec.n;
            return {rng.uniform(alpha_spec.bin_lo(ab), alpha_spec.bin_hi(ab)),
                    rng.uniform(l_spec.bin_lo(lb), l_spec.bin_hi(lb))};
        }
        // noise constrained to the selected cell so refits reproduce the grid
        for (int attempt = 0; attempt < 100; ++attempt) {
            const auto& [a, l] = cell_pairs[c][rng.uniform_int(cell_pairs[c].size())];
            const std::pair<double, double> v{a + alpha_bandwidth * rng.gaussian(),
                                              l + l_bandwidth * rng.gaussian()};
            if (cell(v.first, v.second) == c && v.first >= alpha_spec.lo &&
                v.first < alpha_spec.hi && v.second >= l_spec.lo && v.second < l_spec.hi)
                return v;
        }
        return cell_pairs[c][rng.uniform_int(cell_pairs[c].size())];
    }

    friend bool operator==(const InitialJoint&, const InitialJoint&) = default;
};

struct GenerativeModel {
    ModelKind kind = ModelKind::Null;
    std::size_t n_segments = 1;

    // independent: one KDE per position; markov1_uni: index 0 holds the
    // initial-state KDE only.
    std::vector<GaussianKde> alpha_kdes;
    std::vector<GaussianKde> l_kdes;

    // markov models: one table per step i -> i+1.
    std::vector<ConditionalTable> alpha_tables;
    std::vector<ConditionalTable> l_tables;

    // markov1_multi only.
    InitialJoint initial_joint;
};

inline bool same_null_model(const GenerativeModel& a, const GenerativeModel& b) {
    return a.kind == ModelKind::Null && b.kind == ModelKind::Null &&
           a.n_segments == b.n_segments;
}

namespace detail {

inline void require_uniform_features(const std::vector<SegmentFeatures>& features) {
    if (features.empty()) throw EmptyInput("no features to fit a model on");
    for (const auto& f : features)
        if (f.n_segments() != features[0].n_segments()) throw MixedSegmentCounts();
}

inline std::vector<double> collect(const std::vector<SegmentFeatures>& features,
                                   bool angles, std::size_t position) {
    std::vector<double> out;
    out.reserve(features.size());
    for (const auto& f : features)
        out.push_back(angles ? f.angles[position] : f.lengths[position]);
    return out;
}

inline BinSpec pooled_spec(const std::vector<SegmentFeatures>& features, bool angles,
                           std::size_t bins) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& f : features)
        for (double v : angles ? f.angles : f.lengths) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (!(hi > lo)) hi = lo + 1.0;
    return BinSpec{lo, hi, bins};
}

}  // namespace detail

inline GenerativeModel fit_null(std::size_t n_segments) {
    if (n_segments < 1) throw std::invalid_argument("n_segments must be >= 1");
    GenerativeModel m;
    m.kind = ModelKind::Null;
    m.n_segments = n_segments;
    return m;
}

inline GenerativeModel fit_independent(const std::vector<SegmentFeatures>& features) {
    detail::require_uniform_features(features);
    GenerativeModel m;
    m.kind = ModelKind::Independent;
    m.n_segments = features[0].n_segments();
    for (std::size_t i = 0; i < m.n_segments; ++i) {
        m.alpha_kdes.emplace_back(detail::collect(features, true, i));
        m.l_kdes.emplace_back(detail::collect(features, false, i));
    }
    return m;
}

inline GenerativeModel fit_markov1_uni(const std::vector<SegmentFeatures>& features,
                                       std::size_t bins) {
    detail::require_uniform_features(features);
    if (bins < 1) throw std::invalid_argument("bins must be >= 1");
    GenerativeModel m;
    m.kind = ModelKind::Markov1Uni;
    m.n_segments = features[0].n_segments();
    m.alpha_kdes.emplace_back(detail::collect(features, true, 0));
    m.l_kdes.emplace_back(detail::collect(features, false, 0));

    const BinSpec a_spec = detail::pooled_spec(features, true, bins);
    const BinSpec l_spec = detail::pooled_spec(features, false, bins);
    for (std::size_t i = 0; i + 1 < m.n_segments; ++i) {
        std::vector<std::pair<std::size_t, double>> a_pairs, l_pairs;
        for (const auto& f : features) {
            a_pairs.push_back({a_spec.index(f.angles[i]), f.angles[i + 1]});
            l_pairs.push_back({l_spec.index(f.lengths[i]), f.lengths[i + 1]});
        }
        m.alpha_tables.push_back(ConditionalTable::build(a_spec.n, a_spec, a_pairs));
        m.l_tables.push_back(ConditionalTable::build(l_spec.n, l_spec, l_pairs));
    }
    return m;
}

inline GenerativeModel fit_markov1_multi(const std::vector<SegmentFeatures>& features,
                                         std::size_t bins_alpha, std::size_t bins_l) {
    detail::require_uniform_features(features);
    if (bins_alpha < 1 || bins_l < 1) throw std::invalid_argument("bins must be >= 1");
    GenerativeModel m;
    m.kind = ModelKind::Markov1Multi;
    m.n_segments = features[0].n_segments();

    const BinSpec a_spec = detail::pooled_spec(features, true, bins_alpha);
    const BinSpec l_spec = detail::pooled_spec(features, false, bins_l);

    std::vector<std::pair<double, double>> initial_pairs;
    for (const auto& f : features) initial_pairs.push_back({f.angles[0], f.lengths[0]});
    m.initial_joint = InitialJoint::build(a_spec, l_spec, initial_pairs);

    const std::size_t n_cells = bins_alpha * bins_l;
    for (std::size_t i = 0; i + 1 < m.n_segments; ++i) {
        std::vector<std::pair<std::size_t, double>> a_pairs, l_pairs;
        for (const auto& f : features) {
            const std::size_t cell = m.initial_joint.cell(f.angles[i], f.lengths[i]);
            a_pairs.push_back({cell, f.angles[i + 1]});
            l_pairs.push_back({cell, f.lengths[i + 1]});
        }
        m.alpha_tables.push_back(ConditionalTable::build(n_cells, a_spec, a_pairs));
        m.l_tables.push_back(ConditionalTable::build(n_cells, l_spec, l_pairs));
    }
    return m;
}

namespace detail {

// Rejection helpers keeping samples in the hard supports.
template <typename Draw>
inline double draw_in(Draw&& draw, double lo, double hi) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const double v = draw();
        if (v > lo && v < hi) return v;
    }
    return std::clamp(draw(), std::nextafter(lo, hi), std::nextafter(hi, lo));
}

constexpr double kAlphaLo = -90.0;
constexpr double kAlphaHi = 90.0;
constexpr double kLenHi = std::numeric_limits<double>::infinity();

}  // namespace detail

// Draws `count` feature vectors; deterministic given seed and independent of
// draw order (each draw gets its own derived stream).
inline std::vector<SegmentFeatures> sample(const GenerativeModel& model, std::size_t count,
                                           std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("count must be >= 1");
    const std::uint64_t base = derive_seed(seed, "model_sample");
    std::vector<SegmentFeatures> out;
    out.reserve(count);

    for (std::size_t draw = 0; draw < count; ++draw) {
        std::uint64_t s = base + 0x9e3779b97f4a7c15ULL * (draw + 1);
        Rng rng(splitmix64(s));
        SegmentFeatures f;
        f.id = "synth_" + std::to_string(draw);
        f.angles.resize(model.n_segments);
        f.lengths.resize(model.n_segments);

        switch (model.kind) {
            case ModelKind::Null:
                for (std::size_t i = 0; i < model.n_segments; ++i) {
                    f.angles[i] = rng.uniform(0.0, 90.0);
                    f.lengths[i] = detail::draw_in([&] { return rng.uniform(); }, 0.0, 1.0);
                }
                break;
            case ModelKind::Independent:
                for (std::size_t i = 0; i < model.n_segments; ++i) {
                    f.angles[i] = detail::draw_in(
                        [&] { return model.alpha_kdes[i].sample(rng); }, detail::kAlphaLo,
                        detail::kAlphaHi);
                    f.lengths[i] = detail::draw_in(
                        [&] { return model.l_kdes[i].sample(rng); }, 0.0, detail::kLenHi);
                }
                break;
            case ModelKind::Markov1Uni: {
                // initial draws constrained to the pooled table range so the
                // chain state stays binnable and refits reproduce the edges
                double a_lo = detail::kAlphaLo, a_hi = detail::kAlphaHi;
                double l_lo = 0.0, l_hi = detail::kLenHi;
                if (!model.alpha_tables.empty()) {
                    a_lo = std::max(a_lo, model.alpha_tables[0].target.spec.lo);
                    a_hi = std::min(a_hi, model.alpha_tables[0].target.spec.hi);
                    l_lo = std::max(l_lo, model.l_tables[0].target.spec.lo);
                    l_hi = std::min(l_hi, model.l_tables[0].target.spec.hi);
                }
                f.angles[0] = detail::draw_in([&] { return model.alpha_kdes[0].sample(rng); },
                                              a_lo, a_hi);
                f.lengths[0] = detail::draw_in([&] { return model.l_kdes[0].sample(rng); },
                                               l_lo, l_hi);
                for (std::size_t i = 0; i + 1 < model.n_segments; ++i) {
                    const auto& at = model.alpha_tables[i];
                    const auto& lt = model.l_tables[i];
                    const std::size_t a_cell = at.target.spec.index(f.angles[i]);
                    const std::size_t l_cell = lt.target.spec.index(f.lengths[i]);
                    f.angles[i + 1] = detail::draw_in([&] { return at.sample(a_cell, rng); },
                                                      detail::kAlphaLo, detail::kAlphaHi);
                    f.lengths[i + 1] = detail::draw_in([&] { return lt.sample(l_cell, rng); },
                                                       0.0, detail::kLenHi);
                }
                break;
            }
            case ModelKind::Markov1Multi: {
                const auto [a0, l0] = [&] {
                    for (int attempt = 0; attempt < 1000; ++attempt) {
                        auto p = model.initial_joint.sample(rng);
                        if (p.first > detail::kAlphaLo && p.first < detail::kAlphaHi &&
                            p.second > 0.0)
                            return p;
                    }
                    return std::pair<double, double>{45.0, 1.0 / static_cast<double>(model.n_segments)};
                }();
                f.angles[0] = a0;
                f.lengths[0] = l0;
                for (std::size_t i = 0; i + 1 < model.n_segments; ++i) {
                    const std::size_t cell =
                        model.initial_joint.cell(f.angles[i], f.lengths[i]);
                    const auto& at = model.alpha_tables[i];
                    const auto& lt = model.l_tables[i];
                    f.angles[i + 1] = detail::draw_in([&] { return at.sample(cell, rng); },
                                                      detail::kAlphaLo, detail::kAlphaHi);
                    f.lengths[i + 1] = detail::draw_in([&] { return lt.sample(cell, rng); },
                                                       0.0, detail::kLenHi);
                }
                break;
            }
        }

        double total = 0.0;
        for (double l : f.lengths) total += l;
        for (double& l : f.lengths) l /= total;
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace viewfit
