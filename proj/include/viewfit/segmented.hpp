#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "viewfit/errors.hpp"
#include "viewfit/profile.hpp"

namespace viewfit {

// Continuous piecewise-linear fit: y = intercept + base_slope*x + sum_k slope_diffs[k]*(x-psi_k)_+
struct SegmentedFit {
    std::vector<double> breakpoints;  // psi_1 < ... < psi_N, strictly inside (0,1)
    double intercept = 0.0;
    double base_slope = 0.0;             // slope of the first segment
    std::vector<double> slope_diffs;     // slope change across each breakpoint
    double rmse = 0.0;
    int iterations = 0;
    bool converged = false;

    std::size_t n_segments() const { return breakpoints.size() + 1; }

    std::vector<double> segment_slopes() const {
        std::vector<double> slopes;
        slopes.reserve(n_segments());
        double s = base_slope;
        slopes.push_back(s);
        for (double b : slope_diffs) slopes.push_back(s += b);
        return slopes;
    }
};

struct FitConfig {
    int max_breakpoints = 4;  // up to 5 segments
    double convergence_tol = 1e-6;
    int max_iterations = 50;
    double beta_zero_tol = 1e-3;
    double min_gap = -1.0;  // < 0: use 2/(n-1), two sample spacings
    enum class Placement { Quantile, Uniform };
    Placement initial_placement = Placement::Quantile;
};

inline double predict(const SegmentedFit& fit, double x) {
    double y = fit.intercept + fit.base_slope * x;
    for (std::size_t k = 0; k < fit.breakpoints.size(); ++k)
        if (x > fit.breakpoints[k]) y += fit.slope_diffs[k] * (x - fit.breakpoints[k]);
    return y;
}

inline double compute_ssr(const SegmentedFit& fit, const NormalizedProfile& p) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double r = p.y[i] - predict(fit, p.x[i]);
        ssr += r * r;
    }
    return ssr;
}

inline double compute_rmse(const SegmentedFit& fit, const NormalizedProfile& p) {
    return std::sqrt(compute_ssr(fit, p) / static_cast<double>(p.size()));
}

namespace detail {

constexpr double kRankTol = 1e-10;

// Least squares with psi held fixed: columns [1, x, (x-psi_k)_+].
inline SegmentedFit solve_at_fixed_psi(const NormalizedProfile& p,
                                       const std::vector<double>& psi) {
    const auto n = static_cast<Eigen::Index>(p.size());
    const auto nb = static_cast<Eigen::Index>(psi.size());
    Eigen::MatrixXd design(n, 2 + nb);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = p.x[static_cast<std::size_t>(i)];
        design(i, 0) = 1.0;
        design(i, 1) = x;
        for (Eigen::Index k = 0; k < nb; ++k)
            design(i, 2 + k) = std::max(x - psi[static_cast<std::size_t>(k)], 0.0);
        rhs(i) = p.y[static_cast<std::size_t>(i)];
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
    cod.setThreshold(kRankTol);
    const Eigen::VectorXd coef = cod.solve(rhs);

    SegmentedFit fit;
    fit.breakpoints = psi;
    fit.intercept = coef(0);
    fit.base_slope = coef(1);
    fit.slope_diffs.assign(coef.data() + 2, coef.data() + 2 + nb);
    fit.rmse = std::sqrt((design * coef - rhs).squaredNorm() / static_cast<double>(n));
    return fit;
}

struct IterationResult {
    SegmentedFit fit;
    bool degenerate = false;  // some gap < min_gap at termination
};

// Fast SSR at fixed psi via normal equations (search guidance only; the
// returned fits always come from the orthogonal decomposition).
inline double ssr_at_psi(const NormalizedProfile& p, const std::vector<double>& psi) {
    const auto n = p.size();
    const auto pc = static_cast<Eigen::Index>(2 + psi.size());
    Eigen::MatrixXd design(static_cast<Eigen::Index>(n), pc);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const double x = p.x[i];
        design(r, 0) = 1.0;
        design(r, 1) = x;
        for (std::size_t k = 0; k < psi.size(); ++k)
            design(r, 2 + static_cast<Eigen::Index>(k)) = std::max(x - psi[k], 0.0);
        rhs(r) = p.y[i];
    }
    const Eigen::MatrixXd xtx = design.transpose() * design;
    const Eigen::VectorXd xty = design.transpose() * rhs;
    const double yty = rhs.squaredNorm();
    const Eigen::LLT<Eigen::MatrixXd> llt(xtx);
    if (llt.info() == Eigen::Success) {
        const Eigen::VectorXd b = llt.solve(xty);
        return std::max(yty - xty.dot(b), 0.0);
    }
    const auto fit = solve_at_fixed_psi(p, psi);
    return fit.rmse * fit.rmse * static_cast<double>(n);
}

struct CoordinateMin {
    double psi;
    double ssr;
};

// Exact minimum of the SSR over breakpoint k alone, searched across the
// inter-sample intervals within `window` of its current position, the other
// breakpoints held fixed. Within one interval the indicator set is constant,
// so with e = -beta_k * psi_k the model is linear in all coefficients and the
// interval's interior optimum is psi_k = -e / beta_k.
inline CoordinateMin coordinate_min(const NormalizedProfile& p, const std::vector<double>& psi,
                                    std::size_t k, std::ptrdiff_t window, double min_gap,
                                    double current_ssr, bool check_endpoints = true) {
    const auto n = static_cast<std::ptrdiff_t>(p.size());
    const auto nb = static_cast<Eigen::Index>(psi.size());
    CoordinateMin best{psi[k], current_ssr};

    auto gap_ok = [&](double cand) {
        if (cand <= 0.0 || cand >= 1.0) return false;
        for (std::size_t m = 0; m < psi.size(); ++m)
            if (m != k && std::abs(cand - psi[m]) < min_gap) return false;
        return true;
    };
    auto trial_ssr = [&](double cand) {
        std::vector<double> trial = psi;
        trial[k] = cand;
        std::sort(trial.begin(), trial.end());
        return ssr_at_psi(p, trial);
    };

    const auto it = std::upper_bound(p.x.begin(), p.x.end(), psi[k]);
    const auto center =
        std::clamp<std::ptrdiff_t>((it - p.x.begin()) - 1, 1, n - 3);
    const auto j_lo = std::max<std::ptrdiff_t>(1, center - window);
    const auto j_hi = std::min<std::ptrdiff_t>(n - 3, center + window);
    for (std::ptrdiff_t j = j_lo; j <= j_hi; ++j) {
        const double lo = p.x[static_cast<std::size_t>(j)];
        const double hi = p.x[static_cast<std::size_t>(j + 1)];

        Eigen::MatrixXd design(n, 2 + nb + 1);
        Eigen::VectorXd rhs(n);
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const double x = p.x[static_cast<std::size_t>(i)];
            const double ind = x >= hi ? 1.0 : 0.0;
            design(i, 0) = 1.0;
            design(i, 1) = x;
            Eigen::Index col = 2;
            for (std::size_t m = 0; m < psi.size(); ++m) {
                if (m == k) continue;
                design(i, col++) = std::max(x - psi[m], 0.0);
            }
            design(i, col) = x * ind;
            design(i, col + 1) = ind;
            rhs(i) = p.y[static_cast<std::size_t>(i)];
        }
        const Eigen::MatrixXd xtx = design.transpose() * design;
        const Eigen::VectorXd xty = design.transpose() * rhs;
        const Eigen::LLT<Eigen::MatrixXd> llt(xtx);
        Eigen::VectorXd coef;
        if (llt.info() == Eigen::Success) {
            coef = llt.solve(xty);
        } else {
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
            cod.setThreshold(kRankTol);
            coef = cod.solve(rhs);
        }
        const double c = coef(nb + 1);
        const double e = coef(nb + 2);
        if (std::abs(c) > 1e-12) {
            const double cand = -e / c;
            if (cand > lo && cand < hi && gap_ok(cand)) {
                // any LS solution leaves the residual orthogonal to the
                // column space, so SSR = y'y - (X'y)'b
                const double ssr = std::max(rhs.squaredNorm() - xty.dot(coef), 0.0);
                if (ssr < best.ssr) best = {cand, ssr};
            }
        }
        for (double cand : {lo, hi}) {
            if (!check_endpoints || !gap_ok(cand)) continue;
            const double ssr = trial_ssr(cand);
            if (ssr < best.ssr) best = {cand, ssr};
        }
    }
    return best;
}

// One run of the linearized breakpoint iteration. Breakpoints that escape the
// data range are clamped to the nearest interior sample; one that clamps on
// two consecutive iterations is dropped. When `merge_close` is set, pairs
// closer than min_gap are collapsed to their midpoint mid-run. The raw
// psi-update of the linearization can oscillate on noisy data, so each step is
// damped (halved) until the exact SSR at the new breakpoints does not
// increase.
inline IterationResult iterate_breakpoints(const NormalizedProfile& p,
                                           std::vector<double> psi,
                                           const FitConfig& config,
                                           double min_gap,
                                           bool merge_close) {
    const auto n = static_cast<Eigen::Index>(p.size());
    const double x_lo = p.x[1];
    const double x_hi = p.x[p.size() - 2];

    std::vector<int> clamp_streak(psi.size(), 0);
    bool converged = false;
    int iter = 0;
    double current_ssr = ssr_at_psi(p, psi);

    for (int round = 0; round < 4; ++round) {
    while (iter < config.max_iterations && !psi.empty()) {
        ++iter;
        const auto nb = static_cast<Eigen::Index>(psi.size());
        if (n < 2 + 2 * nb) {
            psi.pop_back();
            clamp_streak.pop_back();
            continue;
        }
        Eigen::MatrixXd design(n, 2 + 2 * nb);
        Eigen::VectorXd rhs(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double x = p.x[static_cast<std::size_t>(i)];
            design(i, 0) = 1.0;
            design(i, 1) = x;
            for (Eigen::Index k = 0; k < nb; ++k) {
                const double pk = psi[static_cast<std::size_t>(k)];
                design(i, 2 + k) = std::max(x - pk, 0.0);   // U_k
                design(i, 2 + nb + k) = x > pk ? -1.0 : 0.0;  // V_k
            }
            rhs(i) = p.y[static_cast<std::size_t>(i)];
        }
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
        cod.setThreshold(kRankTol);
        if (cod.rank() < 2)
            throw SingularDesign("design matrix rank " + std::to_string(cod.rank()));
        const Eigen::VectorXd coef = cod.solve(rhs);

        // full linearized step per breakpoint
        std::vector<double> full_step(psi.size(), 0.0);
        for (std::size_t k = 0; k < psi.size(); ++k) {
            const double beta = coef(2 + static_cast<Eigen::Index>(k));
            const double gamma = coef(2 + nb + static_cast<Eigen::Index>(k));
            if (std::abs(beta) > 1e-12) full_step[k] = gamma / beta;
        }

        // damp until the exact SSR at the damped position is no worse
        double scale = 1.0;
        std::vector<double> proposal(psi.size());
        std::vector<bool> clamped(psi.size());
        double proposal_ssr = current_ssr;
        bool improved = false;
        for (int half = 0; half < 12; ++half) {
            for (std::size_t k = 0; k < psi.size(); ++k) {
                double next = psi[k] + scale * full_step[k];
                clamped[k] = false;
                if (next < x_lo) { next = x_lo; clamped[k] = true; }
                if (next > x_hi) { next = x_hi; clamped[k] = true; }
                proposal[k] = next;
            }
            std::vector<double> sorted = proposal;
            std::sort(sorted.begin(), sorted.end());
            proposal_ssr = ssr_at_psi(p, sorted);
            if (proposal_ssr <= current_ssr * (1.0 + 1e-12)) {
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if (!improved) {  // no descent direction left: accept as converged
            converged = true;
            break;
        }

        double max_step = 0.0;
        std::vector<std::size_t> dropped;
        for (std::size_t k = 0; k < psi.size(); ++k) {
            clamp_streak[k] = clamped[k] ? clamp_streak[k] + 1 : 0;
            if (clamp_streak[k] >= 2) dropped.push_back(k);
            max_step = std::max(max_step, std::abs(proposal[k] - psi[k]));
            psi[k] = proposal[k];
        }
        const bool stalled =
            current_ssr - proposal_ssr <= 1e-10 * std::max(current_ssr, 1e-300);
        current_ssr = proposal_ssr;
        for (auto it = dropped.rbegin(); it != dropped.rend(); ++it) {
            psi.erase(psi.begin() + static_cast<std::ptrdiff_t>(*it));
            clamp_streak.erase(clamp_streak.begin() + static_cast<std::ptrdiff_t>(*it));
        }
        {
            std::vector<std::pair<double, int>> order(psi.size());
            for (std::size_t k = 0; k < psi.size(); ++k) order[k] = {psi[k], clamp_streak[k]};
            std::sort(order.begin(), order.end());
            for (std::size_t k = 0; k < psi.size(); ++k) {
                psi[k] = order[k].first;
                clamp_streak[k] = order[k].second;
            }
        }

        if (merge_close && psi.size() >= 2) {
            std::vector<double> merged;
            merged.reserve(psi.size());
            for (double v : psi) {
                if (!merged.empty() && v - merged.back() < min_gap)
                    merged.back() = 0.5 * (merged.back() + v);
                else
                    merged.push_back(v);
            }
            if (merged.size() != psi.size()) {
                psi = std::move(merged);
                clamp_streak.assign(psi.size(), 0);
                current_ssr = ssr_at_psi(p, psi);
                continue;
            }
        }
        if (!dropped.empty()) {
            current_ssr = ssr_at_psi(p, psi);
            continue;
        }
        if (max_step < config.convergence_tol || stalled) {
            converged = true;
            break;
        }
    }

    // The gamma/beta fixed point can sit in a suboptimal inter-sample
    // interval. Exact coordinate minimization over nearby intervals escapes
    // it; when it moves anything, the damped iteration reruns from there.
    bool polished = false;
    for (int sweep = 0; sweep < 8 && !psi.empty(); ++sweep) {
        bool sweep_moved = false;
        for (std::size_t k = 0; k < psi.size(); ++k) {
            const auto c = coordinate_min(p, psi, k, /*window=*/5, min_gap, current_ssr);
            if (c.ssr < current_ssr * (1.0 - 1e-12) && c.psi != psi[k]) {
                psi[k] = c.psi;
                std::sort(psi.begin(), psi.end());
                current_ssr = c.ssr;
                sweep_moved = polished = true;
            }
        }
        if (!sweep_moved) break;
    }
    if (!polished) break;
    clamp_streak.assign(psi.size(), 0);
    }

    IterationResult result;
    result.fit = solve_at_fixed_psi(p, psi);
    result.fit.iterations = iter;
    result.fit.converged = converged || psi.empty();
    for (std::size_t k = 1; k < psi.size(); ++k)
        if (psi[k] - psi[k - 1] < min_gap) result.degenerate = true;
    return result;
}

inline double effective_min_gap(const NormalizedProfile& p, const FitConfig& config) {
    return config.min_gap > 0.0 ? config.min_gap
                                : 2.0 / static_cast<double>(p.size() - 1);
}

inline std::vector<double> initial_placement(const NormalizedProfile& p, int n_breakpoints,
                                             FitConfig::Placement placement) {
    std::vector<double> psi;
    psi.reserve(static_cast<std::size_t>(n_breakpoints));
    const auto n = p.size();
    for (int j = 1; j <= n_breakpoints; ++j) {
        const double q = static_cast<double>(j) / (n_breakpoints + 1.0);
        if (placement == FitConfig::Placement::Quantile) {
            auto idx = static_cast<std::size_t>(std::lround(q * static_cast<double>(n - 1)));
            idx = std::clamp<std::size_t>(idx, 1, n - 2);
            psi.push_back(p.x[idx]);
        } else {
            psi.push_back(p.x.front() + q * (p.x.back() - p.x.front()));
        }
    }
    std::sort(psi.begin(), psi.end());
    psi.erase(std::unique(psi.begin(), psi.end()), psi.end());
    return psi;
}

// Bayesian information criterion; each breakpoint contributes two parameters.
inline double bic(double ssr, std::size_t n, std::size_t n_breakpoints) {
    const double nn = static_cast<double>(n);
    const double p = 2.0 + 2.0 * static_cast<double>(n_breakpoints);
    return nn * std::log(std::max(ssr, 1e-20) / nn) + p * std::log(nn);
}

}  // namespace detail

// Iterative linearized breakpoint estimation with the breakpoint set fixed
// in size (up to clamping-induced drops).
inline SegmentedFit fit_fixed(const NormalizedProfile& profile,
                              const std::vector<double>& initial_psi,
                              const FitConfig& config = {}) {
    if (profile.size() < 2 + 2 * initial_psi.size())
        throw TooShort(profile.id);
    for (std::size_t k = 0; k < initial_psi.size(); ++k) {
        if (initial_psi[k] <= 0.0 || initial_psi[k] >= 1.0)
            throw std::invalid_argument("initial breakpoints must lie in (0,1)");
        if (k > 0 && initial_psi[k] <= initial_psi[k - 1])
            throw std::invalid_argument("initial breakpoints must be strictly increasing");
    }
    const double min_gap = detail::effective_min_gap(profile, config);
    auto result = detail::iterate_breakpoints(profile, initial_psi, config, min_gap,
                                              /*merge_close=*/false);
    if (result.degenerate)
        throw DegenerateBreakpoints("breakpoints closer than min_gap after convergence");
    return result.fit;
}

// Fits with automatic breakpoint-count selection. For each candidate count a
// best fit is kept, seeded both from quantile initial placement and from
// forward addition (exact search for the most helpful extra breakpoint given
// the best smaller fit); backward elimination under BIC then selects the
// count, and |beta| ~ 0 breakpoints are pruned from the winner.
inline SegmentedFit fit_auto(const NormalizedProfile& profile, const FitConfig& config = {}) {
    const std::size_t n = profile.size();
    const double min_gap = detail::effective_min_gap(profile, config);
    const int max_nb = std::clamp<int>(config.max_breakpoints, 0,
                                       static_cast<int>((n - 2) / 2));

    std::vector<SegmentedFit> best(static_cast<std::size_t>(max_nb) + 1);
    std::vector<double> best_ssr(static_cast<std::size_t>(max_nb) + 1,
                                 std::numeric_limits<double>::infinity());
    auto consider = [&](SegmentedFit f) {
        const auto k = f.breakpoints.size();
        if (k > static_cast<std::size_t>(max_nb)) return;
        const double ssr = compute_ssr(f, profile);
        if (ssr < best_ssr[k]) {
            best_ssr[k] = ssr;
            best[k] = std::move(f);
        }
    };

    {
        auto line = detail::solve_at_fixed_psi(profile, {});
        line.converged = true;
        consider(std::move(line));
    }
    for (int nb = 1; nb <= max_nb; ++nb) {
        const auto psi0 =
            detail::initial_placement(profile, nb, config.initial_placement);
        consider(detail::iterate_breakpoints(profile, psi0, config, min_gap,
                                             /*merge_close=*/true)
                     .fit);
        if (!std::isfinite(best_ssr[static_cast<std::size_t>(nb) - 1])) continue;

        // forward addition: place the new breakpoint in the middle of the
        // widest free stretch, then search every interval exactly
        std::vector<double> trial = best[static_cast<std::size_t>(nb) - 1].breakpoints;
        std::vector<double> walls = trial;
        walls.insert(walls.begin(), profile.x[1]);
        walls.push_back(profile.x[n - 2]);
        double seed = 0.5, widest = -1.0;
        for (std::size_t w = 0; w + 1 < walls.size(); ++w)
            if (walls[w + 1] - walls[w] > widest) {
                widest = walls[w + 1] - walls[w];
                seed = 0.5 * (walls[w] + walls[w + 1]);
            }
        trial.push_back(seed);
        std::sort(trial.begin(), trial.end());
        const auto slot = static_cast<std::size_t>(
            std::find(trial.begin(), trial.end(), seed) - trial.begin());
        const auto cm = detail::coordinate_min(profile, trial, slot,
                                               static_cast<std::ptrdiff_t>(n), min_gap,
                                               detail::ssr_at_psi(profile, trial),
                                               /*check_endpoints=*/false);
        trial[slot] = cm.psi;
        std::sort(trial.begin(), trial.end());
        consider(detail::iterate_breakpoints(profile, trial, config, min_gap,
                                             /*merge_close=*/true)
                     .fit);
    }

    // backward elimination under BIC, refreshing smaller counts with drop-one
    // candidates from the current best
    int sel = max_nb;
    while (sel > 0 && !std::isfinite(best_ssr[static_cast<std::size_t>(sel)])) --sel;
    while (sel > 0) {
        for (std::size_t drop = 0; drop < best[static_cast<std::size_t>(sel)].breakpoints.size();
             ++drop) {
            std::vector<double> psi = best[static_cast<std::size_t>(sel)].breakpoints;
            psi.erase(psi.begin() + static_cast<std::ptrdiff_t>(drop));
            consider(detail::iterate_breakpoints(profile, psi, config, min_gap,
                                                 /*merge_close=*/true)
                         .fit);
        }
        int below = sel - 1;
        while (below > 0 && !std::isfinite(best_ssr[static_cast<std::size_t>(below)])) --below;
        if (detail::bic(best_ssr[static_cast<std::size_t>(below)], n,
                        static_cast<std::size_t>(below)) <
            detail::bic(best_ssr[static_cast<std::size_t>(sel)], n,
                        static_cast<std::size_t>(sel)))
            sel = below;
        else
            break;
    }
    SegmentedFit current = best[static_cast<std::size_t>(sel)];

    // Prune near-zero slope changes, refit, repeat until stable.
    for (;;) {
        std::vector<double> kept;
        for (std::size_t k = 0; k < current.breakpoints.size(); ++k)
            if (std::abs(current.slope_diffs[k]) >= config.beta_zero_tol)
                kept.push_back(current.breakpoints[k]);
        if (kept.size() == current.breakpoints.size()) break;
        current = detail::iterate_breakpoints(profile, kept, config, min_gap,
                                              /*merge_close=*/true)
                      .fit;
    }
    return current;
}

}  // namespace viewfit
