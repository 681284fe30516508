#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "viewfit/models.hpp"
#include "viewfit/rng.hpp"

using namespace viewfit;

namespace {

SegmentFeatures make_features(std::vector<double> angles, std::vector<double> lengths) {
    SegmentFeatures f;
    f.angles = std::move(angles);
    f.lengths = std::move(lengths);
    return f;
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        const double fa = static_cast<double>(i) / static_cast<double>(a.size());
        const double fb = static_cast<double>(j) / static_cast<double>(b.size());
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

double ks_threshold(std::size_t n, std::size_t m, double alpha) {
    const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    return c * std::sqrt((static_cast<double>(n) + static_cast<double>(m)) /
                         (static_cast<double>(n) * static_cast<double>(m)));
}

}  // namespace

TEST_CASE("kde basics") {
    SECTION("peak density of a single atom") {
        GaussianKde kde({0.0}, 1.0);
        CHECK(kde.density(0.0) == Catch::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
    }
    SECTION("samples concentrate near a repeated atom") {
        GaussianKde kde(std::vector<double>(50, 3.0));
        Rng rng(1);
        int outside = 0;
        for (int i = 0; i < 20000; ++i)
            if (std::abs(kde.sample(rng) - 3.0) >= 4.0 * kde.bandwidth()) ++outside;
        CHECK(outside <= 3);  // P(|Z|>4) ~ 6e-5
    }
    SECTION("density integrates to ~1 on a covering grid") {
        Rng rng(2);
        std::vector<double> data;
        for (int i = 0; i < 200; ++i) data.push_back(rng.gaussian() * 2.0 + 1.0);
        GaussianKde kde(data);
        double integral = 0.0;
        const double lo = -15.0, hi = 17.0, step = 0.01;
        for (double x = lo; x < hi; x += step) integral += kde.density(x) * step;
        CHECK(integral > 0.99);
        CHECK(integral < 1.01);
    }
    SECTION("empty input rejected") {
        CHECK_THROWS_AS(GaussianKde(std::vector<double>{}), EmptyInput);
    }
}

TEST_CASE("null model") {
    auto model = fit_null(3);
    CHECK(same_null_model(model, fit_null(3)));
    CHECK_FALSE(same_null_model(model, fit_null(4)));

    auto draws = sample(model, 100000, 9);
    double alpha_sum = 0.0, l1_sum = 0.0;
    for (const auto& f : draws) {
        REQUIRE(f.n_segments() == 3);
        double lsum = 0.0;
        for (double a : f.angles) {
            CHECK(a >= 0.0);
            CHECK(a < 90.0);
        }
        for (double l : f.lengths) {
            CHECK(l > 0.0);
            lsum += l;
        }
        CHECK(std::abs(lsum - 1.0) < 1e-9);
        alpha_sum += f.angles[0];
        l1_sum += f.lengths[0];
    }
    const double n = static_cast<double>(draws.size());
    const double alpha_se = (90.0 / std::sqrt(12.0)) / std::sqrt(n);
    CHECK(std::abs(alpha_sum / n - 45.0) < 3.0 * alpha_se);
    // renormalized uniform lengths are Dirichlet(1,1,1): each marginal Beta(1,2)
    const double beta_se = std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / 2.0 / (3.0 + 1.0)) / std::sqrt(n);
    CHECK(std::abs(l1_sum / n - 1.0 / 3.0) < 5.0 * beta_se);
}

TEST_CASE("sampling is deterministic given the seed") {
    Rng rng(4);
    std::vector<SegmentFeatures> train;
    for (int i = 0; i < 200; ++i)
        train.push_back(make_features({rng.uniform(10, 80), rng.uniform(10, 80)},
                                      {rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8)}));
    for (auto kind : {fit_null(2), fit_independent(train), fit_markov1_uni(train, 8),
                      fit_markov1_multi(train, 6, 6)}) {
        auto a = sample(kind, 50, 1234);
        auto b = sample(kind, 50, 1234);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].angles == b[i].angles);
            CHECK(a[i].lengths == b[i].lengths);
        }
        auto c = sample(kind, 50, 1235);
        CHECK(a[0].angles != c[0].angles);
    }
}

TEST_CASE("independent model reproduces marginals") {
    Rng rng(5);
    std::vector<SegmentFeatures> train;
    for (int i = 0; i < 4000; ++i) {
        const double a1 = 30.0 + 10.0 * rng.gaussian();
        const double a2 = 55.0 + 6.0 * rng.gaussian();
        train.push_back(make_features({std::clamp(a1, 1.0, 89.0), std::clamp(a2, 1.0, 89.0)},
                                      {rng.uniform(0.2, 0.5), rng.uniform(0.4, 0.7)}));
    }
    // hold out half for the KS comparison
    std::vector<SegmentFeatures> fit_half(train.begin(), train.begin() + 2000);
    std::vector<SegmentFeatures> held(train.begin() + 2000, train.end());

    auto model = fit_independent(fit_half);
    auto draws = sample(model, 10000, 77);

    std::vector<double> synth_a1, held_a1;
    for (const auto& f : draws) synth_a1.push_back(f.angles[0]);
    for (const auto& f : held) held_a1.push_back(f.angles[0]);
    const double d = ks_statistic(synth_a1, held_a1);
    CHECK(d < ks_threshold(synth_a1.size(), held_a1.size(), 0.01));
}

TEST_CASE("markov univariate tables capture constructed dependence") {
    Rng rng(6);
    SECTION("identity dependence gives near-diagonal tables") {
        std::vector<SegmentFeatures> train;
        for (int i = 0; i < 5000; ++i) {
            const double a = rng.uniform(5, 85);
            const double l = rng.uniform(0.1, 0.9);
            train.push_back(make_features({a, a, a}, {l, l, l}));
        }
        auto model = fit_markov1_uni(train, 10);
        REQUIRE(model.alpha_tables.size() == 2);
        for (const auto& table : model.alpha_tables)
            for (std::size_t r = 0; r < table.n_cells; ++r) {
                if (table.rows[r].empty()) continue;
                CHECK(table.rows[r][r] > 0.95);
            }
    }
    SECTION("independent steps give homogeneous rows") {
        std::vector<SegmentFeatures> train;
        for (int i = 0; i < 20000; ++i)
            train.push_back(make_features({rng.uniform(5, 85), rng.uniform(5, 85)},
                                          {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)}));
        auto model = fit_markov1_uni(train, 5);
        const auto& table = model.alpha_tables[0];
        for (std::size_t r = 0; r < table.n_cells; ++r)
            for (std::size_t c = 0; c < table.rows[r].size(); ++c)
                CHECK(std::abs(table.rows[r][c] - 0.2) < 0.05);
    }
    SECTION("rows are normalized") {
        std::vector<SegmentFeatures> train;
        for (int i = 0; i < 300; ++i)
            train.push_back(make_features({rng.uniform(5, 85), rng.uniform(5, 85)},
                                          {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)}));
        auto model = fit_markov1_uni(train, 7);
        for (const auto& tables : {model.alpha_tables, model.l_tables})
            for (const auto& table : tables)
                for (std::size_t r = 0; r < table.n_cells; ++r) {
                    double sum = 0.0;
                    for (double v : table.row(r)) sum += v;
                    CHECK(std::abs(sum - 1.0) < 1e-9);
                }
    }
}

TEST_CASE("markov multivariate captures cross-dependence the univariate misses") {
    Rng rng(7);
    // l_2 depends strongly on alpha_1 and not on l_1
    std::vector<SegmentFeatures> train;
    for (int i = 0; i < 8000; ++i) {
        const double a1 = rng.uniform(10, 80);
        const double l1 = rng.uniform(0.2, 0.8);
        const double l2 = std::clamp(a1 / 90.0 + 0.05 * rng.gaussian(), 0.05, 1.5);
        const double a2 = rng.uniform(10, 80);
        train.push_back(make_features({a1, a2}, {l1, l2}));
    }
    auto corr = [](const std::vector<SegmentFeatures>& fs) {
        double ma = 0, ml = 0;
        for (const auto& f : fs) {
            ma += f.angles[0];
            ml += f.lengths[1];
        }
        ma /= static_cast<double>(fs.size());
        ml /= static_cast<double>(fs.size());
        double ca = 0, cl = 0, cross = 0;
        for (const auto& f : fs) {
            ca += (f.angles[0] - ma) * (f.angles[0] - ma);
            cl += (f.lengths[1] - ml) * (f.lengths[1] - ml);
            cross += (f.angles[0] - ma) * (f.lengths[1] - ml);
        }
        return cross / std::sqrt(ca * cl);
    };
    const double rho_train = corr(train);
    CHECK(rho_train > 0.5);  // sanity on the construction (renormalized lengths weaken it)

    auto uni = fit_markov1_uni(train, 8);
    auto multi = fit_markov1_multi(train, 8, 8);
    const double rho_uni = corr(sample(uni, 10000, 11));
    const double rho_multi = corr(sample(multi, 10000, 11));
    CHECK(rho_multi > 0.0);
    CHECK(std::abs(rho_uni) < std::abs(rho_multi) / 2.0);
}

TEST_CASE("single-cell binning collapses to per-step marginals") {
    Rng rng(8);
    std::vector<SegmentFeatures> train;
    for (int i = 0; i < 3000; ++i) {
        const double a1 = std::clamp(30.0 + 8.0 * rng.gaussian(), 1.0, 89.0);
        const double a2 = std::clamp(60.0 + 5.0 * rng.gaussian(), 1.0, 89.0);
        train.push_back(make_features({a1, a2}, {rng.uniform(0.2, 0.6), rng.uniform(0.3, 0.7)}));
    }
    auto multi = fit_markov1_multi(train, 1, 1);
    auto indep = fit_independent(train);
    auto s_multi = sample(multi, 10000, 21);
    auto s_indep = sample(indep, 10000, 22);
    for (std::size_t pos = 0; pos < 2; ++pos) {
        std::vector<double> a, b;
        for (const auto& f : s_multi) a.push_back(f.angles[pos]);
        for (const auto& f : s_indep) b.push_back(f.angles[pos]);
        CHECK(ks_statistic(a, b) < ks_threshold(a.size(), b.size(), 0.01));
    }
}

TEST_CASE("samples always satisfy the feature invariants") {
    Rng rng(9);
    std::vector<SegmentFeatures> train;
    for (int i = 0; i < 500; ++i)
        train.push_back(make_features(
            {rng.uniform(5, 85), rng.uniform(5, 85), rng.uniform(5, 85)},
            {rng.uniform(0.1, 0.5), rng.uniform(0.1, 0.5), rng.uniform(0.1, 0.5)}));
    for (const auto& model :
         {fit_null(3), fit_independent(train), fit_markov1_uni(train, 6),
          fit_markov1_multi(train, 5, 5)}) {
        for (const auto& f : sample(model, 2000, 5)) {
            double lsum = 0.0;
            for (double l : f.lengths) {
                CHECK(l > 0.0);
                lsum += l;
            }
            CHECK(std::abs(lsum - 1.0) < 1e-9);
            for (double a : f.angles) {
                CHECK(a > -90.0);
                CHECK(a < 90.0);
            }
        }
    }
}

TEST_CASE("fitting on own output reproduces transition tables") {
    Rng rng(10);
    std::vector<SegmentFeatures> train;
    for (int i = 0; i < 3000; ++i) {
        const double a1 = rng.uniform(10, 80);
        const double a2 = std::clamp(a1 * 0.6 + 10.0 + 5.0 * rng.gaussian(), 1.0, 89.0);
        const double l1 = rng.uniform(0.2, 0.8);
        const double l2 = std::clamp(1.0 - l1 + 0.05 * rng.gaussian(), 0.05, 1.2);
        train.push_back(make_features({a1, a2}, {l1, l2}));
    }
    auto model = fit_markov1_uni(train, 6);
    auto resampled = sample(model, 100000, 31);
    auto refit = fit_markov1_uni(resampled, 6);

    // lengths get renormalized when sampling, so compare the angle tables,
    // whose support is untouched by renormalization
    REQUIRE(refit.alpha_tables.size() == model.alpha_tables.size());
    for (std::size_t t = 0; t < model.alpha_tables.size(); ++t) {
        const auto& orig = model.alpha_tables[t];
        const auto& again = refit.alpha_tables[t];
        for (std::size_t r = 0; r < orig.n_cells; ++r) {
            if (orig.rows[r].empty() || again.rows[r].empty()) continue;
            double tv = 0.0;
            for (std::size_t c = 0; c < orig.rows[r].size(); ++c)
                tv += std::abs(orig.rows[r][c] - again.rows[r][c]);
            CHECK(tv / 2.0 < 0.05);
        }
    }
}

TEST_CASE("per-cluster mixture equals concatenated per-cluster samples") {
    Rng rng(12);
    std::vector<SegmentFeatures> low, high;
    for (int i = 0; i < 1000; ++i) {
        low.push_back(make_features({std::clamp(20.0 + 5.0 * rng.gaussian(), 1.0, 89.0),
                                     std::clamp(15.0 + 5.0 * rng.gaussian(), 1.0, 89.0)},
                                    {rng.uniform(0.2, 0.4), rng.uniform(0.6, 0.8)}));
        if (i < 500)
            high.push_back(make_features({std::clamp(70.0 + 5.0 * rng.gaussian(), 1.0, 89.0),
                                          std::clamp(65.0 + 5.0 * rng.gaussian(), 1.0, 89.0)},
                                         {rng.uniform(0.5, 0.7), rng.uniform(0.3, 0.5)}));
    }
    auto m_low = fit_independent(low);
    auto m_high = fit_independent(high);

    // proportional concatenation: 2/3 low, 1/3 high
    auto concat = sample(m_low, 20000, 41);
    auto part = sample(m_high, 10000, 42);
    concat.insert(concat.end(), part.begin(), part.end());

    // mixture draw: choose a model per draw with probability proportional to size
    std::vector<SegmentFeatures> mixture;
    Rng pick(43);
    std::size_t n_low = 0, n_high = 0;
    for (int i = 0; i < 30000; ++i)
        (pick.uniform() < 2.0 / 3.0 ? n_low : n_high) += 1;
    auto mix_low = sample(m_low, n_low, 44);
    auto mix_high = sample(m_high, n_high, 45);
    mixture.insert(mixture.end(), mix_low.begin(), mix_low.end());
    mixture.insert(mixture.end(), mix_high.begin(), mix_high.end());

    std::vector<double> a, b;
    for (const auto& f : concat) a.push_back(f.angles[0]);
    for (const auto& f : mixture) b.push_back(f.angles[0]);
    CHECK(ks_statistic(a, b) < ks_threshold(a.size(), b.size(), 0.01));
}

TEST_CASE("model fitting error paths") {
    CHECK_THROWS_AS(fit_independent({}), EmptyInput);
    CHECK_THROWS_AS(fit_markov1_uni({}, 5), EmptyInput);
    CHECK_THROWS_AS(fit_markov1_multi({}, 5, 5), EmptyInput);
    std::vector<SegmentFeatures> mixed{make_features({1, 2}, {0.5, 0.5}),
                                       make_features({1}, {1.0})};
    CHECK_THROWS_AS(fit_independent(mixed), MixedSegmentCounts);
    CHECK_THROWS_AS(fit_null(0), std::invalid_argument);
}
