#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "viewfit/corpus_io.hpp"
#include "viewfit/profile.hpp"
#include "viewfit/rng.hpp"

using namespace viewfit;

TEST_CASE("csv corpus parsing") {
    SECTION("one row maps directly") {
        std::stringstream in("a1,3,5,0,2\n");
        auto corpus = load_corpus_csv(in);
        REQUIRE(corpus.size() == 1);
        CHECK(corpus[0].id == "a1");
        CHECK(corpus[0].monthly_views == std::vector<std::int64_t>{3, 5, 0, 2});
    }
    SECTION("empty file gives empty corpus") {
        std::stringstream in("");
        CHECK(load_corpus_csv(in).empty());
    }
    SECTION("negative count is a parse error") {
        std::stringstream in("a2,3,-1\n");
        CHECK_THROWS_AS(load_corpus_csv(in), ParseError);
    }
    SECTION("non-integer count is a parse error") {
        std::stringstream in("a2,3,x\n");
        CHECK_THROWS_AS(load_corpus_csv(in), ParseError);
    }
    SECTION("duplicate ids rejected") {
        std::stringstream in("a1,1,2\na1,3,4\n");
        CHECK_THROWS_AS(load_corpus_csv(in), DuplicateId);
    }
    SECTION("variable-length rows permitted, order preserved") {
        std::stringstream in("a,1\nb,1,2,3,4,5\n");
        auto corpus = load_corpus_csv(in);
        REQUIRE(corpus.size() == 2);
        CHECK(corpus[0].id == "a");
        CHECK(corpus[1].monthly_views.size() == 5);
    }
}

TEST_CASE("json corpus parsing") {
    std::stringstream in(R"([{"id":"a1","monthly_views":[3,5,0,2]},
                            {"id":"a2","monthly_views":[1,1,1]}])");
    auto corpus = load_corpus_json(in);
    REQUIRE(corpus.size() == 2);
    CHECK(corpus[0].monthly_views == std::vector<std::int64_t>{3, 5, 0, 2});

    std::stringstream bad(R"([{"id":"a1","monthly_views":[3,-5]}])");
    CHECK_THROWS_AS(load_corpus_json(bad), ParseError);

    std::stringstream dup(R"([{"id":"a","monthly_views":[1]},{"id":"a","monthly_views":[2]}])");
    CHECK_THROWS_AS(load_corpus_json(dup), DuplicateId);
}

TEST_CASE("normalize drops month zero and rescales to the unit square") {
    ViewProfile p{"a", {9, 10, 10, 20}};
    auto norm = normalize(p);
    REQUIRE(norm.size() == 3);
    CHECK(norm.x == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(norm.y[0] == Catch::Approx(0.25));
    CHECK(norm.y[1] == Catch::Approx(0.5));
    CHECK(norm.y[2] == Catch::Approx(1.0));
}

TEST_CASE("normalize error paths") {
    CHECK_THROWS_AS(normalize(ViewProfile{"a", {5, 0, 0, 0}}), AllZeroViews);
    CHECK_THROWS_AS(normalize(ViewProfile{"a", {1, 2}}), TooShort);
}

TEST_CASE("constant monthly views give a straight line near the diagonal") {
    const std::size_t m = 17;
    ViewProfile p{"c", {}};
    p.monthly_views.push_back(1);
    for (std::size_t i = 1; i < m; ++i) p.monthly_views.push_back(7);
    auto norm = normalize(p);
    // y is affine in x (slope (m-2)/(m-1) · ... ): check exact affinity through
    // the endpoints, which approaches y = x as m grows
    const double y0 = norm.y.front();
    for (std::size_t i = 0; i < norm.size(); ++i)
        CHECK(std::abs(norm.y[i] - (y0 + (1.0 - y0) * norm.x[i])) < 1e-12);
    CHECK(y0 < 0.07);
}

TEST_CASE("normalize invariants hold on random inputs") {
    Rng rng(1234);
    for (int trial = 0; trial < 200; ++trial) {
        ViewProfile p{"r", {}};
        const std::size_t m = 3 + rng.uniform_int(60);
        for (std::size_t i = 0; i < m; ++i)
            p.monthly_views.push_back(static_cast<std::int64_t>(rng.uniform_int(50)));
        bool any = false;
        for (std::size_t i = 1; i < m; ++i) any |= p.monthly_views[i] > 0;
        if (!any) p.monthly_views[m - 1] = 1;

        auto norm = normalize(p);
        REQUIRE(norm.size() == m - 1);
        CHECK(norm.x.front() == 0.0);
        CHECK(norm.x.back() == 1.0);
        CHECK(norm.y.back() == Catch::Approx(1.0));
        for (std::size_t i = 1; i < norm.size(); ++i) {
            CHECK(norm.x[i] > norm.x[i - 1]);
            CHECK(norm.y[i] >= norm.y[i - 1]);
        }

        // scale invariance
        ViewProfile scaled = p;
        for (auto& v : scaled.monthly_views) v *= 13;
        auto norm2 = normalize(scaled);
        for (std::size_t i = 0; i < norm.size(); ++i)
            CHECK(std::abs(norm.y[i] - norm2.y[i]) < 1e-12);
    }
}

TEST_CASE("control corpus generation") {
    std::vector<ViewProfile> real{{"a", {1, 2, 3, 4}}, {"b", {0, 9, 9, 9, 9, 9}}};

    SECTION("h_max 1 gives all zeros") {
        auto ctrl = generate_control_corpus(real, {1, 7});
        for (const auto& p : ctrl)
            for (auto v : p.monthly_views) CHECK(v == 0);
    }
    SECTION("lengths match paired real profiles; determinism") {
        auto c1 = generate_control_corpus(real, {50, 7});
        auto c2 = generate_control_corpus(real, {50, 7});
        REQUIRE(c1.size() == real.size());
        for (std::size_t i = 0; i < real.size(); ++i) {
            CHECK(c1[i].monthly_views.size() == real[i].monthly_views.size());
            CHECK(c1[i].monthly_views == c2[i].monthly_views);
        }
        auto c3 = generate_control_corpus(real, {50, 8});
        CHECK(c1[0].monthly_views != c3[0].monthly_views);
    }
    SECTION("empty corpus rejected") {
        CHECK_THROWS_AS(generate_control_corpus({}, {10, 1}), EmptyCorpus);
    }
    SECTION("uniform draws have the right mean") {
        std::vector<ViewProfile> big{{"x", std::vector<std::int64_t>(100001, 0)}};
        auto ctrl = generate_control_corpus(big, {1000, 42});
        double sum = 0.0;
        const auto& v = ctrl[0].monthly_views;
        for (auto c : v) sum += static_cast<double>(c);
        const double mean = sum / static_cast<double>(v.size());
        const double se = (999.0 / std::sqrt(12.0)) / std::sqrt(static_cast<double>(v.size()));
        CHECK(std::abs(mean - 499.5) < 3.0 * se);
    }
}

TEST_CASE("normalize_corpus logs skips instead of failing") {
    std::vector<ViewProfile> corpus{{"ok", {1, 2, 3, 4}}, {"short", {1, 2}}, {"zero", {9, 0, 0}}};
    std::vector<std::pair<std::string, std::string>> skipped;
    auto norm = normalize_corpus(corpus, &skipped);
    CHECK(norm.size() == 1);
    REQUIRE(skipped.size() == 2);
    CHECK(skipped[0] == std::pair<std::string, std::string>{"short", "too_short"});
    CHECK(skipped[1] == std::pair<std::string, std::string>{"zero", "all_zero_views"});
}
