#include "devtox/assess.hpp"

#include <doctest.h>

#include <algorithm>
#include <sstream>

using namespace devtox;

namespace {

Dataset groups(const std::vector<int>& sizes) {
    std::vector<DamRecord> recs;
    for (std::size_t d = 0; d < sizes.size(); ++d)
        for (int i = 0; i < sizes[d]; ++i) recs.push_back({static_cast<double>(d), 10, i % 3, i % 2});
    return Dataset(recs);
}

PredictiveDraws pred_at(std::vector<double> doses, std::vector<std::vector<PredictiveSample>> s) {
    return {std::move(doses), std::move(s)};
}

}  // namespace

TEST_CASE("stratified split sizes") {
    Rng rng(1);
    const auto s = cv_split(groups({28, 29, 27, 28}), 0.2, rng);
    CHECK(s.test.size() == 23u);
    CHECK(s.test.group_sizes() == std::vector<int>{6, 6, 5, 6});
    CHECK(s.train.size() + s.test.size() == 112u);
    const auto z = cv_split(groups({3, 4}), 0.0, rng);
    CHECK(z.test.group_sizes() == std::vector<int>{1, 1});
    CHECK_THROWS_WITH_AS(cv_split(groups({3, 1}), 0.2, rng), doctest::Contains("dose group 1"), std::invalid_argument);

    Rng a(5), b(5);
    const auto s1 = cv_split(groups({10, 12}), 0.3, a);
    const auto s2 = cv_split(groups({10, 12}), 0.3, b);
    CHECK(s1.test.records() == s2.test.records());
    CHECK(s1.train.records() == s2.train.records());
}

TEST_CASE("endpoint ratios") {
    CHECK(*endpoint_ratio(10, 2, 3, Endpoint::Embryolethality) == 0.2);
    CHECK(*endpoint_ratio(10, 2, 4, Endpoint::Malformation) == 0.5);
    CHECK(*endpoint_ratio(10, 2, 3, Endpoint::Combined) == 0.5);
    CHECK_FALSE(endpoint_ratio(4, 4, 0, Endpoint::Malformation).has_value());
}

TEST_CASE("posterior predictive loss by hand") {
    // Dose 0 draws: R/m = 0.1, 0.3 -> mean 0.2, var 0.01.
    // Dose 1 draws: 0.5, 0.5, 0.8 -> mean 0.6, var 0.02.
    const auto pred = pred_at({0.0, 1.0}, {{{10, 1, 0}, {10, 3, 0}}, {{10, 5, 0}, {10, 5, 0}, {10, 8, 0}}});
    const Dataset test({{0.0, 10, 0, 0}, {0.0, 10, 4, 0}, {1.0, 10, 6, 0}});
    const auto r = ppl(test, pred, Endpoint::Embryolethality);
    CHECK(std::abs(r.G - (0.04 + 0.04 + 0.0)) < 1e-12);
    CHECK(std::abs(r.P - (2 * 0.01 + 1 * 0.02)) < 1e-12);

    const Dataset exact({{1.0, 10, 6, 0}});
    const auto flat = pred_at({1.0}, {{{10, 6, 0}, {10, 6, 0}}});
    CHECK(ppl(exact, flat, Endpoint::Embryolethality).G == 0.0);
    CHECK(ppl(exact, flat, Endpoint::Embryolethality).P == 0.0);
    CHECK(interval_score(exact, flat, Endpoint::Embryolethality).S == 0.0);

    // Order of test dams does not matter.
    const Dataset rev({{1.0, 10, 6, 0}, {0.0, 10, 4, 0}, {0.0, 10, 0, 0}});
    CHECK(std::abs(ppl(rev, pred, Endpoint::Embryolethality).G - r.G) < 1e-15);
    CHECK(std::abs(interval_score(rev, pred, Endpoint::Embryolethality).S -
                   interval_score(test, pred, Endpoint::Embryolethality).S) < 1e-15);
    CHECK_THROWS(ppl(Dataset({{2.0, 3, 0, 0}}), pred, Endpoint::Combined));
}

TEST_CASE("interval score penalties") {
    // 101 draws 0.00 .. 1.00 of R/m with m = 100; limits 0.025 and 0.975.
    std::vector<PredictiveSample> s;
    for (int k = 0; k <= 100; ++k) s.push_back({100, k, 0});
    const auto pred = pred_at({0.0}, {s});
    const double width = 0.95;
    const Dataset inside({{0.0, 100, 50, 0}, {0.0, 100, 30, 0}});
    CHECK(std::abs(interval_score(inside, pred, Endpoint::Embryolethality).S - 2 * width) < 1e-12);
    const Dataset below({{0.0, 100, 0, 0}});
    CHECK(std::abs(interval_score(below, pred, Endpoint::Embryolethality).S - (width + 40.0 * 0.025)) < 1e-12);

    // Narrowing a covering interval lowers S.
    std::vector<PredictiveSample> narrow;
    for (int k = 40; k <= 60; ++k) narrow.push_back({100, k, 0});
    const Dataset mid({{0.0, 100, 50, 0}});
    CHECK(interval_score(mid, pred_at({0.0}, {narrow}), Endpoint::Embryolethality).S <
          interval_score(mid, pred, Endpoint::Embryolethality).S);
}

TEST_CASE("malformation endpoint skips dams without live pups") {
    const auto pred = pred_at({0.0}, {{{5, 1, 1}, {5, 5, 0}, {5, 0, 2}}});
    const Dataset test({{0.0, 4, 4, 0}, {0.0, 4, 2, 1}});
    const auto r = ppl(test, pred, Endpoint::Malformation);
    CHECK(r.skipped_test == 1);
    CHECK(r.skipped_draws == 1);
    CHECK(interval_score(test, pred, Endpoint::Malformation).skipped_test == 1);
}

TEST_CASE("comparison table") {
    const auto pred = pred_at({0.0}, {{{5, 1, 1}, {5, 2, 0}, {5, 0, 2}}});
    const Dataset test({{0.0, 4, 1, 1}});
    ComparisonReport rep;
    rep.rows = compare_endpoints("Gen-LNB", test, pred);
    REQUIRE(rep.rows.size() == 3u);
    std::ostringstream os;
    write_comparison(os, rep);
    const auto text = os.str();
    CHECK(text.rfind("model,endpoint,G,P,G_plus_P,S,skipped_test_dams\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
    CHECK(text.find("Gen-LNB,r,") != std::string::npos);
}
