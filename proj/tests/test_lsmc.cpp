#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "hrp/bsm_baseline.hpp"
#include "hrp/errors.hpp"
#include "hrp/lsmc.hpp"
#include "hrp/model.hpp"

using namespace hrp;

namespace {

const ModelParams kAtm{};
const VolatilityFn kFlat = VolatilityFn::constant(0.2);
const VolatilityFn kSmile = VolatilityFn::hobson_rogers_smile(0.2, 1.0, 0.4);

lsmc::LsmcConfig test_profile() {
    lsmc::LsmcConfig cfg;
    cfg.basis_degree = 3;
    cfg.n_paths = 10'000;
    cfg.n_steps = 50;
    cfg.seed = 7;
    return cfg;
}

}  // namespace

TEST_CASE("config validation") {
    lsmc::LsmcConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.basis_degree = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = lsmc::LsmcConfig{};
    cfg.basis_degree = 6;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = lsmc::LsmcConfig{};
    cfg.n_paths = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = lsmc::LsmcConfig{};
    cfg.n_steps = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("flat-volatility price agrees with the binomial benchmark") {
    MarketState s;
    const lsmc::PriceEstimate est = lsmc::price_american_put(kAtm, kFlat, s, test_profile());
    CHECK(est.n_paths == 10'000);
    CHECK(est.std_error > 0.03);
    CHECK(est.std_error < 0.12);
    CHECK(std::abs(est.price - 6.0903711) <= 3.0 * est.std_error);
    // x and z are nearly collinear at early dates (the average has barely
    // decoupled from spot), so the stabilized solve is expected to engage
    CHECK(est.ridge_fallback);
    CHECK(!est.degenerate_european);
}

TEST_CASE("out-of-sample evaluation is the conservative side of the pair") {
    MarketState s;
    const lsmc::PriceEstimate est = lsmc::price_american_put(kAtm, kFlat, s, test_profile());
    CHECK(est.in_sample_price >= est.price);
}

TEST_CASE("same configuration reproduces the estimate exactly") {
    MarketState s;
    const lsmc::PriceEstimate a = lsmc::price_american_put(kAtm, kSmile, s, test_profile());
    const lsmc::PriceEstimate b = lsmc::price_american_put(kAtm, kSmile, s, test_profile());
    CHECK(a.price == b.price);
    CHECK(a.std_error == b.std_error);
    lsmc::LsmcConfig other = test_profile();
    other.seed = 8;
    const lsmc::PriceEstimate c = lsmc::price_american_put(kAtm, kSmile, s, other);
    CHECK(a.price != c.price);
}

TEST_CASE("zero volatility collapses to the deterministic exercise value") {
    MarketState s;
    s.x0 = 90.0;
    const VolatilityFn zero_vol = VolatilityFn::constant_test_mode(0.0);
    const lsmc::PriceEstimate est = lsmc::price_american_put(kAtm, zero_vol, s, test_profile());
    // immediate exercise dominates any deterministic continuation under r > 0
    CHECK(std::abs(est.price - 10.0) < 1e-9);
    CHECK(est.std_error < 1e-10);
}

TEST_CASE("near-zero maturity prices at intrinsic value") {
    ModelParams p;
    p.T = 1e-9;
    MarketState s;
    s.x0 = 90.0;
    const lsmc::PriceEstimate est = lsmc::price_american_put(p, kFlat, s, test_profile());
    CHECK(std::abs(est.price - 10.0) < 1e-4);
}

TEST_CASE("deep out of the money: no exercise anywhere, European degenerate") {
    MarketState s;
    s.x0 = 200.0;
    const lsmc::PriceEstimate est = lsmc::price_american_put(kAtm, kFlat, s, test_profile());
    CHECK(est.price == 0.0);
    CHECK(est.degenerate_european);
}

TEST_CASE("price decreases in spot") {
    lsmc::LsmcConfig cfg = test_profile();
    cfg.itm_only = false;  // high spots leave too few in-the-money paths to fit on
    double prev = 1e300;
    for (double x0 : {80.0, 90.0, 100.0, 110.0, 120.0}) {
        MarketState s;
        s.x0 = x0;
        const lsmc::PriceEstimate est = lsmc::price_american_put(kAtm, kSmile, s, cfg);
        CHECK(est.price < prev);
        prev = est.price;
    }
}

TEST_CASE("intrinsic value is a floor") {
    MarketState s;
    s.x0 = 80.0;
    lsmc::LsmcConfig cfg = test_profile();
    cfg.itm_only = false;
    const lsmc::PriceEstimate est = lsmc::price_american_put(kAtm, kSmile, s, cfg);
    CHECK(est.price >= 20.0 - 1e-9);
}

TEST_CASE("too few in-the-money paths for the basis raises a regression error") {
    MarketState s;
    s.x0 = 120.0;
    lsmc::LsmcConfig cfg = test_profile();
    cfg.n_paths = 300;
    CHECK_THROWS_AS(lsmc::price_american_put(kAtm, kFlat, s, cfg), RegressionError);
}

TEST_CASE("exercise histogram: shape, conservation, no exercise at inception") {
    MarketState s;
    const lsmc::LsmcConfig cfg = test_profile();
    const lsmc::ExerciseHistogram hist = lsmc::exercise_frequency_surface(kAtm, kFlat, s, cfg);
    REQUIRE(hist.n_zbins() == 16);
    REQUIRE(hist.t.size() == cfg.n_steps + 1);
    REQUIRE(hist.z_edges.size() == 17);
    REQUIRE(hist.counts.size() == hist.t.size() * hist.n_zbins());
    for (std::size_t e = 1; e < hist.z_edges.size(); ++e)
        CHECK(hist.z_edges[e] > hist.z_edges[e - 1]);

    std::size_t sum = 0;
    for (std::size_t c : hist.counts) sum += c;
    CHECK(sum == hist.total);
    CHECK(hist.total <= cfg.n_paths);
    CHECK(hist.total > 0);
    for (std::size_t bin = 0; bin < hist.n_zbins(); ++bin) CHECK(hist.at(0, bin) == 0);

    // an at-the-money put with a year to run must exercise somewhere late
    std::size_t late = 0;
    for (std::size_t date = cfg.n_steps / 2; date <= cfg.n_steps; ++date)
        for (std::size_t bin = 0; bin < hist.n_zbins(); ++bin) late += hist.at(date, bin);
    CHECK(late > 0);
}
