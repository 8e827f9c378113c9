#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>
#include <string>

#include "hrp/errors.hpp"
#include "hrp/model.hpp"
#include "hrp/sde_sim.hpp"

using namespace hrp;

namespace {
const ModelParams kAtm{};
const MarketState kSpot{};
const VolatilityFn kSmile = VolatilityFn::hobson_rogers_smile(0.2, 1.0, 0.4);
}  // namespace

TEST_CASE("config validation") {
    sim::SimConfig sc;
    CHECK_NOTHROW(sc.validate());
    sc.n_paths = 0;
    CHECK_THROWS_AS(sc.validate(), ConfigError);
    sc = sim::SimConfig{};
    sc.n_steps = 0;
    CHECK_THROWS_AS(sc.validate(), ConfigError);
    sc = sim::SimConfig{};
    sc.antithetic = true;
    sc.n_paths = 7;
    CHECK_THROWS_AS(sc.validate(), ConfigError);
}

TEST_CASE("ensemble size guard refuses runaway allocations") {
    sim::SimConfig sc;
    sc.n_paths = 1'000'000;
    sc.n_steps = 100;
    CHECK_THROWS_AS(sim::simulate(kAtm, kSmile, kSpot, sc), ConfigError);
}

TEST_CASE("paths start at the configured state") {
    sim::SimConfig sc;
    sc.n_paths = 8;
    sc.n_steps = 16;
    MarketState s;
    s.x0 = 95.0;
    s.z0 = 1.1;
    const sim::PathSet ps = sim::simulate(kAtm, kSmile, s, sc);
    CHECK(ps.t.front() == 0.0);
    CHECK(ps.t.back() == doctest::Approx(kAtm.T).epsilon(1e-15));
    for (std::size_t p = 0; p < sc.n_paths; ++p) {
        CHECK(ps.at_x(p, 0) == 95.0);
        CHECK(ps.at_z(p, 0) == 1.1);
        CHECK(ps.at_y(p, 0) == doctest::Approx(95.0 / 1.1).epsilon(1e-15));
    }
}

TEST_CASE("same seed reproduces the ensemble bit for bit") {
    sim::SimConfig sc;
    sc.n_paths = 32;
    sc.n_steps = 64;
    sc.seed = 1234;
    const sim::PathSet a = sim::simulate(kAtm, kSmile, kSpot, sc);
    const sim::PathSet b = sim::simulate(kAtm, kSmile, kSpot, sc);
    CHECK(a.increments_digest == b.increments_digest);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(a.z == b.z);
    sc.seed = 1235;
    const sim::PathSet c = sim::simulate(kAtm, kSmile, kSpot, sc);
    CHECK(a.increments_digest != c.increments_digest);
}

TEST_CASE("zero volatility makes the paths deterministic") {
    sim::SimConfig sc;
    sc.n_paths = 3;
    sc.n_steps = 100;
    sc.seed = 5;
    const VolatilityFn zero_vol = VolatilityFn::constant_test_mode(0.0);
    MarketState s;
    s.z0 = 1.05;  // the drift fixed point 1 + r/lambda for sigma = 0
    const sim::PathSet ps = sim::simulate(kAtm, zero_vol, s, sc);
    for (std::size_t p = 0; p < sc.n_paths; ++p) {
        CHECK(ps.at_x(p, sc.n_steps) ==
              doctest::Approx(100.0 * std::exp(0.05)).epsilon(1e-12));
        CHECK(ps.at_z(p, sc.n_steps) == doctest::Approx(1.05).epsilon(1e-12));
    }
    CHECK(sim::consistency_gap(ps) < 1e-5);
}

TEST_CASE("antithetic pairs: terminal log-spots sum to a constant under flat vol") {
    sim::SimConfig sc;
    sc.n_paths = 4;
    sc.n_steps = 32;
    sc.seed = 3;
    sc.antithetic = true;
    const VolatilityFn flat = VolatilityFn::constant(0.2);
    const sim::PathSet ps = sim::simulate(kAtm, flat, kSpot, sc);
    const double want = 2.0 * std::log(100.0) + 2.0 * (0.05 - 0.5 * 0.04) * kAtm.T;
    for (std::size_t pair = 0; pair < sc.n_paths / 2; ++pair) {
        const double got = std::log(ps.at_x(2 * pair, sc.n_steps)) +
                           std::log(ps.at_x(2 * pair + 1, sc.n_steps));
        CHECK(got == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("level Euler can cross zero and reports it; log scheme cannot") {
    sim::SimConfig sc;
    sc.n_paths = 1000;
    sc.n_steps = 1;
    sc.seed = 1;
    sc.scheme = sim::Scheme::Euler;
    const VolatilityFn wild = VolatilityFn::constant(3.0);
    CHECK_THROWS_AS(sim::simulate(kAtm, wild, kSpot, sc), PositivityError);
    sc.scheme = sim::Scheme::LogEuler;
    const sim::PathSet ps = sim::simulate(kAtm, wild, kSpot, sc);
    for (std::size_t p = 0; p < sc.n_paths; ++p) CHECK(ps.at_x(p, 1) > 0.0);
}

TEST_CASE("ratio process stays glued to spot over running average") {
    sim::SimConfig sc;
    sc.n_paths = 200;
    sc.n_steps = 500;
    sc.seed = 11;
    const sim::PathSet coarse = sim::simulate(kAtm, kSmile, kSpot, sc);
    const double gap = sim::consistency_gap(coarse);
    CHECK(gap > 0.0);
    CHECK(gap <= coarse.consistency_tol);

    // halving dt halves the mean per-path worst gap
    auto mean_path_gap = [](const sim::PathSet& ps) {
        double acc = 0.0;
        for (std::size_t p = 0; p < ps.n_paths; ++p) {
            double worst = 0.0;
            for (std::size_t k = 0; k <= ps.n_steps; ++k)
                worst = std::max(worst,
                                 std::abs(ps.at_z(p, k) - ps.at_x(p, k) / ps.at_y(p, k)));
            acc += worst;
        }
        return acc / static_cast<double>(ps.n_paths);
    };
    sc.n_steps = 1000;
    const sim::PathSet fine = sim::simulate(kAtm, kSmile, kSpot, sc);
    const double ratio = mean_path_gap(coarse) / mean_path_gap(fine);
    CHECK(ratio > 1.6);
    CHECK(ratio < 2.5);
}

TEST_CASE("discounted terminal spot is centred on today's spot") {
    sim::SimConfig sc;
    sc.n_paths = 20'000;
    sc.n_steps = 128;
    sc.seed = 42;
    const sim::TerminalSummary ts = sim::discounted_terminal_summary(kAtm, kSmile, kSpot, sc);
    CHECK(ts.n_paths == sc.n_paths);
    CHECK(ts.std_error > 0.0);
    CHECK(std::abs(ts.discounted_mean - 100.0) <= 3.0 * ts.std_error);
}

TEST_CASE("terminal summary draws the same numbers as the full ensemble") {
    sim::SimConfig sc;
    sc.n_paths = 500;
    sc.n_steps = 64;
    sc.seed = 99;
    const sim::PathSet ps = sim::simulate(kAtm, kSmile, kSpot, sc);
    double mean = 0.0;
    for (std::size_t p = 0; p < sc.n_paths; ++p) mean += ps.at_x(p, sc.n_steps);
    mean = std::exp(-kAtm.r * kAtm.T) * mean / static_cast<double>(sc.n_paths);
    const sim::TerminalSummary ts = sim::discounted_terminal_summary(kAtm, kSmile, kSpot, sc);
    CHECK(ts.discounted_mean == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("csv dump shape") {
    sim::SimConfig sc;
    sc.n_paths = 3;
    sc.n_steps = 4;
    const sim::PathSet ps = sim::simulate(kAtm, kSmile, kSpot, sc);
    std::ostringstream os;
    sim::to_csv(ps, os);
    const std::string text = os.str();
    CHECK(text.rfind("t,path_id,x,y,z\n", 0) == 0);
    std::size_t lines = 0;
    for (char c : text)
        if (c == '\n') ++lines;
    CHECK(lines == 1 + sc.n_paths * (sc.n_steps + 1));
}
