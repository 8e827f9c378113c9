#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "hrp/boundary.hpp"
#include "hrp/errors.hpp"
#include "hrp/model.hpp"
#include "hrp/pde.hpp"

using namespace hrp;

namespace {

const ModelParams kAtm{};
const MarketState kSpot{};
const VolatilityFn kFlat = VolatilityFn::constant(0.2);
const VolatilityFn kSmile = VolatilityFn::hobson_rogers_smile(0.2, 1.0, 0.4);

const pde::ValueSurface& flat_surface() {
    static const pde::ValueSurface vs =
        pde::solve(kAtm, kFlat, pde::default_grid(kAtm, kFlat, kSpot, 48, 128));
    return vs;
}

std::size_t column_nearest(const boundary::ExerciseBoundary& bd, double z) {
    std::size_t best = 0;
    for (std::size_t j = 0; j < bd.z.size(); ++j)
        if (std::abs(bd.z[j] - z) < std::abs(bd.z[best] - z)) best = j;
    return best;
}

}  // namespace

TEST_CASE("extraction covers every column with values in (0, K]") {
    const boundary::ExerciseBoundary bd = boundary::extract(flat_surface());
    REQUIRE(bd.t.size() == flat_surface().n_slices());
    REQUIRE(bd.z.size() == flat_surface().grid().n_v);
    REQUIRE(bd.b.size() == bd.t.size() * bd.z.size());
    CHECK(bd.tolerance > 0.0);
    for (double b : bd.b) {
        CHECK(b > 0.0);
        CHECK(b <= kAtm.K);
    }
}

TEST_CASE("flat-volatility boundary: level, monotone in time, strike at expiry") {
    const boundary::ExerciseBoundary bd = boundary::extract(flat_surface());
    const std::size_t jmid = column_nearest(bd, 1.0);
    // binomial reference for sigma = 0.2 puts the t = 0 boundary near 81.1
    CHECK(std::abs(bd.at(0, jmid) - 81.12) < 1.5);
    for (std::size_t s = 1; s < bd.t.size(); ++s)
        CHECK(bd.at(s, jmid) >= bd.at(s - 1, jmid) - 1e-9);
    const double cell = kAtm.K * (std::exp(flat_surface().grid().dw()) - 1.0);
    for (std::size_t j = 0; j < bd.z.size(); ++j)
        CHECK(std::abs(bd.at(bd.t.size() - 1, j) - kAtm.K) <= cell);
}

TEST_CASE("boundary splits columns into stop-below / continue-above") {
    const pde::ValueSurface& vs = flat_surface();
    const boundary::ExerciseBoundary bd = boundary::extract(vs);
    std::size_t mismatches = 0;
    for (std::size_t s = 0; s < vs.n_slices(); ++s)
        for (std::size_t j = 0; j < vs.grid().n_v; ++j) {
            const double b = bd.at(s, j);
            for (std::size_t i = 0; i + 1 < vs.grid().n_w; ++i) {
                const double x = vs.x_at(i, j);
                if (x > kAtm.K) break;
                const double cell = vs.x_at(i + 1, j) - x;
                const double gap = vs.value(s, i, j) - vs.payoff(i, j);
                if (gap <= 1e-7 * kAtm.K && x > b + cell) ++mismatches;
                if (gap > 1e-4 * kAtm.K && x < b - cell) ++mismatches;
            }
        }
    CHECK(mismatches == 0);
}

TEST_CASE("smile boundary extraction succeeds with finite jumps") {
    const pde::ValueSurface vs =
        pde::solve(kAtm, kSmile, pde::default_grid(kAtm, kSmile, kSpot, 48, 128));
    const boundary::ExerciseBoundary bd = boundary::extract(vs);
    for (double b : bd.b) {
        CHECK(b > 0.0);
        CHECK(b <= kAtm.K);
    }
    CHECK(std::isfinite(bd.max_jump_ratio()));
    CHECK(bd.max_jump_ratio() > 0.0);
}

TEST_CASE("extraction validates its tolerance") {
    CHECK_THROWS_AS(boundary::extract(flat_surface(), 0.0), ConfigError);
    CHECK_THROWS_AS(boundary::extract(flat_surface(), -1.0), ConfigError);
}

TEST_CASE("boundary interpolation clamps inside coverage and rejects outside") {
    const boundary::ExerciseBoundary bd = boundary::extract(flat_surface());
    const std::size_t jmid = column_nearest(bd, 1.0);
    const double at_node = bd.value_at(bd.t[5], bd.z[jmid]);
    CHECK(at_node == doctest::Approx(bd.at(5, jmid)).epsilon(1e-12));
    CHECK_THROWS_AS(bd.value_at(0.5, 1e-6), ExtrapolationError);
    CHECK_THROWS_AS(bd.value_at(0.5, 1e6), ExtrapolationError);
    CHECK_THROWS_AS(bd.value_at(-0.5, 1.0), ExtrapolationError);
}

TEST_CASE("striking curve along a constant ratio path inherits time monotonicity") {
    const boundary::ExerciseBoundary bd = boundary::extract(flat_surface());
    std::vector<double> times, zs;
    for (double t = 0.0; t <= 1.0; t += 0.02) {
        times.push_back(t);
        zs.push_back(1.0);
    }
    const boundary::StrikingCurve curve = boundary::striking_curve_along(bd, times, zs);
    REQUIRE(curve.t.size() == times.size());
    const boundary::MonotonicityReport rep = boundary::monotonicity_report(curve, 1e-4 * kAtm.K);
    CHECK(rep.is_monotone_increasing);
    CHECK(rep.max_decrease <= 1e-4 * kAtm.K);
}

TEST_CASE("striking curve input validation") {
    const boundary::ExerciseBoundary bd = boundary::extract(flat_surface());
    const std::vector<double> times{0.0, 0.5};
    const std::vector<double> zs{1.0};
    CHECK_THROWS_AS(boundary::striking_curve_along(bd, times, zs), ConfigError);
    const std::vector<double> z_out{1.0, 1e6};
    CHECK_THROWS_AS(boundary::striking_curve_along(bd, times, z_out), ExtrapolationError);
}

TEST_CASE("monotonicity report flags dips above the noise floor only") {
    boundary::StrikingCurve curve;
    curve.t = {0.0, 0.25, 0.5, 0.75, 1.0};
    curve.z = {1.0, 1.0, 1.0, 1.0, 1.0};
    curve.b = {80.0, 82.0, 81.5, 83.0, 100.0};

    const boundary::MonotonicityReport hit = boundary::monotonicity_report(curve, 0.01);
    CHECK(!hit.is_monotone_increasing);
    CHECK(hit.max_decrease == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(hit.index_of_max_decrease == 2);
    CHECK(hit.time_of_max_decrease == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(hit.noise_floor == 0.01);

    const boundary::MonotonicityReport miss = boundary::monotonicity_report(curve, 0.6);
    CHECK(miss.is_monotone_increasing);
    CHECK(miss.max_decrease == doctest::Approx(0.5).epsilon(1e-12));

    CHECK_THROWS_AS(boundary::monotonicity_report(curve, -1.0), ConfigError);
}
