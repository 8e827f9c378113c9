#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "hrp/errors.hpp"
#include "hrp/model.hpp"

using namespace hrp;

TEST_CASE("constant volatility is flat with matching bounds") {
    const VolatilityFn vol = VolatilityFn::constant(0.25);
    CHECK(vol.kind() == VolatilityFn::Kind::Constant);
    CHECK(vol(0.1) == 0.25);
    CHECK(vol(1.0) == 0.25);
    CHECK(vol(50.0) == 0.25);
    CHECK(vol.sigma_lo() == 0.25);
    CHECK(vol.sigma_hi() == 0.25);
}

TEST_CASE("constant volatility rejects non-positive and non-finite sigma") {
    CHECK_THROWS_AS(VolatilityFn::constant(0.0), ConfigError);
    CHECK_THROWS_AS(VolatilityFn::constant(-0.2), ConfigError);
    CHECK_THROWS_AS(VolatilityFn::constant(std::nan("")), ConfigError);
    CHECK_THROWS_AS(VolatilityFn::constant(1.0 / 0.0), ConfigError);
}

TEST_CASE("test-mode constant volatility admits sigma = 0") {
    const VolatilityFn vol = VolatilityFn::constant_test_mode(0.0);
    CHECK(vol(1.0) == 0.0);
    CHECK(vol.sigma_lo() == 0.0);
    CHECK(vol.sigma_hi() == 0.0);
    CHECK_THROWS_AS(VolatilityFn::constant_test_mode(-0.1), ConfigError);
}

TEST_CASE("smile volatility: floor at eta, cap at cap, continuous crossover") {
    const VolatilityFn vol = VolatilityFn::hobson_rogers_smile(0.2, 1.0, 0.4);
    CHECK(vol.sigma_lo() == 0.2);
    CHECK(vol.sigma_hi() == 0.4);
    CHECK(vol(1.0) == doctest::Approx(0.2 * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(vol(1e6) == 0.4);
    // cap engages exactly where eta sqrt(1 + eps z^2) = cap
    const double z_star = std::sqrt((0.4 / 0.2) * (0.4 / 0.2) - 1.0);
    CHECK(vol(z_star) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(vol(z_star * 0.999) < 0.4);
    CHECK(vol(z_star * 1.001) == 0.4);
}

TEST_CASE("smile volatility is non-decreasing in the ratio") {
    const VolatilityFn vol = VolatilityFn::hobson_rogers_smile(0.2, 1.0, 0.4);
    double prev = 0.0;
    for (double z = 0.05; z < 5.0; z += 0.05) {
        CHECK(vol(z) >= prev);
        prev = vol(z);
    }
}

TEST_CASE("volatility rejects queries outside z > 0") {
    const VolatilityFn vol = VolatilityFn::hobson_rogers_smile(0.2, 1.0, 0.4);
    CHECK_THROWS_AS(vol(0.0), ConfigError);
    CHECK_THROWS_AS(vol(-1.0), ConfigError);
    CHECK_THROWS_AS(vol(std::nan("")), ConfigError);
}

TEST_CASE("smile factory validates its parameters") {
    CHECK_THROWS_AS(VolatilityFn::hobson_rogers_smile(0.0, 1.0, 0.4), ConfigError);
    CHECK_THROWS_AS(VolatilityFn::hobson_rogers_smile(0.2, -1.0, 0.4), ConfigError);
    CHECK_THROWS_AS(VolatilityFn::hobson_rogers_smile(0.2, 1.0, 0.0), ConfigError);
    // cap below eta would make sigma non-positive somewhere near z = 0
    CHECK_THROWS_AS(VolatilityFn::hobson_rogers_smile(0.4, 1.0, 0.2), ConfigError);
}

TEST_CASE("parameter validation rejects non-positive fields") {
    ModelParams p;
    CHECK_NOTHROW(p.validate());
    p.r = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = ModelParams{};
    p.lambda = -1.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = ModelParams{};
    p.K = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = ModelParams{};
    p.T = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);

    MarketState s;
    CHECK_NOTHROW(s.validate());
    CHECK(s.y0() == doctest::Approx(s.x0 / s.z0));
    s.z0 = 0.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("ln Z drift: positive below the reversion zone, negative above") {
    ModelParams p;  // r = 0.05, lambda = 1
    const VolatilityFn vol = VolatilityFn::hobson_rogers_smile(0.2, 1.0, 0.4);
    const ReversionZone zone = reversion_zone(p, vol);
    // 1 + r/lambda - sigma^2 / (2 lambda) at the two sigma extremes
    CHECK(zone.lo == doctest::Approx(0.97).epsilon(1e-12));
    CHECK(zone.hi == doctest::Approx(1.03).epsilon(1e-12));
    CHECK(drift_ln_z(p, vol, 0.5) > 0.0);
    CHECK(drift_ln_z(p, vol, zone.lo * 0.999) > 0.0);
    CHECK(drift_ln_z(p, vol, zone.hi * 1.001) < 0.0);
    CHECK(drift_ln_z(p, vol, 2.0) < 0.0);
}

TEST_CASE("constant volatility collapses the reversion zone to a fixed point") {
    ModelParams p;
    const VolatilityFn vol = VolatilityFn::constant(0.2);
    const ReversionZone zone = reversion_zone(p, vol);
    CHECK(zone.lo == doctest::Approx(zone.hi).epsilon(1e-15));
    CHECK(zone.lo == doctest::Approx(1.03).epsilon(1e-12));
    CHECK(std::abs(drift_ln_z(p, vol, zone.lo)) < 1e-12);
}

TEST_CASE("model config round-trips through JSON") {
    const std::string text = R"({
        "r": 0.03, "lambda": 2.0, "K": 90.0, "T": 0.5,
        "vol": {"kind": "hobson_rogers_smile", "eta": 0.15, "eps": 2.0, "cap": 0.35},
        "x0": 95.0, "z0": 1.1
    })";
    const ModelConfig cfg = parse_model_config(text);
    CHECK(cfg.params.r == 0.03);
    CHECK(cfg.params.lambda == 2.0);
    CHECK(cfg.params.K == 90.0);
    CHECK(cfg.params.T == 0.5);
    CHECK(cfg.vol.kind() == VolatilityFn::Kind::HobsonRogersSmile);
    CHECK(cfg.vol.eta() == 0.15);
    CHECK(cfg.state.x0 == 95.0);
    CHECK(cfg.state.z0 == 1.1);

    const ModelConfig again = parse_model_config(model_config_to_json(cfg));
    CHECK(again.params.K == cfg.params.K);
    CHECK(again.vol.eps() == cfg.vol.eps());
    CHECK(again.state.z0 == cfg.state.z0);
}

TEST_CASE("model config parsing is strict") {
    const std::string base = R"({
        "r": 0.05, "lambda": 1.0, "K": 100.0, "T": 1.0,
        "vol": {"kind": "constant", "sigma": 0.2},
        "x0": 100.0, "z0": 1.0
    })";
    CHECK_NOTHROW(parse_model_config(base));
    CHECK_THROWS_AS(parse_model_config("not json"), ConfigError);
    CHECK_THROWS_AS(parse_model_config("[1, 2]"), ConfigError);
    // unknown key
    CHECK_THROWS_AS(parse_model_config(R"({
        "r": 0.05, "lambda": 1.0, "K": 100.0, "T": 1.0,
        "vol": {"kind": "constant", "sigma": 0.2},
        "x0": 100.0, "z0": 1.0, "dividend": 0.01
    })"),
                    ConfigError);
    // missing key
    CHECK_THROWS_AS(parse_model_config(R"({
        "r": 0.05, "lambda": 1.0, "K": 100.0, "T": 1.0,
        "vol": {"kind": "constant", "sigma": 0.2},
        "x0": 100.0
    })"),
                    ConfigError);
    // smile parameters on a constant kind
    CHECK_THROWS_AS(parse_model_config(R"({
        "r": 0.05, "lambda": 1.0, "K": 100.0, "T": 1.0,
        "vol": {"kind": "constant", "sigma": 0.2, "eta": 0.2},
        "x0": 100.0, "z0": 1.0
    })"),
                    ConfigError);
    // unknown volatility kind
    CHECK_THROWS_AS(parse_model_config(R"({
        "r": 0.05, "lambda": 1.0, "K": 100.0, "T": 1.0,
        "vol": {"kind": "heston", "sigma": 0.2},
        "x0": 100.0, "z0": 1.0
    })"),
                    ConfigError);
}
