#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "hrp/bsm_baseline.hpp"
#include "hrp/errors.hpp"
#include "hrp/model.hpp"

using namespace hrp;

namespace {
const ModelParams kAtm{};  // r = 0.05, lambda = 1, K = 100, T = 1
}

TEST_CASE("normal CDF reference points") {
    CHECK(bsm::norm_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(bsm::norm_cdf(1.959963985) == doctest::Approx(0.975).epsilon(1e-9));
    CHECK(bsm::norm_cdf(-8.0) < 1e-14);
    CHECK(bsm::norm_cdf(8.0) > 1.0 - 1e-14);
}

TEST_CASE("European put closed form at the money") {
    const double price = bsm::european_put(0.2, 0.05, 100.0, 100.0, 1.0);
    CHECK(std::abs(price - 5.5735260223) < 1e-9);
}

TEST_CASE("European put vanishes deep out of the money") {
    CHECK(bsm::european_put(0.2, 0.05, 100.0, 300.0, 1.0) < 1e-4);
}

TEST_CASE("binomial American put converges to the frozen reference") {
    bsm::BinomialConfig bc;
    bc.n_steps = 5000;
    CHECK(std::abs(bsm::crr_american_put(0.2, kAtm, 100.0, bc) - 6.0902194081) < 1e-8);
    bc.n_steps = 4000;
    CHECK(std::abs(bsm::crr_american_put(0.2, kAtm, 100.0, bc) - 6.0903711) < 3e-4);
    // the high-vol tree converges about twice as slowly in absolute terms
    CHECK(std::abs(bsm::crr_american_put(0.4, kAtm, 100.0, bc) - 13.6676148) < 1e-3);
}

TEST_CASE("American premium and sigma monotonicity") {
    bsm::BinomialConfig bc;
    bc.n_steps = 2000;
    const double am02 = bsm::crr_american_put(0.2, kAtm, 100.0, bc);
    const double am03 = bsm::crr_american_put(0.3, kAtm, 100.0, bc);
    const double am04 = bsm::crr_american_put(0.4, kAtm, 100.0, bc);
    CHECK(am02 > bsm::european_put(0.2, 0.05, 100.0, 100.0, 1.0));
    CHECK(am02 < am03);
    CHECK(am03 < am04);
}

TEST_CASE("deep in the money the American put is worth intrinsic value") {
    bsm::BinomialConfig bc;
    bc.n_steps = 1000;
    CHECK(bsm::crr_american_put(0.2, kAtm, 50.0, bc) == doctest::Approx(50.0).epsilon(1e-12));
}

TEST_CASE("binomial step-count validation") {
    bsm::BinomialConfig bc;
    bc.n_steps = 0;
    CHECK_THROWS_AS(bc.validate(), ConfigError);
    // sigma sqrt(dt) <= r dt makes the risk-neutral weight leave (0, 1)
    bc.n_steps = 10;
    CHECK_THROWS_AS(bsm::crr_american_put(0.01, kAtm, 100.0, bc), ConfigError);
}

TEST_CASE("binomial exercise boundary: level, shape, endpoint") {
    bsm::BinomialConfig bc;
    bc.n_steps = 2000;
    const bsm::ConstantVolBoundary bd = bsm::crr_boundary(0.2, kAtm, 100.0, bc);
    REQUIRE(bd.t.size() == bd.b.size());
    REQUIRE(bd.t.size() >= 2);
    CHECK(std::abs(bd.b.front() - 81.12) < 0.75);
    CHECK(std::abs(bd.b.back() - 100.0) < 1e-9);
    for (std::size_t k = 1; k < bd.b.size(); ++k) CHECK(bd.b[k] >= bd.b[k - 1]);
    for (double b : bd.b) {
        CHECK(b > 0.0);
        CHECK(b <= 100.0);
    }
    // interpolation clamps outside the grid
    CHECK(bd.value_at(-1.0) == bd.b.front());
    CHECK(bd.value_at(2.0) == bd.b.back());
    const double mid = bd.value_at(0.5);
    CHECK(mid >= bd.b.front());
    CHECK(mid <= bd.b.back());
}

TEST_CASE("higher volatility pushes the boundary down") {
    bsm::BinomialConfig bc;
    bc.n_steps = 2000;
    const bsm::ConstantVolBoundary lo = bsm::crr_boundary(0.2, kAtm, 100.0, bc);
    const bsm::ConstantVolBoundary hi = bsm::crr_boundary(0.4, kAtm, 100.0, bc);
    CHECK(std::abs(hi.b.front() - 59.09) < 0.75);
    CHECK(hi.value_at(0.3) < lo.value_at(0.3));
    CHECK(hi.value_at(0.7) < lo.value_at(0.7));
}
