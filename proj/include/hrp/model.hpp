#pragma once

/// Model layer: contract parameters, the volatility-vs-ratio curve, and the
/// drift diagnostics of the ratio process Z = X / Y, where Y is the
/// exponentially weighted running average of X with decay rate lambda.
///
/// Dynamics (risk-neutral):
///   dX = r X dt + sigma(Z) X dB
///   dY = lambda (X - Y) dt
///   dZ = (r + lambda - lambda Z) Z dt + sigma(Z) Z dB

#include <string>

#include "hrp/errors.hpp"

namespace hrp {

/// Volatility as a function of the ratio z > 0.  Two shapes:
///  - Constant:  sigma(z) = s
///  - Smile:     sigma(z) = min(eta * sqrt(1 + eps z^2), cap)
/// Both are bounded away from 0 and infinity, which the pricing and boundary
/// layers rely on (certified bounds sigma_lo / sigma_hi below).
class VolatilityFn {
  public:
    enum class Kind { Constant, HobsonRogersSmile };

    static VolatilityFn constant(double sigma);
    static VolatilityFn hobson_rogers_smile(double eta, double eps, double cap);

    /// Test-mode constructor: accepts sigma = 0, which the regular factory
    /// rejects.  A zero-vol asset is deterministic, which supplies exact
    /// expected prices for Monte Carlo tests; the PDE layer still refuses it
    /// (grid sizing divides by sigma_hi).
    static VolatilityFn constant_test_mode(double sigma);

    /// sigma(z); throws ConfigError ("domain") if z <= 0 or not finite.
    double operator()(double z) const;

    /// Certified pointwise bounds: sigma_lo <= sigma(z) <= sigma_hi for all z > 0.
    double sigma_lo() const noexcept { return lo_; }
    double sigma_hi() const noexcept { return hi_; }

    Kind kind() const noexcept { return kind_; }
    double eta() const noexcept { return eta_; }
    double eps() const noexcept { return eps_; }
    double cap() const noexcept { return cap_; }
    double constant_sigma() const noexcept { return sigma_; }

    std::string describe() const;

  private:
    VolatilityFn() = default;

    Kind kind_ = Kind::Constant;
    double sigma_ = 0.0;               // Constant
    double eta_ = 0.0, eps_ = 0.0, cap_ = 0.0;  // Smile
    double lo_ = 0.0, hi_ = 0.0;
};

/// Contract + rate parameters.  All four strictly positive.
struct ModelParams {
    double r = 0.05;      // short rate, per year
    double lambda = 1.0;  // memory decay rate, per year
    double K = 100.0;     // strike
    double T = 1.0;       // maturity, years

    void validate() const;
};

/// Spot state.  x0, z0 > 0; y0 is implied, y0 = x0 / z0.
struct MarketState {
    double x0 = 100.0;
    double z0 = 1.0;

    double y0() const noexcept { return x0 / z0; }
    void validate() const;
};

/// Drift of ln Z at ratio level z:
///   drift_ln_z(z) = -lambda * (z - (1 + r/lambda - sigma(z)^2 / (2 lambda)))
/// Positive below the mean-reversion zone, negative above it.
double drift_ln_z(const ModelParams& p, const VolatilityFn& vol, double z);

/// The band of ratio levels toward which ln Z reverts:
///   [1 + r/lambda - sigma_hi^2/(2 lambda),  1 + r/lambda - sigma_lo^2/(2 lambda)]
/// Collapses to a point for constant volatility.
struct ReversionZone {
    double lo = 0.0;
    double hi = 0.0;
};

ReversionZone reversion_zone(const ModelParams& p, const VolatilityFn& vol);

/// Strict JSON parsing of {"r","lambda","K","T","vol":{...},"x0","z0"}.
/// Unknown keys anywhere in the document are rejected.
struct ModelConfig {
    ModelParams params;
    VolatilityFn vol = VolatilityFn::constant(0.2);
    MarketState state;
};

ModelConfig parse_model_config(const std::string& json_text);
std::string model_config_to_json(const ModelConfig& cfg);

}  // namespace hrp
