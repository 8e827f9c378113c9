#pragma once

/// Constant-volatility baselines: closed-form European put, CRR binomial
/// American put, and the binomial exercise boundary.  These are the envelope
/// oracles the state-dependent pricers are squeezed against.

#include <cstddef>
#include <vector>

#include "hrp/errors.hpp"
#include "hrp/model.hpp"

namespace hrp::bsm {

struct BinomialConfig {
    std::size_t n_steps = 2000;

    void validate() const;
};

/// Standard normal CDF.
double norm_cdf(double x) noexcept;

/// Black-Scholes European put.
double european_put(double sigma, double r, double K, double x0, double T);

/// CRR tree American put.  u = exp(sigma sqrt(dt)), d = 1/u.  Throws
/// ConfigError when the step count is so small the risk-neutral probability
/// leaves (0,1), reporting the smallest admissible n_steps.
double crr_american_put(double sigma, const ModelParams& p, double x0,
                        const BinomialConfig& cfg);

/// Exercise boundary of the constant-vol American put on the tree's uniform
/// time grid.  Per level: highest node where exercise is optimal, placed at
/// the midpoint to the first continued node above it.  Early levels whose
/// nodes do not reach down to the boundary inherit the first visible value.
/// Non-decreasing in t by construction; ends at K.
struct ConstantVolBoundary {
    std::vector<double> t;
    std::vector<double> b;

    /// Linear interpolation in t; clamps to the ends outside [0, T].
    double value_at(double time) const;
};

ConstantVolBoundary crr_boundary(double sigma, const ModelParams& p, double x0,
                                 const BinomialConfig& cfg);

}  // namespace hrp::bsm
