#pragma once

/// Longstaff-Schwartz American put pricer on the joint state (X, Z).
///
/// Two independent path sets: a regression pass fits per-date continuation
/// values, a pricing pass replays the fitted exercise rule on fresh paths.
/// Out-of-sample evaluation makes the estimate low-biased, so oracle
/// comparisons know which side the Monte Carlo error sits on; the in-sample
/// companion estimate is kept for that diagnostic.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hrp/errors.hpp"
#include "hrp/model.hpp"

namespace hrp::lsmc {

struct LsmcConfig {
    std::size_t basis_degree = 2;  // monomials x^i z^j with i + j <= degree
    std::size_t n_paths = 20'000;  // per pass; the two passes are equal-sized
    std::size_t n_steps = 50;      // exercise dates at k dt, k = 1 .. n_steps
    std::uint64_t seed = 42;       // pricing pass derives its own stream from this
    bool itm_only = true;          // regress on in-the-money paths only

    /// basis_degree in [1, 5]; n_paths, n_steps >= 1; n_paths large enough
    /// that a full-rank regression is possible at all.
    void validate() const;
};

struct PriceEstimate {
    double price = 0.0;      // out-of-sample, max of immediate exercise and continuation
    double std_error = 0.0;  // sample standard error of the pricing pass
    std::size_t n_paths = 0;

    double in_sample_price = 0.0;  // same rule scored on the regression paths

    bool ridge_fallback = false;       // some date needed a ridge-stabilized solve
    bool degenerate_european = false;  // no date had in-the-money paths; European value returned
};

/// Prices the American put by backward induction over exercise dates.
/// Continuation values are least-squares fits of the discounted cash flows on
/// monomials in (x, z) standardized per date; paths exercise where intrinsic
/// value meets the fit.  Dates with no in-the-money paths fit nothing and
/// never exercise.  Throws RegressionError when a date has in-the-money
/// paths but no more of them than basis columns; near-singular normal
/// equations fall back to a ridge solve and set ridge_fallback instead.
PriceEstimate price_american_put(const ModelParams& p, const VolatilityFn& vol,
                                 const MarketState& s0, const LsmcConfig& cfg);

/// Where the fitted rule exercises: counts per (date, z-bin) from the pricing
/// pass, terminal in-the-money redemptions included.  total <= n_paths since
/// each path exercises at most once.
struct ExerciseHistogram {
    std::vector<double> t;        // exercise dates, 0 .. T, n_steps + 1 entries
    std::vector<double> z_edges;  // n_zbins + 1 ascending bin edges
    std::vector<std::size_t> counts;  // date-major, (n_steps + 1) x n_zbins
    std::size_t total = 0;

    std::size_t n_zbins() const noexcept { return z_edges.empty() ? 0 : z_edges.size() - 1; }
    std::size_t at(std::size_t date, std::size_t bin) const {
        return counts[date * n_zbins() + bin];
    }
};

ExerciseHistogram exercise_frequency_surface(const ModelParams& p, const VolatilityFn& vol,
                                             const MarketState& s0, const LsmcConfig& cfg,
                                             std::size_t n_zbins = 16);

}  // namespace hrp::lsmc
