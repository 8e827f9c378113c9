#pragma once

/// Early-exercise boundary extraction and the striking curve t -> b(z(t))
/// observed along simulated ratio paths.  The value gap V - payoff vanishes
/// quadratically at the boundary (smooth fit), so in-cell placement
/// interpolates sqrt(V - payoff) rather than the gap itself; interpolating
/// the raw gap parks the crossing at the last grid node and the extracted
/// curve staircases at cell resolution.

#include <cstddef>
#include <vector>

#include "hrp/errors.hpp"
#include "hrp/pde.hpp"

namespace hrp::boundary {

struct ExerciseBoundary {
    std::vector<double> t;  // ascending, one entry per stored surface slice
    std::vector<double> z;  // ascending, one entry per v-node
    std::vector<double> b;  // slice-major, t.size() x z.size()
    double tolerance = 0.0;  // value-gap threshold used by the extraction

    double at(std::size_t s, std::size_t j) const { return b[s * z.size() + j]; }

    /// Bilinear in (t, z); ExtrapolationError outside the covered rectangle.
    double value_at(double time, double ratio) const;

    /// max over slices and adjacent z-pairs of |db| / dz, the reported
    /// continuity constant.
    double max_jump_ratio() const;
};

/// Per (t, z)-column: scan x downward from K for the first node whose value
/// gap is inside tolerance_scale * K, then place the boundary inside the cell
/// by the sqrt-gap crossing.  Throws BracketError naming the column when a
/// column never comes back to the payoff.
ExerciseBoundary extract(const pde::ValueSurface& vs, double tolerance_scale = 1e-6);

struct StrikingCurve {
    std::vector<double> t;
    std::vector<double> z;  // ratio path sampled at t
    std::vector<double> b;  // boundary seen along the path
};

/// b(t, z(t)) for one path; ExtrapolationError if the path leaves coverage.
StrikingCurve striking_curve_along(const ExerciseBoundary& bd, const std::vector<double>& times,
                                   const std::vector<double>& z_path);

struct MonotonicityReport {
    bool is_monotone_increasing = true;  // no decrease beyond the noise floor
    double max_decrease = 0.0;           // largest single-step drop, >= 0
    double time_of_max_decrease = 0.0;
    std::size_t index_of_max_decrease = 0;
    double noise_floor = 0.0;
};

MonotonicityReport monotonicity_report(const StrikingCurve& curve, double noise_floor);

}  // namespace hrp::boundary
