#include "hrp/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hrp::boundary {

double ExerciseBoundary::value_at(double time, double ratio) const {
    if (t.empty() || z.empty()) throw SolverError("empty boundary");
    const double t_tol = 1e-12 * std::max(1.0, t.back());
    if (time < t.front() - t_tol || time > t.back() + t_tol)
        throw ExtrapolationError("boundary query time outside coverage");
    if (ratio < z.front() || ratio > z.back()) {
        std::ostringstream os;
        os << "boundary query z = " << ratio << " outside coverage [" << z.front() << ", "
           << z.back() << "]";
        throw ExtrapolationError(os.str());
    }
    time = std::clamp(time, t.front(), t.back());

    const auto ti = std::upper_bound(t.begin(), t.end(), time);
    std::size_t s1 = static_cast<std::size_t>(ti - t.begin());
    s1 = std::clamp<std::size_t>(s1, 1, t.size() - 1);
    const double wt = (time - t[s1 - 1]) / (t[s1] - t[s1 - 1]);

    const auto zi = std::upper_bound(z.begin(), z.end(), ratio);
    std::size_t j1 = static_cast<std::size_t>(zi - z.begin());
    j1 = std::clamp<std::size_t>(j1, 1, z.size() - 1);
    const double wz = (ratio - z[j1 - 1]) / (z[j1] - z[j1 - 1]);

    const double b0 = (1.0 - wz) * at(s1 - 1, j1 - 1) + wz * at(s1 - 1, j1);
    const double b1 = (1.0 - wz) * at(s1, j1 - 1) + wz * at(s1, j1);
    return (1.0 - wt) * b0 + wt * b1;
}

double ExerciseBoundary::max_jump_ratio() const {
    double worst = 0.0;
    for (std::size_t s = 0; s < t.size(); ++s) {
        for (std::size_t j = 0; j + 1 < z.size(); ++j) {
            const double jump = std::abs(at(s, j + 1) - at(s, j)) / (z[j + 1] - z[j]);
            worst = std::max(worst, jump);
        }
    }
    return worst;
}

ExerciseBoundary extract(const pde::ValueSurface& vs, double tolerance_scale) {
    const auto& grid = vs.grid();
    const ModelParams& p = vs.params();
    if (!(tolerance_scale > 0.0)) throw ConfigError("tolerance_scale must be > 0");
    const double tol = tolerance_scale * p.K;
    const double lnK = std::log(p.K);
    const double dw = grid.dw();

    ExerciseBoundary out;
    out.tolerance = tol;
    out.t.resize(vs.n_slices());
    out.z.resize(grid.n_v);
    for (std::size_t s = 0; s < vs.n_slices(); ++s) out.t[s] = vs.time_at(s);
    for (std::size_t j = 0; j < grid.n_v; ++j) out.z[j] = vs.z_at(j);
    out.b.assign(vs.n_slices() * grid.n_v, 0.0);

    for (std::size_t s = 0; s < vs.n_slices(); ++s) {
        for (std::size_t j = 0; j < grid.n_v; ++j) {
            const double v = vs.v_at(j);
            // Highest node at or below the strike along this column.  The
            // nudge keeps an exactly-on-node kink from truncating down on
            // some columns and not others.
            const double fk = (lnK - v - grid.w_min) / dw;
            std::size_t i_k = static_cast<std::size_t>(fk + 1e-9);
            if (fk < 0.0 || i_k >= grid.n_w - 1) {
                std::ostringstream os;
                os << "column (t = " << out.t[s] << ", z = " << out.z[j]
                   << ") does not bracket the strike inside the w-range";
                throw BracketError(os.str());
            }

            auto gap = [&](std::size_t i) {
                return vs.value(s, i, j) - vs.payoff(i, j);
            };

            double b;
            const double h_k = gap(i_k);
            if (h_k <= tol) {
                // Already at payoff just below the strike.  Interpolate the
                // gap at x = K itself to decide how close to K the boundary is.
                const double fr = std::clamp(fk - static_cast<double>(i_k), 0.0, 1.0);
                const double h_at_K = (1.0 - fr) * h_k + fr * gap(i_k + 1);
                const double x_k = vs.x_at(i_k, j);
                if (h_at_K > tol) {
                    const double num = std::sqrt(tol) - std::sqrt(std::max(h_k, 0.0));
                    const double den = std::sqrt(h_at_K) - std::sqrt(std::max(h_k, 0.0));
                    b = x_k + (p.K - x_k) * (den > 0.0 ? num / den : 0.0);
                } else {
                    b = p.K;
                }
            } else {
                b = -1.0;
                for (std::size_t i = i_k; i-- > 0;) {
                    if (gap(i) <= tol) {
                        // Smooth fit: the gap vanishes quadratically at b, so
                        // sqrt(gap) is linear in x nearby.  Extrapolate that
                        // line from the first two continued nodes back to
                        // zero.  Interpolating from the active node instead
                        // (its gap is exactly zero on the active set) would
                        // collapse b onto the grid and staircase the curve.
                        const double x_act = vs.x_at(i, j);
                        const double x1 = vs.x_at(i + 1, j);
                        const double h1 = gap(i + 1);
                        double x2, h2;
                        if (i + 2 <= i_k) {
                            x2 = vs.x_at(i + 2, j);
                            h2 = gap(i + 2);
                        } else {
                            // Only one continued node below the strike; use
                            // the interpolated gap at the strike itself.
                            const double fr = std::clamp(fk - static_cast<double>(i_k), 0.0, 1.0);
                            x2 = p.K;
                            h2 = (1.0 - fr) * gap(i_k) + fr * gap(i_k + 1);
                        }
                        const double s1 = std::sqrt(std::max(h1, 0.0));
                        const double s2 = std::sqrt(std::max(h2, 0.0));
                        b = (s2 > s1) ? (x1 * s2 - x2 * s1) / (s2 - s1) : x1;
                        b = std::clamp(b, x_act, x1);
                        break;
                    }
                }
                if (b < 0.0) {
                    std::ostringstream os;
                    os << "no exercise region found on column (t = " << out.t[s]
                       << ", z = " << out.z[j]
                       << "): value never returns to payoff down to the w-floor";
                    throw BracketError(os.str());
                }
            }
            out.b[s * grid.n_v + j] = std::min(b, p.K);
        }
    }
    return out;
}

StrikingCurve striking_curve_along(const ExerciseBoundary& bd, const std::vector<double>& times,
                                   const std::vector<double>& z_path) {
    if (times.size() != z_path.size())
        throw ConfigError("striking_curve_along: times and z_path must have equal length");
    StrikingCurve c;
    c.t = times;
    c.z = z_path;
    c.b.resize(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) c.b[k] = bd.value_at(times[k], z_path[k]);
    return c;
}

MonotonicityReport monotonicity_report(const StrikingCurve& curve, double noise_floor) {
    if (!(noise_floor >= 0.0)) throw ConfigError("noise_floor must be >= 0");
    MonotonicityReport rep;
    rep.noise_floor = noise_floor;
    for (std::size_t k = 0; k + 1 < curve.b.size(); ++k) {
        const double drop = curve.b[k] - curve.b[k + 1];
        if (drop > rep.max_decrease) {
            rep.max_decrease = drop;
            rep.time_of_max_decrease = curve.t[k + 1];
            rep.index_of_max_decrease = k + 1;
        }
    }
    rep.is_monotone_increasing = rep.max_decrease <= noise_floor;
    return rep;
}

}  // namespace hrp::boundary
