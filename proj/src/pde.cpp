#include "hrp/pde.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace hrp::pde {

GeneratorCoeffs generator_coefficients(const ModelParams& p, const VolatilityFn& vol, double v) {
    p.validate();
    const double ev = std::exp(v);
    const double s = vol(ev);
    GeneratorCoeffs c;
    c.a_w = p.lambda * (ev - 1.0);
    c.a_v = p.r + p.lambda - p.lambda * ev - 0.5 * s * s;
    c.d_vv = 0.5 * s * s;
    return c;
}

void GridSpec::validate(const ModelParams& p, const VolatilityFn& vol) const {
    p.validate();
    if (n_w < 16 || n_v < 16) throw ConfigError("grid needs at least 16 nodes per axis");
    if (n_t < 8) throw ConfigError("grid needs at least 8 time steps");
    if (!(w_max > w_min) || !(v_max > v_min))
        throw ConfigError("grid box is empty or inverted");
    if (!(theta >= 0.0) || !(theta <= 1.0)) throw ConfigError("theta must lie in [0, 1]");

    const double lnK = std::log(p.K);
    if (!(w_min + v_min < lnK && lnK < w_max + v_max))
        throw ConfigError("grid box does not bracket the payoff kink ln K");

    const ReversionZone zone = reversion_zone(p, vol);
    if (!(std::exp(v_min) < zone.lo) || !(std::exp(v_max) > zone.hi))
        throw ConfigError(
            "v-range must strictly contain the reversion zone so the ratio drift points "
            "into the box at both v-boundaries");

    const double dt = p.T / static_cast<double>(n_t);
    if (theta < 0.5) {
        // Explicit share of the v-operator must satisfy the usual parabolic bound.
        double worst = 0.0;
        for (std::size_t j = 0; j < n_v; ++j) {
            const GeneratorCoeffs c =
                generator_coefficients(p, vol, v_min + static_cast<double>(j) * dv());
            worst = std::max(worst, 2.0 * c.d_vv / (dv() * dv()) + std::abs(c.a_v) / dv() + p.r);
        }
        if ((1.0 - theta) * dt * worst > 1.0) {
            std::ostringstream os;
            os << "diffusion CFL violated for theta = " << theta << ": admissible dt <= "
               << 1.0 / ((1.0 - theta) * worst) << ", got " << dt;
            throw ConfigError(os.str());
        }
    }
}

GridSpec default_grid(const ModelParams& p, const VolatilityFn& vol, const MarketState& s0,
                      std::size_t n_v, std::size_t n_t) {
    p.validate();
    s0.validate();
    const ReversionZone zone = reversion_zone(p, vol);
    const double pad_v = 1.0;
    GridSpec g;
    if (n_v != 0) g.n_v = n_v;
    if (n_t != 0) g.n_t = n_t;
    g.v_min = std::min(std::log(s0.z0), std::log(zone.lo)) - pad_v;
    g.v_max = std::max(std::log(s0.z0), std::log(zone.hi)) + pad_v;

    // Lattice alignment: with dw = dv and the strike shifted onto a node,
    // the kink ln K - v_j lands on the same in-cell offset (exactly zero)
    // in every column.  Otherwise that offset cycles across columns and
    // imprints a cell-scale sawtooth on the extracted boundary, which reads
    // as spurious non-monotonicity along simulated striking curves.
    const double lnK = std::log(p.K);
    const double pad_w = 4.0 * vol.sigma_hi() * std::sqrt(p.T);
    const double w_lo_need = lnK - g.v_max - pad_w;
    const double w_hi_need = lnK - g.v_min + pad_w;
    const double dv = g.dv();
    g.n_w = static_cast<std::size_t>(std::ceil((w_hi_need - w_lo_need) / dv)) + 2;
    const double w_min_raw = w_hi_need - static_cast<double>(g.n_w - 1) * dv;
    const double cells_to_kink = std::floor((lnK - g.v_min - w_min_raw) / dv + 1e-9);
    g.w_min = lnK - g.v_min - cells_to_kink * dv;
    g.w_max = g.w_min + static_cast<double>(g.n_w - 1) * dv;
    return g;
}

ValueSurface::ValueSurface(const ModelParams& p, GridSpec g) : params_(p), grid_(g) {
    stride_ = grid_.n_w * grid_.n_v;
    const std::size_t total = stride_ * (grid_.n_t + 1);
    if (total > 200'000'000)
        throw ConfigError("value surface would exceed the memory budget; shrink the grid");
    times_.resize(grid_.n_t + 1);
    const double dt = p.T / static_cast<double>(grid_.n_t);
    for (std::size_t s = 0; s <= grid_.n_t; ++s) times_[s] = dt * static_cast<double>(s);
    times_[grid_.n_t] = p.T;
    values_.assign(total, 0.0);
    exercised_.assign(total, 0);
}

double ValueSurface::value_at(double t, double x, double z) const {
    if (!(x > 0.0) || !(z > 0.0))
        throw ExtrapolationError("value_at requires x > 0 and z > 0");
    const double tol_t = 1e-12 * std::max(1.0, params_.T);
    if (t < -tol_t || t > params_.T + tol_t)
        throw ExtrapolationError("query time outside [0, T]");
    t = std::clamp(t, 0.0, params_.T);

    const double v = std::log(z);
    const double w = std::log(x) - v;
    const double dw = grid_.dw(), dv = grid_.dv();
    const double tol_w = 1e-9 * dw, tol_v = 1e-9 * dv;
    if (w < grid_.w_min - tol_w || w > grid_.w_max + tol_w || v < grid_.v_min - tol_v ||
        v > grid_.v_max + tol_v) {
        std::ostringstream os;
        os << "query (x = " << x << ", z = " << z << ") maps to (w = " << w << ", v = " << v
           << ") outside the grid box [" << grid_.w_min << ", " << grid_.w_max << "] x ["
           << grid_.v_min << ", " << grid_.v_max << "]";
        throw ExtrapolationError(os.str());
    }

    const double fi = std::clamp((w - grid_.w_min) / dw, 0.0, static_cast<double>(grid_.n_w - 1));
    const double fj = std::clamp((v - grid_.v_min) / dv, 0.0, static_cast<double>(grid_.n_v - 1));
    const std::size_t i0 = std::min(static_cast<std::size_t>(fi), grid_.n_w - 2);
    const std::size_t j0 = std::min(static_cast<std::size_t>(fj), grid_.n_v - 2);
    const double ai = fi - static_cast<double>(i0);
    const double aj = fj - static_cast<double>(j0);

    const double dt = params_.T / static_cast<double>(grid_.n_t);
    const double fs = std::clamp(t / dt, 0.0, static_cast<double>(grid_.n_t));
    const std::size_t s0 = std::min(static_cast<std::size_t>(fs), grid_.n_t - 1);
    const double as = fs - static_cast<double>(s0);

    auto bilinear = [&](std::size_t s) {
        const double* d = slice_data(s);
        const std::size_t nv = grid_.n_v;
        const double v00 = d[i0 * nv + j0], v01 = d[i0 * nv + j0 + 1];
        const double v10 = d[(i0 + 1) * nv + j0], v11 = d[(i0 + 1) * nv + j0 + 1];
        return (1.0 - ai) * ((1.0 - aj) * v00 + aj * v01) + ai * ((1.0 - aj) * v10 + aj * v11);
    };
    if (as <= 1e-14) return bilinear(s0);
    return (1.0 - as) * bilinear(s0) + as * bilinear(s0 + 1);
}

std::size_t psor_tridiag(const std::vector<double>& low, const std::vector<double>& diag,
                         const std::vector<double>& up, const std::vector<double>& rhs,
                         const std::vector<double>& obstacle, std::vector<double>& value,
                         double omega, double tol, std::size_t iter_cap) {
    const std::size_t n = diag.size();
    for (std::size_t it = 1; it <= iter_cap; ++it) {
        double delta = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double acc = rhs[j];
            if (j > 0) acc -= low[j] * value[j - 1];
            if (j + 1 < n) acc -= up[j] * value[j + 1];
            double next = (1.0 - omega) * value[j] + omega * acc / diag[j];
            if (next < obstacle[j]) next = obstacle[j];
            delta = std::max(delta, std::abs(next - value[j]));
            value[j] = next;
        }
        if (delta <= tol) return it;
    }
    std::ostringstream os;
    os << "projected SOR failed to converge within " << iter_cap << " iterations";
    throw SolverError(os.str());
}

namespace {

// Far-field data for one v-edge row.  With sigma frozen at the edge value,
// functions of w + v solve the full equation with the plain log-price put
// generator, so the matching Dirichlet data is the one-dimensional American
// put on the row's own x-line.  A zero-curvature closure instead drops the
// d_vv term entirely and leaves the edge column a few tenths of a currency
// unit off at any resolution.
std::vector<double> edge_row_values(const ModelParams& p, double sigma, const GridSpec& grid,
                                    double v_edge, const PsorParams& psor, SolveStats* stats) {
    const std::size_t nw = grid.n_w, nt = grid.n_t;
    const double dt = p.T / static_cast<double>(nt);
    const double dx = grid.dw();
    const double theta = grid.theta;
    const double a = p.r - 0.5 * sigma * sigma;
    const double d = 0.5 * sigma * sigma;

    double al, be, ga;
    const double diff = d / (dx * dx);
    if (diff >= std::abs(a) / (2.0 * dx)) {
        al = diff - a / (2.0 * dx);
        ga = diff + a / (2.0 * dx);
        be = -2.0 * diff;
    } else if (a >= 0.0) {
        al = diff;
        ga = diff + a / dx;
        be = -2.0 * diff - a / dx;
    } else {
        al = diff - a / dx;
        ga = diff;
        be = -2.0 * diff + a / dx;
    }

    const std::size_t n = nw - 2;
    const std::vector<double> low(n, -theta * dt * al);
    const std::vector<double> diag(n, 1.0 + theta * dt * (p.r - be));
    const std::vector<double> up(n, -theta * dt * ga);

    std::vector<double> g(nw);
    for (std::size_t i = 0; i < nw; ++i)
        g[i] = std::max(p.K - std::exp(grid.w_min + static_cast<double>(i) * dx + v_edge), 0.0);

    std::vector<double> out((nt + 1) * nw);
    std::copy(g.begin(), g.end(), out.begin() + nt * nw);

    const double tol = psor.tol_scale * p.K;
    const std::size_t cap = psor.iter_cap_per_node * nw;
    std::vector<double> rhs(n), col(n), obs(n);
    for (std::size_t s = nt; s-- > 0;) {
        const double* prev = out.data() + (s + 1) * nw;
        double* cur = out.data() + s * nw;
        cur[0] = g[0];
        cur[nw - 1] = g[nw - 1];
        for (std::size_t m = 0; m < n; ++m) {
            const std::size_t i = m + 1;
            double r_i = prev[i];
            if (theta < 1.0) {
                const double lv =
                    al * prev[i - 1] + be * prev[i] + ga * prev[i + 1] - p.r * prev[i];
                r_i += (1.0 - theta) * dt * lv;
            }
            rhs[m] = r_i;
            col[m] = prev[i];
            obs[m] = g[i];
        }
        rhs[0] += theta * dt * al * g[0];
        rhs[n - 1] += theta * dt * ga * g[nw - 1];
        const std::size_t used =
            psor_tridiag(low, diag, up, rhs, obs, col, psor.omega, tol, cap);
        if (stats) {
            stats->psor_iterations_total += used;
            stats->psor_iterations_max = std::max(stats->psor_iterations_max, used);
        }
        for (std::size_t m = 0; m < n; ++m) cur[m + 1] = col[m];
    }
    return out;
}

}  // namespace

ValueSurface solve(const ModelParams& p, const VolatilityFn& vol, const GridSpec& grid,
                   SolveStats* stats, const PsorParams& psor) {
    grid.validate(p, vol);
    ValueSurface vs(p, grid);

    const std::size_t nw = grid.n_w, nv = grid.n_v, nt = grid.n_t;
    const double dt = p.T / static_cast<double>(nt);
    const double dw = grid.dw(), dv = grid.dv();
    const double theta = grid.theta;
    const double psor_tol = psor.tol_scale * p.K;
    const std::size_t iter_cap = psor.iter_cap_per_node * nv;

    // Payoff matrix and per-j operator coefficients; both time-independent.
    std::vector<double> g(nw * nv);
    for (std::size_t i = 0; i < nw; ++i)
        for (std::size_t j = 0; j < nv; ++j) g[i * nv + j] = vs.payoff(i, j);

    // Per-column shift for the w-substep, split into whole cells plus a
    // fractional part feeding the cubic interpolation weights.  New slice at
    // node i samples the old slice at index i + a_w dt / dw.
    std::vector<long long> ishift(nv);
    std::vector<double> cw0(nv), cw1(nv), cw2(nv), cw3(nv);
    std::vector<double> alpha(nv, 0.0), beta(nv, 0.0), gamma(nv, 0.0);  // v-operator stencil
    for (std::size_t j = 0; j < nv; ++j) {
        const GeneratorCoeffs c = generator_coefficients(p, vol, vs.v_at(j));
        const double m = dt * c.a_w / dw;
        const double fl = std::floor(m);
        ishift[j] = static_cast<long long>(fl);
        const double th = m - fl;
        cw0[j] = -th * (th - 1.0) * (th - 2.0) / 6.0;
        cw1[j] = (th + 1.0) * (th - 1.0) * (th - 2.0) / 2.0;
        cw2[j] = -(th + 1.0) * th * (th - 2.0) / 2.0;
        cw3[j] = (th + 1.0) * th * (th - 1.0) / 6.0;
        if (j == 0 || j == nv - 1) continue;  // Dirichlet rows, no stencil
        const double diff = c.d_vv / (dv * dv);
        if (diff >= std::abs(c.a_v) / (2.0 * dv)) {
            alpha[j] = diff - c.a_v / (2.0 * dv);
            gamma[j] = diff + c.a_v / (2.0 * dv);
            beta[j] = -2.0 * diff;
        } else if (c.a_v >= 0.0) {
            alpha[j] = diff;
            gamma[j] = diff + c.a_v / dv;
            beta[j] = -2.0 * diff - c.a_v / dv;
        } else {
            alpha[j] = diff - c.a_v / dv;
            gamma[j] = diff;
            beta[j] = -2.0 * diff + c.a_v / dv;
        }
    }

    // Interior tridiagonal rows j = 1 .. nv-2; the v-edge rows carry their
    // frozen-sigma one-dimensional values and enter through the rhs.
    const std::size_t n_in = nv - 2;
    std::vector<double> low(n_in), diag(n_in), up(n_in);
    for (std::size_t m = 0; m < n_in; ++m) {
        low[m] = -theta * dt * alpha[m + 1];
        diag[m] = 1.0 + theta * dt * (p.r - beta[m + 1]);
        up[m] = -theta * dt * gamma[m + 1];
    }
    const std::vector<double> edge_lo =
        edge_row_values(p, vol(std::exp(grid.v_min)), grid, grid.v_min, psor, stats);
    const std::vector<double> edge_hi =
        edge_row_values(p, vol(std::exp(grid.v_max)), grid, grid.v_max, psor, stats);

    // Terminal slice: payoff everywhere.
    {
        double* slice = vs.slice_data(nt);
        std::uint8_t* mask = vs.mask_data(nt);
        std::copy(g.begin(), g.end(), slice);
        std::fill(mask, mask + nw * nv, std::uint8_t{1});
    }

    const double mask_eps = 1e-10 * p.K;
    std::vector<double> transported(nw * nv);
    std::vector<double> rhs(n_in), col(n_in), obs(n_in);

    // The obstacle is applied once per time step, by PSOR, against the
    // continuation value of the whole split step.  Clamping the transport
    // output to the payoff as well looks harmless but is not: inside the
    // exercise region the advected payoff sits below the payoff by
    // x a_w dt, and that deficit is exactly what cancels the v-operator's
    // lift there.  An intermediate clamp erases it and leaves one half of
    // the v-range stuck a first-order gap above the payoff.
    for (std::size_t s = nt; s-- > 0;) {
        const double* prev = vs.slice_data(s + 1);
        double* cur = vs.slice_data(s);
        std::uint8_t* mask = vs.mask_data(s);

        // 1) semi-Lagrangian transport in w: exact shift by a_w dt sampled
        //    with an in-cell cubic, clamped to its bracketing nodes so the
        //    update stays monotone.  Off-grid samples fall back to the
        //    analytic payoff, which both w-edges are pinned to anyway.
        const auto sample = [&](long long idx, std::size_t j) {
            if (idx >= 0 && idx < static_cast<long long>(nw))
                return prev[static_cast<std::size_t>(idx) * nv + j];
            const double w = grid.w_min + dw * static_cast<double>(idx);
            return std::max(p.K - std::exp(w + vs.v_at(j)), 0.0);
        };
        for (std::size_t j = 0; j < nv; ++j) {
            transported[j] = g[j];
            transported[(nw - 1) * nv + j] = g[(nw - 1) * nv + j];
        }
        for (std::size_t i = 1; i + 1 < nw; ++i) {
            double* tp = transported.data() + i * nv;
            for (std::size_t j = 0; j < nv; ++j) {
                const long long k = static_cast<long long>(i) + ishift[j];
                const double f0 = sample(k - 1, j);
                const double f1 = sample(k, j);
                const double f2 = sample(k + 1, j);
                const double f3 = sample(k + 2, j);
                double val = cw0[j] * f0 + cw1[j] * f1 + cw2[j] * f2 + cw3[j] * f3;
                tp[j] = std::clamp(val, std::min(f1, f2), std::max(f1, f2));
            }
        }

        // 2) theta-weighted implicit v-solve, PSOR projecting the full-step
        //    continuation onto {V >= payoff}, one w-column at a time.  The
        //    v-edge entries are Dirichlet data from the frozen-sigma rows.
        const double* elo = edge_lo.data() + s * nw;
        const double* ehi = edge_hi.data() + s * nw;
        for (std::size_t j = 0; j < nv; ++j) {
            cur[j] = g[j];
            cur[(nw - 1) * nv + j] = g[(nw - 1) * nv + j];
            mask[j] = 1;
            mask[(nw - 1) * nv + j] = 1;
        }
        for (std::size_t i = 1; i + 1 < nw; ++i) {
            const double* tp = transported.data() + i * nv;
            const double* gp = g.data() + i * nv;
            for (std::size_t m = 0; m < n_in; ++m) {
                const std::size_t j = m + 1;
                double r_j = tp[j];
                if (theta < 1.0) {
                    const double lv = alpha[j] * tp[j - 1] + beta[j] * tp[j] +
                                      gamma[j] * tp[j + 1] - p.r * tp[j];
                    r_j += (1.0 - theta) * dt * lv;
                }
                rhs[m] = r_j;
                col[m] = std::max(tp[j], gp[j]);
                obs[m] = gp[j];
            }
            rhs[0] += theta * dt * alpha[1] * elo[i];
            rhs[n_in - 1] += theta * dt * gamma[nv - 2] * ehi[i];
            const std::size_t used =
                psor_tridiag(low, diag, up, rhs, obs, col, psor.omega, psor_tol, iter_cap);
            if (stats) {
                stats->psor_iterations_total += used;
                stats->psor_iterations_max = std::max(stats->psor_iterations_max, used);
            }
            double* cp = cur + i * nv;
            std::uint8_t* mp = mask + i * nv;
            cp[0] = elo[i];
            mp[0] = (elo[i] - gp[0] <= mask_eps) ? 1 : 0;
            cp[nv - 1] = ehi[i];
            mp[nv - 1] = (ehi[i] - gp[nv - 1] <= mask_eps) ? 1 : 0;
            for (std::size_t m = 0; m < n_in; ++m) {
                cp[m + 1] = col[m];
                mp[m + 1] = (col[m] - gp[m + 1] <= mask_eps) ? 1 : 0;
            }
        }
    }
    return vs;
}

void to_csv(const ValueSurface& vs, std::ostream& os) {
    os << "t,x,z,value,exercised\n";
    std::ostringstream row;
    row << std::setprecision(17);
    for (std::size_t s = 0; s < vs.n_slices(); ++s) {
        for (std::size_t i = 0; i < vs.grid().n_w; ++i) {
            for (std::size_t j = 0; j < vs.grid().n_v; ++j) {
                row.str("");
                row << vs.time_at(s) << ',' << vs.x_at(i, j) << ',' << vs.z_at(j) << ','
                    << vs.value(s, i, j) << ',' << (vs.exercised(s, i, j) ? 1 : 0) << '\n';
                os << row.str();
            }
        }
    }
}

}  // namespace hrp::pde
