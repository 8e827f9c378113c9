#include "hrp/lsmc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "hrp/rng.hpp"
#include "hrp/sde_sim.hpp"

namespace hrp::lsmc {

namespace {

// Salt separating the pricing-pass streams from the regression-pass streams.
constexpr std::uint64_t kPricingSalt = 0x517cc1b727220a95ULL;

std::size_t basis_size(std::size_t degree) noexcept {
    return (degree + 1) * (degree + 2) / 2;
}

/// Monomials x^i z^j with i + j <= degree, level-major, x-power descending
/// inside each level.  Inputs are already standardized; degree <= 5 keeps the
/// row at most 21 wide.
void fill_basis(double x, double z, std::size_t degree, double* row) noexcept {
    double xp[6], zp[6];
    xp[0] = zp[0] = 1.0;
    for (std::size_t d = 1; d <= degree; ++d) {
        xp[d] = xp[d - 1] * x;
        zp[d] = zp[d - 1] * z;
    }
    std::size_t c = 0;
    for (std::size_t level = 0; level <= degree; ++level)
        for (std::size_t i = 0; i <= level; ++i) row[c++] = xp[level - i] * zp[i];
}

/// In-place lower Cholesky of a row-major SPD matrix; false when a pivot
/// falls below tol (collinear columns).
bool cholesky_factor(std::vector<double>& a, std::size_t m, double tol) {
    for (std::size_t k = 0; k < m; ++k) {
        double d = a[k * m + k];
        for (std::size_t j = 0; j < k; ++j) d -= a[k * m + j] * a[k * m + j];
        if (!(d > tol)) return false;
        a[k * m + k] = std::sqrt(d);
        for (std::size_t i = k + 1; i < m; ++i) {
            double s = a[i * m + k];
            for (std::size_t j = 0; j < k; ++j) s -= a[i * m + j] * a[k * m + j];
            a[i * m + k] = s / a[k * m + k];
        }
    }
    return true;
}

void cholesky_solve(const std::vector<double>& l, std::size_t m, std::vector<double>& x) {
    for (std::size_t i = 0; i < m; ++i) {
        double s = x[i];
        for (std::size_t j = 0; j < i; ++j) s -= l[i * m + j] * x[j];
        x[i] = s / l[i * m + i];
    }
    for (std::size_t i = m; i-- > 0;) {
        double s = x[i];
        for (std::size_t j = i + 1; j < m; ++j) s -= l[j * m + i] * x[j];
        x[i] = s / l[i * m + i];
    }
}

struct DateFit {
    bool fitted = false;
    double x_mean = 0.0, x_sd = 1.0;
    double z_mean = 0.0, z_sd = 1.0;
    std::vector<double> beta;

    double continuation(double x, double z, std::size_t degree) const noexcept {
        double phi[21];
        fill_basis((x - x_mean) / x_sd, (z - z_mean) / z_sd, degree, phi);
        double c = 0.0;
        for (std::size_t k = 0; k < beta.size(); ++k) c += beta[k] * phi[k];
        return c;
    }
};

struct ExerciseRule {
    std::vector<DateFit> dates;  // indexed by date; 1 .. n_steps - 1 can be fitted
    bool ridge_fallback = false;
    bool any_itm = false;        // some regression path was in the money at some date
    double in_sample_price = 0.0;
};

/// Least-squares fit of cf on the standardized basis over the selected rows.
/// Normal equations are accumulated row by row (the design matrix is never
/// stored) and solved by Cholesky, with one ridge retry on pivot loss.
DateFit fit_date(const sim::PathSet& ps, const std::vector<std::size_t>& rows,
                 const std::vector<double>& cf, std::size_t date, std::size_t degree,
                 bool& used_ridge) {
    const std::size_t m = basis_size(degree);
    DateFit fit;
    double sx = 0.0, sxx = 0.0, sz = 0.0, szz = 0.0;
    for (std::size_t pth : rows) {
        sx += ps.at_x(pth, date);
        sz += ps.at_z(pth, date);
    }
    const double n = static_cast<double>(rows.size());
    fit.x_mean = sx / n;
    fit.z_mean = sz / n;
    for (std::size_t pth : rows) {
        sxx += (ps.at_x(pth, date) - fit.x_mean) * (ps.at_x(pth, date) - fit.x_mean);
        szz += (ps.at_z(pth, date) - fit.z_mean) * (ps.at_z(pth, date) - fit.z_mean);
    }
    fit.x_sd = sxx > 0.0 ? std::sqrt(sxx / n) : 1.0;
    fit.z_sd = szz > 0.0 ? std::sqrt(szz / n) : 1.0;

    std::vector<double> ata(m * m, 0.0), aty(m, 0.0);
    double phi[21];
    for (std::size_t pth : rows) {
        fill_basis((ps.at_x(pth, date) - fit.x_mean) / fit.x_sd,
                   (ps.at_z(pth, date) - fit.z_mean) / fit.z_sd, degree, phi);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j <= i; ++j) ata[i * m + j] += phi[i] * phi[j];
            aty[i] += phi[i] * cf[pth];
        }
    }
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) ata[i * m + j] = ata[j * m + i];

    double scale = 0.0;
    for (std::size_t i = 0; i < m; ++i) scale = std::max(scale, ata[i * m + i]);
    std::vector<double> l = ata;
    if (!cholesky_factor(l, m, 1e-12 * scale)) {
        // Collinear basis (a constant coordinate, or degree too high for the
        // spread of states): ridge keeps the fit defined.
        l = ata;
        const double ridge = 1e-8 * scale;
        for (std::size_t i = 0; i < m; ++i) l[i * m + i] += ridge;
        cholesky_factor(l, m, 0.0);
        used_ridge = true;
    }
    fit.beta = aty;
    cholesky_solve(l, m, fit.beta);
    fit.fitted = true;
    return fit;
}

/// Backward induction over the regression paths.  cf holds each path's cash
/// flow discounted to the current date; dates with no in-the-money paths fit
/// nothing, dates with a thin in-the-money set (at most basis-size rows)
/// throw rather than fit an underdetermined rule.
ExerciseRule fit_exercise_rule(const ModelParams& p, const VolatilityFn& vol,
                               const MarketState& s0, const LsmcConfig& cfg) {
    sim::SimConfig sc;
    sc.n_paths = cfg.n_paths;
    sc.n_steps = cfg.n_steps;
    sc.seed = cfg.seed;
    const sim::PathSet ps = sim::simulate(p, vol, s0, sc);

    const std::size_t m = basis_size(cfg.basis_degree);
    const double dt = p.T / static_cast<double>(cfg.n_steps);
    const double disc = std::exp(-p.r * dt);

    ExerciseRule rule;
    rule.dates.resize(cfg.n_steps + 1);

    std::vector<double> cf(cfg.n_paths);
    for (std::size_t pth = 0; pth < cfg.n_paths; ++pth) {
        cf[pth] = std::max(p.K - ps.at_x(pth, cfg.n_steps), 0.0);
        if (cf[pth] > 0.0) rule.any_itm = true;
    }

    std::vector<std::size_t> rows;
    rows.reserve(cfg.n_paths);
    for (std::size_t date = cfg.n_steps; date-- > 1;) {
        for (double& c : cf) c *= disc;

        rows.clear();
        bool any_itm_here = false;
        for (std::size_t pth = 0; pth < cfg.n_paths; ++pth) {
            const bool itm = ps.at_x(pth, date) < p.K;
            any_itm_here = any_itm_here || itm;
            if (!cfg.itm_only || itm) rows.push_back(pth);
        }
        if (!any_itm_here) continue;  // nothing can exercise, nothing to fit
        rule.any_itm = true;
        if (rows.size() <= m) {
            std::ostringstream os;
            os << "regression at date " << date << " (t = " << ps.t[date] << ") has "
               << rows.size() << " rows for " << m
               << " basis columns; raise n_paths or lower basis_degree";
            throw RegressionError(os.str());
        }
        rule.dates[date] = fit_date(ps, rows, cf, date, cfg.basis_degree, rule.ridge_fallback);

        for (std::size_t pth : rows) {
            const double intrinsic = p.K - ps.at_x(pth, date);
            if (intrinsic <= 0.0) continue;
            if (intrinsic >= rule.dates[date].continuation(ps.at_x(pth, date), ps.at_z(pth, date),
                                                           cfg.basis_degree))
                cf[pth] = intrinsic;
        }
    }

    double mean = 0.0;
    for (double c : cf) mean += c;
    mean = disc * mean / static_cast<double>(cfg.n_paths);
    rule.in_sample_price = std::max(std::max(p.K - s0.x0, 0.0), mean);
    return rule;
}

struct ExerciseEvent {
    std::size_t date = 0;
    double z = 0.0;
};

struct Score {
    std::vector<double> discounted;  // one realized discounted payoff per path
    std::vector<ExerciseEvent> events;
    std::vector<double> t;
};

/// Replays the fitted rule on an independent path set: first date where the
/// path is in the money and intrinsic meets the fitted continuation wins;
/// in-the-money expiry always exercises.
Score score_rule(const ModelParams& p, const VolatilityFn& vol, const MarketState& s0,
                 const LsmcConfig& cfg, const ExerciseRule& rule) {
    sim::SimConfig sc;
    sc.n_paths = cfg.n_paths;
    sc.n_steps = cfg.n_steps;
    sc.seed = rng::mix64(cfg.seed ^ kPricingSalt);
    const sim::PathSet ps = sim::simulate(p, vol, s0, sc);

    Score sc_out;
    sc_out.discounted.assign(cfg.n_paths, 0.0);
    sc_out.t = ps.t;
    for (std::size_t pth = 0; pth < cfg.n_paths; ++pth) {
        for (std::size_t date = 1; date <= cfg.n_steps; ++date) {
            const double x = ps.at_x(pth, date);
            const double intrinsic = p.K - x;
            if (intrinsic <= 0.0) continue;
            const bool stop = date == cfg.n_steps ||
                              (rule.dates[date].fitted &&
                               intrinsic >= rule.dates[date].continuation(x, ps.at_z(pth, date),
                                                                          cfg.basis_degree));
            if (stop) {
                sc_out.discounted[pth] = std::exp(-p.r * ps.t[date]) * intrinsic;
                sc_out.events.push_back({date, ps.at_z(pth, date)});
                break;
            }
        }
    }
    return sc_out;
}

}  // namespace

void LsmcConfig::validate() const {
    if (basis_degree < 1 || basis_degree > 5) {
        std::ostringstream os;
        os << "basis_degree must be in [1, 5], got " << basis_degree;
        throw ConfigError(os.str());
    }
    if (n_steps == 0) throw ConfigError("n_steps must be >= 1");
    if (n_paths <= basis_size(basis_degree)) {
        std::ostringstream os;
        os << "n_paths = " << n_paths << " cannot exceed the " << basis_size(basis_degree)
           << " basis columns of degree " << basis_degree;
        throw ConfigError(os.str());
    }
}

PriceEstimate price_american_put(const ModelParams& p, const VolatilityFn& vol,
                                 const MarketState& s0, const LsmcConfig& cfg) {
    p.validate();
    s0.validate();
    cfg.validate();

    const ExerciseRule rule = fit_exercise_rule(p, vol, s0, cfg);
    const Score scored = score_rule(p, vol, s0, cfg, rule);

    double mean = 0.0;
    for (double d : scored.discounted) mean += d;
    mean /= static_cast<double>(cfg.n_paths);
    double var = 0.0;
    for (double d : scored.discounted) var += (d - mean) * (d - mean);
    var /= static_cast<double>(cfg.n_paths - 1);

    PriceEstimate est;
    est.price = std::max(std::max(p.K - s0.x0, 0.0), mean);
    est.std_error = std::sqrt(var / static_cast<double>(cfg.n_paths));
    est.n_paths = cfg.n_paths;
    est.in_sample_price = rule.in_sample_price;
    est.ridge_fallback = rule.ridge_fallback;
    est.degenerate_european = !rule.any_itm;  // rule never exercises early; the
                                              // scored payoffs are European
    return est;
}

ExerciseHistogram exercise_frequency_surface(const ModelParams& p, const VolatilityFn& vol,
                                             const MarketState& s0, const LsmcConfig& cfg,
                                             std::size_t n_zbins) {
    p.validate();
    s0.validate();
    cfg.validate();
    if (n_zbins == 0) throw ConfigError("n_zbins must be >= 1");

    const ExerciseRule rule = fit_exercise_rule(p, vol, s0, cfg);
    const Score scored = score_rule(p, vol, s0, cfg, rule);

    ExerciseHistogram hist;
    hist.t = scored.t;
    double z_lo = s0.z0, z_hi = s0.z0;
    for (const ExerciseEvent& e : scored.events) {
        z_lo = std::min(z_lo, e.z);
        z_hi = std::max(z_hi, e.z);
    }
    // Nudge the edges outward so every event lands strictly inside a bin.
    const double pad = 1e-9 * std::max(1.0, z_hi - z_lo) + 1e-12 * z_hi;
    z_lo -= pad;
    z_hi += pad;
    hist.z_edges.resize(n_zbins + 1);
    for (std::size_t b = 0; b <= n_zbins; ++b)
        hist.z_edges[b] =
            z_lo + (z_hi - z_lo) * static_cast<double>(b) / static_cast<double>(n_zbins);
    hist.counts.assign((cfg.n_steps + 1) * n_zbins, 0);
    for (const ExerciseEvent& e : scored.events) {
        auto bin = static_cast<std::size_t>(static_cast<double>(n_zbins) * (e.z - z_lo) /
                                            (z_hi - z_lo));
        bin = std::min(bin, n_zbins - 1);
        ++hist.counts[e.date * n_zbins + bin];
        ++hist.total;
    }
    return hist;
}

}  // namespace hrp::lsmc
