#include "hrp/bsm_baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hrp::bsm {

void BinomialConfig::validate() const {
    if (n_steps < 1) throw ConfigError("binomial n_steps must be >= 1");
}

double norm_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double european_put(double sigma, double r, double K, double x0, double T) {
    if (!(sigma > 0.0) || !(K > 0.0) || !(x0 > 0.0) || !(T > 0.0))
        throw ConfigError("european_put requires sigma, K, x0, T > 0");
    const double sq = sigma * std::sqrt(T);
    const double d1 = (std::log(x0 / K) + (r + 0.5 * sigma * sigma) * T) / sq;
    const double d2 = d1 - sq;
    return K * std::exp(-r * T) * norm_cdf(-d2) - x0 * norm_cdf(-d1);
}

namespace {

struct TreeSetup {
    double dt, u, d, p, disc;
};

TreeSetup make_tree(double sigma, const ModelParams& p, const BinomialConfig& cfg) {
    p.validate();
    cfg.validate();
    if (!(sigma > 0.0)) throw ConfigError("crr tree requires sigma > 0");

    TreeSetup t;
    t.dt = p.T / static_cast<double>(cfg.n_steps);
    t.u = std::exp(sigma * std::sqrt(t.dt));
    t.d = 1.0 / t.u;
    t.disc = std::exp(-p.r * t.dt);
    t.p = (std::exp(p.r * t.dt) - t.d) / (t.u - t.d);
    if (!(t.p > 0.0) || !(t.p < 1.0)) {
        // p >= 1 happens when r dt outruns sigma sqrt(dt); dt < (sigma/r)^2.
        const std::size_t n_min =
            static_cast<std::size_t>(std::ceil(p.T * p.r * p.r / (sigma * sigma))) + 1;
        std::ostringstream os;
        os << "binomial tree degenerates at n_steps = " << cfg.n_steps
           << " (risk-neutral up-probability " << t.p << " outside (0,1)); use n_steps >= "
           << n_min;
        throw ConfigError(os.str());
    }
    return t;
}

}  // namespace

double crr_american_put(double sigma, const ModelParams& p, double x0,
                        const BinomialConfig& cfg) {
    if (!(x0 > 0.0)) throw ConfigError("crr_american_put requires x0 > 0");
    const TreeSetup t = make_tree(sigma, p, cfg);
    const std::size_t n = cfg.n_steps;

    // Terminal payoffs; node j holds x0 * u^j * d^(n-j) = x0 * d^n * (u^2)^j.
    const double u2 = t.u * t.u;
    std::vector<double> v(n + 1);
    double s = x0 * std::pow(t.d, static_cast<double>(n));
    for (std::size_t j = 0; j <= n; ++j, s *= u2) v[j] = std::max(p.K - s, 0.0);

    const double pu = t.disc * t.p;
    const double pd = t.disc * (1.0 - t.p);
    for (std::size_t k = n; k-- > 0;) {
        s = x0 * std::pow(t.d, static_cast<double>(k));
        for (std::size_t j = 0; j <= k; ++j, s *= u2) {
            const double cont = pu * v[j + 1] + pd * v[j];
            v[j] = std::max(cont, p.K - s);
        }
    }
    return v[0];
}

double ConstantVolBoundary::value_at(double time) const {
    if (t.empty()) throw SolverError("empty boundary");
    if (time <= t.front()) return b.front();
    if (time >= t.back()) return b.back();
    const auto it = std::upper_bound(t.begin(), t.end(), time);
    const std::size_t i = static_cast<std::size_t>(it - t.begin());
    const double w = (time - t[i - 1]) / (t[i] - t[i - 1]);
    return (1.0 - w) * b[i - 1] + w * b[i];
}

ConstantVolBoundary crr_boundary(double sigma, const ModelParams& p, double x0,
                                 const BinomialConfig& cfg) {
    if (!(x0 > 0.0)) throw ConfigError("crr_boundary requires x0 > 0");
    const TreeSetup t = make_tree(sigma, p, cfg);
    const std::size_t n = cfg.n_steps;

    const double u2 = t.u * t.u;
    std::vector<double> v(n + 1);
    std::vector<double> raw(n + 1, std::numeric_limits<double>::quiet_NaN());
    double s = x0 * std::pow(t.d, static_cast<double>(n));
    for (std::size_t j = 0; j <= n; ++j, s *= u2) v[j] = std::max(p.K - s, 0.0);
    raw[n] = p.K;  // at expiry every in-the-money node exercises

    const double pu = t.disc * t.p;
    const double pd = t.disc * (1.0 - t.p);
    for (std::size_t k = n; k-- > 0;) {
        // Ascending scan so v[j+1] is still the level-(k+1) value when node j
        // reads it.  The exercise region sits at the low nodes; remember the
        // highest exercised asset level.
        double last_exercised = std::numeric_limits<double>::quiet_NaN();
        s = x0 * std::pow(t.d, static_cast<double>(k));
        for (std::size_t j = 0; j <= k; ++j, s *= u2) {
            const double cont = pu * v[j + 1] + pd * v[j];
            const double intrinsic = p.K - s;
            const bool exercise = intrinsic > 0.0 && intrinsic >= cont;
            v[j] = exercise ? intrinsic : cont;
            if (exercise) last_exercised = s;
        }
        if (!std::isnan(last_exercised)) raw[k] = std::min(p.K, 0.5 * last_exercised * (1.0 + u2));
    }

    // Early levels may not reach down to the boundary; inherit the first
    // visible value, then enforce monotonicity with a running max.
    double fill = p.K;
    for (std::size_t k = 0; k <= n; ++k) {
        if (!std::isnan(raw[k])) {
            fill = raw[k];
            break;
        }
    }

    ConstantVolBoundary out;
    out.t.resize(n + 1);
    out.b.resize(n + 1);
    double running = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
        out.t[k] = t.dt * static_cast<double>(k);
        const double bk = std::isnan(raw[k]) ? fill : raw[k];
        if (!std::isnan(raw[k])) fill = raw[k];
        running = std::max(running, bk);
        out.b[k] = std::min(running, p.K);
    }
    out.t[n] = p.T;
    out.b[n] = p.K;
    return out;
}

}  // namespace hrp::bsm
