#include "hrp/sde_sim.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace hrp::sim {

void SimConfig::validate() const {
    if (n_paths < 1) throw ConfigError("n_paths must be >= 1");
    if (n_steps < 1) throw ConfigError("n_steps must be >= 1");
    if (antithetic && (n_paths % 2) != 0)
        throw ConfigError("antithetic pairing requires an even n_paths");
}

namespace {

// Declared first-order bound on max |z - x/y|.  Wide on purpose: it promises
// an order of magnitude, the measured gap is what tests track.
double declared_consistency_tol(const ModelParams& p, const VolatilityFn& vol,
                                const MarketState& s0, double dt) {
    const double shi2 = vol.sigma_hi() * vol.sigma_hi();
    const double zscale = std::max(1.0, s0.z0);
    const double c = 25.0 * (1.0 + p.lambda) * (1.0 + p.lambda) * (1.0 + p.r + shi2);
    return c * zscale * zscale * dt;
}

}  // namespace

PathSet simulate(const ModelParams& p, const VolatilityFn& vol, const MarketState& s0,
                 const SimConfig& cfg) {
    p.validate();
    s0.validate();
    cfg.validate();

    const std::size_t cols = cfg.n_steps + 1;
    const std::size_t cells = cfg.n_paths * cols;
    // 3 matrices of doubles; refuse anything past ~1.6 GB and point at the
    // streaming summary instead.
    if (cells > 70'000'000)
        throw ConfigError(
            "path matrices would exceed the memory budget; lower n_paths/n_steps or use "
            "discounted_terminal_summary for terminal statistics");

    const double dt = p.T / static_cast<double>(cfg.n_steps);

    PathSet ps;
    ps.n_paths = cfg.n_paths;
    ps.n_steps = cfg.n_steps;
    ps.dt = dt;
    ps.seed = cfg.seed;
    ps.scheme = cfg.scheme;
    ps.t.resize(cols);
    for (std::size_t k = 0; k < cols; ++k) ps.t[k] = dt * static_cast<double>(k);
    ps.t[cfg.n_steps] = p.T;
    ps.x.resize(cells);
    ps.y.resize(cells);
    ps.z.resize(cells);
    ps.consistency_tol = declared_consistency_tol(p, vol, s0, dt);

    const double sqrt_dt = std::sqrt(dt);
    std::uint64_t digest = rng::kFnvOffset;

    PathStepper stepper(p, vol, s0, cfg.scheme, dt);
    for (std::size_t path = 0; path < cfg.n_paths; ++path) {
        PathDraws draws(cfg, path);
        stepper.reset();
        double* xr = &ps.x[path * cols];
        double* yr = &ps.y[path * cols];
        double* zr = &ps.z[path * cols];
        xr[0] = stepper.x();
        yr[0] = stepper.y();
        zr[0] = stepper.z();
        for (std::size_t k = 1; k < cols; ++k) {
            const double xi = draws.next();
            const double db = sqrt_dt * xi;
            digest = rng::fnv1a(digest, &db, sizeof(db));
            stepper.advance(xi);
            xr[k] = stepper.x();
            yr[k] = stepper.y();
            zr[k] = stepper.z();
        }
    }
    ps.increments_digest = digest;
    return ps;
}

double consistency_gap(const PathSet& ps) {
    double gap = 0.0;
    for (std::size_t i = 0; i < ps.x.size(); ++i) {
        const double g = std::abs(ps.z[i] - ps.x[i] / ps.y[i]);
        if (g > gap) gap = g;
    }
    return gap;
}

TerminalSummary discounted_terminal_summary(const ModelParams& p, const VolatilityFn& vol,
                                            const MarketState& s0, const SimConfig& cfg) {
    p.validate();
    s0.validate();
    cfg.validate();

    const double dt = p.T / static_cast<double>(cfg.n_steps);
    const double disc = std::exp(-p.r * p.T);

    double sum = 0.0, sum_sq = 0.0;
    PathStepper stepper(p, vol, s0, cfg.scheme, dt);
    for (std::size_t path = 0; path < cfg.n_paths; ++path) {
        PathDraws draws(cfg, path);
        stepper.reset();
        for (std::size_t k = 0; k < cfg.n_steps; ++k) stepper.advance(draws.next());
        const double v = disc * stepper.x();
        sum += v;
        sum_sq += v * v;
    }

    const double n = static_cast<double>(cfg.n_paths);
    TerminalSummary out;
    out.n_paths = cfg.n_paths;
    out.discounted_mean = sum / n;
    const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
    out.std_error = std::sqrt(var / n);
    return out;
}

void to_csv(const PathSet& ps, std::ostream& os) {
    os << "t,path_id,x,y,z\n";
    std::ostringstream row;
    row << std::setprecision(17);
    const std::size_t cols = ps.n_steps + 1;
    for (std::size_t path = 0; path < ps.n_paths; ++path) {
        for (std::size_t k = 0; k < cols; ++k) {
            row.str("");
            row << ps.t[k] << ',' << path << ',' << ps.x[path * cols + k] << ','
                << ps.y[path * cols + k] << ',' << ps.z[path * cols + k] << '\n';
            os << row.str();
        }
    }
}

}  // namespace hrp::sim
