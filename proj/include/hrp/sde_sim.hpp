#pragma once

/// Joint simulation of (X, Y, Z) under a single Brownian driver.
///
/// X and Z share the same increment each step (one noise source), Y is the
/// lagged average and carries no noise of its own.  Z is simulated through
/// its own SDE rather than as X/Y; the gap between the two is the scheme
/// consistency diagnostic and shrinks at first order in dt.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "hrp/errors.hpp"
#include "hrp/model.hpp"
#include "hrp/rng.hpp"

namespace hrp::sim {

enum class Scheme {
    LogEuler,  // Euler on (ln X, ln Z); positive by construction
    Euler,     // Euler on levels; can cross zero on coarse steps
};

struct SimConfig {
    std::size_t n_paths = 10'000;
    std::size_t n_steps = 250;
    std::uint64_t seed = 42;
    Scheme scheme = Scheme::LogEuler;
    bool antithetic = false;  // pair 2k+1 mirrors the draws of pair 2k

    void validate() const;
};

/// One-path state machine.  Kept header-inline so the pricing layers can step
/// paths with their own storage while drawing identical numbers.
class PathStepper {
  public:
    PathStepper(const ModelParams& p, const VolatilityFn& vol, const MarketState& s0,
                Scheme scheme, double dt)
        : p_(p), vol_(&vol), s0_(s0), scheme_(scheme), dt_(dt),
          decay_(std::exp(-p.lambda * dt)) {
        reset();
    }

    void reset() {
        x_ = s0_.x0;
        y_ = s0_.y0();
        z_ = s0_.z0;
        lx_ = std::log(x_);
        lz_ = std::log(z_);
    }

    /// Advance one step with standard normal draw xi.
    void advance(double xi) {
        const double s = (*vol_)(z_);
        const double db = std::sqrt(dt_) * xi;
        const double x_prev = x_;
        if (scheme_ == Scheme::LogEuler) {
            lx_ += (p_.r - 0.5 * s * s) * dt_ + s * db;
            lz_ += (p_.r + p_.lambda - p_.lambda * z_ - 0.5 * s * s) * dt_ + s * db;
            x_ = std::exp(lx_);
            z_ = std::exp(lz_);
        } else {
            x_ += p_.r * x_ * dt_ + s * x_ * db;
            z_ += (p_.r + p_.lambda - p_.lambda * z_) * z_ * dt_ + s * z_ * db;
            if (x_ <= 0.0 || z_ <= 0.0) {
                throw PositivityError(
                    "Euler step drove the state non-positive (x = " + std::to_string(x_) +
                    ", z = " + std::to_string(z_) +
                    "); use the log-Euler scheme, which cannot cross zero");
            }
        }
        // Exact one-step solution of dY = lambda (X - Y) dt with X frozen at
        // the trapezoidal average of the endpoints.
        y_ = decay_ * y_ + (1.0 - decay_) * 0.5 * (x_prev + x_);
    }

    double x() const noexcept { return x_; }
    double y() const noexcept { return y_; }
    double z() const noexcept { return z_; }
    double dt() const noexcept { return dt_; }

  private:
    ModelParams p_;
    const VolatilityFn* vol_;
    MarketState s0_;
    Scheme scheme_;
    double dt_;
    double decay_;
    double x_ = 0, y_ = 0, z_ = 0, lx_ = 0, lz_ = 0;
};

/// Full path ensemble; matrices are path-major, n_paths x (n_steps + 1).
struct PathSet {
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    double dt = 0.0;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::LogEuler;

    std::vector<double> t;  // n_steps + 1 time points, 0 .. T
    std::vector<double> x, y, z;

    /// FNV-1a fingerprint of every Brownian increment, path-major.
    std::uint64_t increments_digest = 0;

    /// Declared bound on max |z - x/y| for this run (first-order in dt).
    double consistency_tol = 0.0;

    double at_x(std::size_t p, std::size_t k) const { return x[p * (n_steps + 1) + k]; }
    double at_y(std::size_t p, std::size_t k) const { return y[p * (n_steps + 1) + k]; }
    double at_z(std::size_t p, std::size_t k) const { return z[p * (n_steps + 1) + k]; }
};

PathSet simulate(const ModelParams& p, const VolatilityFn& vol, const MarketState& s0,
                 const SimConfig& cfg);

/// max over all nodes of |z - x/y|; the audit that the redundant Z simulation
/// agrees with its definition.
double consistency_gap(const PathSet& ps);

/// Streaming mean / standard error of e^{-rT} X(T); draws the exact same
/// numbers as simulate() without materialising the matrices.
struct TerminalSummary {
    double discounted_mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
};

TerminalSummary discounted_terminal_summary(const ModelParams& p, const VolatilityFn& vol,
                                            const MarketState& s0, const SimConfig& cfg);

/// CSV dump: header t,path_id,x,y,z; path-major rows; 17 significant digits.
void to_csv(const PathSet& ps, std::ostream& os);

/// Draw source for one path, honouring antithetic pairing.  Other layers use
/// this to replay ensemble paths without materialising the matrices.
class PathDraws {
  public:
    PathDraws(const SimConfig& cfg, std::uint64_t path_index)
        : stream_(cfg.seed, cfg.antithetic ? path_index / 2 : path_index),
          sign_((cfg.antithetic && (path_index & 1)) ? -1.0 : 1.0) {}

    double next() { return sign_ * stream_.next_normal(); }

  private:
    rng::Stream stream_;
    double sign_;
};

}  // namespace hrp::sim
