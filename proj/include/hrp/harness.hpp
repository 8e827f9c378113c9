#pragma once

/// Command front-end: run configuration, artifact writers, and the
/// verification registry that turns each structural property of the model
/// (price envelopes, convexity, the exercise boundary and its striking
/// curves, mean reversion, scheme consistency) into an executable check with
/// machine-readable results.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hrp/lsmc.hpp"
#include "hrp/model.hpp"
#include "hrp/sde_sim.hpp"

namespace hrp::harness {

enum class Command { Price, Boundary, Simulate, Verify };

enum class PriceMethod { Pde, Lsmc };

struct RunConfig {
    Command command = Command::Verify;
    ModelConfig model;

    PriceMethod price_method = PriceMethod::Pde;

    // PDE grid overrides; 0 keeps the solver's aligned defaults.
    std::size_t grid_n_v = 0;
    std::size_t grid_n_t = 0;
    double grid_theta = 1.0;

    // Desk-scale regression profile; heavier than the LsmcConfig defaults.
    lsmc::LsmcConfig lsmc{3, 100'000, 50, 42, true};

    sim::SimConfig sim;

    std::size_t n_curves = 100;  // striking curves sampled by `boundary`
    std::uint64_t curve_seed = 20'240'817;

    std::string out_dir = ".";
};

/// Strict JSON parsing for one command.  Root keys: "model" (required) and
/// the optional per-command sections "price", "boundary", "simulate",
/// "verify"; only the section matching the command is read, but every
/// present key must be known.  Throws ConfigError on anything else.
RunConfig parse_run_config(Command command, const std::string& json_text);

/// Canonical JSON echo of a parsed config; its FNV-1a hash is the
/// reproducibility fingerprint stamped on reports.
std::string run_config_to_json(const RunConfig& cfg);

struct CheckDescriptor {
    std::string id;
    std::string claim;  // the structural property the check exercises
};

/// The fixed 12-entry registry; order is execution and report order.
const std::vector<CheckDescriptor>& check_registry();

struct CheckResult {
    std::string id;
    std::string claim;
    bool pass = false;
    std::string measured_json;   // JSON object, check-specific quantities
    std::string tolerance_json;  // JSON object, the pinned thresholds
    double runtime_seconds = 0.0;
};

struct VerificationReport {
    std::vector<CheckResult> checks;  // one per registry entry, registry order
    bool all_pass = false;
    std::uint64_t config_hash = 0;
    double runtime_seconds = 0.0;
};

/// Runs every registry check against the configured model.  Expensive
/// inputs (value surfaces, boundaries, path sets) are built once and shared
/// across checks; fixed internal seeds keep the report reproducible.
VerificationReport run_verification(const RunConfig& cfg);

std::string verification_report_to_json(const VerificationReport& rep);

/// Executes the configured command and writes its artifacts into
/// cfg.out_dir: price.json, or boundary.csv + striking_curves.csv +
/// monotonicity.json, or paths.csv, or verify_report.json.  Returns the
/// process exit code: 0 on success, 1 when verification checks fail.
/// ConfigError and SolverError propagate to the caller.
int run(const RunConfig& cfg);

}  // namespace hrp::harness
