#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "hrp/errors.hpp"
#include "hrp/harness.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common_options(CLI::App* sub, CliOptions& opt) {
    sub->add_option("-c,--config", opt.config_path, "model/run configuration (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("-o,--out", opt.out_dir, "artifact directory (default: current directory)");
    sub->add_option("-s,--seed", opt.seed, "override every seed in the config")
        ->each([&opt](const std::string&) { opt.seed_set = true; });
}

int execute(hrp::harness::Command command, const CliOptions& opt) {
    std::ifstream is(opt.config_path);
    std::ostringstream text;
    text << is.rdbuf();
    if (!is) throw hrp::ConfigError("cannot read config file " + opt.config_path);

    hrp::harness::RunConfig cfg = hrp::harness::parse_run_config(command, text.str());
    if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
    if (opt.seed_set) {
        cfg.sim.seed = opt.seed;
        cfg.lsmc.seed = opt.seed;
        cfg.curve_seed = opt.seed;
    }
    return hrp::harness::run(cfg);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"American put pricer under ratio-dependent volatility"};
    app.require_subcommand(1);

    CliOptions opt;
    CLI::App* price = app.add_subcommand("price", "price the option (PDE or regression MC)");
    CLI::App* boundary =
        app.add_subcommand("boundary", "export the exercise boundary and striking curves");
    CLI::App* simulate = app.add_subcommand("simulate", "export simulated (x, y, z) paths");
    CLI::App* verify = app.add_subcommand("verify", "run the structural check registry");
    for (CLI::App* sub : {price, boundary, simulate, verify}) add_common_options(sub, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // help exits clean, usage errors exit 2
    }

    hrp::harness::Command command = hrp::harness::Command::Verify;
    if (price->parsed()) command = hrp::harness::Command::Price;
    if (boundary->parsed()) command = hrp::harness::Command::Boundary;
    if (simulate->parsed()) command = hrp::harness::Command::Simulate;

    try {
        return execute(command, opt);
    } catch (const hrp::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const hrp::SolverError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return 3;
    }
}
