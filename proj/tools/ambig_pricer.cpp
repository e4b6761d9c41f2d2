// Command-line front end: price, hedge, verify, converge.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ambig/cli/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Bid/ask indifference pricing under ambiguity and trading constraints"};
    app.require_subcommand(1);

    ambig::cli::CommandOptions opt;
    std::string side, out;
    std::uint64_t seed = 0;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--set", opt.overrides, "override a dotted key, e.g. grid.nx=800 (repeatable)");
        sub->add_option("--out", out, "output path (a directory for verify)");
        sub->add_option("--seed", seed, "oracle seed");
    };
    auto* price = app.add_subcommand("price", "solve bid/ask surfaces and write CSV");
    common(price);
    price->add_option("--side", side, "bid, ask or both")->check(CLI::IsMember({"bid", "ask", "both"}));
    auto* hedge = app.add_subcommand("hedge", "simulate the replication error of the surface hedge");
    common(hedge);
    hedge->add_option("--side", side, "bid or ask")->check(CLI::IsMember({"bid", "ask", "both"}));
    auto* verify = app.add_subcommand("verify", "run the verification experiments");
    common(verify);
    verify->add_option("--only", opt.only, "restrict to groups: equality, bounds, american, convergence, convergence_american")
        ->delimiter(',');
    auto* converge = app.add_subcommand("converge", "kappa convergence sweep for the configured claim");
    common(converge);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : ambig::cli::kConfigInvalid;
    }
    CLI::App* used = app.get_subcommands().front();
    if (!side.empty()) opt.side = side;
    if (!out.empty()) opt.out = out;
    if (used->count("--seed")) opt.seed = seed;
    return ambig::cli::run_command(used->get_name(), opt, std::cout, std::cerr);
}
