#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ambig/analytic.hpp"
#include "ambig/cli/config.hpp"
#include "ambig/experiments/suite.hpp"
#include "ambig/oracle/lsmc.hpp"
#include "ambig/oracle/monte_carlo.hpp"
#include "ambig/pde/csv.hpp"
#include "ambig/version.hpp"

namespace ambig::cli {

enum ExitCode : int { kOk = 0, kChecksFailed = 1, kConfigInvalid = 2, kSolverFailure = 3 };

struct CommandOptions {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::string> side;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> only;  // verify groups
};

/// Files produced by a command; nothing touches the disk until all are ready.
struct Artifacts {
    std::vector<std::pair<std::string, std::string>> files;

    void add(std::string path, std::string content) { files.emplace_back(std::move(path), std::move(content)); }
};

namespace detail {

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// out.csv + "bid" -> out_bid.csv
inline std::string with_suffix(const std::string& path, const std::string& suffix) {
    std::filesystem::path p(path);
    std::string ext = p.extension().string();
    if (ext.empty()) ext = ".csv";
    return (p.parent_path() / (p.stem().string() + "_" + suffix + ext)).string();
}

inline std::string surface_csv(const pde::PriceSurface& s) {
    std::ostringstream os;
    pde::write_surface_csv(os, s);
    return os.str();
}

/// Writes every file through a temporary name, then renames. On failure the
/// temporaries are removed and nothing is left behind.
inline void commit(const Artifacts& a) {
    std::vector<std::string> temps;
    try {
        for (const auto& [path, content] : a.files) {
            std::filesystem::path p(path);
            if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
            const std::string tmp = path + ".tmp";
            std::ofstream os(tmp, std::ios::binary);
            if (!os) fail(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
            temps.push_back(tmp);
            os << content;
            os.close();
            if (!os) fail(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
        }
        for (std::size_t i = 0; i < a.files.size(); ++i) std::filesystem::rename(temps[i], a.files[i].first);
    } catch (...) {
        std::error_code ec;
        for (const auto& t : temps) std::filesystem::remove(t, ec);
        throw;
    }
}

inline std::string sidecar(const std::string& command, const RunConfig& cfg, const Artifacts& a, double seconds) {
    json meta;
    meta["command"] = command;
    meta["config_hash"] = hex64(cfg.config_hash);
    meta["problem_hash"] = hex64(problem_hash(cfg.model, cfg.claim, cfg.ambiguity, cfg.constraint));
    meta["version"] = AMBIG_VERSION;
    meta["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION);
    meta["compiler"] = __VERSION__;
    meta["wall_time_seconds"] = seconds;
    meta["seed"] = cfg.oracle.seed;
    json outs = json::array();
    for (const auto& f : a.files) outs.push_back(f.first);
    meta["outputs"] = outs;
    try {
        meta["consumption_value"] = consumption_value(cfg.model, cfg.utility, 0.0);
    } catch (const Error&) {
        meta["consumption_value"] = nullptr;
    }
    return meta.dump(2) + "\n";
}

inline std::vector<pde::Side> sides_of(SideChoice c) {
    if (c == SideChoice::Bid) return {pde::Side::Bid};
    if (c == SideChoice::Ask) return {pde::Side::Ask};
    return {pde::Side::Bid, pde::Side::Ask};
}

inline pde::Grid grid_of(const RunConfig& cfg) {
    return pde::Grid::make(cfg.model, cfg.grid.spot, cfg.grid.nx, cfg.grid.nt, cfg.grid.width_mult);
}

}  // namespace detail

inline Artifacts cmd_price(const RunConfig& cfg) {
    Artifacts a;
    const auto sides = detail::sides_of(cfg.side);
    const std::string& out = cfg.output.path;
    if (cfg.model.n > 1) {
        // no PDE in several dimensions: report LSMC estimates at the anchor spot
        std::ostringstream os;
        os << "side,mean,std_err,paths,seed\n";
        for (auto side : sides) {
            auto e = oracle::lsmc_bsde(cfg.model, cfg.claim, cfg.ambiguity, cfg.constraint, side,
                                       Vector::Constant(cfg.model.n, cfg.grid.spot), lsmc_options(cfg));
            os << pde::to_string(side) << ',' << pde::format_double(e.mean) << ',' << pde::format_double(e.std_err)
               << ',' << e.paths << ',' << e.seed << '\n';
        }
        a.add(out, os.str());
        return a;
    }
    const auto g = detail::grid_of(cfg);
    if (cfg.claim.is_american()) {
        auto sol = vi::solve_american(cfg.model, cfg.claim, cfg.ambiguity, cfg.constraint, g, cfg.penalty, cfg.solver);
        for (auto side : sides) {
            a.add(detail::with_suffix(out, pde::to_string(side)),
                  detail::surface_csv(side == pde::Side::Bid ? sol.bid : sol.ask));
        }
        std::ostringstream os;
        pde::write_boundary_csv(os, g.t, sol.region.boundary);
        a.add(detail::with_suffix(out, "boundary"), os.str());
        return a;
    }
    for (auto side : sides) {
        auto s = pde::solve_european(cfg.model, cfg.claim, cfg.ambiguity, cfg.constraint, g, side, cfg.solver);
        a.add(sides.size() == 1 ? out : detail::with_suffix(out, pde::to_string(side)), detail::surface_csv(s));
    }
    return a;
}

/// Replication error of the hedge read from the solved surface.
inline Artifacts cmd_hedge(const RunConfig& cfg) {
    if (cfg.claim.is_american()) fail(ErrorCode::Refused, "hedge simulation covers European claims only");
    if (cfg.constraint.kind() != ConstraintKind::Unconstrained || !cfg.ambiguity.is_trivial()) {
        fail(ErrorCode::Refused, "hedge replication needs an unconstrained market without ambiguity");
    }
    const auto g = detail::grid_of(cfg);
    const auto side = cfg.side == SideChoice::Ask ? pde::Side::Ask : pde::Side::Bid;
    auto s = pde::solve_european(cfg.model, cfg.claim, cfg.ambiguity, cfg.constraint, g, side, cfg.solver);
    auto e = oracle::simulate_hedge_pnl(cfg.model, s, cfg.claim, cfg.ambiguity, cfg.constraint, cfg.oracle.paths,
                                        cfg.oracle.steps, cfg.oracle.seed);
    std::ostringstream os;
    os << "metric,value\n"
       << "mean," << pde::format_double(e.mean) << '\n'
       << "std_err," << pde::format_double(e.std_err) << '\n'
       << "std," << pde::format_double(e.std_err * std::sqrt(static_cast<double>(e.paths))) << '\n'
       << "paths," << e.paths << '\n'
       << "steps," << cfg.oracle.steps << '\n'
       << "seed," << e.seed << '\n';
    Artifacts a;
    a.add(cfg.output.path, os.str());
    return a;
}

inline const std::vector<std::string>& verify_groups() {
    static const std::vector<std::string> g{"equality", "bounds", "american", "convergence", "convergence_american"};
    return g;
}

/// Runs the selected verification groups; `passed` reports the overall verdict.
inline Artifacts cmd_verify(const RunConfig& cfg, const std::string& dir, const std::vector<std::string>& only,
                            bool& passed, std::ostream& log) {
    if (cfg.model.n != 1) fail(ErrorCode::Unsupported, "verify runs one-dimensional experiments");
    for (const auto& o : only) {
        if (std::find(verify_groups().begin(), verify_groups().end(), o) == verify_groups().end()) {
            fail(ErrorCode::ConfigInvalid, "--only: unknown group '" + o + "'");
        }
    }
    auto wanted = [&](const std::string& g) { return only.empty() || std::find(only.begin(), only.end(), g) != only.end(); };
    const auto su = make_setup(cfg);
    const double K = su.strike;
    Artifacts a;
    experiments::Table all;
    auto table_file = [&](const std::string& name, const experiments::Table& t) {
        std::ostringstream os;
        experiments::write_table_csv(os, t);
        a.add((std::filesystem::path(dir) / (name + ".csv")).string(), os.str());
        all.insert(all.end(), t.begin(), t.end());
    };
    if (wanted("equality")) table_file("equality", experiments::run_equality_suite(su));
    if (wanted("bounds")) {
        auto audit = experiments::run_bound_audit(su);
        table_file("bounds", audit.table);
        if (!audit.worst.empty()) {
            std::ostringstream os;
            experiments::write_offenders_csv(os, audit.worst);
            a.add((std::filesystem::path(dir) / "bounds_offenders.csv").string(), os.str());
        }
    }
    if (wanted("american")) table_file("american", experiments::run_american_checks(su));
    for (bool american : {false, true}) {
        const std::string name = american ? "convergence_american" : "convergence";
        if (!wanted(name)) continue;
        const auto straddle = PayoffDescriptor::straddle(K);
        const auto claim = american ? ClaimSpec::american(straddle) : ClaimSpec::european(straddle);
        auto r = experiments::run_convergence(su, claim, su.kappas);
        std::ostringstream os;
        experiments::write_convergence_csv(os, r);
        a.add((std::filesystem::path(dir) / (name + ".csv")).string(), os.str());
        auto t = experiments::convergence_table(su, name, r);
        all.insert(all.end(), t.begin(), t.end());
    }
    for (const auto& r : all) {
        log << (r.pass() ? "pass " : "FAIL ") << r.case_name << ' ' << r.metric << '=' << pde::format_double(r.value)
            << " (threshold " << pde::format_double(r.threshold) << ")\n";
    }
    passed = experiments::all_pass(all);
    return a;
}

/// Convergence sweep for the configured claim.
inline Artifacts cmd_converge(const RunConfig& cfg) {
    if (cfg.model.n != 1) fail(ErrorCode::Unsupported, "converge runs one-dimensional solves");
    auto r = experiments::run_convergence(make_setup(cfg), cfg.claim, cfg.verify.kappas);
    std::ostringstream os;
    experiments::write_convergence_csv(os, r);
    Artifacts a;
    a.add(cfg.output.path, os.str());
    return a;
}

/// Loads the configuration, runs `command`, writes artifacts and the sidecar.
inline int run_command(const std::string& command, const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    try {
        cfg = load_config(opt.config, opt.overrides);
        if (opt.side) cfg.side = parse_side(*opt.side);
        if (opt.seed) cfg.oracle.seed = *opt.seed;
        if (opt.out) cfg.output.path = *opt.out;
    } catch (const Error& e) {
        err << e.what() << '\n';
        return kConfigInvalid;
    }

    const auto t0 = std::chrono::steady_clock::now();
    Artifacts a;
    bool passed = true;
    std::string meta_path;
    try {
        if (command == "price") {
            a = cmd_price(cfg);
            meta_path = cfg.output.path + ".meta.json";
        } else if (command == "hedge") {
            a = cmd_hedge(cfg);
            meta_path = cfg.output.path + ".meta.json";
        } else if (command == "verify") {
            const std::string dir = opt.out ? *opt.out : std::string("verify_out");
            a = cmd_verify(cfg, dir, opt.only, passed, out);
            meta_path = (std::filesystem::path(dir) / "verify.meta.json").string();
        } else if (command == "converge") {
            a = cmd_converge(cfg);
            meta_path = cfg.output.path + ".meta.json";
        } else {
            err << "unknown command '" << command << "'\n";
            return kConfigInvalid;
        }
    } catch (const Error& e) {
        err << e.what() << '\n';
        const bool config_side = e.code() == ErrorCode::ConfigInvalid || e.code() == ErrorCode::Refused ||
                                 e.code() == ErrorCode::InvalidClaim || e.code() == ErrorCode::DimensionMismatch;
        return config_side ? kConfigInvalid : kSolverFailure;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    a.add(meta_path, detail::sidecar(command, cfg, a, secs));
    try {
        detail::commit(a);
    } catch (const std::exception& e) {
        err << e.what() << '\n';
        return kSolverFailure;
    }
    for (const auto& f : a.files) out << "wrote " << f.first << '\n';
    return passed ? kOk : kChecksFailed;
}

}  // namespace ambig::cli
