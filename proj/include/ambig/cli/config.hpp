#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ambig/error.hpp"
#include "ambig/experiments/suite.hpp"
#include "ambig/hash.hpp"
#include "ambig/model.hpp"
#include "ambig/oracle/lsmc.hpp"
#include "ambig/payoff.hpp"
#include "ambig/pde/stepper.hpp"
#include "ambig/utility.hpp"
#include "ambig/vi/american.hpp"

namespace ambig::cli {

using json = nlohmann::json;

enum class SideChoice { Bid, Ask, Both };

struct GridConfig {
    int nx = 500;
    int nt = 500;
    double width_mult = 6.0;
    double spot = 100.0;
};

struct OracleConfig {
    std::size_t paths = 100000;
    int steps = 50;
    std::uint64_t seed = 1;
    int basis_degree = 4;
};

struct OutputConfig {
    std::string path = "surface.csv";
    std::string format = "csv";
};

struct VerifyConfig {
    std::vector<double> kappas{0.2, 0.1, 0.05, 0.025};
    int tree_steps = 2000;
    double trim = 0.1;
    int terminal_skip = 2;
};

struct RunConfig {
    MarketModel model;
    ClaimSpec claim;
    AmbiguityRectangle ambiguity;
    ConstraintSpec constraint = ConstraintSpec::orthant(1);
    UtilitySpec utility;
    GridConfig grid;
    SideChoice side = SideChoice::Both;
    pde::SolverOptions solver;
    vi::PenaltyOptions penalty;
    OracleConfig oracle;
    OutputConfig output;
    VerifyConfig verify;
    std::uint64_t config_hash = 0;  // of the canonical JSON after overrides
};

namespace detail {

[[noreturn]] inline void bad(const std::string& path, const std::string& msg) {
    fail(ErrorCode::ConfigInvalid, (path.empty() ? std::string("config") : path) + ": " + msg);
}

/// JSON object reader that remembers which keys were read, so leftovers can
/// be reported as unknown.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) bad(path_, "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }
    std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json& raw(const std::string& key) {
        if (!j_.contains(key)) bad(sub(key), "missing required key");
        seen_.insert(key);
        return j_.at(key);
    }
    Section section(const std::string& key) { return Section(raw(key), sub(key)); }

    double number(const std::string& key) { return as_number(raw(key), sub(key)); }
    double number(const std::string& key, double dflt) { return has(key) ? number(key) : dflt; }
    long long integer(const std::string& key) { return as_integer(raw(key), sub(key)); }
    long long integer(const std::string& key, long long dflt) { return has(key) ? integer(key) : dflt; }
    std::string string(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_string()) bad(sub(key), "expected a string");
        return v.get<std::string>();
    }
    std::string string(const std::string& key, const std::string& dflt) { return has(key) ? string(key) : dflt; }
    std::vector<double> numbers(const std::string& key) { return as_numbers(raw(key), sub(key)); }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) bad(sub(it.key()), "unknown key");
        }
    }

    static double as_number(const json& v, const std::string& path) {
        if (!v.is_number()) bad(path, "expected a number");
        double d = v.get<double>();
        if (!std::isfinite(d)) bad(path, "expected a finite number");
        return d;
    }
    static long long as_integer(const json& v, const std::string& path) {
        if (v.is_number_integer()) return v.get<long long>();
        if (v.is_number_float()) {
            double d = v.get<double>();
            if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e15) return static_cast<long long>(d);
        }
        bad(path, "expected an integer");
    }
    static std::vector<double> as_numbers(const json& v, const std::string& path) {
        if (!v.is_array()) bad(path, "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
        return out;
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline PiecewiseConstant<double> scalar_fn(const json& v, const std::string& path) {
    if (v.is_number()) return Section::as_number(v, path);
    Section s(v, path);
    auto breaks = s.numbers("breaks");
    auto values = s.numbers("values");
    s.finish();
    try {
        return {breaks, values};
    } catch (const Error& e) {
        bad(path, e.what());
    }
}

inline Matrix matrix_of(const json& v, const std::string& path) {
    if (v.is_number()) return Matrix::Constant(1, 1, Section::as_number(v, path));
    if (!v.is_array() || v.empty()) bad(path, "expected a number or a square matrix");
    const auto n = static_cast<Eigen::Index>(v.size());
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        auto row = Section::as_numbers(v[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]");
        if (static_cast<Eigen::Index>(row.size()) != n) bad(path, "matrix must be square");
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
    }
    return m;
}

inline PiecewiseConstant<Matrix> matrix_fn(const json& v, const std::string& path) {
    if (!v.is_object()) return matrix_of(v, path);
    Section s(v, path);
    auto breaks = s.numbers("breaks");
    const json& vals = s.raw("values");
    s.finish();
    if (!vals.is_array()) bad(path + ".values", "expected an array");
    std::vector<Matrix> ms;
    for (std::size_t i = 0; i < vals.size(); ++i) ms.push_back(matrix_of(vals[i], path + ".values[" + std::to_string(i) + "]"));
    for (const auto& m : ms) {
        if (m.rows() != ms.front().rows()) bad(path, "all volatility pieces must have the same size");
    }
    try {
        return {breaks, ms};
    } catch (const Error& e) {
        bad(path, e.what());
    }
}

inline Vector vector_of(const json& v, int n, const std::string& path) {
    if (v.is_number()) return Vector::Constant(n, Section::as_number(v, path));
    auto xs = Section::as_numbers(v, path);
    if (static_cast<int>(xs.size()) != n) bad(path, "expected " + std::to_string(n) + " entries");
    return Eigen::Map<Vector>(xs.data(), n);
}

inline PayoffDescriptor payoff_of(const json& v, int n, const std::string& path) {
    Section s(v, path);
    const std::string kind = s.string("kind");
    PayoffKind k;
    try {
        k = payoff_kind_from_string(kind);
    } catch (const Error& e) {
        bad(path + ".kind", e.what());
    }
    PayoffDescriptor p = PayoffDescriptor::call(0.0);
    try {
        switch (k) {
            case PayoffKind::Call: p = PayoffDescriptor::call(s.number("strike")); break;
            case PayoffKind::Put: p = PayoffDescriptor::put(s.number("strike")); break;
            case PayoffKind::Straddle: p = PayoffDescriptor::straddle(s.number("strike")); break;
            case PayoffKind::Linear: p = PayoffDescriptor::linear(s.number("intercept", 0.0), s.number("slope", 0.0)); break;
            case PayoffKind::PiecewiseLinear:
                p = PayoffDescriptor::piecewise(s.numbers("knots"), s.numbers("values"), s.number("slope_left", 0.0),
                                                s.number("slope_right", 0.0));
                break;
        }
        if (s.has("weights")) {
            p = p.with_weights(vector_of(s.raw("weights"), n, s.sub("weights")));
        } else if (n > 1) {
            p = p.with_weights(Vector::Constant(n, 1.0 / n));
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigInvalid) throw;
        bad(path, e.what());
    }
    s.finish();
    return p;
}

inline SideChoice side_of(const std::string& s, const std::string& path) {
    if (s == "bid") return SideChoice::Bid;
    if (s == "ask") return SideChoice::Ask;
    if (s == "both") return SideChoice::Both;
    bad(path, "side must be bid, ask or both");
}

}  // namespace detail

inline SideChoice parse_side(const std::string& s) { return detail::side_of(s, "--side"); }

/// Applies `a.b.c=value`; the value is read as JSON when it parses, otherwise
/// as a string.
inline void apply_override(json& root, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) detail::bad("--set", "expected key=value, got '" + assignment + "'");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    json* node = &root;
    std::stringstream ss(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) {
        if (part.empty()) detail::bad("--set", "empty path component in '" + key + "'");
        parts.push_back(part);
    }
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!node->is_object()) detail::bad("--set " + key, "'" + parts[i] + "' is not inside an object");
        node = &(*node)[parts[i]];
        if (node->is_null()) *node = json::object();
    }
    if (!node->is_object()) detail::bad("--set " + key, "parent is not an object");
    (*node)[parts.back()] = value;
}

/// Strict parse of a configuration document.
inline RunConfig parse_config(const json& root) {
    using detail::bad;
    using detail::Section;
    RunConfig cfg;
    Section top(root, "");

    {
        Section m = top.section("model");
        cfg.model.vol = detail::matrix_fn(m.raw("vol"), m.sub("vol"));
        cfg.model.n = static_cast<int>(cfg.model.vol.values().front().rows());
        cfg.model.rate = detail::scalar_fn(m.raw("rate"), m.sub("rate"));
        cfg.model.horizon = m.number("horizon");
        m.finish();
        auto errs = validate_model(cfg.model);
        if (!errs.empty()) {
            std::string all;
            for (const auto& e : errs) all += (all.empty() ? "" : "; ") + e;
            bad("model", all);
        }
    }
    const int n = cfg.model.n;
    {
        Section c = top.section("claim");
        const std::string style = c.string("style", "european");
        cfg.claim.terminal = detail::payoff_of(c.raw("terminal"), n, c.sub("terminal"));
        if (c.has("earnings")) cfg.claim.earnings = detail::scalar_fn(c.raw("earnings"), c.sub("earnings"));
        if (style == "american") {
            cfg.claim.style = ExerciseStyle::American;
            if (c.has("early")) {
                const json& e = c.raw("early");
                if (!e.is_array() || e.size() != 2) bad(c.sub("early"), "expected a pair [Gamma1, Gamma2]");
                cfg.claim.early = std::make_pair(detail::payoff_of(e[0], n, c.sub("early[0]")),
                                                 detail::payoff_of(e[1], n, c.sub("early[1]")));
            } else {
                cfg.claim.early = std::make_pair(cfg.claim.terminal, cfg.claim.terminal);
            }
        } else if (style == "european") {
            if (c.has("early")) bad(c.sub("early"), "only American claims take an early payoff");
        } else {
            bad(c.sub("style"), "style must be european or american");
        }
        c.finish();
    }
    {
        Section a = top.section("ambiguity");
        cfg.ambiguity.kappa_hi = detail::vector_of(a.raw("kappa_hi"), n, a.sub("kappa_hi"));
        cfg.ambiguity.kappa_lo = a.has("kappa_lo") ? detail::vector_of(a.raw("kappa_lo"), n, a.sub("kappa_lo"))
                                                   : Vector::Zero(n);
        a.finish();
        try {
            cfg.ambiguity.validate();
        } catch (const Error& e) {
            bad("ambiguity", e.what());
        }
    }
    {
        Section k = top.section("constraint");
        const std::string kind = k.string("kind");
        if (kind == "unconstrained") {
            cfg.constraint = ConstraintSpec::unconstrained(n);
        } else if (kind == "orthant") {
            cfg.constraint = ConstraintSpec::orthant(n);
        } else if (kind == "box") {
            auto bound = [&](const char* key, double inf) {
                const json& v = k.raw(key);
                if (!v.is_array() || static_cast<int>(v.size()) != n) bad(k.sub(key), "expected " + std::to_string(n) + " entries (null for unbounded)");
                Vector out(n);
                for (int i = 0; i < n; ++i) {
                    const json& e = v[static_cast<std::size_t>(i)];
                    out[i] = e.is_null() ? inf : Section::as_number(e, k.sub(key));
                }
                return out;
            };
            Vector lo = bound("lo", -HUGE_VAL), hi = bound("hi", HUGE_VAL);
            try {
                cfg.constraint = ConstraintSpec::box(lo, hi);
            } catch (const Error& e) {
                bad("constraint", e.what());
            }
        } else {
            bad(k.sub("kind"), "kind must be unconstrained, orthant or box");
        }
        k.finish();
    }
    {
        Section u = top.section("utility");
        const std::string kind = u.string("kind");
        if (kind == "power") {
            cfg.utility = UtilitySpec::power(u.number("gamma"));
        } else if (kind == "log") {
            cfg.utility = UtilitySpec::log();
        } else if (kind == "custom") {
            auto c = u.numbers("c");
            auto m = u.numbers("marginal");
            cfg.utility = UtilitySpec::custom(c, m, u.number("value_at_one", 0.0));
        } else {
            bad(u.sub("kind"), "kind must be power, log or custom");
        }
        cfg.utility.impatience = u.number("impatience", 0.0);
        u.finish();
        try {
            cfg.utility.validate();
        } catch (const Error& e) {
            bad("utility", e.what());
        }
    }
    {
        Section g = top.section("grid");
        cfg.grid.nx = static_cast<int>(g.integer("nx", cfg.grid.nx));
        cfg.grid.nt = static_cast<int>(g.integer("nt", cfg.grid.nt));
        cfg.grid.width_mult = g.number("width_mult", cfg.grid.width_mult);
        cfg.grid.spot = g.number("spot", cfg.grid.spot);
        g.finish();
        if (cfg.grid.nx < 50 || cfg.grid.nt < 50) bad("grid", "nx and nt must be at least 50");
        if (!(cfg.grid.width_mult > 0.0)) bad("grid.width_mult", "must be positive");
        if (!(cfg.grid.spot > 0.0)) bad("grid.spot", "must be positive");
    }
    {
        Section s = top.section("solver");
        cfg.side = detail::side_of(s.string("side", "both"), s.sub("side"));
        if (s.has("penalty_schedule")) {
            cfg.penalty.schedule = s.numbers("penalty_schedule");
            if (cfg.penalty.schedule.empty()) bad(s.sub("penalty_schedule"), "must not be empty");
            for (std::size_t i = 0; i < cfg.penalty.schedule.size(); ++i) {
                if (!(cfg.penalty.schedule[i] > 0.0) || (i > 0 && !(cfg.penalty.schedule[i] > cfg.penalty.schedule[i - 1]))) {
                    bad(s.sub("penalty_schedule"), "must be positive and increasing");
                }
            }
        }
        cfg.solver.picard_tol = s.number("picard_tol", cfg.solver.picard_tol);
        cfg.solver.picard_max = static_cast<int>(s.integer("picard_max", cfg.solver.picard_max));
        cfg.solver.rannacher_steps = static_cast<int>(s.integer("rannacher_steps", cfg.solver.rannacher_steps));
        s.finish();
        if (!(cfg.solver.picard_tol > 0.0)) bad("solver.picard_tol", "must be positive");
        if (cfg.solver.picard_max < 1) bad("solver.picard_max", "must be at least 1");
        if (cfg.solver.rannacher_steps < 0) bad("solver.rannacher_steps", "must be nonnegative");
    }
    {
        Section o = top.section("oracle");
        const long long paths = o.integer("paths", static_cast<long long>(cfg.oracle.paths));
        cfg.oracle.steps = static_cast<int>(o.integer("steps", cfg.oracle.steps));
        const long long seed = o.integer("seed", static_cast<long long>(cfg.oracle.seed));
        cfg.oracle.basis_degree = static_cast<int>(o.integer("basis_degree", cfg.oracle.basis_degree));
        o.finish();
        if (paths < 1) bad("oracle.paths", "must be positive");
        if (seed < 0) bad("oracle.seed", "must be nonnegative");
        if (cfg.oracle.steps < 1) bad("oracle.steps", "must be positive");
        if (cfg.oracle.basis_degree < 0) bad("oracle.basis_degree", "must be nonnegative");
        cfg.oracle.paths = static_cast<std::size_t>(paths);
        cfg.oracle.seed = static_cast<std::uint64_t>(seed);
    }
    {
        Section o = top.section("output");
        cfg.output.path = o.string("path", cfg.output.path);
        cfg.output.format = o.string("format", cfg.output.format);
        o.finish();
        if (cfg.output.format != "csv") bad("output.format", "only csv is supported");
        if (cfg.output.path.empty()) bad("output.path", "must not be empty");
    }
    if (top.has("verify")) {
        Section v = top.section("verify");
        if (v.has("kappas")) cfg.verify.kappas = v.numbers("kappas");
        cfg.verify.tree_steps = static_cast<int>(v.integer("tree_steps", cfg.verify.tree_steps));
        cfg.verify.trim = v.number("trim", cfg.verify.trim);
        cfg.verify.terminal_skip = static_cast<int>(v.integer("terminal_skip", cfg.verify.terminal_skip));
        v.finish();
        if (cfg.verify.kappas.size() < 4) bad("verify.kappas", "need at least 4 values");
        for (std::size_t i = 0; i < cfg.verify.kappas.size(); ++i) {
            if (!(cfg.verify.kappas[i] > 0.0) || (i > 0 && !(cfg.verify.kappas[i] < cfg.verify.kappas[i - 1]))) {
                bad("verify.kappas", "must be positive and strictly decreasing");
            }
        }
        if (cfg.verify.tree_steps < 1) bad("verify.tree_steps", "must be positive");
        if (!(cfg.verify.trim >= 0.0 && cfg.verify.trim < 0.5)) bad("verify.trim", "must be in [0, 0.5)");
        if (cfg.verify.terminal_skip < 0) bad("verify.terminal_skip", "must be nonnegative");
    }
    top.finish();

    const std::string canon = root.dump();
    cfg.config_hash = Fnv1a().add(std::string_view(canon)).value();
    return cfg;
}

/// Reads the file, applies overrides in order, then parses strictly.
inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
    std::ifstream in(path);
    if (!in) detail::bad("", "cannot read '" + path + "'");
    json root = json::parse(in, nullptr, false, true);
    if (root.is_discarded()) detail::bad("", "'" + path + "' is not valid JSON");
    for (const auto& o : overrides) apply_override(root, o);
    return parse_config(root);
}

/// Experiment setup derived from a run configuration (one-dimensional).
inline experiments::Setup make_setup(const RunConfig& cfg) {
    experiments::Setup su;
    su.model = cfg.model;
    su.strike = cfg.claim.terminal.strike();
    su.spot = cfg.grid.spot;
    su.nx = cfg.grid.nx;
    su.nt = cfg.grid.nt;
    su.width_mult = cfg.grid.width_mult;
    su.kappa = cfg.ambiguity.kappa_hi[0];
    su.kappa_lo = cfg.ambiguity.kappa_lo[0];
    su.solver = cfg.solver;
    su.penalty = cfg.penalty;
    su.tree_steps = cfg.verify.tree_steps;
    su.kappas = cfg.verify.kappas;
    su.trim = cfg.verify.trim;
    su.terminal_skip = cfg.verify.terminal_skip;
    return su;
}

inline oracle::LsmcOptions lsmc_options(const RunConfig& cfg) {
    oracle::LsmcOptions o;
    o.steps = cfg.oracle.steps;
    o.paths = cfg.oracle.paths;
    o.basis_degree = cfg.oracle.basis_degree;
    o.seed = cfg.oracle.seed;
    return o;
}

}  // namespace ambig::cli
