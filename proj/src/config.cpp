#include "stagflow/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <sstream>

namespace stagflow {

StudyKind parse_study_kind(const std::string& name) {
    if (name == "simulate") return StudyKind::simulate;
    if (name == "convergence") return StudyKind::convergence;
    if (name == "vcurve") return StudyKind::vcurve;
    if (name == "adjoint-check") return StudyKind::adjoint_check;
    if (name == "channel-smoke") return StudyKind::channel_smoke;
    throw InvalidArgument("unknown study '" + name +
                          "' (expected simulate, convergence, vcurve, adjoint-check or channel-smoke)");
}

std::string to_string(StudyKind kind) {
    switch (kind) {
        case StudyKind::simulate: return "simulate";
        case StudyKind::convergence: return "convergence";
        case StudyKind::vcurve: return "vcurve";
        case StudyKind::adjoint_check: return "adjoint-check";
        case StudyKind::channel_smoke: return "channel-smoke";
    }
    return "simulate";
}

namespace {

//------------------------------------------------------------------------------
// Scalar conversions
//------------------------------------------------------------------------------

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename I>
I to_int(const std::string& v) {
    I x{};
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) throw InvalidArgument("expected an integer, got '" + v + "'");
    return x;
}

double to_double(const std::string& v) {
    double x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) throw InvalidArgument("expected a number, got '" + v + "'");
    return x;
}

bool to_bool(const std::string& v) {
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    throw InvalidArgument("expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

FilterRule parse_filter(const std::string& v) {
    if (v == "per-axis") return FilterRule::per_axis;
    if (v == "geometric-mean") return FilterRule::geometric_mean;
    throw InvalidArgument("unknown filter rule '" + v + "' (expected per-axis or geometric-mean)");
}

std::string filter_name(FilterRule f) { return f == FilterRule::per_axis ? "per-axis" : "geometric-mean"; }

//------------------------------------------------------------------------------
// Key table
//------------------------------------------------------------------------------

struct Key {
    std::string name;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

const std::vector<Key>& key_table() {
    static const std::vector<Key> table = [] {
        std::vector<Key> t;
        auto add = [&](std::string name, auto set, auto get) { t.push_back({std::move(name), set, get}); };
        auto dbl = [&](std::string name, auto member) {
            add(name, [member](RunConfig& c, const std::string& v) { member(c) = to_double(v); },
                [member](const RunConfig& c) { return fmt(member(const_cast<RunConfig&>(c))); });
        };
        auto integer = [&](std::string name, auto member) {
            add(name,
                [member](RunConfig& c, const std::string& v) {
                    member(c) = to_int<std::remove_reference_t<decltype(member(c))>>(v);
                },
                [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); });
        };
        auto boolean = [&](std::string name, auto member) {
            add(name, [member](RunConfig& c, const std::string& v) { member(c) = to_bool(v); },
                [member](const RunConfig& c) { return fmt_bool(member(const_cast<RunConfig&>(c))); });
        };
        auto text = [&](std::string name, auto member) {
            add(name, [member](RunConfig& c, const std::string& v) { member(c) = v; },
                [member](const RunConfig& c) { return member(const_cast<RunConfig&>(c)); });
        };

        add("run.study",
            [](RunConfig& c, const std::string& v) {
                c.study = parse_study_kind(v);
                c.study_set = true;
            },
            [](const RunConfig& c) { return to_string(c.study); });
        add("run.precision", [](RunConfig& c, const std::string& v) { c.precision = parse_precision(v); },
            [](const RunConfig& c) { return to_string(c.precision); });
        integer("run.seed", [](RunConfig& c) -> std::uint64_t& { return c.seed; });
        text("run.output", [](RunConfig& c) -> std::string& { return c.output; });
        integer("run.threads", [](RunConfig& c) -> int& { return c.threads; });
        integer("run.cadence", [](RunConfig& c) -> int& { return c.cadence; });

        integer("grid.dim", [](RunConfig& c) -> int& { return c.dim; });
        const char* ax[3] = {"x", "y", "z"};
        for (int a = 0; a < 3; ++a) {
            const std::string p = std::string("grid.") + ax[a];
            integer("grid.n" + std::string(ax[a]), [a](RunConfig& c) -> int& { return c.axes[a].n; });
            dbl(p + "_min", [a](RunConfig& c) -> double& { return c.axes[a].lo; });
            dbl(p + "_max", [a](RunConfig& c) -> double& { return c.axes[a].hi; });
            text(p + "_profile", [a](RunConfig& c) -> std::string& { return c.axes[a].profile; });
            dbl(p + "_param", [a](RunConfig& c) -> double& { return c.axes[a].param; });
        }
        for (int a = 0; a < 3; ++a)
            text(std::string("bc.") + ax[a], [a](RunConfig& c) -> std::string& { return c.axes[a].bc; });

        dbl("physics.nu", [](RunConfig& c) -> double& { return c.nu; });
        text("physics.initial", [](RunConfig& c) -> std::string& { return c.initial; });
        add("physics.force",
            [](RunConfig& c, const std::string& v) {
                const auto items = split_list(v);
                if (items.size() != 3) throw InvalidArgument("expected three comma-separated numbers");
                for (int a = 0; a < 3; ++a) c.force[a] = to_double(items[a]);
            },
            [](const RunConfig& c) { return fmt(c.force[0]) + ", " + fmt(c.force[1]) + ", " + fmt(c.force[2]); });
        boolean("physics.convection", [](RunConfig& c) -> bool& { return c.convection; });

        add("closure.kind", [](RunConfig& c, const std::string& v) { c.closure = parse_closure_kind(v); },
            [](const RunConfig& c) { return to_string(c.closure); });
        add("closure.constant",
            [](RunConfig& c, const std::string& v) {
                c.closure_c = v == "default" ? std::numeric_limits<double>::quiet_NaN() : to_double(v);
            },
            [](const RunConfig& c) { return std::isnan(c.closure_c) ? std::string("default") : fmt(c.closure_c); });
        add("closure.filter", [](RunConfig& c, const std::string& v) { c.filter = parse_filter(v); },
            [](const RunConfig& c) { return filter_name(c.filter); });
        dbl("closure.p", [](RunConfig& c) -> double& { return c.closure_p; });

        add("solver.kind",
            [](RunConfig& c, const std::string& v) {
                if (v != "auto") parse_poisson_kind(v);
                c.solver = v;
            },
            [](const RunConfig& c) { return c.solver; });
        dbl("solver.tol", [](RunConfig& c) -> double& { return c.solver_tol; });
        integer("solver.max_iter", [](RunConfig& c) -> int& { return c.solver_max_iter; });

        add("time.method", [](RunConfig& c, const std::string& v) { c.method = parse_rk_method(v); },
            [](const RunConfig& c) { return to_string(c.method); });
        boolean("time.adaptive", [](RunConfig& c) -> bool& { return c.adaptive; });
        dbl("time.dt", [](RunConfig& c) -> double& { return c.dt; });
        dbl("time.t_final", [](RunConfig& c) -> double& { return c.t_final; });
        dbl("time.c_conv", [](RunConfig& c) -> double& { return c.c_conv; });
        dbl("time.c_diff", [](RunConfig& c) -> double& { return c.c_diff; });
        dbl("time.dt_max", [](RunConfig& c) -> double& { return c.dt_max; });
        integer("time.max_steps", [](RunConfig& c) -> long& { return c.max_steps; });

        add("convergence.ns",
            [](RunConfig& c, const std::string& v) {
                c.ns.clear();
                for (const auto& item : split_list(v)) c.ns.push_back(to_int<int>(item));
            },
            [](const RunConfig& c) {
                std::string s;
                for (std::size_t q = 0; q < c.ns.size(); ++q) s += (q ? ", " : "") + std::to_string(c.ns[q]);
                return s;
            });
        dbl("convergence.tanh_gamma", [](RunConfig& c) -> double& { return c.conv_gamma; });
        dbl("convergence.cfl", [](RunConfig& c) -> double& { return c.conv_cfl; });

        dbl("vcurve.h_min_exp", [](RunConfig& c) -> double& { return c.h_lo_exp; });
        dbl("vcurve.h_max_exp", [](RunConfig& c) -> double& { return c.h_hi_exp; });
        integer("vcurve.per_decade", [](RunConfig& c) -> int& { return c.per_decade; });

        integer("adjoint.trials", [](RunConfig& c) -> int& { return c.adjoint_trials; });
        dbl("adjoint.eps", [](RunConfig& c) -> double& { return c.adjoint_eps; });
        dbl("adjoint.tol", [](RunConfig& c) -> double& { return c.adjoint_tol; });

        integer("channel.nx", [](RunConfig& c) -> int& { return c.channel.nx; });
        integer("channel.ny", [](RunConfig& c) -> int& { return c.channel.ny; });
        integer("channel.nz", [](RunConfig& c) -> int& { return c.channel.nz; });
        dbl("channel.gamma", [](RunConfig& c) -> double& { return c.channel.gamma; });
        dbl("channel.nu", [](RunConfig& c) -> double& { return c.channel.nu; });
        dbl("channel.centerline", [](RunConfig& c) -> double& { return c.channel.centerline; });
        dbl("channel.perturbation", [](RunConfig& c) -> double& { return c.channel.perturbation; });
        integer("channel.modes", [](RunConfig& c) -> int& { return c.channel.modes; });
        integer("channel.steps", [](RunConfig& c) -> long& { return c.channel_steps; });
        integer("channel.stats_every", [](RunConfig& c) -> int& { return c.stats_every; });
        dbl("channel.div_tol", [](RunConfig& c) -> double& { return c.div_tol; });
        boolean("channel.snapshot", [](RunConfig& c) -> bool& { return c.write_snapshot; });
        return t;
    }();
    return table;
}

const Key* find_key(const std::string& name) {
    for (const auto& k : key_table())
        if (k.name == name) return &k;
    return nullptr;
}

std::string where(int line) { return line > 0 ? "line " + std::to_string(line) + ": " : ""; }

[[noreturn]] void fail(const std::string& key, int line, const std::string& msg) {
    throw ConfigError(where(line) + "key '" + key + "': " + msg, key, line);
}

void set_key(RunConfig& cfg, const std::string& key, const std::string& value, int line) {
    const Key* k = find_key(key);
    if (!k) throw ConfigError(where(line) + "unknown key '" + key + "'", key, line);
    try {
        k->set(cfg, value);
    } catch (const std::invalid_argument& e) {
        fail(key, line, e.what());
    }
    cfg.lines[key] = line;
}

int line_of(const RunConfig& cfg, const std::string& key) {
    const auto it = cfg.lines.find(key);
    return it == cfg.lines.end() ? 0 : it->second;
}

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

}  // namespace

//------------------------------------------------------------------------------

bool RunConfig::operator==(const RunConfig& o) const {
    for (const auto& k : key_table())
        if (k.get(*this) != k.get(o)) return false;
    // Formatting is exact (17 significant digits), so equal text means equal values;
    // the NaN default of the closure constant is compared explicitly.
    return study_set == o.study_set && same(closure_c, o.closure_c);
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& k : key_table()) out.push_back(k.name);
    return out;
}

int threads_from_env() {
    const char* v = std::getenv("STAGFLOW_THREADS");
    if (!v || !*v) return 0;
    try {
        const int n = to_int<int>(trim(v));
        if (n < 0) throw InvalidArgument("negative");
        return n;
    } catch (const InvalidArgument&) {
        throw ConfigError("environment STAGFLOW_THREADS must be a non-negative integer, got '" + std::string(v) + "'",
                          "STAGFLOW_THREADS", 0);
    }
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override '" + assignment + "' must have the form section.key=value", assignment, 0);
    set_key(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)), 0);
}

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
    RunConfig cfg;
    cfg.threads = threads_from_env();
    std::istringstream in(text);
    std::string raw, section;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        const auto hash = s.find_first_of("#;");
        if (hash != std::string::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError("line " + std::to_string(line) + ": malformed section header", "", line);
            section = trim(s.substr(1, s.size() - 2));
            bool known = false;
            for (const auto& k : key_table())
                if (k.name.rfind(section + ".", 0) == 0) known = true;
            if (!known) throw ConfigError("line " + std::to_string(line) + ": unknown section [" + section + "]", section, line);
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line) + ": expected 'key = value'", "", line);
        if (section.empty())
            throw ConfigError("line " + std::to_string(line) + ": key outside of any [section]", "", line);
        const std::string key = section + "." + trim(s.substr(0, eq));
        if (cfg.lines.count(key)) fail(key, line, "duplicate key (first set on line " + std::to_string(cfg.lines[key]) + ")");
        set_key(cfg, key, trim(s.substr(eq + 1)), line);
    }
    for (const auto& o : overrides) apply_override(cfg, o);
    if (!cfg.study_set) throw ConfigError("key 'run.study' is required", "run.study", 0);
    validate(cfg);
    return cfg;
}

std::string effective_config(const RunConfig& cfg) {
    std::ostringstream os;
    os << "# stagflow effective configuration v1\n";
    std::string section;
    for (const auto& k : key_table()) {
        const auto dot = k.name.find('.');
        const std::string sec = k.name.substr(0, dot);
        if (sec != section) {
            os << (section.empty() ? "" : "\n") << "[" << sec << "]\n";
            section = sec;
        }
        os << k.name.substr(dot + 1) << " = " << k.get(cfg) << "\n";
    }
    return os.str();
}

PoissonKind resolve_solver(const RunConfig& cfg, bool periodic_uniform) {
    if (cfg.solver == "auto") return periodic_uniform ? PoissonKind::spectral : PoissonKind::direct;
    return parse_poisson_kind(cfg.solver);
}

//------------------------------------------------------------------------------
// Cross-field checks
//------------------------------------------------------------------------------

void validate(const RunConfig& c) {
    auto check = [&](bool ok, const std::string& key, const std::string& msg) {
        if (!ok) fail(key, line_of(c, key), msg);
    };
    const char* ax[3] = {"x", "y", "z"};

    check(c.threads >= 0, "run.threads", "must be >= 0 (0 selects automatic)");
    check(c.cadence >= 1, "run.cadence", "must be >= 1");
    check(!c.output.empty(), "run.output", "must not be empty");

    check(c.dim == 2 || c.dim == 3, "grid.dim", "must be 2 or 3");
    bool periodic_uniform = true, all_periodic = true;
    for (int a = 0; a < c.dim; ++a) {
        const auto& s = c.axes[a];
        const std::string p = std::string("grid.") + ax[a];
        check(s.n >= 1, "grid.n" + std::string(ax[a]), "must be >= 1");
        check(s.lo < s.hi, p + "_max", "must exceed " + p + "_min");
        check(s.profile == "uniform" || s.profile == "tanh" || s.profile == "cosine" || s.profile == "stretched",
              p + "_profile", "expected uniform, tanh, cosine or stretched, got '" + s.profile + "'");
        if (s.profile == "tanh" || s.profile == "stretched") check(s.param > 0, p + "_param", "must be > 0");
        check(s.bc == "periodic" || s.bc == "noslip" || s.bc == "symmetric", std::string("bc.") + ax[a],
              "expected periodic, noslip or symmetric, got '" + s.bc + "'");
        if (s.bc != "periodic") all_periodic = false;
        if (s.bc != "periodic" || s.profile != "uniform") periodic_uniform = false;
    }

    check(c.nu >= 0, "physics.nu", "must be >= 0");
    check(c.initial == "taylor-green" || c.initial == "zero" || c.initial == "random", "physics.initial",
          "expected taylor-green, zero or random, got '" + c.initial + "'");
    check(std::isnan(c.closure_c) || c.closure_c >= 0, "closure.constant", "must be >= 0");

    check(c.solver_tol >= 0, "solver.tol", "must be >= 0");
    check(c.solver_max_iter >= 0, "solver.max_iter", "must be >= 0");

    check(c.adaptive || c.dt > 0, "time.dt", "must be > 0 for fixed steps");
    check(c.t_final >= 0, "time.t_final", "must be >= 0");
    check(c.c_conv > 0, "time.c_conv", "must be > 0");
    check(c.c_diff > 0, "time.c_diff", "must be > 0");
    check(c.dt_max > 0, "time.dt_max", "must be > 0");
    check(c.max_steps >= 0, "time.max_steps", "must be >= 0");

    switch (c.study) {
        case StudyKind::simulate:
            if (c.solver == "spectral")
                check(periodic_uniform, "solver.kind", "spectral solver needs a periodic uniform grid");
            if (c.initial == "taylor-green") {
                const double L = 2 * std::numbers::pi;
                bool ok = c.dim == 2;
                for (int a = 0; a < 2 && ok; ++a)
                    ok = c.axes[a].bc == "periodic" && std::abs(c.axes[a].lo) < 1e-12 && std::abs(c.axes[a].hi - L) < 1e-12;
                check(ok, "physics.initial", "taylor-green needs a 2D periodic [0, 2pi]^2 grid");
            }
            break;
        case StudyKind::convergence: {
            check(!c.ns.empty(), "convergence.ns", "must list at least one N");
            for (std::size_t q = 0; q < c.ns.size(); ++q) {
                const int n = c.ns[q];
                check(n >= 4 && (n & (n - 1)) == 0, "convergence.ns", "entries must be powers of two >= 4");
                check(q == 0 || n > c.ns[q - 1], "convergence.ns", "entries must increase");
            }
            check(c.conv_gamma >= 0, "convergence.tanh_gamma", "must be >= 0 (0 selects a uniform grid)");
            check(c.conv_cfl > 0, "convergence.cfl", "must be > 0");
            if (c.solver == "spectral")
                check(c.conv_gamma == 0, "solver.kind", "spectral solver needs a uniform grid (convergence.tanh_gamma = 0)");
            break;
        }
        case StudyKind::vcurve:
            check(c.per_decade >= 1, "vcurve.per_decade", "must be >= 1");
            check(c.h_hi_exp - c.h_lo_exp >= 8, "vcurve.h_min_exp", "h range must span at least 8 decades");
            break;
        case StudyKind::adjoint_check:
            check(c.precision == Precision::f64, "run.precision", "adjoint-check runs in f64 only");
            for (int a = 0; a < c.dim; ++a)
                check(c.axes[a].bc == "periodic", std::string("bc.") + ax[a], "adjoint-check needs periodic axes");
            check(c.adjoint_trials >= 1, "adjoint.trials", "must be >= 1");
            check(c.adjoint_eps > 0, "adjoint.eps", "must be > 0");
            check(c.adjoint_tol > 0, "adjoint.tol", "must be > 0");
            if (c.solver == "spectral")
                check(periodic_uniform, "solver.kind", "spectral solver needs a periodic uniform grid");
            break;
        case StudyKind::channel_smoke:
            check(c.solver != "spectral", "solver.kind", "spectral solver cannot handle the channel walls");
            check(c.channel.nx >= 1 && c.channel.ny >= 2 && c.channel.nz >= 1, "channel.ny", "channel needs ny >= 2");
            check(c.channel.gamma >= 0, "channel.gamma", "must be >= 0");
            check(c.channel.nu > 0, "channel.nu", "must be > 0");
            check(c.channel.modes >= 0, "channel.modes", "must be >= 0");
            check(c.channel_steps >= 0, "channel.steps", "must be >= 0");
            check(c.stats_every >= 1, "channel.stats_every", "must be >= 1");
            check(c.div_tol > 0, "channel.div_tol", "must be > 0");
            break;
    }
    (void)all_periodic;
}

}  // namespace stagflow
