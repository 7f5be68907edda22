#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "stagflow/stats.hpp"
#include "stagflow/study.hpp"

using namespace stagflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    auto d = fs::temp_directory_path() / ("stagflow_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

// Runs the CLI binary; returns its exit status.
int cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(STAGFLOW_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.push_back("");
        rows.push_back(cells);
    }
    return rows;
}

ConfigError config_error(const std::string& text, const std::vector<std::string>& overrides = {}) {
    try {
        parse_config(text, overrides);
    } catch (const ConfigError& e) {
        return e;
    }
    FAIL("expected a ConfigError");
    return ConfigError("", "", -1);
}

}  // namespace

TEST_CASE("study names") {
    for (auto k : {StudyKind::simulate, StudyKind::convergence, StudyKind::vcurve, StudyKind::adjoint_check,
                   StudyKind::channel_smoke})
        CHECK(parse_study_kind(to_string(k)) == k);
    CHECK_THROWS_AS(parse_study_kind("turbulence"), InvalidArgument);
}

TEST_CASE("minimal config fills defaults") {
    const RunConfig c = parse_config("[run]\nstudy = convergence\n[grid]\nnx = 16\nny = 16\n");
    CHECK(c.study == StudyKind::convergence);
    CHECK(c.axes[0].n == 16);
    CHECK(c.axes[2].n == 32);
    CHECK(c.precision == Precision::f64);
    CHECK(c.seed == 42);
    CHECK(c.nu == doctest::Approx(0.01));
    CHECK(c.method == RkMethod::ssp33);
    CHECK(c.solver == "auto");
    CHECK(std::isnan(c.closure_c));
    CHECK(c.ns == std::vector<int>{16, 32, 64, 128, 256});
    CHECK(c.lines.at("grid.nx") == 4);

    const std::string echo = effective_config(c);
    for (const auto& key : config_keys()) {
        const auto dot = key.find('.');
        CHECK_MESSAGE(echo.find("\n" + key.substr(dot + 1) + " = ") != std::string::npos, key);
    }
}

TEST_CASE("config keys are unique") {
    const auto keys = config_keys();
    CHECK(std::set<std::string>(keys.begin(), keys.end()).size() == keys.size());
}

TEST_CASE("syntax and type errors name the key and line") {
    SUBCASE("unknown key") {
        const auto e = config_error("[run]\nstudy = vcurve\n\n[grid]\nnxx = 4\n");
        CHECK(e.line == 5);
        CHECK(e.key == "grid.nxx");
        CHECK(std::string(e.what()).find("line 5") != std::string::npos);
        CHECK(std::string(e.what()).find("grid.nxx") != std::string::npos);
    }
    SUBCASE("unknown section") {
        const auto e = config_error("[run]\nstudy = vcurve\n[gird]\nnx = 4\n");
        CHECK(e.line == 3);
    }
    SUBCASE("type mismatch") {
        const auto e = config_error("[run]\nstudy = vcurve\n[grid]\nnx = 4.5\n");
        CHECK(e.key == "grid.nx");
        CHECK(e.line == 4);
        CHECK(config_error("[run]\nstudy = vcurve\n[physics]\nnu = fast\n").key == "physics.nu");
        CHECK(config_error("[run]\nstudy = vcurve\n[time]\nadaptive = maybe\n").key == "time.adaptive");
        CHECK(config_error("[run]\nstudy = vcurve\n[run]\nprecision = f16\n").key == "run.precision");
    }
    SUBCASE("duplicate key") { CHECK(config_error("[run]\nstudy = vcurve\nstudy = vcurve\n").line == 3); }
    SUBCASE("missing study") { CHECK(config_error("[grid]\nnx = 8\n").key == "run.study"); }
    SUBCASE("malformed lines") {
        CHECK(config_error("[run]\nstudy vcurve\n").line == 2);
        CHECK(config_error("study = vcurve\n").line == 1);
        CHECK(config_error("[run\nstudy = vcurve\n").line == 1);
    }
    SUBCASE("comments and blank lines") {
        const auto c = parse_config("# header\n[run]   ; trailing\n  study = vcurve  # inline\n\n");
        CHECK(c.study == StudyKind::vcurve);
    }
}

TEST_CASE("cross-field checks") {
    SUBCASE("spectral solver on a tanh grid") {
        const auto e = config_error("[run]\nstudy = simulate\n[grid]\nx_profile = tanh\n[physics]\ninitial = zero\n"
                                    "[solver]\nkind = spectral\n");
        CHECK(e.key == "solver.kind");
        CHECK(e.line == 8);
        CHECK(std::string(e.what()).find("periodic uniform") != std::string::npos);
    }
    SUBCASE("spectral solver for a stretched convergence study") {
        CHECK(config_error("[run]\nstudy = convergence\n[convergence]\ntanh_gamma = 1.5\n[solver]\nkind = spectral\n")
                  .key == "solver.kind");
        CHECK_NOTHROW(parse_config("[run]\nstudy = convergence\n[convergence]\ntanh_gamma = 1.5\n"));
    }
    SUBCASE("spectral solver with walls") {
        CHECK(config_error("[run]\nstudy = channel-smoke\n[solver]\nkind = spectral\n").key == "solver.kind");
        CHECK(config_error("[run]\nstudy = simulate\n[bc]\ny = noslip\n[physics]\ninitial = zero\n[solver]\nkind = "
                           "spectral\n")
                  .key == "solver.kind");
    }
    SUBCASE("Taylor-Green needs the periodic square") {
        CHECK(config_error("[run]\nstudy = simulate\n[grid]\nx_max = 1\n").key == "physics.initial");
        CHECK(config_error("[run]\nstudy = simulate\n[grid]\ndim = 3\n").key == "physics.initial");
    }
    SUBCASE("adjoint check") {
        CHECK(config_error("[run]\nstudy = adjoint-check\nprecision = f32\n").key == "run.precision");
        CHECK(config_error("[run]\nstudy = adjoint-check\n[bc]\nx = noslip\n").key == "bc.x");
    }
    SUBCASE("value ranges") {
        CHECK(config_error("[run]\nstudy = simulate\n[time]\ndt = 0\n").key == "time.dt");
        CHECK_NOTHROW(parse_config("[run]\nstudy = simulate\n[time]\ndt = 0\nadaptive = true\n"));
        CHECK(config_error("[run]\nstudy = convergence\n[convergence]\nns = 16, 24\n").key == "convergence.ns");
        CHECK(config_error("[run]\nstudy = convergence\n[convergence]\nns = 32, 16\n").key == "convergence.ns");
        CHECK(config_error("[run]\nstudy = vcurve\n[vcurve]\nh_min_exp = -4\n").key == "vcurve.h_min_exp");
        CHECK(config_error("[run]\nstudy = simulate\n[closure]\nconstant = -1\n").key == "closure.constant");
        CHECK(config_error("[run]\nstudy = simulate\nthreads = -1\n").key == "run.threads");
        CHECK(config_error("[run]\nstudy = simulate\ncadence = 0\n").key == "run.cadence");
        CHECK(config_error("[run]\nstudy = simulate\n[grid]\ndim = 4\n").key == "grid.dim");
        CHECK(config_error("[run]\nstudy = simulate\n[grid]\nx_profile = wavy\n").key == "grid.x_profile");
        CHECK(config_error("[run]\nstudy = simulate\n[bc]\nx = slip\n").key == "bc.x");
    }
}

TEST_CASE("effective config round-trips") {
    const std::string text =
        "[run]\nstudy = channel-smoke\nprecision = f32\nseed = 7\noutput = somewhere/else\ncadence = 3\n"
        "[grid]\ndim = 3\nnx = 12\ny_profile = tanh\ny_param = 2.25\nz_max = 0.1\n"
        "[bc]\ny = noslip\n"
        "[physics]\nnu = 0.1234567890123456789\nforce = 1, 0, -2.5e-3\nconvection = false\n"
        "[closure]\nkind = wale\nconstant = 0.325\nfilter = geometric-mean\np = -2\n"
        "[solver]\nkind = cg\ntol = 1e-9\nmax_iter = 500\n"
        "[time]\nmethod = wray3\nadaptive = yes\ndt_max = 0.25\nmax_steps = 9\n"
        "[convergence]\nns = 8, 16\n"
        "[channel]\nnx = 8\nny = 12\nnz = 4\ngamma = 2\nsteps = 3\nsnapshot = false\n";
    const RunConfig a = parse_config(text);
    const RunConfig b = parse_config(effective_config(a));
    CHECK(a == b);
    CHECK(effective_config(a) == effective_config(b));
    CHECK(b.nu == 0.1234567890123456789);
    CHECK(b.force[2] == -2.5e-3);
    CHECK(b.closure == ClosureKind::wale);
    CHECK(b.filter == FilterRule::geometric_mean);
    CHECK(b.channel.ny == 12);

    SUBCASE("defaults, including inf and the model-default constant") {
        const RunConfig d = parse_config("[run]\nstudy = vcurve\n");
        const RunConfig e = parse_config(effective_config(d));
        CHECK(d == e);
        CHECK(std::isinf(e.dt_max));
        CHECK(std::isnan(e.closure_c));
    }
    SUBCASE("a changed value breaks equality") {
        RunConfig c = a;
        c.channel.gamma = 2.0000000000000004;
        CHECK_FALSE(c == a);
    }
}

TEST_CASE("overrides") {
    const RunConfig c =
        parse_config("[run]\nstudy = convergence\n", {"convergence.ns=8,16", "run.precision = f32", "time.method=wray3"});
    CHECK(c.ns == std::vector<int>{8, 16});
    CHECK(c.precision == Precision::f32);
    CHECK(c.method == RkMethod::wray3);
    CHECK(parse_config("[grid]\nnx=4\n", {"run.study=vcurve"}).study == StudyKind::vcurve);

    const auto e = config_error("[run]\nstudy = vcurve\n", {"grid.nz=oops"});
    CHECK(e.key == "grid.nz");
    CHECK(e.line == 0);
    CHECK(config_error("[run]\nstudy = vcurve\n", {"no-equals-sign"}).line == 0);
    CHECK(config_error("[run]\nstudy = vcurve\n", {"run.nope=1"}).key == "run.nope");
    // Overrides are validated along with the file.
    CHECK(config_error("[run]\nstudy = vcurve\n", {"run.cadence=0"}).key == "run.cadence");
}

TEST_CASE("thread count from the environment") {
    ::setenv("STAGFLOW_THREADS", "3", 1);
    CHECK(threads_from_env() == 3);
    CHECK(parse_config("[run]\nstudy = vcurve\n").threads == 3);
    CHECK(parse_config("[run]\nstudy = vcurve\nthreads = 1\n").threads == 1);
    ::setenv("STAGFLOW_THREADS", "many", 1);
    CHECK_THROWS_AS(threads_from_env(), ConfigError);
    ::unsetenv("STAGFLOW_THREADS");
    CHECK(threads_from_env() == 0);
}

TEST_CASE("solver resolution and grid construction") {
    RunConfig c = parse_config("[run]\nstudy = simulate\n[grid]\nnx = 8\nny = 6\n");
    CHECK(resolve_solver(c, true) == PoissonKind::spectral);
    CHECK(resolve_solver(c, false) == PoissonKind::direct);
    c.solver = "cg";
    CHECK(resolve_solver(c, true) == PoissonKind::cg);

    c = parse_config("[run]\nstudy = simulate\n[physics]\ninitial = zero\n[grid]\ndim = 3\nnx = 4\nny = 6\nnz = 5\n"
                     "y_profile = tanh\ny_min = -1\ny_max = 1\n[bc]\ny = noslip\nz = symmetric\n");
    const auto g = grid_from_config<double>(c);
    CHECK(g.dim == 3);
    CHECK(g.n == std::array<int, 3>{4, 6, 5});
    CHECK(g.axes[1].a() == -1.0);
    CHECK(g.axes[1].b() == 1.0);
    CHECK_FALSE(g.uniform(1));
    CHECK(g.periodic(0));
    CHECK(g.bc.sides[1][0].kind == BcKind::dirichlet);
    CHECK(g.bc.sides[2][1].kind == BcKind::symmetric);
}

TEST_CASE("adjoint check rows") {
    const auto g = build_grid<double>({uniform_grid(0.0, 1.0, 6), tanh_grid(0.0, 1.0, 5, 1.3)},
                                      BoundarySpec<double>::all_periodic());
    AdjointCheckOptions o;
    o.trials = 5;
    const auto rows = adjoint_check(g, o);
    const std::vector<std::string> names{"divergence", "gradient",   "diffusion",  "convection",
                                         "poisson",    "projection", "rk_step_x1", "rk_step_x3"};
    REQUIRE(rows.size() == names.size());
    for (std::size_t q = 0; q < rows.size(); ++q) {
        CHECK(rows[q].op == names[q]);
        CHECK(rows[q].pass);
        CHECK(rows[q].max_rel_error < 1e-8);
    }
    const auto walled = build_grid<double>({uniform_grid(0.0, 1.0, 6), uniform_grid(0.0, 1.0, 5)},
                                           BoundarySpec<double>::channel());
    CHECK_THROWS_AS(adjoint_check(walled, o), UnsupportedConfiguration);
}

//------------------------------------------------------------------------------
// End to end through the binary
//------------------------------------------------------------------------------

TEST_CASE("version flag") {
    const auto d = scratch_dir("version");
    CHECK(cli("--version", d / "out.txt") == 0);
    CHECK(slurp(d / "out.txt").find(STAGFLOW_VERSION) != std::string::npos);
}

TEST_CASE("usage errors exit with the config code") {
    const auto d = scratch_dir("usage");
    CHECK(cli("", d / "o.txt") == 2);
    CHECK(cli("run", d / "o.txt") == 2);
    CHECK(cli("run a.ini extra-positional", d / "o.txt") == 2);
    CHECK(cli("run " + (d / "missing.ini").string(), d / "o.txt") == 4);
    spit(d / "bad.ini", "[run]\nstudy = vcurve\n[grid]\nnq = 3\n");
    CHECK(cli("run " + (d / "bad.ini").string(), d / "o.txt") == 2);
    CHECK(slurp(d / "o.txt").find("line 4") != std::string::npos);
    CHECK(cli("run " + (d / "bad.ini").string() + " --set grid.nq=4", d / "o.txt") == 2);
}

TEST_CASE("convergence study through the CLI") {
    const auto d = scratch_dir("convergence");
    spit(d / "c.ini", "[run]\nstudy = convergence\noutput = " + (d / "out").string() + "\n[convergence]\nns = 16, 32, 64\n");
    REQUIRE(cli("run " + (d / "c.ini").string(), d / "log1.txt") == 0);

    const std::string csv = slurp(d / "out" / "results.csv");
    CHECK(csv.rfind("# stagflow convergence v1\n", 0) == 0);
    const auto rows = csv_rows(csv);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == std::vector<std::string>{"N", "error", "order"});

    ConvergenceOptions o;
    o.ns = {16, 32, 64};
    const auto expect = convergence_study(o);
    for (int q = 0; q < 3; ++q) {
        CHECK(std::stoi(rows[q + 1][0]) == expect[q].n);
        CHECK(std::stod(rows[q + 1][1]) == expect[q].error);
        if (q > 0) CHECK(std::stod(rows[q + 1][2]) == expect[q].order);
    }
    CHECK(rows[1][2].empty());
    CHECK(fs::exists(d / "out" / "log.txt"));
    CHECK(slurp(d / "out" / "log.txt").find("N=64") != std::string::npos);

    SUBCASE("identical config reruns byte-identically") {
        spit(d / "c2.ini", "[run]\nstudy = convergence\noutput = " + (d / "out2").string() +
                               "\n[convergence]\nns = 16, 32, 64\n");
        REQUIRE(cli("run " + (d / "c2.ini").string(), d / "log2.txt") == 0);
        CHECK(slurp(d / "out2" / "results.csv") == csv);
    }
    SUBCASE("the effective config echo reproduces the run") {
        const fs::path echo = d / "out" / "effective_config.ini";
        REQUIRE(cli("run " + echo.string() + " --set run.output=" + (d / "out3").string(), d / "log3.txt") == 0);
        CHECK(slurp(d / "out3" / "results.csv") == csv);
        const auto again = parse_config(slurp(d / "out3" / "effective_config.ini"));
        auto first = parse_config(slurp(echo));
        first.output = again.output;
        CHECK(first == again);
    }
    SUBCASE("no temporary files are left behind") {
        for (const auto& entry : fs::directory_iterator(d / "out"))
            CHECK(entry.path().filename().string().find(".tmp") == std::string::npos);
    }
}

TEST_CASE("adjoint-check study through the CLI") {
    const auto d = scratch_dir("adjoint");
    spit(d / "a.ini", "[run]\nstudy = adjoint-check\noutput = " + (d / "out").string() +
                          "\n[grid]\nnx = 8\nny = 7\nx_profile = tanh\n[adjoint]\ntrials = 10\n");
    REQUIRE(cli("run " + (d / "a.ini").string(), d / "log.txt") == 0);
    const auto rows = csv_rows(slurp(d / "out" / "results.csv"));
    REQUIRE(rows.size() == 9);
    CHECK(rows[0] == std::vector<std::string>{"operator", "fd_rel_error", "pass"});
    for (std::size_t q = 1; q < rows.size(); ++q) {
        CHECK(rows[q][2] == "pass");
        CHECK(std::stod(rows[q][1]) <= 1e-5);
    }
    // An unattainable tolerance is reported as a numerical failure.
    CHECK(cli("run " + (d / "a.ini").string() + " --set adjoint.tol=1e-30 --set run.output=" + (d / "strict").string(),
              d / "log2.txt") == 3);
    CHECK(slurp(d / "strict" / "results.csv").find(",fail") != std::string::npos);
}

TEST_CASE("vcurve study through the CLI") {
    const auto d = scratch_dir("vcurve");
    spit(d / "v.ini", "[run]\nstudy = vcurve\nprecision = f32\noutput = " + (d / "out").string() + "\n");
    REQUIRE(cli("run " + (d / "v.ini").string(), d / "log.txt") == 0);
    const auto rows = csv_rows(slurp(d / "out" / "results.csv"));
    CHECK(rows[0] == std::vector<std::string>{"h", "err_order1", "err_order2"});
    const auto expect = fd_vcurve(log_spaced(-12, 0, 10), Precision::f32);
    REQUIRE(rows.size() == expect.size() + 1);
    for (std::size_t q = 0; q < expect.size(); ++q) {
        CHECK(std::stod(rows[q + 1][0]) == expect[q].h);
        CHECK(std::stod(rows[q + 1][2]) == expect[q].err2);
    }
}

TEST_CASE("simulate study through the CLI") {
    const auto d = scratch_dir("simulate");
    spit(d / "s.ini", "[run]\nstudy = simulate\ncadence = 4\noutput = " + (d / "out").string() +
                          "\n[grid]\nnx = 16\nny = 16\n[time]\ndt = 0.05\nt_final = 0.42\n");
    REQUIRE(cli("run " + (d / "s.ini").string(), d / "log.txt") == 0);
    const auto rows = csv_rows(slurp(d / "out" / "results.csv"));
    CHECK(rows[0] == std::vector<std::string>{"step", "t", "dt", "kinetic_energy", "max_div", "l2_error"});
    // Steps 0, 4 and 8, then the truncated last step 9 at t = 0.42.
    REQUIRE(rows.size() == 5);
    CHECK(rows[4][0] == "9");
    CHECK(std::stod(rows[4][1]) == doctest::Approx(0.42).epsilon(1e-14));
    CHECK(std::stod(rows[4][2]) == doctest::Approx(0.02).epsilon(1e-10));
    for (std::size_t q = 1; q < rows.size(); ++q) {
        CHECK(std::stod(rows[q][4]) < 1e-12);
        CHECK(std::stod(rows[q][5]) < 1e-3);
    }
    CHECK(std::stod(rows[4][3]) < std::stod(rows[1][3]));

    const auto snap = read_snapshot(d / "out" / "snapshot.bin");
    CHECK(snap.dims == std::array<int, 3>{16, 16, 1});
    CHECK(snap.components == 2);
    CHECK(snap.time == doctest::Approx(0.42));

    SUBCASE("f32 runs the same study") {
        REQUIRE(cli("run " + (d / "s.ini").string() + " --set run.precision=f32 --set run.output=" +
                        (d / "f32").string(),
                    d / "log32.txt") == 0);
        const auto r32 = csv_rows(slurp(d / "f32" / "results.csv"));
        REQUIRE(r32.size() == rows.size());
        CHECK(std::stod(r32[4][3]) == doctest::Approx(std::stod(rows[4][3])).epsilon(1e-5));
        CHECK(read_snapshot(d / "f32" / "snapshot.bin").dtype == "float32");
    }
    SUBCASE("a blow-up exits with the numerical code and keeps partial output") {
        REQUIRE(cli("run " + (d / "s.ini").string() + " --set physics.initial=random --set physics.nu=0 " +
                        "--set time.dt=50 --set time.t_final=1e6 --set run.cadence=1 --set run.output=" +
                        (d / "boom").string(),
                    d / "logboom.txt") == 3);
        CHECK(slurp(d / "boom" / "log.txt").find("numerical failure") != std::string::npos);
        CHECK(csv_rows(slurp(d / "boom" / "results.csv")).size() >= 2);
    }
    SUBCASE("an unwritable output directory exits with the io code") {
        CHECK(cli("run " + (d / "s.ini").string() + " --set run.output=/proc/stagflow-out", d / "logio.txt") == 4);
    }
}

TEST_CASE("channel-smoke study through the CLI") {
    const auto d = scratch_dir("channel");
    spit(d / "ch.ini", "[run]\nstudy = channel-smoke\ncadence = 5\noutput = " + (d / "out").string() +
                           "\n[time]\nmethod = wray3\n[channel]\nnx = 8\nny = 12\nnz = 4\nsteps = 20\nstats_every = 5\n");
    REQUIRE(cli("run " + (d / "ch.ini").string(), d / "log.txt") == 0);
    const auto rows = csv_rows(slurp(d / "out" / "results.csv"));
    REQUIRE(rows.size() == 5);
    CHECK(rows[4][0] == "20");
    for (std::size_t q = 1; q < rows.size(); ++q) CHECK(std::stod(rows[q][4]) <= 1e-8);

    const std::string prof = slurp(d / "out" / "profile.csv");
    CHECK(prof.find("samples=4") != std::string::npos);
    CHECK(csv_rows(prof).size() == 13);
    CHECK(read_snapshot(d / "out" / "snapshot.bin").dims == std::array<int, 3>{8, 12, 4});

    SUBCASE("a divergence tolerance that cannot hold stops the run") {
        CHECK(cli("run " + (d / "ch.ini").string() + " --set channel.div_tol=1e-300 --set run.output=" +
                      (d / "tight").string(),
                  d / "log2.txt") == 3);
    }
}
