#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "flockdde/commands.hpp"
#include "flockdde/config.hpp"
#include "flockdde/errors.hpp"
#include "flockdde/output.hpp"

using namespace flockdde;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("flockdde_test_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter()++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string config_error_where(const std::string& text) {
    try {
        parse_run_config(parse_json_text(text));
    } catch (const ConfigError& e) {
        return e.where();
    }
    return "";
}

json small_run() {
    json doc = preset("conditional-beta1");
    doc["t_end"] = 1.0;
    doc["datum"]["domain"]["counts"] = {12};
    return doc;
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err);
    if (out_text) {
        *out_text = out.str();
    }
    return code;
}

} // namespace

TEST_CASE("json syntax errors carry line and column") {
    const std::string text = "{\n  \"schema_version\": 1,\n  \"tau\": 0.1,, \"step\": 0.01\n}";
    try {
        parse_json_text(text);
        FAIL("expected a syntax error");
    } catch (const ConfigError& e) {
        CHECK(e.where() == "line 3, column 14");
    }
}

TEST_CASE("field errors carry the json path") {
    json doc = preset("conditional-beta1");
    doc["kernel"]["beta"] = "one";
    CHECK(config_error_where(doc.dump()) == "/kernel/beta");

    doc = preset("conditional-beta1");
    doc["kernel"]["beta"] = -1.0;
    CHECK(config_error_where(doc.dump()) == "/kernel/beta");

    doc = preset("conditional-beta1");
    doc.erase("tau");
    CHECK(config_error_where(doc.dump()) == "/tau");

    doc = preset("conditional-beta1");
    doc["schema_version"] = 2;
    CHECK(config_error_where(doc.dump()) == "/schema_version");

    doc = preset("conditional-beta1");
    doc["datum"]["velocity"]["type"] = "vortex";
    CHECK(config_error_where(doc.dump()).starts_with("/datum/velocity"));

    doc = preset("conditional-beta1");
    doc["step"] = 0.03;
    CHECK(!config_error_where(doc.dump()).empty());
}

TEST_CASE("presets parse") {
    const auto names = preset_names();
    CHECK(names.size() == 5);
    for (const auto& n : names) {
        CAPTURE(n);
        auto cfg = parse_run_config(preset(n));
        CHECK_NOTHROW(validate(cfg.sim));
    }
    CHECK_THROWS_AS(preset("nope"), ConfigError);

    std::string listing;
    CHECK(cli({"presets"}, &listing) == exit_code::ok);
    CHECK(listing.find("riccati-blowup") != std::string::npos);
    std::string one;
    CHECK(cli({"presets", "flat-kernel-decay"}, &one) == exit_code::ok);
    CHECK(json::parse(one)["kernel"]["beta"] == 0.0);
}

TEST_CASE("config details") {
    json doc = small_run();
    doc["datum"]["velocity"] = {{"type", "linear"}, {"matrix", -0.5}, {"scale", 2.0}};
    auto cfg = parse_run_config(doc);
    CHECK(cfg.sim.datum.dim == 1);
    CHECK(cfg.sim.output_every == 1e-2);

    json random = small_run();
    random["datum"]["velocity"] = {{"type", "random-modes"}, {"base", {0.1}}, {"amplitude", 0.2}, {"modes", 3},
                                   {"max_wavenumber", 2.0}};
    random["seed"] = 7;
    auto a = execute_run(parse_run_config(random));
    auto b = execute_run(parse_run_config(random));
    CHECK(a.frames_csv == b.frames_csv);
    random["seed"] = 8;
    auto c = execute_run(parse_run_config(random));
    CHECK(a.frames_csv != c.frames_csv);
}

TEST_CASE("set_by_path") {
    json doc = {{"kernel", {{"beta", 1.0}}}};
    set_by_path(doc, "kernel.beta", 0.25);
    CHECK(doc["kernel"]["beta"] == 0.25);
    set_by_path(doc, "datum.velocity.scale", 3);
    CHECK(doc["datum"]["velocity"]["scale"] == 3);
    set_by_path(doc, "tau", 0.5);
    CHECK(doc["tau"] == 0.5);
    CHECK_THROWS_AS(set_by_path(doc, "tau.x", 1), ConfigError);
    CHECK_THROWS_AS(set_by_path(doc, "", 1), ConfigError);
}

TEST_CASE("number formatting") {
    for (double x : {0.1, 1.0 / 3.0, std::numbers::pi, 1e-300, -2.5e17, 0.0}) {
        CHECK(std::strtod(format_double(x).c_str(), nullptr) == x);
    }
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(format_double(std::nan("")) == "nan");
    CHECK(number_json(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(number_json(std::nan("")).is_null());
    CHECK(number_json(0.5) == 0.5);
}

TEST_CASE("execute_run on presets") {
    SUBCASE("flat kernel decays at rate one") {
        auto o = execute_run(parse_run_config(preset("flat-kernel-decay")));
        CHECK(o.exit_code == exit_code::ok);
        CHECK(o.summary["status"] == "completed");
        CHECK(std::abs(o.summary["fitted_rate"].get<double>() - 1.0) < 1e-3);
        CHECK(o.frames_csv.starts_with(kFramesSchema));
    }
    SUBCASE("beta 1/4 is certified with an infinite tail") {
        auto o = execute_run(parse_run_config(preset("unconditional-beta025")));
        CHECK(o.summary["certificate"]["satisfied"] == true);
        CHECK(o.summary["certificate"]["rhs"] == "inf");
        CHECK(o.summary["verdicts"]["threshold"].is_null());
    }
    SUBCASE("Riccati preset blows up near ln 2") {
        auto o = execute_run(parse_run_config(preset("riccati-blowup")));
        CHECK(o.exit_code == exit_code::blowup);
        CHECK(o.summary["status"] == "blowup");
        CHECK(std::abs(o.summary["blowup_time"].get<double>() - std::numbers::ln2) < 1e-2);
        CHECK(o.summary["verdicts"]["threshold"]["verdict"] == "FiniteTimeBlowup");
        CHECK(o.frames_csv.ends_with("blowup\n"));
    }
    SUBCASE("subcritical flat preset stays regular") {
        auto o = execute_run(parse_run_config(preset("subcritical-flat")));
        CHECK(o.exit_code == exit_code::ok);
        CHECK(o.summary["verdicts"]["threshold"]["verdict"] == "GlobalExistence");
        CHECK(o.summary["final"]["min_detJ"].get<double>() > 0.05);
    }
}

TEST_CASE("run writes files and is deterministic") {
    TempDir dir;
    json doc = small_run();
    doc["output"] = {{"frames", "f.csv"}, {"summary", "s.json"}, {"snapshot", "snap.csv"}};
    const fs::path cfg_path = dir.path / "cfg.json";
    std::ofstream(cfg_path) << doc.dump(2);

    std::string printed;
    CHECK(cli({"run", cfg_path.string(), "--out-dir", (dir.path / "a").string()}, &printed) == exit_code::ok);
    CHECK(cli({"run", cfg_path.string(), "--out-dir", (dir.path / "b").string()}) == exit_code::ok);
    CHECK(slurp(dir.path / "a" / "f.csv") == slurp(dir.path / "b" / "f.csv"));
    CHECK(slurp(dir.path / "a" / "snap.csv") == slurp(dir.path / "b" / "snap.csv"));
    CHECK(slurp(dir.path / "a" / "s.json") == printed);
    CHECK(slurp(dir.path / "a" / "snap.csv").starts_with(kSnapshotSchema));
    for (const auto& entry : fs::directory_iterator(dir.path / "a")) {
        CHECK(entry.path().extension() != ".tmp");
    }

    const fs::path broken = dir.path / "broken.json";
    std::ofstream(broken) << "{ \"tau\": ";
    CHECK(cli({"run", broken.string()}) == exit_code::config_error);
    CHECK(cli({"run"}) == exit_code::config_error);
    CHECK(cli({"run", cfg_path.string(), "--preset", "riccati-blowup"}) == exit_code::config_error);
    CHECK(cli({"bogus"}) == exit_code::config_error);
}

TEST_CASE("certify exit codes") {
    std::ostringstream out;
    std::ostringstream err;
    CHECK(cmd_certify(preset("conditional-beta1"), out, err) == exit_code::ok);

    json loud = preset("conditional-beta1");
    loud["datum"]["velocity"]["amplitude"] = {3.0};
    CHECK(cmd_certify(loud, out, err) == exit_code::not_satisfied);

    json tab = preset("conditional-beta1");
    tab["kernel"] = {{"family", "tabulated"}, {"radii", {0.0, 1.0, 2.0}}, {"values", {1.0, 0.5, 0.2}}};
    CHECK(cmd_certify(tab, out, err) == exit_code::unsupported);

    CHECK(cli({"certify", "--preset", "unconditional-beta025"}) == exit_code::ok);
}

TEST_CASE("threshold exit codes") {
    std::string text;
    CHECK(cli({"threshold", "-2", "0", "3"}, &text) == exit_code::blowup);
    CHECK(json::parse(text)["bound"].get<double>() == doctest::Approx(1.0));
    CHECK(cli({"threshold", "-0.5", "0", "3"}) == exit_code::ok);
    CHECK(cli({"threshold", "-0.1", "1", "1"}) == exit_code::indeterminate);
    CHECK(cli({"threshold", "x", "1", "1"}) == exit_code::config_error);
    CHECK(cli({"threshold", "-0.5", "-1", "1"}) == exit_code::config_error);
}

TEST_CASE("sweep") {
    TempDir dir;

    SUBCASE("single cell matches a standalone run") {
        json base = small_run();
        json sweep = {{"schema_version", 1}, {"base", base}, {"axes", {{{"path", "kernel.beta"}, {"values", {1.0}}}}},
                      {"output_dir", (dir.path / "one").string()}};
        std::ostringstream out, err;
        REQUIRE(cmd_sweep(sweep, out, err) == exit_code::ok);
        auto o = execute_run(parse_run_config(base));
        CHECK(slurp(dir.path / "one" / "cell_0000" / "frames.csv") == o.frames_csv);
        CHECK(slurp(dir.path / "one" / "cell_0000" / "summary.json") == dump_json(o.summary));
        CHECK(fs::exists(dir.path / "one" / "cell_0000" / "config.json"));
    }
    SUBCASE("beta axis with unbounded tails") {
        json sweep = {{"schema_version", 1}, {"base", small_run()},
                      {"axes", {{{"path", "kernel.beta"}, {"values", {0.25, 0.5}}}}}, {"max_workers", 2},
                      {"output_dir", (dir.path / "beta").string()}};
        std::ostringstream out, err;
        REQUIRE(cmd_sweep(sweep, out, err) == exit_code::ok);
        const std::string table = slurp(dir.path / "beta" / "sweep.csv");
        CHECK(table == out.str());
        CHECK(table.starts_with(kSweepSchema));
        CHECK(table.find("cell,kernel.beta,status,satisfied,fitted_rate,blowup_time,error\n") != std::string::npos);
        CHECK(table.find("0,0.25,completed,true,") != std::string::npos);
        CHECK(table.find("1,0.5,completed,true,") != std::string::npos);
    }
    SUBCASE("amplitude axis flips the certificate and workers do not change results") {
        json base = small_run();
        base["datum"]["velocity"]["amplitude"] = {1.0};
        json axes = {{{"path", "datum.velocity.scale"}, {"values", {0.1, 5.0}}},
                     {{"path", "tau"}, {"values", {0.0, 0.1}}}};
        json serial = {{"schema_version", 1}, {"base", base}, {"axes", axes}, {"max_workers", 1},
                       {"output_dir", (dir.path / "serial").string()}};
        json parallel = serial;
        parallel["max_workers"] = 4;
        parallel["output_dir"] = (dir.path / "parallel").string();
        std::ostringstream o1, o2, err;
        REQUIRE(cmd_sweep(serial, o1, err) == exit_code::ok);
        REQUIRE(cmd_sweep(parallel, o2, err) == exit_code::ok);
        CHECK(o1.str() == o2.str());
        for (int c = 0; c < 4; ++c) {
            char name[16];
            std::snprintf(name, sizeof name, "cell_%04d", c);
            CHECK(slurp(dir.path / "serial" / name / "frames.csv") == slurp(dir.path / "parallel" / name / "frames.csv"));
        }
        const std::string t = o1.str();
        CHECK(t.find("\n0,0.10000000000000001,0,completed,true,") != std::string::npos);
        CHECK(t.find("\n2,5,0,completed,false,") != std::string::npos);
    }
    SUBCASE("bad sweeps") {
        std::ostringstream out, err;
        json too_many = {{"schema_version", 1}, {"base", small_run()},
                         {"axes", {{{"path", "tau"}, {"values", {0.0, 0.1, 0.2}}}}}, {"max_cells", 2},
                         {"output_dir", (dir.path / "x").string()}};
        CHECK(cmd_sweep(too_many, out, err) == exit_code::config_error);
        json bad_cell = {{"schema_version", 1}, {"base", small_run()},
                         {"axes", {{{"path", "kernel.beta"}, {"values", {1.0, -3.0}}}}},
                         {"output_dir", (dir.path / "y").string()}};
        CHECK(cmd_sweep(bad_cell, out, err) == exit_code::ok);
        CHECK(out.str().find("1,-3,error,,,,") != std::string::npos);
    }
}
