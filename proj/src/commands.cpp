#include "flockdde/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <thread>

#include <CLI11.hpp>

#include "flockdde/errors.hpp"
#include "flockdde/output.hpp"
#include "flockdde/threshold.hpp"

namespace flockdde {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& x) { return x ? number_json(*x) : json(nullptr); }

std::optional<double> parse_real(const std::string& s) {
    if (s.empty()) {
        return std::nullopt;
    }
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(s.c_str(), &end);
    if (errno != 0 || end != s.c_str() + s.size() || !std::isfinite(x)) {
        return std::nullopt;
    }
    return x;
}

json threshold_section(const SimulationResult& r, const InfluenceKernel& kernel) {
    if (r.initial.dim() != 1 || !kernel.log_derivative_bound()) {
        return nullptr;
    }
    auto slopes = slopes_from_tangent(r.initial);
    if (slopes.blowup || slopes.values.empty()) {
        return nullptr;
    }
    const double w0_min = *std::min_element(slopes.values.begin(), slopes.values.end());
    json v = verdict_json(classify(w0_min, kernel, r.R_V));
    v["w0_min"] = number_json(w0_min);
    return v;
}

} // namespace

std::optional<unsigned> thread_cap_from_env() {
    const char* raw = std::getenv("FLOCKDDE_THREADS");
    if (raw == nullptr) {
        return std::nullopt;
    }
    char* end = nullptr;
    const long v = std::strtol(raw, &end, 10);
    if (end == raw || *end != '\0' || v <= 0) {
        return std::nullopt;
    }
    return static_cast<unsigned>(std::min<long>(v, 1024));
}

RunOutcome execute_run(const RunConfig& config) {
    SimulationConfig sim = config.sim;
    if (auto cap = thread_cap_from_env()) {
        sim.threads = std::min(sim.threads, *cap);
    }
    RunOutcome o;
    o.result = simulate(sim);
    const SimulationResult& r = o.result;
    const bool blew = r.blowup.has_value();
    o.frames_csv = frames_csv(r.frames, blew);
    if (config.output.snapshot) {
        o.snapshot_csv = snapshot_csv(r.final_state);
    }

    const DiagnosticsFrame& last = r.frames.back();
    std::optional<double> rate;
    try {
        rate = fit_decay_rate(r.frames, 0.0, last.t);
    } catch (const NotReadyError&) {
    }

    json summary = {{"schema_version", kSchemaVersion},
                    {"status", blew ? "blowup" : "completed"},
                    {"t_final", number_json(last.t)},
                    {"final", {{"d_X", number_json(last.d_X)},
                               {"d_V", number_json(last.d_V)},
                               {"max_speed", number_json(last.max_speed)},
                               {"min_detJ", number_json(last.min_detJ)}}},
                    {"R_V", number_json(r.R_V)},
                    {"fitted_rate", optional_number(rate)},
                    {"certificate", r.certificate ? certificate_json(*r.certificate) : json(nullptr)},
                    {"verdicts", {{"threshold", threshold_section(r, sim.kernel)}}},
                    {"blowup_time", blew ? number_json(r.blowup->time) : json(nullptr)},
                    {"blowup_node", blew && r.blowup->node ? json(*r.blowup->node) : json(nullptr)},
                    {"blowup_reason", blew ? json(r.blowup->reason) : json(nullptr)}};
    o.summary = std::move(summary);
    o.exit_code = blew ? exit_code::blowup : exit_code::ok;
    return o;
}

void write_outcome(const RunOutcome& o, const OutputPaths& paths, const std::filesystem::path& base_dir) {
    auto resolve = [&](const std::filesystem::path& p) { return p.is_absolute() ? p : base_dir / p; };
    write_file_atomic(resolve(paths.frames.value_or("frames.csv")), o.frames_csv);
    write_file_atomic(resolve(paths.summary.value_or("summary.json")), dump_json(o.summary));
    if (o.snapshot_csv && paths.snapshot) {
        write_file_atomic(resolve(*paths.snapshot), *o.snapshot_csv);
    }
}

std::vector<DiagnosticsFrame> prehistory_frames(const SimulationConfig& config) {
    validate(config);
    std::size_t delay_steps = 0;
    if (config.tau > 0.0) {
        delay_steps = static_cast<std::size_t>(std::llround(config.tau / config.step));
    }
    HistoryBuffer buffer = discretize(config.datum, config.tau, delay_steps + 1, config.interpolation);
    std::vector<DiagnosticsFrame> frames;
    for (std::size_t k = 0; k < buffer.slice_count(); ++k) {
        frames.push_back(observe(buffer.slice(k).state));
    }
    FlockingMonitor monitor(config.kernel, config.tau, std::move(frames));
    return monitor.frames();
}

int cmd_run(const json& doc, const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err) {
    RunConfig config;
    try {
        config = parse_run_config(doc);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_code::config_error;
    }
    RunOutcome o;
    try {
        o = execute_run(config);
    } catch (const InvalidDatumError& e) {
        err << "config error: /datum: " << e.what() << "\n";
        return exit_code::config_error;
    } catch (const std::exception& e) {
        err << "run failed: " << e.what() << "\n";
        return exit_code::config_error;
    }
    try {
        write_outcome(o, config.output, out_dir);
    } catch (const std::exception& e) {
        err << "output error: " << e.what() << "\n";
        return exit_code::config_error;
    }
    out << dump_json(o.summary);
    return o.exit_code;
}

int cmd_certify(const json& doc, std::ostream& out, std::ostream& err) {
    RunConfig config;
    std::vector<DiagnosticsFrame> frames;
    try {
        config = parse_run_config(doc);
        frames = prehistory_frames(config.sim);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_code::config_error;
    } catch (const std::exception& e) {
        err << "config error: /datum: " << e.what() << "\n";
        return exit_code::config_error;
    }
    if (!config.sim.kernel.supports_tail()) {
        out << dump_json({{"error", "unsupported kernel"}, {"kernel", config.sim.kernel.describe()}});
        return exit_code::unsupported;
    }
    const FlockingCertificate c = certify_flocking(frames, config.sim.kernel);
    out << dump_json(certificate_json(c));
    return c.satisfied ? exit_code::ok : exit_code::not_satisfied;
}

int cmd_threshold(const std::string& w0_min, const std::string& beta, const std::string& R_V, std::ostream& out,
                  std::ostream& err) {
    const auto w = parse_real(w0_min);
    const auto b = parse_real(beta);
    const auto r = parse_real(R_V);
    if (!w || !b || !r || *b < 0.0 || *r < 0.0) {
        err << "threshold needs finite w0_min, beta >= 0 and R_V >= 0\n";
        return exit_code::config_error;
    }
    ThresholdVerdict v;
    try {
        v = classify(*w, InfluenceKernel::cucker_smale(*b), *r);
    } catch (const std::exception& e) {
        err << "threshold: " << e.what() << "\n";
        return exit_code::config_error;
    }
    out << dump_json(verdict_json(v));
    switch (v.verdict) {
    case VerdictKind::GlobalExistence:
        return exit_code::ok;
    case VerdictKind::FiniteTimeBlowup:
        return exit_code::blowup;
    case VerdictKind::Indeterminate:
        break;
    }
    return exit_code::indeterminate;
}

namespace {

struct CellResult {
    std::string status;
    json satisfied = nullptr;
    json fitted_rate = nullptr;
    json blowup_time = nullptr;
    std::string error;
};

std::string csv_field(const json& v) {
    if (v.is_null()) {
        return "";
    }
    if (v.is_number()) {
        return format_double(v.get<double>());
    }
    if (v.is_boolean()) {
        return v.get<bool>() ? "true" : "false";
    }
    std::string s = v.is_string() ? v.get<std::string>() : v.dump();
    if (s.find_first_of(",\"\n") != std::string::npos) {
        std::string q = "\"";
        for (char c : s) {
            q += c == '"' ? std::string("\"\"") : std::string(1, c);
        }
        return q + "\"";
    }
    return s;
}

CellResult run_cell(json cfg, const std::filesystem::path& dir) {
    CellResult cell;
    try {
        if (!cfg.contains("output") || !cfg["output"].is_object()) {
            cfg["output"] = json::object();
        }
        const bool snapshot = cfg["output"].contains("snapshot") && !cfg["output"]["snapshot"].is_null();
        cfg["output"] = {{"frames", "frames.csv"}, {"summary", "summary.json"}};
        if (snapshot) {
            cfg["output"]["snapshot"] = "snapshot.csv";
        }
        RunConfig config = parse_run_config(cfg);
        RunOutcome o = execute_run(config);
        write_outcome(o, config.output, dir);
        write_file_atomic(dir / "config.json", dump_json(cfg));
        cell.status = o.summary["status"].get<std::string>();
        if (o.summary["certificate"].is_object()) {
            cell.satisfied = o.summary["certificate"]["satisfied"];
        }
        cell.fitted_rate = o.summary["fitted_rate"];
        cell.blowup_time = o.summary["blowup_time"];
    } catch (const std::exception& e) {
        cell.status = "error";
        cell.error = e.what();
    }
    return cell;
}

} // namespace

int cmd_sweep(const json& doc, std::ostream& out, std::ostream& err) {
    SweepConfig sweep;
    try {
        sweep = parse_sweep_config(doc);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_code::config_error;
    }

    // Row-major grid: the first axis varies slowest.
    std::size_t n_cells = 1;
    for (const auto& axis : sweep.axes) {
        n_cells *= axis.values.size();
    }
    std::vector<std::vector<std::size_t>> index(n_cells);
    std::vector<json> configs(n_cells);
    for (std::size_t c = 0; c < n_cells; ++c) {
        std::size_t rest = c;
        index[c].resize(sweep.axes.size());
        for (std::size_t a = sweep.axes.size(); a-- > 0;) {
            index[c][a] = rest % sweep.axes[a].values.size();
            rest /= sweep.axes[a].values.size();
        }
        configs[c] = sweep.base;
        try {
            for (std::size_t a = 0; a < sweep.axes.size(); ++a) {
                set_by_path(configs[c], sweep.axes[a].path, sweep.axes[a].values[index[c][a]]);
            }
        } catch (const ConfigError& e) {
            err << "config error: " << e.what() << "\n";
            return exit_code::config_error;
        }
    }

    unsigned workers = sweep.max_workers;
    if (auto cap = thread_cap_from_env()) {
        workers = std::min(workers, *cap);
    }
    workers = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(workers, n_cells)));

    auto cell_dir = [&](std::size_t c) {
        char name[32];
        std::snprintf(name, sizeof name, "cell_%04zu", c);
        return sweep.output_dir / name;
    };

    std::vector<CellResult> results(n_cells);
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t c = next++; c < n_cells; c = next++) {
                    results[c] = run_cell(configs[c], cell_dir(c));
                }
            });
        }
    }

    std::string table = kSweepSchema;
    table += "\ncell";
    for (const auto& axis : sweep.axes) {
        table += ',' + csv_field(axis.path);
    }
    table += ",status,satisfied,fitted_rate,blowup_time,error\n";
    for (std::size_t c = 0; c < n_cells; ++c) {
        table += std::to_string(c);
        for (std::size_t a = 0; a < sweep.axes.size(); ++a) {
            table += ',' + csv_field(sweep.axes[a].values[index[c][a]]);
        }
        const CellResult& r = results[c];
        table += ',' + r.status + ',' + csv_field(r.satisfied) + ',' + csv_field(r.fitted_rate) + ',' +
                 csv_field(r.blowup_time) + ',' + csv_field(json(r.error)) + '\n';
    }
    try {
        write_file_atomic(sweep.output_dir / "sweep.csv", table);
    } catch (const std::exception& e) {
        err << "output error: " << e.what() << "\n";
        return exit_code::config_error;
    }
    out << table;
    return exit_code::ok;
}

int cmd_presets(const std::optional<std::string>& name, std::ostream& out, std::ostream& err) {
    if (!name) {
        for (const auto& n : preset_names()) {
            out << n << "\n";
        }
        return exit_code::ok;
    }
    try {
        out << dump_json(preset(*name));
    } catch (const ConfigError& e) {
        err << e.what() << "\n";
        return exit_code::config_error;
    }
    return exit_code::ok;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Delayed normalized Cucker-Smale flocking simulator", "flockdde"};
    app.require_subcommand(1);

    std::string config_path;
    std::string preset_name;
    std::string out_dir = ".";
    auto* run = app.add_subcommand("run", "Integrate a scenario and write frames/summary");
    run->add_option("config", config_path, "Scenario JSON file");
    run->add_option("--preset", preset_name, "Use a named preset instead of a file");
    run->add_option("--out-dir", out_dir, "Directory relative output paths resolve against");

    auto* certify = app.add_subcommand("certify", "Check the flocking condition on the prehistory only");
    certify->add_option("config", config_path, "Scenario JSON file");
    certify->add_option("--preset", preset_name, "Use a named preset instead of a file");

    std::string w0;
    std::string beta;
    std::string rv;
    auto* threshold = app.add_subcommand("threshold", "Classify a 1D initial slope");
    threshold->add_option("w0_min", w0)->required();
    threshold->add_option("beta", beta)->required();
    threshold->add_option("R_V", rv)->required();

    std::string sweep_path;
    auto* sweep = app.add_subcommand("sweep", "Run a parameter grid");
    sweep->add_option("config", sweep_path, "Sweep JSON file")->required();

    std::string preset_query;
    auto* presets = app.add_subcommand("presets", "List presets, or print one");
    presets->add_option("name", preset_query);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_code::ok : exit_code::config_error;
    }

    auto load = [&]() -> json {
        if (!preset_name.empty() && !config_path.empty()) {
            throw ConfigError("arguments", "give a config file or --preset, not both");
        }
        if (!preset_name.empty()) {
            return preset(preset_name);
        }
        if (config_path.empty()) {
            throw ConfigError("arguments", "missing config file");
        }
        return read_json_file(config_path);
    };

    try {
        if (run->parsed()) {
            return cmd_run(load(), out_dir, out, err);
        }
        if (certify->parsed()) {
            return cmd_certify(load(), out, err);
        }
        if (threshold->parsed()) {
            return cmd_threshold(w0, beta, rv, out, err);
        }
        if (sweep->parsed()) {
            return cmd_sweep(read_json_file(sweep_path), out, err);
        }
        if (presets->parsed()) {
            return cmd_presets(preset_query.empty() ? std::nullopt : std::optional(preset_query), out, err);
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_code::config_error;
    }
    return exit_code::config_error;
}

} // namespace flockdde
