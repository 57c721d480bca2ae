#include "flockdde/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "flockdde/errors.hpp"

namespace flockdde {

using nlohmann::json;

namespace {

// Typed access to one JSON object, with errors naming the full field path.
class Fields {
  public:
    Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) {
            throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
        }
    }

    std::string at(const std::string& key) const { return path_ + "/" + key; }
    bool has(const std::string& key) const { return obj_.contains(key) && !obj_.at(key).is_null(); }

    const json& raw(const std::string& key) const {
        if (!has(key)) {
            throw ConfigError(at(key), "missing required field");
        }
        return obj_.at(key);
    }

    Fields object(const std::string& key) const { return Fields(raw(key), at(key)); }

    double number(const std::string& key) const { return to_number(raw(key), at(key)); }
    double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::uint64_t count(const std::string& key) const {
        const json& v = raw(key);
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
            throw ConfigError(at(key), "expected a nonnegative integer");
        }
        return v.get<std::uint64_t>();
    }
    std::uint64_t count(const std::string& key, std::uint64_t fallback) const {
        return has(key) ? count(key) : fallback;
    }

    std::string text(const std::string& key) const {
        const json& v = raw(key);
        if (!v.is_string()) {
            throw ConfigError(at(key), "expected a string");
        }
        return v.get<std::string>();
    }
    std::string text(const std::string& key, const std::string& fallback) const {
        return has(key) ? text(key) : fallback;
    }

    std::vector<double> vector(const std::string& key) const { return to_vector(raw(key), at(key)); }

    /// d x d matrix given as rows; a bare number is accepted for d = 1.
    std::vector<double> matrix(const std::string& key, std::size_t d) const {
        const json& v = raw(key);
        if (d == 1 && v.is_number()) {
            return {to_number(v, at(key))};
        }
        if (!v.is_array() || v.size() != d) {
            throw ConfigError(at(key), "expected " + std::to_string(d) + " rows");
        }
        std::vector<double> out;
        for (std::size_t r = 0; r < d; ++r) {
            auto row = to_vector(v[r], at(key) + "/" + std::to_string(r));
            if (row.size() != d) {
                throw ConfigError(at(key) + "/" + std::to_string(r), "expected " + std::to_string(d) + " entries");
            }
            out.insert(out.end(), row.begin(), row.end());
        }
        return out;
    }

    static double to_number(const json& v, const std::string& where) {
        if (!v.is_number()) {
            throw ConfigError(where, "expected a number");
        }
        const double x = v.get<double>();
        if (!std::isfinite(x)) {
            throw ConfigError(where, "expected a finite number");
        }
        return x;
    }

    static std::vector<double> to_vector(const json& v, const std::string& where) {
        if (v.is_number()) {
            return {to_number(v, where)};
        }
        if (!v.is_array()) {
            throw ConfigError(where, "expected an array of numbers");
        }
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            out.push_back(to_number(v[i], where + "/" + std::to_string(i)));
        }
        return out;
    }

  private:
    const json& obj_;
    std::string path_;
};

InfluenceKernel parse_kernel(const Fields& f) {
    const std::string family = f.text("family");
    try {
        if (family == "cucker-smale") {
            return InfluenceKernel::cucker_smale(f.number("beta"));
        }
        if (family == "tabulated") {
            return InfluenceKernel::tabulated(f.vector("radii"), f.vector("values"));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(f.at(family == "cucker-smale" ? "beta" : "values"), e.what());
    }
    throw ConfigError(f.at("family"), "unknown kernel family '" + family + "'");
}

Domain parse_domain(const Fields& f, std::size_t& dim) {
    const std::string type = f.text("type", "box");
    if (type == "box") {
        BoxDomain box{f.vector("lower"), f.vector("upper"), {}};
        const json& counts = f.raw("counts");
        if (counts.is_number_integer()) {
            box.counts.push_back(f.count("counts"));
        } else if (counts.is_array()) {
            for (std::size_t i = 0; i < counts.size(); ++i) {
                if (!counts[i].is_number_integer() || counts[i].get<std::int64_t>() <= 0) {
                    throw ConfigError(f.at("counts") + "/" + std::to_string(i), "expected a positive integer");
                }
                box.counts.push_back(counts[i].get<std::size_t>());
            }
        } else {
            throw ConfigError(f.at("counts"), "expected an array of positive integers");
        }
        dim = box.lower.size();
        if (dim == 0 || box.upper.size() != dim || box.counts.size() != dim) {
            throw ConfigError(f.at("lower"), "lower, upper and counts must have the same positive length");
        }
        return box;
    }
    if (type == "nodes") {
        const json& nodes = f.raw("nodes");
        if (!nodes.is_array() || nodes.empty()) {
            throw ConfigError(f.at("nodes"), "expected a non-empty array of points");
        }
        NodeListDomain list;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            auto p = Fields::to_vector(nodes[i], f.at("nodes") + "/" + std::to_string(i));
            if (i == 0) {
                dim = p.size();
            } else if (p.size() != dim) {
                throw ConfigError(f.at("nodes") + "/" + std::to_string(i), "all points need the same dimension");
            }
            list.nodes.insert(list.nodes.end(), p.begin(), p.end());
        }
        list.weights = f.vector("weights");
        if (list.weights.size() != nodes.size()) {
            throw ConfigError(f.at("weights"), "expected one weight per node");
        }
        return list;
    }
    throw ConfigError(f.at("type"), "unknown domain type '" + type + "'");
}

DensitySpec parse_density(const Fields& f) {
    const std::string type = f.text("type");
    if (type == "uniform") {
        return UniformDensity{};
    }
    if (type == "gaussian") {
        return GaussianDensity{f.vector("center"), f.number("sigma")};
    }
    if (type == "table") {
        return TableDensity{f.vector("values")};
    }
    throw ConfigError(f.at("type"), "unknown density type '" + type + "'");
}

VelocityField parse_velocity(const Fields& f, std::size_t d, std::uint64_t seed) {
    const std::string type = f.text("type");
    auto build = [&]() -> VelocityField {
        if (type == "constant") {
            return VelocityField::constant(f.vector("value"));
        }
        if (type == "linear") {
            std::vector<double> offset = f.has("offset") ? f.vector("offset") : std::vector<double>(d, 0.0);
            return VelocityField::affine(f.matrix("matrix", d), std::move(offset));
        }
        if (type == "sine") {
            return VelocityField::sine(f.has("base") ? f.vector("base") : std::vector<double>(d, 0.0),
                                       f.vector("amplitude"), f.vector("wavenumber"));
        }
        if (type == "table") {
            const json& slices = f.raw("slices");
            if (!slices.is_array() || slices.empty()) {
                throw ConfigError(f.at("slices"), "expected a non-empty array of slices");
            }
            std::vector<double> times;
            std::vector<AffineVelocity> fields;
            for (std::size_t k = 0; k < slices.size(); ++k) {
                Fields s(slices[k], f.at("slices") + "/" + std::to_string(k));
                times.push_back(s.number("s"));
                fields.push_back(AffineVelocity{s.matrix("matrix", d),
                                                s.has("offset") ? s.vector("offset") : std::vector<double>(d, 0.0)});
            }
            return VelocityField::slice_table(std::move(times), std::move(fields));
        }
        if (type == "random-modes") {
            return VelocityField::random_modes(f.has("base") ? f.vector("base") : std::vector<double>(d, 0.0),
                                               f.number("amplitude"), f.count("modes"),
                                               f.number("max_wavenumber"), seed);
        }
        throw ConfigError(f.at("type"), "unknown velocity type '" + type + "'");
    };
    try {
        VelocityField v = build();
        if (v.dim() != d) {
            throw ConfigError(f.at("type"), "velocity dimension does not match the domain");
        }
        return f.has("scale") ? v.scaled(f.number("scale")) : v;
    } catch (const InvalidDatumError& e) {
        throw ConfigError(f.at("type"), e.what());
    }
}

} // namespace

json parse_json_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t column = 1;
        const std::size_t end = std::min(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(column),
                          "malformed JSON");
    }
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError(path.string(), "cannot open file");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_json_text(buf.str());
}

RunConfig parse_run_config(const json& doc) {
    Fields root(doc, "");
    if (!root.has("schema_version")) {
        throw ConfigError("/schema_version", "missing required field");
    }
    if (root.count("schema_version") != static_cast<std::uint64_t>(kSchemaVersion)) {
        throw ConfigError("/schema_version", "unsupported schema version");
    }

    RunConfig rc;
    rc.seed = root.count("seed", 0);
    SimulationConfig& sim = rc.sim;
    sim.kernel = parse_kernel(root.object("kernel"));

    Fields datum = root.object("datum");
    std::size_t dim = 0;
    sim.datum.domain = parse_domain(datum.object("domain"), dim);
    sim.datum.dim = dim;
    sim.datum.density = datum.has("density") ? parse_density(datum.object("density")) : UniformDensity{};
    sim.datum.velocity = parse_velocity(datum.object("velocity"), dim, rc.seed);

    sim.tau = root.number("tau");
    sim.step = root.number("step");
    sim.t_end = root.number("t_end");
    sim.output_every = root.number("output_every", sim.step);
    const std::string interp = root.text("interpolation", "hermite");
    if (interp == "hermite") {
        sim.interpolation = Interpolation::CubicHermite;
    } else if (interp == "linear") {
        sim.interpolation = Interpolation::Linear;
    } else {
        throw ConfigError("/interpolation", "expected 'hermite' or 'linear'");
    }
    const auto threads = root.count("threads", 1);
    if (threads == 0 || threads > 1024) {
        throw ConfigError("/threads", "expected an integer in [1, 1024]");
    }
    sim.threads = static_cast<unsigned>(threads);

    if (sim.tau < 0.0) {
        throw ConfigError("/tau", "must be nonnegative");
    }
    if (sim.step <= 0.0) {
        throw ConfigError("/step", "must be positive");
    }
    try {
        validate(sim);
    } catch (const DomainError& e) {
        throw ConfigError("/step", e.what());
    }

    if (root.has("output")) {
        Fields out = root.object("output");
        if (out.has("frames")) {
            rc.output.frames = out.text("frames");
        }
        if (out.has("summary")) {
            rc.output.summary = out.text("summary");
        }
        if (out.has("snapshot")) {
            rc.output.snapshot = out.text("snapshot");
        }
    }
    return rc;
}

void set_by_path(json& doc, const std::string& dotted, const json& value) {
    if (dotted.empty()) {
        throw ConfigError("/axes", "empty parameter path");
    }
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = dotted.find('.', start);
        const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) {
            throw ConfigError(dotted, "malformed parameter path");
        }
        if (!node->is_object()) {
            throw ConfigError(dotted, "path runs through a non-object");
        }
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        if (node->is_null()) {
            *node = json::object();
        }
        start = dot + 1;
    }
}

SweepConfig parse_sweep_config(const json& doc) {
    Fields root(doc, "");
    if (!root.has("schema_version") || root.count("schema_version") != static_cast<std::uint64_t>(kSchemaVersion)) {
        throw ConfigError("/schema_version", "missing or unsupported schema version");
    }
    SweepConfig sc;
    if (root.has("base") && root.has("preset")) {
        throw ConfigError("/base", "give either base or preset, not both");
    }
    if (root.has("preset")) {
        sc.base = preset(root.text("preset"));
    } else {
        root.object("base");
        sc.base = root.raw("base");
    }
    const json& axes = root.raw("axes");
    if (!axes.is_array() || axes.empty()) {
        throw ConfigError("/axes", "expected a non-empty array of axes");
    }
    std::size_t cells = 1;
    sc.max_cells = root.count("max_cells", sc.max_cells);
    for (std::size_t i = 0; i < axes.size(); ++i) {
        Fields a(axes[i], "/axes/" + std::to_string(i));
        SweepAxis axis{a.text("path"), {}};
        const json& values = a.raw("values");
        if (!values.is_array() || values.empty()) {
            throw ConfigError(a.at("values"), "expected a non-empty array");
        }
        axis.values.assign(values.begin(), values.end());
        cells *= axis.values.size();
        if (cells > sc.max_cells) {
            throw ConfigError("/axes", "grid exceeds max_cells = " + std::to_string(sc.max_cells));
        }
        sc.axes.push_back(std::move(axis));
    }
    const auto workers = root.count("max_workers", 1);
    if (workers == 0) {
        throw ConfigError("/max_workers", "must be positive");
    }
    sc.max_workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, 1024));
    sc.output_dir = root.text("output_dir", "sweep");
    return sc;
}

namespace {

json box1d(double lo, double hi, int n) {
    return {{"type", "box"}, {"lower", {lo}}, {"upper", {hi}}, {"counts", {n}}};
}

json flat_kernel_decay() {
    return {{"schema_version", kSchemaVersion},
            {"kernel", {{"family", "cucker-smale"}, {"beta", 0.0}}},
            {"datum",
             {{"domain", box1d(-1.0, 1.0, 64)},
              {"density", {{"type", "uniform"}}},
              {"velocity", {{"type", "sine"}, {"base", {0.1}}, {"amplitude", {0.2}}, {"wavenumber", {3.0}}}}}},
            {"tau", 0.5},
            {"step", 1e-3},
            {"t_end", 5.0},
            {"output_every", 1e-2},
            {"output", {{"frames", "frames.csv"}, {"summary", "summary.json"}}}};
}

json unconditional_beta025() {
    return {{"schema_version", kSchemaVersion},
            {"kernel", {{"family", "cucker-smale"}, {"beta", 0.25}}},
            {"datum",
             {{"domain", {{"type", "box"}, {"lower", {-2.0, -1.0}}, {"upper", {2.0, 1.0}}, {"counts", {8, 4}}}},
              {"density", {{"type", "gaussian"}, {"center", {0.0, 0.0}}, {"sigma", 1.5}}},
              {"velocity",
               {{"type", "linear"}, {"matrix", {{0.1, -0.3}, {0.3, 0.05}}}, {"offset", {0.5, 0.0}}}}}},
            {"tau", 0.2},
            {"step", 1e-2},
            {"t_end", 8.0},
            {"output_every", 2e-2},
            {"output", {{"frames", "frames.csv"}, {"summary", "summary.json"}}}};
}

json riccati_blowup() {
    return {{"schema_version", kSchemaVersion},
            {"kernel", {{"family", "cucker-smale"}, {"beta", 0.0}}},
            {"datum",
             {{"domain", box1d(-1.0, 1.0, 16)},
              {"density", {{"type", "uniform"}}},
              {"velocity", {{"type", "linear"}, {"matrix", -2.0}, {"offset", {0.0}}}}}},
            {"tau", 0.1},
            {"step", 1e-3},
            {"t_end", 1.5},
            {"output_every", 1e-2},
            {"output", {{"frames", "frames.csv"}, {"summary", "summary.json"}}}};
}

json conditional_beta1() {
    return {{"schema_version", kSchemaVersion},
            {"kernel", {{"family", "cucker-smale"}, {"beta", 1.0}}},
            {"datum",
             {{"domain", box1d(-0.5, 0.5, 32)},
              {"density", {{"type", "uniform"}}},
              {"velocity", {{"type", "sine"}, {"base", {0.0}}, {"amplitude", {0.1}}, {"wavenumber", {3.0}}}}}},
            {"tau", 0.1},
            {"step", 1e-2},
            {"t_end", 10.0},
            {"output_every", 1e-2},
            {"output", {{"frames", "frames.csv"}, {"summary", "summary.json"}}}};
}

json subcritical_flat() {
    return {{"schema_version", kSchemaVersion},
            {"kernel", {{"family", "cucker-smale"}, {"beta", 0.0}}},
            {"datum",
             {{"domain", box1d(-1.0, 1.0, 32)},
              {"density", {{"type", "uniform"}}},
              {"velocity", {{"type", "linear"}, {"matrix", -0.9}, {"offset", {0.0}}}}}},
            {"tau", 0.0},
            {"step", 1e-3},
            {"t_end", 10.0},
            {"output_every", 1e-2},
            {"output", {{"frames", "frames.csv"}, {"summary", "summary.json"}}}};
}

} // namespace

std::vector<std::string> preset_names() {
    return {"conditional-beta1", "flat-kernel-decay", "riccati-blowup", "subcritical-flat", "unconditional-beta025"};
}

json preset(const std::string& name) {
    if (name == "flat-kernel-decay") {
        return flat_kernel_decay();
    }
    if (name == "unconditional-beta025") {
        return unconditional_beta025();
    }
    if (name == "riccati-blowup") {
        return riccati_blowup();
    }
    if (name == "conditional-beta1") {
        return conditional_beta1();
    }
    if (name == "subcritical-flat") {
        return subcritical_flat();
    }
    throw ConfigError("/preset", "unknown preset '" + name + "'");
}

} // namespace flockdde
