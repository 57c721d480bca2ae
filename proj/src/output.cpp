#include "flockdde/output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace flockdde {

using nlohmann::json;

std::string format_double(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string frames_csv(std::span<const DiagnosticsFrame> frames, bool terminal_blowup) {
    std::string out = kFramesSchema;
    out += "\nt,d_X,d_V,max_speed,lyapunov,X,V,min_detJ,max_velgrad_norm,status\n";
    for (std::size_t k = 0; k < frames.size(); ++k) {
        const auto& f = frames[k];
        for (double x : {f.t, f.d_X, f.d_V, f.max_speed, f.lyapunov, f.X, f.V, f.min_detJ, f.max_velgrad_norm}) {
            out += format_double(x);
            out += ',';
        }
        out += (terminal_blowup && k + 1 == frames.size()) ? "blowup\n" : "ok\n";
    }
    return out;
}

std::string snapshot_csv(const LagrangianEnsemble& e) {
    const std::size_t d = e.dim();
    std::string out = kSnapshotSchema;
    out += "\nt,node_id";
    for (const char* prefix : {"label", "pos", "vel"}) {
        for (std::size_t k = 0; k < d; ++k) {
            out += ',';
            out += prefix;
            out += '_' + std::to_string(k);
        }
    }
    out += ",mass,detJ\n";
    const std::string t = format_double(e.time);
    for (std::size_t i = 0; i < e.size(); ++i) {
        out += t + ',' + std::to_string(i);
        for (auto part : {e.nodes->label(i), e.position(i), e.velocity(i)}) {
            for (double x : part) {
                out += ',' + format_double(x);
            }
        }
        out += ',' + format_double(e.nodes->masses[i]);
        out += ',' + format_double(linalg::determinant(e.jacobian(i), d));
        out += '\n';
    }
    return out;
}

json number_json(double x) {
    if (std::isnan(x)) {
        return nullptr;
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    return x;
}

json certificate_json(const FlockingCertificate& c) {
    auto opt = [](const std::optional<double>& v) { return v ? number_json(*v) : json(nullptr); };
    return {{"R_V", number_json(c.R_V)},         {"lhs", number_json(c.lhs)},
            {"rhs", number_json(c.rhs)},         {"satisfied", c.satisfied},
            {"d_star", opt(c.d_star)},           {"psi_star", opt(c.psi_star)},
            {"predicted_rate", opt(c.predicted_rate)}};
}

json verdict_json(const ThresholdVerdict& v) {
    return {{"c_bar", number_json(v.c_bar)},
            {"w1_minus", v.w1_minus ? number_json(*v.w1_minus) : json(nullptr)},
            {"w2_minus", number_json(v.w2_minus)},
            {"verdict", to_string(v.verdict)},
            {"bound", v.blowup_bound ? number_json(*v.blowup_bound) : json(nullptr)},
            {"note", v.note}};
}

std::string dump_json(const json& doc) { return doc.dump(2) + "\n"; }

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
        out << content;
        out.flush();
        if (!out) {
            throw std::runtime_error("failed writing " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

} // namespace flockdde
