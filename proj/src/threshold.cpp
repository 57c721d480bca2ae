#include "flockdde/threshold.hpp"

#include <cmath>
#include <sstream>

#include "flockdde/errors.hpp"

namespace flockdde {

const char* to_string(VerdictKind kind) {
    switch (kind) {
    case VerdictKind::GlobalExistence:
        return "GlobalExistence";
    case VerdictKind::FiniteTimeBlowup:
        return "FiniteTimeBlowup";
    case VerdictKind::Indeterminate:
        return "Indeterminate";
    }
    return "Indeterminate";
}

ThresholdVerdict classify_with_bound(double w0_min, double c_psi, double R_V) {
    if (!std::isfinite(w0_min) || !(c_psi >= 0.0) || !(R_V >= 0.0) || !std::isfinite(c_psi) ||
        !std::isfinite(R_V)) {
        throw DomainError("classify needs finite w0_min and nonnegative C_psi, R_V");
    }
    ThresholdVerdict v;
    v.c_bar = 2.0 * c_psi * R_V;
    if (4.0 * v.c_bar <= 1.0) {
        v.w1_minus = (-1.0 - std::sqrt(1.0 - 4.0 * v.c_bar)) / 2.0;
    }
    v.w2_minus = (-1.0 - std::sqrt(1.0 + 4.0 * v.c_bar)) / 2.0;
    if (v.w1_minus && w0_min >= *v.w1_minus) {
        v.verdict = VerdictKind::GlobalExistence;
    } else if (w0_min < v.w2_minus) {
        v.verdict = VerdictKind::FiniteTimeBlowup;
        v.blowup_bound = 1.0 / (v.w2_minus - w0_min);
    } else {
        v.verdict = VerdictKind::Indeterminate;
    }
    std::ostringstream note;
    note.precision(17);
    note << "thresholds use 4*c_bar under both radicals; the short form c_bar <= 1 with sqrt(1 - 4 c_bar) "
            "and sqrt(1 + c_bar) would give w2_minus = "
         << (-1.0 - std::sqrt(1.0 + v.c_bar)) / 2.0;
    v.note = note.str();
    return v;
}

ThresholdVerdict classify(double w0_min, const InfluenceKernel& kernel, double R_V) {
    const auto c_psi = kernel.log_derivative_bound();
    if (!c_psi) {
        throw UnsupportedError("threshold classification needs a kernel with a log-derivative bound");
    }
    ThresholdVerdict v = classify_with_bound(w0_min, *c_psi, R_V);
    if (const auto* cs = std::get_if<CuckerSmale>(&kernel.family())) {
        std::ostringstream extra;
        extra.precision(17);
        extra << "; C_psi = 2*beta = " << *c_psi << " (the sharper bound beta = " << cs->beta
              << " gives c_bar = " << 2.0 * cs->beta * R_V << ")";
        v.note += extra.str();
    }
    return v;
}

SlopeSample slopes_from_tangent(const LagrangianEnsemble& e) {
    if (e.dim() != 1) {
        throw DomainError("slopes are defined only in one dimension");
    }
    SlopeSample s;
    s.values.resize(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double j = e.jacobians[i];
        if (!(j > 0.0)) {
            s.blowup = BlowupSignal{e.time, i, "jacobian not positive"};
            s.values.clear();
            return s;
        }
        s.values[i] = e.vel_gradients[i] / j;
    }
    return s;
}

SlopeTrajectory evolve_w(HistoryBuffer& buffer, const InfluenceKernel& kernel, double h, std::size_t n_steps,
                         const StepOptions& options) {
    const LagrangianEnsemble& start = buffer.current();
    if (start.dim() != 1) {
        throw DomainError("evolve_w needs a one-dimensional ensemble");
    }
    if (start.slopes.empty()) {
        throw DomainError("evolve_w needs slopes tracked on the ensemble");
    }
    SlopeTrajectory traj;
    auto record = [&](const LagrangianEnsemble& e) {
        auto q = slopes_from_tangent(e);
        if (q.blowup) {
            traj.blowup = q.blowup;
            return false;
        }
        traj.times.push_back(e.time);
        traj.quotient.push_back(std::move(q.values));
        traj.direct.push_back(e.slopes);
        return true;
    };
    if (!record(start)) {
        return traj;
    }
    for (std::size_t n = 0; n < n_steps; ++n) {
        if (auto signal = step(buffer, kernel, h, options)) {
            traj.blowup = signal;
            return traj;
        }
        if (!record(buffer.current())) {
            return traj;
        }
    }
    return traj;
}

std::optional<BlowupSignal> detect_blowup(std::span<const DiagnosticsFrame> frames, double tolerance) {
    for (std::size_t k = 0; k < frames.size(); ++k) {
        if (frames[k].min_detJ > tolerance) {
            continue;
        }
        if (k == 0) {
            return BlowupSignal{frames[0].t, frames[0].min_detJ_node, "jacobian degenerate"};
        }
        const auto& a = frames[k - 1];
        const auto& b = frames[k];
        auto excess = [&](double t) {
            const double s = (t - a.t) / (b.t - a.t);
            return (1.0 - s) * a.min_detJ + s * b.min_detJ - tolerance;
        };
        double lo = a.t;
        double hi = b.t;
        for (int it = 0; it < 40; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (excess(mid) <= 0.0) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        return BlowupSignal{hi, b.min_detJ_node, "jacobian degenerate"};
    }
    return std::nullopt;
}

DensityReconstruction reconstruct_density(const LagrangianEnsemble& e, double tolerance) {
    e.check_shape();
    DensityReconstruction out;
    out.positions = e.positions;
    out.values.resize(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double det = linalg::determinant(e.jacobian(i), e.dim());
        if (!(det > tolerance)) {
            out.blowup = BlowupSignal{e.time, i, "jacobian not invertible"};
            out.values.clear();
            return out;
        }
        out.values[i] = e.nodes->masses[i] / e.nodes->cell_volumes[i] / det;
    }
    return out;
}

} // namespace flockdde
