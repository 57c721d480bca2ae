#include "flockdde/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>

#include "flockdde/errors.hpp"
#include "flockdde/parallel.hpp"

namespace flockdde {
namespace {

constexpr double kMinNormalizer = 1e-300;

struct StageInput {
    std::span<const double> positions;
    std::span<const double> jacobians;
    std::size_t n;
    std::size_t d;
};

void evaluate_alignment(const StageInput& in, std::span<const double> masses, const DelayedView& delayed,
                        const InfluenceKernel& kernel, const ForceOptions& options, ForceEvaluation& out) {
    const std::size_t n = in.n;
    const std::size_t d = in.d;
    if (delayed.dim != d || delayed.positions.size() != n * d || delayed.velocities.size() != n * d ||
        masses.size() != n) {
        throw ShapeError("delayed view does not match the current ensemble");
    }
    out.dim = d;
    out.accelerations.assign(n * d, 0.0);
    out.force_gradients.assign(n * d * d, 0.0);
    out.eulerian_gradients.assign(n * d * d, 0.0);
    out.normalizers.assign(n, 0.0);

    std::vector<double> vmin(d, std::numeric_limits<double>::infinity());
    std::vector<double> vmax(d, -std::numeric_limits<double>::infinity());
    double vscale = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t c = 0; c < d; ++c) {
            const double v = delayed.velocities[j * d + c];
            vmin[c] = std::min(vmin[c], v);
            vmax[c] = std::max(vmax[c], v);
            vscale = std::max(vscale, std::abs(v));
        }
    }
    const double hull_tol = 16.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(n + 1) * vscale +
                            std::numeric_limits<double>::denorm_min();

    const auto& ypos = delayed.positions;
    const auto& yvel = delayed.velocities;

    parallel_for(n, options.threads, [&](std::size_t i) {
        std::vector<double> num(d, 0.0);
        std::vector<double> dnum(d * d, 0.0);
        std::vector<double> dden(d, 0.0);
        std::vector<double> diff(d);
        double den = 0.0;
        const double* xi = in.positions.data() + i * d;
        for (std::size_t j = 0; j < n; ++j) {
            double r2 = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                diff[c] = xi[c] - ypos[j * d + c];
                r2 += diff[c] * diff[c];
            }
            const RadialTerms k = kernel.radial_terms(r2);
            const double w = k.psi * masses[j];
            den += w;
            const double* vj = yvel.data() + j * d;
            for (std::size_t c = 0; c < d; ++c) {
                num[c] += w * vj[c];
            }
            if (k.dpsi_over_r != 0.0) {
                const double g = k.dpsi_over_r * masses[j];
                for (std::size_t b = 0; b < d; ++b) {
                    dden[b] += g * diff[b];
                }
                for (std::size_t a = 0; a < d; ++a) {
                    for (std::size_t b = 0; b < d; ++b) {
                        dnum[a * d + b] += g * vj[a] * diff[b];
                    }
                }
            }
        }
        out.normalizers[i] = den;
        if (!(den >= kMinNormalizer)) {
            return; // reported after the loop
        }
        double* euler = out.eulerian_gradients.data() + i * d * d;
        for (std::size_t a = 0; a < d; ++a) {
            const double align = num[a] / den;
            out.accelerations[i * d + a] = align;
            for (std::size_t b = 0; b < d; ++b) {
                euler[a * d + b] = (dnum[a * d + b] - align * dden[b]) / den;
            }
        }
        linalg::matmul(std::span<const double>(euler, d * d), in.jacobians.subspan(i * d * d, d * d),
                       std::span<double>(out.force_gradients.data() + i * d * d, d * d), d);
    });

    for (std::size_t i = 0; i < n; ++i) {
        if (!(out.normalizers[i] >= kMinNormalizer)) {
            std::ostringstream os;
            os << "kernel normalizer " << out.normalizers[i] << " at node " << i << " underflowed";
            throw SingularNormalizerError(os.str());
        }
        if (options.check_hull) {
            for (std::size_t c = 0; c < d; ++c) {
                const double a = out.accelerations[i * d + c];
                if (a < vmin[c] - hull_tol || a > vmax[c] + hull_tol) {
                    std::ostringstream os;
                    os.precision(17);
                    os << "alignment term " << a << " at node " << i << " left the delayed velocity hull ["
                       << vmin[c] << ", " << vmax[c] << "]";
                    throw std::logic_error(os.str());
                }
            }
        }
    }
}

// State vector of the coupled system (eta, v, grad eta, grad v, w).
struct FlowState {
    std::vector<double> pos;
    std::vector<double> vel;
    std::vector<double> jac;
    std::vector<double> velgrad;
    std::vector<double> slopes;

    static FlowState from(const LagrangianEnsemble& e) {
        return {e.positions, e.velocities, e.jacobians, e.vel_gradients, e.slopes};
    }

    // this + c * k
    FlowState axpy(double c, const FlowState& k) const {
        FlowState r = *this;
        auto add = [c](std::vector<double>& y, const std::vector<double>& dy) {
            for (std::size_t j = 0; j < y.size(); ++j) {
                y[j] += c * dy[j];
            }
        };
        add(r.pos, k.pos);
        add(r.vel, k.vel);
        add(r.jac, k.jac);
        add(r.velgrad, k.velgrad);
        add(r.slopes, k.slopes);
        return r;
    }
};

FlowState derivative(const FlowState& y, std::span<const double> masses, std::size_t d, const DelayedView& delayed,
                     const InfluenceKernel& kernel, const StepOptions& options, std::vector<double>* accel_out) {
    const std::size_t n = masses.size();
    ForceEvaluation f;
    evaluate_alignment({y.pos, y.jac, n, d}, masses, delayed, kernel, options.force, f);
    for (std::size_t j = 0; j < n * d; ++j) {
        f.accelerations[j] -= y.vel[j];
    }
    if (options.observer) {
        options.observer(f);
    }
    FlowState dy;
    dy.pos = y.vel;
    dy.vel = f.accelerations;
    dy.jac = y.velgrad;
    dy.velgrad.resize(y.velgrad.size());
    for (std::size_t j = 0; j < y.velgrad.size(); ++j) {
        dy.velgrad[j] = f.force_gradients[j] - y.velgrad[j];
    }
    dy.slopes.resize(y.slopes.size());
    for (std::size_t i = 0; i < y.slopes.size(); ++i) {
        const double w = y.slopes[i];
        dy.slopes[i] = -w * w - w + f.eulerian_gradients[i];
    }
    if (accel_out != nullptr) {
        *accel_out = f.accelerations;
    }
    return dy;
}

} // namespace

ForceEvaluation alignment_rhs(const LagrangianEnsemble& current, const DelayedView& delayed,
                              const InfluenceKernel& kernel, const ForceOptions& options) {
    current.check_shape();
    ForceEvaluation f;
    evaluate_alignment({current.positions, current.jacobians, current.size(), current.dim()},
                       current.nodes->masses, delayed, kernel, options, f);
    for (std::size_t j = 0; j < f.accelerations.size(); ++j) {
        f.accelerations[j] -= current.velocities[j];
    }
    return f;
}

LagrangianEnsemble advance(HistoryBuffer& buffer, const InfluenceKernel& kernel, double dt,
                           const StepOptions& options) {
    if (!(dt > 0.0)) {
        throw DomainError("step size must be positive");
    }
    const double tau = buffer.tau();
    if (tau > 0.0 && dt > tau * (1.0 + 1e-12)) {
        throw OutOfWindowError("step size exceeds the delay; delayed stages would read the future");
    }
    const LagrangianEnsemble& cur = buffer.current();
    const std::size_t d = cur.dim();
    const auto& masses = cur.nodes->masses;
    const double t = cur.time;
    const FlowState y0 = FlowState::from(cur);

    auto delayed_at = [&](const FlowState& y, double stage_time) {
        if (tau == 0.0) {
            return DelayedView{stage_time, d, y.pos, y.vel};
        }
        return buffer.query(stage_time - tau);
    };

    std::vector<double> accel0;
    const FlowState k1 = derivative(y0, masses, d, delayed_at(y0, t), kernel, options, &accel0);
    buffer.set_current_acceleration(accel0);
    const FlowState y1 = y0.axpy(0.5 * dt, k1);
    const FlowState k2 = derivative(y1, masses, d, delayed_at(y1, t + 0.5 * dt), kernel, options, nullptr);
    const FlowState y2 = y0.axpy(0.5 * dt, k2);
    const FlowState k3 = derivative(y2, masses, d, delayed_at(y2, t + 0.5 * dt), kernel, options, nullptr);
    const FlowState y3 = y0.axpy(dt, k3);
    const FlowState k4 = derivative(y3, masses, d, delayed_at(y3, t + dt), kernel, options, nullptr);

    LagrangianEnsemble next;
    next.time = t + dt;
    next.nodes = cur.nodes;
    auto combine = [dt](const std::vector<double>& y, const std::vector<double>& a, const std::vector<double>& b,
                        const std::vector<double>& c, const std::vector<double>& e) {
        std::vector<double> out(y.size());
        for (std::size_t j = 0; j < y.size(); ++j) {
            out[j] = y[j] + dt / 6.0 * (a[j] + 2.0 * b[j] + 2.0 * c[j] + e[j]);
        }
        return out;
    };
    next.positions = combine(y0.pos, k1.pos, k2.pos, k3.pos, k4.pos);
    next.velocities = combine(y0.vel, k1.vel, k2.vel, k3.vel, k4.vel);
    next.jacobians = combine(y0.jac, k1.jac, k2.jac, k3.jac, k4.jac);
    next.vel_gradients = combine(y0.velgrad, k1.velgrad, k2.velgrad, k3.velgrad, k4.velgrad);
    next.slopes = combine(y0.slopes, k1.slopes, k2.slopes, k3.slopes, k4.slopes);
    return next;
}

void commit_step(HistoryBuffer& buffer, LagrangianEnsemble next, double h) {
    const double steps = std::round(next.time / h);
    if (std::abs(next.time / h - steps) < 1e-6) {
        next.time = steps * h;
    }
    buffer.append(std::move(next));
    buffer.prune(buffer.current_time() - buffer.tau() - 2.0 * h);
}

std::optional<BlowupSignal> step(HistoryBuffer& buffer, const InfluenceKernel& kernel, double h,
                                 const StepOptions& options) {
    const double t_now = buffer.current_time();
    LagrangianEnsemble next = advance(buffer, kernel, h, options);
    if (!next.all_finite()) {
        return BlowupSignal{t_now, std::nullopt, "non-finite state"};
    }
    commit_step(buffer, std::move(next), h);
    return std::nullopt;
}

} // namespace flockdde
