#include "flockdde/simulation.hpp"

#include <cmath>
#include <limits>

#include "flockdde/errors.hpp"

namespace flockdde {
namespace {

bool is_multiple(double value, double unit, std::size_t& count) {
    const double q = value / unit;
    const double r = std::round(q);
    count = static_cast<std::size_t>(r);
    return r >= 1.0 && std::abs(q - r) <= 1e-9 * std::max(1.0, r);
}

double min_det(const LagrangianEnsemble& e, std::size_t& node) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double det = linalg::determinant(e.jacobian(i), e.dim());
        if (det < m) {
            m = det;
            node = i;
        }
    }
    return m;
}

} // namespace

void validate(const SimulationConfig& c) {
    if (!(c.step > 0.0) || !std::isfinite(c.step)) {
        throw DomainError("step must be positive");
    }
    if (!(c.tau >= 0.0) || !std::isfinite(c.tau)) {
        throw DomainError("tau must be nonnegative");
    }
    std::size_t count = 0;
    if (c.tau > 0.0 && !is_multiple(c.tau, c.step, count)) {
        throw DomainError("tau must be a positive integer multiple of the step");
    }
    if (!(c.t_end >= 0.0) || !std::isfinite(c.t_end)) {
        throw DomainError("t_end must be nonnegative");
    }
    if (!is_multiple(c.output_every, c.step, count)) {
        throw DomainError("output_every must be a positive multiple of the step");
    }
}

SimulationResult simulate(const SimulationConfig& config, const SimulationHooks& hooks) {
    validate(config);
    const double h = config.step;
    std::size_t delay_steps = 0;
    if (config.tau > 0.0) {
        is_multiple(config.tau, h, delay_steps);
    }
    std::size_t stride = 1;
    is_multiple(config.output_every, h, stride);
    const auto n_steps = static_cast<std::size_t>(std::ceil(config.t_end / h - 1e-9));

    SimulationResult result;
    result.final_buffer = discretize(config.datum, config.tau, delay_steps + 1, config.interpolation);
    HistoryBuffer& buffer = result.final_buffer;

    std::vector<DiagnosticsFrame> pre;
    for (std::size_t k = 0; k < buffer.slice_count(); ++k) {
        pre.push_back(observe(buffer.slice(k).state));
    }
    FlockingMonitor monitor(config.kernel, config.tau, std::move(pre));
    result.R_V = monitor.R_V();
    result.initial = buffer.current();
    if (config.kernel.supports_tail()) {
        result.certificate = certify_flocking(monitor.frames(), config.kernel);
    }

    auto emit = [&](const DiagnosticsFrame& f) {
        if (hooks.on_frame) {
            hooks.on_frame(f);
        }
    };
    emit(monitor.frames().back());

    StepOptions options;
    options.force.threads = config.threads;
    options.observer = hooks.on_force;

    const double tol = config.detJ_tolerance;
    if (monitor.frames().back().min_detJ <= tol) {
        result.blowup = BlowupSignal{0.0, monitor.frames().back().min_detJ_node, "jacobian degenerate"};
    }

    for (std::size_t n = 0; n < n_steps && !result.blowup; ++n) {
        const double t_now = buffer.current_time();
        LagrangianEnsemble next = advance(buffer, config.kernel, h, options);
        if (!next.all_finite()) {
            result.blowup = BlowupSignal{t_now, std::nullopt, "non-finite state"};
            if (monitor.frames().back().t < t_now) {
                emit(monitor.push(observe(buffer.current())));
            }
            break;
        }
        std::size_t node = 0;
        if (min_det(next, node) <= tol) {
            double lo = 0.0;
            double hi = 1.0;
            for (int it = 0; it < 40; ++it) {
                const double mid = 0.5 * (lo + hi);
                std::size_t trial_node = 0;
                if (min_det(advance(buffer, config.kernel, mid * h, {options.force, {}}), trial_node) <= tol) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            LagrangianEnsemble terminal = advance(buffer, config.kernel, hi * h, {options.force, {}});
            min_det(terminal, node);
            result.blowup = BlowupSignal{terminal.time, node, "jacobian degenerate"};
            emit(monitor.push(observe(terminal)));
            result.final_state = std::move(terminal);
            break;
        }
        commit_step(buffer, std::move(next), h);
        if ((n + 1) % stride == 0 || n + 1 == n_steps) {
            emit(monitor.push(observe(buffer.current())));
        }
    }

    if (!result.blowup || result.final_state.size() == 0) {
        result.final_state = buffer.current();
    }
    const auto& all = monitor.frames();
    const std::size_t n_pre = monitor.prehistory().size();
    result.prehistory.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_pre));
    result.frames.assign(all.begin() + static_cast<std::ptrdiff_t>(n_pre), all.end());
    return result;
}

} // namespace flockdde
