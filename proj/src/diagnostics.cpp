#include "flockdde/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flockdde/errors.hpp"

namespace flockdde {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double time_tol(double t) { return 1e-12 * std::max(1.0, std::abs(t)); }

// Linear interpolation of field(frame) at time s over time-ordered frames.
template <class Field>
double interpolate(std::span<const DiagnosticsFrame> frames, double s, Field field) {
    auto it = std::lower_bound(frames.begin(), frames.end(), s,
                               [](const DiagnosticsFrame& f, double t) { return f.t < t; });
    if (it == frames.end()) {
        return field(frames.back());
    }
    if (it == frames.begin() || std::abs(it->t - s) <= time_tol(s)) {
        return field(*it);
    }
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    if (std::abs(lo.t - s) <= time_tol(s)) {
        return field(lo);
    }
    const double a = (s - lo.t) / (hi.t - lo.t);
    return (1.0 - a) * field(lo) + a * field(hi);
}

// Trapezoid integral of V over [a, b] using the frame values and linear
// interpolation at the ends.
double integrate_V(std::span<const DiagnosticsFrame> frames, double a, double b) {
    if (b <= a) {
        return 0.0;
    }
    auto fV = [](const DiagnosticsFrame& f) { return f.V; };
    double total = 0.0;
    double t_prev = a;
    double v_prev = interpolate(frames, a, fV);
    auto it = std::upper_bound(frames.begin(), frames.end(), a + time_tol(a),
                               [](double t, const DiagnosticsFrame& f) { return t < f.t; });
    for (; it != frames.end() && it->t < b - time_tol(b); ++it) {
        total += 0.5 * (it->t - t_prev) * (v_prev + it->V);
        t_prev = it->t;
        v_prev = it->V;
    }
    total += 0.5 * (b - t_prev) * (v_prev + interpolate(frames, b, fV));
    return total;
}

} // namespace

Diameters diameters(const LagrangianEnsemble& e) {
    const std::size_t n = e.size();
    const std::size_t d = e.dim();
    double dx2 = 0.0;
    double dv2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double sx = 0.0;
            double sv = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double px = e.positions[i * d + c] - e.positions[j * d + c];
                const double pv = e.velocities[i * d + c] - e.velocities[j * d + c];
                sx += px * px;
                sv += pv * pv;
            }
            dx2 = std::max(dx2, sx);
            dv2 = std::max(dv2, sv);
        }
    }
    return {std::sqrt(dx2), std::sqrt(dv2)};
}

DiagnosticsFrame observe(const LagrangianEnsemble& e) {
    DiagnosticsFrame f;
    f.t = e.time;
    const auto dia = diameters(e);
    f.d_X = dia.d_X;
    f.d_V = dia.d_V;
    f.min_detJ = kInf;
    for (std::size_t i = 0; i < e.size(); ++i) {
        f.max_speed = std::max(f.max_speed, linalg::norm(e.velocity(i)));
        const double det = linalg::determinant(e.jacobian(i), e.dim());
        if (det < f.min_detJ) {
            f.min_detJ = det;
            f.min_detJ_node = i;
        }
        f.max_velgrad_norm = std::max(f.max_velgrad_norm, linalg::frobenius_norm(e.vel_gradient(i)));
    }
    f.X = std::numeric_limits<double>::quiet_NaN();
    f.V = std::numeric_limits<double>::quiet_NaN();
    f.lyapunov = std::numeric_limits<double>::quiet_NaN();
    return f;
}

double lyapunov(std::span<const DiagnosticsFrame> frames, const InfluenceKernel& kernel, double R_V, double tau) {
    if (frames.empty()) {
        throw NotReadyError("no frames");
    }
    const double t = frames.back().t;
    const double start = t - tau;
    if (frames.front().t > -tau + time_tol(tau)) {
        throw NotReadyError("frame history does not reach back to -tau");
    }
    if (tau > 0.0) {
        const auto first = std::lower_bound(frames.begin(), frames.end(), start - time_tol(start),
                                            [](const DiagnosticsFrame& f, double s) { return f.t < s; });
        const auto in_window = std::distance(first, frames.end());
        if (in_window < 2) {
            throw NotReadyError("fewer than two frames in the delay window");
        }
    }
    const double lower = frames.front().X + R_V * tau;
    const double upper = interpolate(frames, start, [](const DiagnosticsFrame& f) { return f.X; }) + R_V * tau;
    const double middle = kernel.integral(std::max(lower, 0.0), std::max(upper, 0.0));
    return frames.back().V + middle + integrate_V(frames, start, t);
}

FlockingMonitor::FlockingMonitor(const InfluenceKernel& kernel, double tau, std::vector<DiagnosticsFrame> prehistory)
    : kernel_(&kernel), tau_(tau), frames_(std::move(prehistory)) {
    if (frames_.empty()) {
        throw NotReadyError("monitor needs at least the t = 0 frame");
    }
    if (std::abs(frames_.back().t) > time_tol(0.0) || frames_.front().t > -tau + time_tol(tau)) {
        throw DomainError("prehistory frames must cover [-tau, 0]");
    }
    for (auto& f : frames_) {
        R_V_ = std::max(R_V_, f.max_speed);
        f.X = f.d_X;
        f.V = f.d_V;
    }
    n_prehistory_ = frames_.size() - 1;
    for (std::size_t k = 0; k < frames_.size(); ++k) {
        // L is only defined from t = 0 on; earlier frames record the
        // boundary value of the windowed sum for reference.
        const auto upto = std::span<const DiagnosticsFrame>(frames_.data(), k + 1);
        frames_[k].lyapunov = frames_[k].t >= -time_tol(0.0) ? lyapunov(upto, kernel, R_V_, tau)
                                                             : std::numeric_limits<double>::quiet_NaN();
    }
}

double FlockingMonitor::interpolate_X(double s) const {
    return interpolate(std::span<const DiagnosticsFrame>(frames_), s, [](const DiagnosticsFrame& f) { return f.X; });
}

double FlockingMonitor::interpolate_dV(double s) const {
    return interpolate(std::span<const DiagnosticsFrame>(frames_), s, [](const DiagnosticsFrame& f) { return f.d_V; });
}

double FlockingMonitor::g(double s) const {
    const double delayed = s - tau_;
    const double psi = kernel_->eval(std::max(0.0, interpolate_X(delayed) + R_V_ * tau_));
    return (1.0 - psi) * interpolate_dV(delayed);
}

const DiagnosticsFrame& FlockingMonitor::push(DiagnosticsFrame frame) {
    const DiagnosticsFrame& prev = frames_.back();
    if (!(frame.t > prev.t)) {
        throw DomainError("frames must be pushed in increasing time order");
    }
    const double dt = frame.t - prev.t;
    const double decay = std::exp(-dt);
    const double g_prev = g(prev.t);
    const double V_prev = prev.V;
    frame.X = prev.X + 0.5 * dt * (prev.d_V + frame.d_V);
    frame.V = std::numeric_limits<double>::quiet_NaN();
    frames_.push_back(frame);
    auto& cur = frames_.back();
    cur.V = V_prev * decay + 0.5 * dt * (g_prev * decay + g(cur.t));
    cur.lyapunov = lyapunov(frames_, *kernel_, R_V_, tau_);
    return cur;
}

double gronwall_rate(double a, double tau) {
    if (!(a > 0.0 && a < 1.0)) {
        throw DomainError("gronwall_rate needs 0 < a < 1");
    }
    if (!(tau >= 0.0) || !std::isfinite(tau)) {
        throw DomainError("gronwall_rate needs a finite nonnegative delay");
    }
    if (tau == 0.0) {
        return a;
    }
    auto g = [a, tau](double c) { return 1.0 - c - (1.0 - a) * std::exp(c * tau); };
    double lo = 0.0;
    double hi = std::min(1.0, a);
    while (true) {
        const double mid = 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi)) {
            break;
        }
        if (g(mid) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return std::abs(g(lo)) <= std::abs(g(hi)) ? lo : hi;
}

double solve_integral_upper_limit(const InfluenceKernel& kernel, double a, double target) {
    if (!(target > 0.0)) {
        return a;
    }
    double base = a;
    double width = std::max(1.0, a);
    double acc = 0.0;
    for (int expansion = 0; expansion < 2000; ++expansion) {
        const double seg = kernel.integral(base, base + width);
        if (acc + seg >= target) {
            double lo = base;
            double hi = base + width;
            for (int it = 0; it < 400; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (!(mid > lo && mid < hi)) {
                    break;
                }
                if (acc + kernel.integral(base, mid) < target) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return 0.5 * (lo + hi);
        }
        acc += seg;
        base += width;
        width *= 2.0;
        if (!std::isfinite(base + width)) {
            break;
        }
    }
    throw DomainError("kernel tail too small to reach the requested integral");
}

FlockingCertificate certify_flocking(std::span<const DiagnosticsFrame> prehistory, const InfluenceKernel& kernel) {
    if (!kernel.supports_tail()) {
        throw UnsupportedError("flocking certificate needs a kernel with a tail model");
    }
    if (prehistory.empty()) {
        throw NotReadyError("certificate needs prehistory frames");
    }
    const double tau = -prehistory.front().t;
    if (std::abs(prehistory.back().t) > time_tol(0.0) || tau < 0.0) {
        throw DomainError("prehistory frames must run from -tau to 0");
    }
    FlockingCertificate c;
    for (const auto& f : prehistory) {
        c.R_V = std::max(c.R_V, f.max_speed);
    }
    double integral = 0.0;
    for (std::size_t k = 1; k < prehistory.size(); ++k) {
        integral += 0.5 * (prehistory[k].t - prehistory[k - 1].t) * (prehistory[k].d_V + prehistory[k - 1].d_V);
    }
    c.lhs = prehistory.back().d_V + integral;
    const double start = prehistory.front().d_X + c.R_V * tau;
    c.rhs = kernel.tail_integral(start);
    c.satisfied = c.lhs < c.rhs;
    if (!c.satisfied) {
        return c;
    }
    const double d_star = solve_integral_upper_limit(kernel, start, c.lhs);
    const double psi_star = kernel.eval(d_star);
    c.d_star = d_star;
    c.psi_star = psi_star;
    if (psi_star >= 1.0) {
        c.predicted_rate = 1.0; // root of 1 - C = 0
    } else if (psi_star <= 0.0) {
        c.predicted_rate = 0.0;
    } else {
        c.predicted_rate = tau == 0.0 ? psi_star : gronwall_rate(psi_star, tau);
    }
    return c;
}

double fit_decay_rate(std::span<const DiagnosticsFrame> frames, double t_start, double t_end) {
    std::vector<std::pair<double, double>> pts;
    std::size_t in_window = 0;
    for (const auto& f : frames) {
        if (f.t < t_start - time_tol(t_start) || f.t > t_end + time_tol(t_end)) {
            continue;
        }
        ++in_window;
        if (f.d_V >= 1e-14) {
            pts.emplace_back(f.t, std::log(f.d_V));
        }
    }
    if (in_window < 3) {
        throw NotReadyError("decay fit needs at least three frames");
    }
    if (pts.size() < 2) {
        return kInf;
    }
    double mt = 0.0;
    double my = 0.0;
    for (const auto& [t, y] : pts) {
        mt += t;
        my += y;
    }
    mt /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sty = 0.0;
    double stt = 0.0;
    for (const auto& [t, y] : pts) {
        sty += (t - mt) * (y - my);
        stt += (t - mt) * (t - mt);
    }
    return -sty / stt;
}

} // namespace flockdde
