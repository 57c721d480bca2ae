#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "flockdde/ensemble.hpp"
#include "flockdde/kernel.hpp"

namespace flockdde {

/// Per-output-step record of the flocking observables.
struct DiagnosticsFrame {
    double t = 0.0;
    double d_X = 0.0;
    double d_V = 0.0;
    double max_speed = 0.0;
    double lyapunov = 0.0;
    double X = 0.0;
    double V = 0.0;
    double min_detJ = 1.0;
    std::size_t min_detJ_node = 0;
    double max_velgrad_norm = 0.0;
};

struct Diameters {
    double d_X = 0.0;
    double d_V = 0.0;
};

/// Exact spatial and velocity diameters (max over all node pairs).
Diameters diameters(const LagrangianEnsemble& e);

/// Frame with the pointwise observables of e filled in; X, V and lyapunov
/// are left for FlockingMonitor.
DiagnosticsFrame observe(const LagrangianEnsemble& e);

/// L(t) = V(t) + int_{X(-tau)+R_V tau}^{X(t-tau)+R_V tau} psi + int_{t-tau}^t V
/// at the last frame. frames must start at t = -tau, be time-ordered and carry
/// X and V. Throws NotReadyError when the window [t - tau, t] is not covered
/// by at least two frames (one when tau = 0).
double lyapunov(std::span<const DiagnosticsFrame> frames, const InfluenceKernel& kernel, double R_V, double tau);

/// Maintains the comparison quantities X(t), V(t) and L(t) over a run.
///
/// X(t) = d_X(0) + int_0^t d_V by the trapezoid rule; V is advanced by the
/// exact exponential recurrence
///   V(t+dt) = V(t) e^{-dt} + int_t^{t+dt} g(s) e^{s-t-dt} ds,
///   g(s) = [1 - psi(X(s - tau) + R_V tau)] d_V(s - tau),
/// with the integral by the trapezoid rule. On [-tau, 0] X = d_X and V = d_V.
/// Delayed values are linearly interpolated between stored frames, so the
/// output cadence should divide tau.
class FlockingMonitor {
  public:
    FlockingMonitor(const InfluenceKernel& kernel, double tau, std::vector<DiagnosticsFrame> prehistory);

    double R_V() const { return R_V_; }
    double tau() const { return tau_; }

    /// Fills X, V, lyapunov of a frame at t > last time and records it.
    const DiagnosticsFrame& push(DiagnosticsFrame frame);

    /// All frames from t = -tau on.
    const std::vector<DiagnosticsFrame>& frames() const { return frames_; }
    std::span<const DiagnosticsFrame> prehistory() const { return {frames_.data(), n_prehistory_}; }
    std::span<const DiagnosticsFrame> emitted() const {
        return {frames_.data() + n_prehistory_, frames_.size() - n_prehistory_};
    }

  private:
    double interpolate_X(double s) const;
    double interpolate_dV(double s) const;
    double g(double s) const;

    const InfluenceKernel* kernel_;
    double tau_;
    double R_V_ = 0.0;
    std::size_t n_prehistory_ = 0;
    std::vector<DiagnosticsFrame> frames_;
};

/// Root C of 1 - C = (1 - a) e^{C tau} for 0 < a < 1, tau >= 0, by bisection
/// on [0, min(1, a)]. tau == 0 returns a exactly.
double gronwall_rate(double a, double tau);

struct FlockingCertificate {
    double R_V = 0.0;
    double lhs = 0.0;
    double rhs = 0.0; // may be +infinity
    bool satisfied = false;
    std::optional<double> d_star;
    std::optional<double> psi_star;
    std::optional<double> predicted_rate;
};

/// Checks the sufficient flocking condition on prehistory frames covering
/// [-tau, 0]:
///   d_V(0) + int_{-tau}^0 d_V < int_{d_X(-tau) + R_V tau}^inf psi.
/// When it holds, d_star solves int_{d_X(-tau)+R_V tau}^{d_star} psi = lhs
/// and predicted_rate = gronwall_rate(psi(d_star), tau).
/// Throws UnsupportedError for kernels without a tail model.
FlockingCertificate certify_flocking(std::span<const DiagnosticsFrame> prehistory, const InfluenceKernel& kernel);

/// Upper limit b >= a with int_a^b psi = target (target >= 0); the root must
/// exist. Throws DomainError when the tail is too small.
double solve_integral_upper_limit(const InfluenceKernel& kernel, double a, double target);

/// Negated least-squares slope of ln d_V over frames with t in
/// [t_start, t_end]. Frames with d_V < 1e-14 are ignored; returns +infinity
/// when fewer than two remain. Throws NotReadyError for fewer than 3 frames.
double fit_decay_rate(std::span<const DiagnosticsFrame> frames, double t_start, double t_end);

} // namespace flockdde
