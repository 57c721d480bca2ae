#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "flockdde/history.hpp"
#include "flockdde/kernel.hpp"

namespace flockdde {

/// Right-hand side of the velocity equation at every node.
struct ForceEvaluation {
    std::size_t dim = 1;
    /// F_i / G_i - v_i
    std::vector<double> accelerations;
    /// d(F/G)/d(eta_i) mapped to label space by the node's Jacobian (N x d x d).
    std::vector<double> force_gradients;
    /// d(F/G)/d(eta_i) itself, i.e. the Eulerian gradient of the alignment term.
    std::vector<double> eulerian_gradients;
    /// G_i = sum_j psi(|eta_i - eta_j^delayed|) m_j
    std::vector<double> normalizers;
};

struct ForceOptions {
    unsigned threads = 1;
    /// Verify that every alignment term lies in the componentwise hull of the
    /// delayed velocities (rounding-level tolerance); throws std::logic_error.
    bool check_hull = true;
};

/// Delayed alignment force for the given current state. The delayed view must
/// hold the same N and d as the current ensemble.
ForceEvaluation alignment_rhs(const LagrangianEnsemble& current, const DelayedView& delayed,
                              const InfluenceKernel& kernel, const ForceOptions& options = {});

struct StepOptions {
    ForceOptions force;
    /// Called with every force evaluation (four per RK4 step).
    std::function<void(const ForceEvaluation&)> observer;
};

/// Emitted instead of an exception when the state stops being finite.
struct BlowupSignal {
    double time = 0.0;
    std::optional<std::size_t> node;
    std::string reason;
};

/// One classical RK4 step of length dt from the newest slice, without
/// appending it. Delayed arguments are read from the history at
/// t + c dt - tau; with tau = 0 the stage state itself is used. Stores the
/// stage-one acceleration on the newest slice so later queries can use it.
LagrangianEnsemble advance(HistoryBuffer& buffer, const InfluenceKernel& kernel, double dt,
                           const StepOptions& options = {});

/// Appends a state produced by advance(..., h) and prunes the buffer to
/// [t - tau - 2h, t]. Times within rounding of a multiple of h are snapped to
/// it so delayed queries keep landing on stored slices.
void commit_step(HistoryBuffer& buffer, LagrangianEnsemble next, double h);

/// Advances the buffer by h (append + prune to [t - tau - 2h, t]). Requires
/// 0 < h, and h <= tau when tau > 0. Returns a blow-up signal, leaving the
/// buffer untouched, if the new state is not finite.
std::optional<BlowupSignal> step(HistoryBuffer& buffer, const InfluenceKernel& kernel, double h,
                                 const StepOptions& options = {});

} // namespace flockdde
