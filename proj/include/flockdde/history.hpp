#pragma once

#include <deque>
#include <vector>

#include "flockdde/ensemble.hpp"

namespace flockdde {

enum class Interpolation { CubicHermite, Linear };

/// A stored slice plus the one-sided time derivatives of its velocities.
/// The derivative of v may jump at t = 0 (prehistory meets dynamics), so each
/// slice keeps both sides; an empty vector means "not known yet".
struct HistorySlice {
    LagrangianEnsemble state;
    std::vector<double> accel_left;
    std::vector<double> accel_right;
};

/// Positions and velocities of every node at one (possibly interpolated) time.
struct DelayedView {
    double time = 0.0;
    std::size_t dim = 1;
    std::vector<double> positions;
    std::vector<double> velocities;

    std::size_t size() const { return dim == 0 ? 0 : positions.size() / dim; }
};

/// Dense record of the flow over the trailing window [t - tau, t].
/// Single writer (the integrator); const queries may run concurrently.
class HistoryBuffer {
  public:
    HistoryBuffer(double tau, Interpolation interpolation);

    double tau() const { return tau_; }
    Interpolation interpolation() const { return interpolation_; }

    /// Appends a slice strictly after the current one. The slice must share
    /// the node set of the existing slices.
    void append(LagrangianEnsemble state, std::vector<double> accel_left = {},
                std::vector<double> accel_right = {});

    /// Records dv/dt at the newest slice (right side, and left side when that
    /// is still unknown).
    void set_current_acceleration(const std::vector<double>& accel);

    /// Drops slices strictly older than keep_from, always retaining the slice
    /// at or just before it so interpolation on [keep_from, t] stays possible.
    void prune(double keep_from);

    const LagrangianEnsemble& current() const { return slices_.back().state; }
    double current_time() const { return slices_.back().state.time; }
    double window_start() const { return current_time() - tau_; }
    bool empty() const { return slices_.empty(); }
    std::size_t slice_count() const { return slices_.size(); }
    const HistorySlice& slice(std::size_t i) const { return slices_[i]; }
    const HistorySlice& newest() const { return slices_.back(); }

    /// Interpolated positions/velocities at t_query in [t - tau, t]. Throws
    /// OutOfWindowError otherwise. Positions use cubic Hermite with the stored
    /// velocities as slopes; velocities use cubic Hermite on the stored
    /// accelerations (finite-difference estimates where none is stored) or
    /// linear interpolation.
    DelayedView query(double t_query) const;

  private:
    std::vector<double> velocity_slope(std::size_t k, bool right_side) const;

    double tau_;
    Interpolation interpolation_;
    std::deque<HistorySlice> slices_;
};

} // namespace flockdde
