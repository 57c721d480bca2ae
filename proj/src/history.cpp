#include "flockdde/history.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "flockdde/errors.hpp"

namespace flockdde {
namespace {

double time_tolerance(double t) { return 1e-12 * std::max(1.0, std::abs(t)); }

} // namespace

HistoryBuffer::HistoryBuffer(double tau, Interpolation interpolation)
    : tau_(tau), interpolation_(interpolation) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) {
        throw DomainError("delay tau must be finite and nonnegative");
    }
}

void HistoryBuffer::append(LagrangianEnsemble state, std::vector<double> accel_left,
                           std::vector<double> accel_right) {
    state.check_shape();
    const std::size_t nd = state.size() * state.dim();
    if ((!accel_left.empty() && accel_left.size() != nd) || (!accel_right.empty() && accel_right.size() != nd)) {
        throw ShapeError("slice accelerations must hold N*d entries");
    }
    if (!slices_.empty()) {
        if (state.nodes != current().nodes) {
            throw ShapeError("history slices must share one node set");
        }
        if (!(state.time > current_time())) {
            throw DomainError("history slice times must be strictly increasing");
        }
    }
    slices_.push_back({std::move(state), std::move(accel_left), std::move(accel_right)});
}

void HistoryBuffer::set_current_acceleration(const std::vector<double>& accel) {
    auto& s = slices_.back();
    if (accel.size() != s.state.positions.size()) {
        throw ShapeError("acceleration must hold N*d entries");
    }
    s.accel_right = accel;
    if (s.accel_left.empty()) {
        s.accel_left = accel;
    }
}

void HistoryBuffer::prune(double keep_from) {
    while (slices_.size() > 1 && slices_[1].state.time <= keep_from) {
        slices_.pop_front();
    }
}

std::vector<double> HistoryBuffer::velocity_slope(std::size_t k, bool right_side) const {
    const auto& s = slices_[k];
    const auto& stored = right_side ? s.accel_right : s.accel_left;
    if (!stored.empty()) {
        return stored;
    }
    const auto& other_side = right_side ? s.accel_left : s.accel_right;
    if (!other_side.empty()) {
        return other_side;
    }
    // Second-order finite differences of the stored velocities.
    const std::size_t n = slices_.size();
    const auto& v = s.state.velocities;
    std::vector<double> out(v.size(), 0.0);
    if (n < 2) {
        return out;
    }
    if (k > 0 && k + 1 < n) {
        const auto& vm = slices_[k - 1].state.velocities;
        const auto& vp = slices_[k + 1].state.velocities;
        const double hm = s.state.time - slices_[k - 1].state.time;
        const double hp = slices_[k + 1].state.time - s.state.time;
        for (std::size_t j = 0; j < v.size(); ++j) {
            out[j] = (hm * hm * (vp[j] - v[j]) + hp * hp * (v[j] - vm[j])) / (hm * hp * (hm + hp));
        }
    } else if (n == 2) {
        const auto& v0 = slices_[0].state.velocities;
        const auto& v1 = slices_[1].state.velocities;
        const double h = slices_[1].state.time - slices_[0].state.time;
        for (std::size_t j = 0; j < v.size(); ++j) {
            out[j] = (v1[j] - v0[j]) / h;
        }
    } else {
        // one-sided three-point formula at either end
        const bool front = (k == 0);
        const std::size_t a = front ? 0 : n - 1;
        const std::size_t b = front ? 1 : n - 2;
        const std::size_t c = front ? 2 : n - 3;
        const double ta = slices_[a].state.time;
        const double h1 = slices_[b].state.time - ta;
        const double h2 = slices_[c].state.time - ta;
        const auto& va = slices_[a].state.velocities;
        const auto& vb = slices_[b].state.velocities;
        const auto& vc = slices_[c].state.velocities;
        for (std::size_t j = 0; j < v.size(); ++j) {
            const double db = (vb[j] - va[j]) / h1;
            const double dc = (vc[j] - va[j]) / h2;
            out[j] = (db * h2 - dc * h1) / (h2 - h1);
        }
    }
    return out;
}

DelayedView HistoryBuffer::query(double t_query) const {
    if (slices_.empty()) {
        throw OutOfWindowError("history buffer is empty");
    }
    const double t_now = current_time();
    const double tol = time_tolerance(t_now);
    if (t_query < t_now - tau_ - tol || t_query > t_now + tol || t_query < slices_.front().state.time - tol) {
        std::ostringstream os;
        os.precision(17);
        os << "delayed query at t=" << t_query << " outside history window [" << t_now - tau_ << ", " << t_now
           << "]";
        throw OutOfWindowError(os.str());
    }

    DelayedView view;
    view.time = t_query;
    view.dim = current().dim();

    // first slice with time > t_query
    auto it = std::upper_bound(slices_.begin(), slices_.end(), t_query,
                               [](double t, const HistorySlice& s) { return t < s.state.time; });
    std::size_t k1 = static_cast<std::size_t>(std::distance(slices_.begin(), it));
    // snap to a stored slice when within rounding of its time
    for (std::size_t cand : {k1 == 0 ? std::size_t{0} : k1 - 1, k1}) {
        if (cand < slices_.size() && std::abs(slices_[cand].state.time - t_query) <= tol) {
            view.positions = slices_[cand].state.positions;
            view.velocities = slices_[cand].state.velocities;
            return view;
        }
    }
    if (k1 == 0 || k1 == slices_.size()) {
        throw OutOfWindowError("delayed query not bracketed by stored slices");
    }
    const std::size_t k0 = k1 - 1;
    const auto& s0 = slices_[k0].state;
    const auto& s1 = slices_[k1].state;
    const double dt = s1.time - s0.time;
    const double s = (t_query - s0.time) / dt;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;

    const std::size_t nd = s0.positions.size();
    view.positions.resize(nd);
    view.velocities.resize(nd);
    for (std::size_t j = 0; j < nd; ++j) {
        view.positions[j] = h00 * s0.positions[j] + h10 * dt * s0.velocities[j] + h01 * s1.positions[j] +
                            h11 * dt * s1.velocities[j];
    }
    if (interpolation_ == Interpolation::Linear) {
        for (std::size_t j = 0; j < nd; ++j) {
            view.velocities[j] = (1.0 - s) * s0.velocities[j] + s * s1.velocities[j];
        }
    } else {
        const auto a0 = velocity_slope(k0, true);
        const auto a1 = velocity_slope(k1, false);
        for (std::size_t j = 0; j < nd; ++j) {
            view.velocities[j] =
                h00 * s0.velocities[j] + h10 * dt * a0[j] + h01 * s1.velocities[j] + h11 * dt * a1[j];
        }
    }
    return view;
}

} // namespace flockdde
