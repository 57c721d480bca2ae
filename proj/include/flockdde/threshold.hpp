#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flockdde/diagnostics.hpp"
#include "flockdde/dynamics.hpp"
#include "flockdde/history.hpp"
#include "flockdde/kernel.hpp"

namespace flockdde {

enum class VerdictKind { GlobalExistence, FiniteTimeBlowup, Indeterminate };

const char* to_string(VerdictKind kind);

/// Outcome of the one-dimensional critical-threshold test on the initial
/// slope w_0 = du_0/dx.
struct ThresholdVerdict {
    /// 2 C_psi R_V with |psi'| <= C_psi psi
    double c_bar = 0.0;
    /// (-1 - sqrt(1 - 4 c_bar)) / 2, defined when 4 c_bar <= 1
    std::optional<double> w1_minus;
    /// (-1 - sqrt(1 + 4 c_bar)) / 2
    double w2_minus = -1.0;
    VerdictKind verdict = VerdictKind::Indeterminate;
    /// 1 / (w2_minus - w0_min): w diverges before this time
    std::optional<double> blowup_bound;
    std::string note;
};

/// Classification from a given log-derivative bound C_psi.
ThresholdVerdict classify_with_bound(double w0_min, double c_psi, double R_V);

/// Uses the kernel's log-derivative bound (2 beta for Cucker-Smale). Throws
/// UnsupportedError for kernels without one.
ThresholdVerdict classify(double w0_min, const InfluenceKernel& kernel, double R_V);

/// w_i = (dv/dx)_i / (d eta/dx)_i of a 1D ensemble. Returns a blow-up signal
/// naming the first node whose Jacobian is <= 0 instead.
struct SlopeSample {
    std::vector<double> values;
    std::optional<BlowupSignal> blowup;
};
SlopeSample slopes_from_tangent(const LagrangianEnsemble& e);

/// Per-step record of the slope field: the exported quotient form and the
/// directly evolved w (D_t w = -w^2 - w + d_x alignment) carried alongside.
struct SlopeTrajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> quotient;
    std::vector<std::vector<double>> direct;
    std::optional<BlowupSignal> blowup;
};

/// Advances a 1D buffer n_steps times by h, recording w after every step.
/// Stops with a blow-up signal when a Jacobian reaches 0 or the state stops
/// being finite.
SlopeTrajectory evolve_w(HistoryBuffer& buffer, const InfluenceKernel& kernel, double h, std::size_t n_steps,
                         const StepOptions& options = {});

/// First time min det(grad eta) <= tolerance, refined by 40 bisections on the
/// piecewise-linear interpolant between the bracketing frames.
std::optional<BlowupSignal> detect_blowup(std::span<const DiagnosticsFrame> frames, double tolerance = 1e-6);

/// Eulerian density at the node positions: h_i = (m_i / |cell_i|) / det(grad eta_i).
struct DensityReconstruction {
    std::vector<double> positions;
    std::vector<double> values;
    std::optional<BlowupSignal> blowup;
};
DensityReconstruction reconstruct_density(const LagrangianEnsemble& e, double tolerance = 1e-6);

} // namespace flockdde
