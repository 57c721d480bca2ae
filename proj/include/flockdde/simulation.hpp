#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "flockdde/datum.hpp"
#include "flockdde/diagnostics.hpp"
#include "flockdde/dynamics.hpp"
#include "flockdde/kernel.hpp"

namespace flockdde {

struct SimulationConfig {
    InfluenceKernel kernel = InfluenceKernel::cucker_smale(0.0);
    InitialDatum datum;
    double tau = 0.0;
    double step = 1e-3;
    double t_end = 1.0;
    double output_every = 1e-3;
    Interpolation interpolation = Interpolation::CubicHermite;
    unsigned threads = 1;
    /// A run stops once min det(grad eta) drops to this value.
    double detJ_tolerance = 1e-6;
};

struct SimulationHooks {
    std::function<void(const DiagnosticsFrame&)> on_frame;
    std::function<void(const ForceEvaluation&)> on_force;
};

struct SimulationResult {
    /// Frames on [-tau, 0) built from the prehistory slices.
    std::vector<DiagnosticsFrame> prehistory;
    /// Emitted frames from t = 0; after a blow-up the last one is the
    /// terminal frame at the refined blow-up time.
    std::vector<DiagnosticsFrame> frames;
    double R_V = 0.0;
    /// Absent for kernels without a tail model.
    std::optional<FlockingCertificate> certificate;
    std::optional<BlowupSignal> blowup;
    LagrangianEnsemble initial;
    LagrangianEnsemble final_state;
    HistoryBuffer final_buffer{0.0, Interpolation::CubicHermite};
};

/// Throws DomainError when step/tau/t_end/output_every are inconsistent:
/// h > 0, tau >= 0, tau/h a positive integer when tau > 0, t_end >= 0 and
/// output_every a positive multiple of h.
void validate(const SimulationConfig& config);

/// Integrates from t = 0 to t_end with fixed-step RK4 on the delay system.
///
/// Emits one frame every output_every (and at t_end). Stops early with a
/// blow-up signal when the state stops being finite or when min det(grad eta)
/// reaches detJ_tolerance; in the latter case the crossing time is refined by
/// 40 bisections over partial steps from the last accepted state. The run is
/// deterministic for a given config.
SimulationResult simulate(const SimulationConfig& config, const SimulationHooks& hooks = {});

} // namespace flockdde
