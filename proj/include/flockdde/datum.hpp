#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "flockdde/history.hpp"

namespace flockdde {

/// Axis-aligned box with a tensor midpoint grid; axis 0 varies slowest.
struct BoxDomain {
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<std::size_t> counts;
};

/// Explicit quadrature nodes (N x d, node-major) with cell weights.
struct NodeListDomain {
    std::vector<double> nodes;
    std::vector<double> weights;
};

using Domain = std::variant<BoxDomain, NodeListDomain>;

struct UniformDensity {};
struct GaussianDensity {
    std::vector<double> center;
    double sigma = 1.0;
};
/// One value per grid node, in node order.
struct TableDensity {
    std::vector<double> values;
};
using DensitySpec = std::variant<UniformDensity, GaussianDensity, TableDensity>;

/// u(x) = base + sum_m amplitude_m * sin(wavevector_m . x + phase_m).
/// Axis-aligned sine perturbations and seeded random modes both reduce to this.
struct ModalVelocity {
    struct Mode {
        std::vector<double> amplitude;
        std::vector<double> wavevector;
        double phase = 0.0;
    };
    std::vector<double> base;
    std::vector<Mode> modes;
};

/// u(x) = A x + b, row-major A.
struct AffineVelocity {
    std::vector<double> matrix;
    std::vector<double> offset;
};

/// Affine fields given at prehistory times s_k, linear in s between entries
/// and constant outside the covered range.
struct SliceTableVelocity {
    std::vector<double> times;
    std::vector<AffineVelocity> fields;
};

/// Time-dependent initial velocity field (s, x) -> u_s(x) on [-tau, 0].
class VelocityField {
  public:
    using Spec = std::variant<AffineVelocity, ModalVelocity, SliceTableVelocity>;

    VelocityField(std::size_t dim, Spec spec);

    static VelocityField constant(std::vector<double> value);
    static VelocityField affine(std::vector<double> matrix, std::vector<double> offset);
    /// component k: base_k + amplitude_k sin(wavenumber_k x_k)
    static VelocityField sine(std::vector<double> base, std::vector<double> amplitude,
                              std::vector<double> wavenumber);
    /// base plus n_modes modes with amplitudes uniform in [-amplitude, amplitude]
    /// per component, wavevectors uniform in [-max_wavenumber, max_wavenumber]
    /// per axis and uniform phases, drawn from seed.
    static VelocityField random_modes(std::vector<double> base, double amplitude, std::size_t n_modes,
                                      double max_wavenumber, std::uint64_t seed);
    static VelocityField slice_table(std::vector<double> times, std::vector<AffineVelocity> fields);

    std::size_t dim() const { return dim_; }
    const Spec& spec() const { return spec_; }

    /// Multiplies the whole field by factor.
    VelocityField scaled(double factor) const;

    void value(double s, std::span<const double> x, std::span<double> out) const;
    /// d x d Jacobian du/dx, row-major.
    void gradient(double s, std::span<const double> x, std::span<double> out) const;
    /// Partial derivative in s. At the end times of a slice table this is the
    /// one-sided derivative from inside the table.
    void time_derivative(double s, std::span<const double> x, std::span<double> out) const;

  private:
    std::size_t dim_;
    Spec spec_;
};

struct InitialDatum {
    std::size_t dim = 1;
    Domain domain;
    DensitySpec density;
    VelocityField velocity = VelocityField::constant({0.0});
};

/// Builds the node set and the prehistory slices on [-tau, 0].
///
/// Nodes are the midpoint grid of the box (or the explicit list) with masses
/// proportional to density times cell volume, normalized to 1; nodes of zero
/// density are dropped. Slices sit at equispaced s in [-tau, 0]; positions
/// come from RK4 integration of d(eta)/ds = u_s(eta) backward from eta_0 = x,
/// the Jacobians from its tangent equation, and velocities/velocity gradients
/// are read off the field along those characteristics. Each prehistory slice
/// carries the exact derivative d/ds u_s(eta_s(x)).
///
/// tau == 0 produces a single slice at t = 0. In one dimension the slices
/// also carry slopes w = (dv/dx)/(d eta/dx).
HistoryBuffer discretize(const InitialDatum& datum, double tau, std::size_t n_history_slices,
                         Interpolation interpolation = Interpolation::CubicHermite);

} // namespace flockdde
