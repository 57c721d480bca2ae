#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace flockdde {

/// Quadrature nodes of the initial domain. Shared, immutable, by every time
/// slice of a run: labels x_i, masses rho_0(x_i) w_i (summing to 1) and the
/// quadrature cell volume w_i.
struct NodeSet {
    std::size_t dim = 1;
    std::vector<double> labels;
    std::vector<double> masses;
    std::vector<double> cell_volumes;

    std::size_t size() const { return masses.size(); }
    std::span<const double> label(std::size_t i) const { return {labels.data() + i * dim, dim}; }
};

/// One time slice of the Lagrangian flow. Vectors are stored node-major
/// (N x d), matrices node-major row-major (N x d x d).
struct LagrangianEnsemble {
    double time = 0.0;
    std::shared_ptr<const NodeSet> nodes;
    std::vector<double> positions;
    std::vector<double> velocities;
    std::vector<double> jacobians;
    std::vector<double> vel_gradients;
    // Directly evolved slope w = du/dx per node (1D only; empty when not tracked).
    std::vector<double> slopes;

    std::size_t size() const { return nodes ? nodes->size() : 0; }
    std::size_t dim() const { return nodes ? nodes->dim : 0; }

    std::span<const double> position(std::size_t i) const { return {positions.data() + i * dim(), dim()}; }
    std::span<const double> velocity(std::size_t i) const { return {velocities.data() + i * dim(), dim()}; }
    std::span<const double> jacobian(std::size_t i) const {
        const std::size_t d2 = dim() * dim();
        return {jacobians.data() + i * d2, d2};
    }
    std::span<const double> vel_gradient(std::size_t i) const {
        const std::size_t d2 = dim() * dim();
        return {vel_gradients.data() + i * d2, d2};
    }

    /// Throws ShapeError unless every array matches N and d.
    void check_shape() const;
    bool all_finite() const;
};

namespace linalg {

double determinant(std::span<const double> m, std::size_t d);
double frobenius_norm(std::span<const double> m);
double norm(std::span<const double> v);
// out = a * b for d x d row-major matrices.
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> out, std::size_t d);
void set_identity(std::span<double> m, std::size_t d);

} // namespace linalg

} // namespace flockdde
