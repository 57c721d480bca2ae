#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace flockdde {

/// psi(r) = (1 + r^2)^(-beta), beta >= 0.
struct CuckerSmale {
    double beta = 0.0;
};

/// Monotone piecewise-cubic profile through (radii, values). radii[0] must be
/// 0 with values[0] == 1; the profile is extended by its last value past the
/// final node.
struct Tabulated {
    std::vector<double> radii;
    std::vector<double> values;
    std::vector<double> slopes; // filled on construction
};

/// psi and psi'(r)/r at a squared distance. The ratio is finite at r = 0 for
/// smooth kernels and is what the pairwise gradient loop consumes.
struct RadialTerms {
    double psi;
    double dpsi_over_r;
};

/// Radially symmetric, positive, nonincreasing influence function with
/// psi(0) = 1. Immutable after construction.
class InfluenceKernel {
  public:
    using Family = std::variant<CuckerSmale, Tabulated>;

    static InfluenceKernel cucker_smale(double beta);
    static InfluenceKernel tabulated(std::vector<double> radii, std::vector<double> values);

    double eval(double r) const;
    double eval_deriv(double r) const;
    RadialTerms radial_terms(double r2) const;

    /// Integral of psi over [R, inf). Returns +infinity when the tail diverges
    /// (Cucker-Smale with beta <= 1/2). Throws UnsupportedError for tabulated
    /// kernels, which carry no tail model.
    double tail_integral(double R) const;

    /// Integral of psi over [a, b] for finite 0 <= a, b.
    double integral(double a, double b) const;

    /// Constant C with |psi'| <= C psi on [0, inf), when the family provides
    /// one. Cucker-Smale reports 2 beta.
    std::optional<double> log_derivative_bound() const;

    /// psi identically 1.
    bool is_flat() const;
    bool supports_tail() const { return std::holds_alternative<CuckerSmale>(family_); }
    const Family& family() const { return family_; }
    std::string describe() const;

  private:
    explicit InfluenceKernel(Family f) : family_(std::move(f)) {}
    Family family_;
};

} // namespace flockdde
