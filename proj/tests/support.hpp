#pragma once

// Independent reference computations shared by the test executables. None of
// these call into the library's numerical code paths they are used to check.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "flockdde/datum.hpp"
#include "flockdde/history.hpp"
#include "flockdde/simulation.hpp"

namespace oracle {

inline double cs_psi(double beta, double r) { return std::pow(1.0 + r * r, -beta); }

/// Tail of (1 + s^2)^(-beta) on [R, inf), beta > 1/2. The substitution
/// t = 1/(1 + s^2) turns it into half an incomplete beta function
/// B(1/(1+R^2); beta - 1/2, 1/2). Plain exp_sinh quadrature is not accurate
/// enough here once beta approaches 1/2.
inline double cs_tail(double beta, double R) {
    return 0.5 * boost::math::beta(beta - 0.5, 0.5, 1.0 / (1.0 + R * R));
}

inline double cs_integral(double beta, double a, double b) {
    boost::math::quadrature::tanh_sinh<double> integrator;
    return integrator.integrate([beta](double s) { return std::pow(1.0 + s * s, -beta); }, a, b);
}

/// Solution of w' = -w - w^2 from w0.
inline double riccati_w(double w0, double t) {
    const double e = std::exp(-t);
    return w0 * e / (1.0 + w0 * (1.0 - e));
}

/// J' = w J with J(0) = 1 along the Riccati solution.
inline double riccati_J(double w0, double t) { return 1.0 + w0 * (1.0 - std::exp(-t)); }

inline double gronwall_residual(double a, double tau, double C) { return 1.0 - C - (1.0 - a) * std::exp(C * tau); }

struct Alignment {
    std::vector<double> term;     // F/G per node, N x d
    std::vector<double> gradient; // d(F/G)/d eta_i, N x d x d
    std::vector<double> normalizer;
};

/// Direct transcription of the quotient F/G and its derivative in eta_i for
/// Cucker-Smale kernels, written component by component.
inline Alignment cs_alignment(double beta, std::size_t d, const std::vector<double>& eta,
                              const std::vector<double>& eta_del, const std::vector<double>& v_del,
                              const std::vector<double>& m) {
    const std::size_t n = m.size();
    Alignment out;
    out.term.assign(n * d, 0.0);
    out.gradient.assign(n * d * d, 0.0);
    out.normalizer.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double G = 0.0;
        std::vector<double> F(d, 0.0), dG(d, 0.0), dF(d * d, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            double r2 = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = eta[i * d + k] - eta_del[j * d + k];
                r2 += diff * diff;
            }
            const double psi = std::pow(1.0 + r2, -beta);
            // d psi / d eta_i,k = -2 beta (1 + r^2)^(-beta - 1) (eta_i,k - eta_j,k)
            const double c = -2.0 * beta * std::pow(1.0 + r2, -beta - 1.0);
            G += psi * m[j];
            for (std::size_t a = 0; a < d; ++a) {
                F[a] += psi * m[j] * v_del[j * d + a];
            }
            for (std::size_t k = 0; k < d; ++k) {
                const double dpsi = c * (eta[i * d + k] - eta_del[j * d + k]) * m[j];
                dG[k] += dpsi;
                for (std::size_t a = 0; a < d; ++a) {
                    dF[a * d + k] += dpsi * v_del[j * d + a];
                }
            }
        }
        out.normalizer[i] = G;
        for (std::size_t a = 0; a < d; ++a) {
            out.term[i * d + a] = F[a] / G;
            for (std::size_t k = 0; k < d; ++k) {
                out.gradient[(i * d + a) * d + k] = (dF[a * d + k] * G - F[a] * dG[k]) / (G * G);
            }
        }
    }
    return out;
}

} // namespace oracle

namespace scenario {

inline flockdde::InitialDatum box1d(double lo, double hi, std::size_t n, flockdde::VelocityField v) {
    flockdde::InitialDatum d;
    d.dim = 1;
    d.domain = flockdde::BoxDomain{{lo}, {hi}, {n}};
    d.density = flockdde::UniformDensity{};
    d.velocity = std::move(v);
    return d;
}

inline flockdde::InitialDatum box2d(std::size_t nx, std::size_t ny, flockdde::VelocityField v) {
    flockdde::InitialDatum d;
    d.dim = 2;
    d.domain = flockdde::BoxDomain{{-1.0, -1.0}, {1.0, 1.0}, {nx, ny}};
    d.density = flockdde::GaussianDensity{{0.0, 0.0}, 1.0};
    d.velocity = std::move(v);
    return d;
}

inline flockdde::SimulationConfig config(double beta, flockdde::InitialDatum datum, double tau, double h,
                                         double t_end, double output_every) {
    flockdde::SimulationConfig c;
    c.kernel = flockdde::InfluenceKernel::cucker_smale(beta);
    c.datum = std::move(datum);
    c.tau = tau;
    c.step = h;
    c.t_end = t_end;
    c.output_every = output_every;
    return c;
}

/// Random smooth 1D or 2D velocity datum drawn from rng.
inline flockdde::VelocityField random_velocity(std::mt19937_64& rng, std::size_t d) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> base(d);
    for (auto& b : base) {
        b = 0.3 * u(rng);
    }
    return flockdde::VelocityField::random_modes(base, 0.4, 3, 2.0, rng());
}

} // namespace scenario
