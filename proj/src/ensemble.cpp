#include "flockdde/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "flockdde/errors.hpp"

namespace flockdde {

void LagrangianEnsemble::check_shape() const {
    if (!nodes || nodes->size() == 0 || nodes->dim == 0) {
        throw ShapeError("ensemble has no nodes");
    }
    const std::size_t n = nodes->size();
    const std::size_t d = nodes->dim;
    if (nodes->labels.size() != n * d || nodes->cell_volumes.size() != n) {
        throw ShapeError("node set arrays have inconsistent lengths");
    }
    if (positions.size() != n * d || velocities.size() != n * d) {
        throw ShapeError("positions/velocities must hold N*d entries");
    }
    if (jacobians.size() != n * d * d || vel_gradients.size() != n * d * d) {
        throw ShapeError("jacobians/vel_gradients must hold N*d*d entries");
    }
    if (!slopes.empty() && (d != 1 || slopes.size() != n)) {
        throw ShapeError("slopes are tracked only in one dimension, one per node");
    }
}

bool LagrangianEnsemble::all_finite() const {
    auto finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    return finite(positions) && finite(velocities) && finite(jacobians) && finite(vel_gradients) &&
           finite(slopes);
}

namespace linalg {

double determinant(std::span<const double> m, std::size_t d) {
    switch (d) {
    case 1:
        return m[0];
    case 2:
        return m[0] * m[3] - m[1] * m[2];
    case 3:
        return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
    default:
        break;
    }
    // LU with partial pivoting.
    std::vector<double> a(m.begin(), m.end());
    double det = 1.0;
    for (std::size_t col = 0; col < d; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < d; ++r) {
            if (std::abs(a[r * d + col]) > std::abs(a[pivot * d + col])) {
                pivot = r;
            }
        }
        if (a[pivot * d + col] == 0.0) {
            return 0.0;
        }
        if (pivot != col) {
            for (std::size_t c = 0; c < d; ++c) {
                std::swap(a[pivot * d + c], a[col * d + c]);
            }
            det = -det;
        }
        const double p = a[col * d + col];
        det *= p;
        for (std::size_t r = col + 1; r < d; ++r) {
            const double f = a[r * d + col] / p;
            for (std::size_t c = col; c < d; ++c) {
                a[r * d + c] -= f * a[col * d + c];
            }
        }
    }
    return det;
}

double frobenius_norm(std::span<const double> m) {
    double s = 0.0;
    for (double x : m) {
        s += x * x;
    }
    return std::sqrt(s);
}

double norm(std::span<const double> v) { return frobenius_norm(v); }

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> out, std::size_t d) {
    for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                s += a[r * d + k] * b[k * d + c];
            }
            out[r * d + c] = s;
        }
    }
}

void set_identity(std::span<double> m, std::size_t d) {
    std::fill(m.begin(), m.end(), 0.0);
    for (std::size_t k = 0; k < d; ++k) {
        m[k * d + k] = 1.0;
    }
}

} // namespace linalg
} // namespace flockdde
