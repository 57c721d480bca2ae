#include "flockdde/datum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "flockdde/errors.hpp"

namespace flockdde {
namespace {

void affine_value(const AffineVelocity& f, std::size_t d, std::span<const double> x, std::span<double> out) {
    for (std::size_t r = 0; r < d; ++r) {
        double s = f.offset[r];
        for (std::size_t c = 0; c < d; ++c) {
            s += f.matrix[r * d + c] * x[c];
        }
        out[r] = s;
    }
}

void check_affine(const AffineVelocity& f, std::size_t d) {
    if (f.matrix.size() != d * d || f.offset.size() != d) {
        throw InvalidDatumError("affine velocity needs a d x d matrix and a length-d offset");
    }
}

// Locates s in a slice table: returns (k, alpha) with field (1-alpha) F_k + alpha F_{k+1}.
std::pair<std::size_t, double> table_position(const SliceTableVelocity& t, double s) {
    const auto& ts = t.times;
    if (ts.size() == 1 || s <= ts.front()) {
        return {0, 0.0};
    }
    if (s >= ts.back()) {
        return {ts.size() - 2, 1.0};
    }
    auto it = std::upper_bound(ts.begin(), ts.end(), s);
    const std::size_t k = static_cast<std::size_t>(std::distance(ts.begin(), it)) - 1;
    return {k, (s - ts[k]) / (ts[k + 1] - ts[k])};
}

} // namespace

VelocityField::VelocityField(std::size_t dim, Spec spec) : dim_(dim), spec_(std::move(spec)) {
    if (dim_ == 0) {
        throw InvalidDatumError("velocity field dimension must be positive");
    }
    if (const auto* a = std::get_if<AffineVelocity>(&spec_)) {
        check_affine(*a, dim_);
    } else if (const auto* m = std::get_if<ModalVelocity>(&spec_)) {
        if (m->base.size() != dim_) {
            throw InvalidDatumError("modal velocity base must have length d");
        }
        for (const auto& mode : m->modes) {
            if (mode.amplitude.size() != dim_ || mode.wavevector.size() != dim_) {
                throw InvalidDatumError("velocity modes need length-d amplitude and wavevector");
            }
        }
    } else {
        const auto& t = std::get<SliceTableVelocity>(spec_);
        if (t.times.empty() || t.times.size() != t.fields.size()) {
            throw InvalidDatumError("slice-table velocity needs matching, non-empty times and fields");
        }
        for (std::size_t k = 0; k < t.times.size(); ++k) {
            check_affine(t.fields[k], dim_);
            if (k > 0 && !(t.times[k] > t.times[k - 1])) {
                throw InvalidDatumError("slice-table times must be strictly increasing");
            }
        }
    }
}

VelocityField VelocityField::constant(std::vector<double> value) {
    const std::size_t d = value.size();
    return VelocityField(d, AffineVelocity{std::vector<double>(d * d, 0.0), std::move(value)});
}

VelocityField VelocityField::affine(std::vector<double> matrix, std::vector<double> offset) {
    const std::size_t d = offset.size();
    return VelocityField(d, AffineVelocity{std::move(matrix), std::move(offset)});
}

VelocityField VelocityField::sine(std::vector<double> base, std::vector<double> amplitude,
                                  std::vector<double> wavenumber) {
    const std::size_t d = base.size();
    if (amplitude.size() != d || wavenumber.size() != d) {
        throw InvalidDatumError("sine velocity needs base, amplitude and wavenumber of equal length");
    }
    ModalVelocity m{std::move(base), {}};
    for (std::size_t k = 0; k < d; ++k) {
        ModalVelocity::Mode mode{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0), 0.0};
        mode.amplitude[k] = amplitude[k];
        mode.wavevector[k] = wavenumber[k];
        m.modes.push_back(std::move(mode));
    }
    return VelocityField(d, std::move(m));
}

VelocityField VelocityField::random_modes(std::vector<double> base, double amplitude, std::size_t n_modes,
                                          double max_wavenumber, std::uint64_t seed) {
    const std::size_t d = base.size();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(-amplitude, amplitude);
    std::uniform_real_distribution<double> wave(-max_wavenumber, max_wavenumber);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    ModalVelocity m{std::move(base), {}};
    for (std::size_t j = 0; j < n_modes; ++j) {
        ModalVelocity::Mode mode{std::vector<double>(d), std::vector<double>(d), 0.0};
        for (auto& a : mode.amplitude) {
            a = amp(rng);
        }
        for (auto& k : mode.wavevector) {
            k = wave(rng);
        }
        mode.phase = phase(rng);
        m.modes.push_back(std::move(mode));
    }
    return VelocityField(d, std::move(m));
}

VelocityField VelocityField::slice_table(std::vector<double> times, std::vector<AffineVelocity> fields) {
    if (fields.empty()) {
        throw InvalidDatumError("slice-table velocity needs at least one field");
    }
    const std::size_t d = fields.front().offset.size();
    return VelocityField(d, SliceTableVelocity{std::move(times), std::move(fields)});
}

VelocityField VelocityField::scaled(double factor) const {
    Spec copy = spec_;
    auto scale_affine = [factor](AffineVelocity& a) {
        for (auto& x : a.matrix) {
            x *= factor;
        }
        for (auto& x : a.offset) {
            x *= factor;
        }
    };
    if (auto* a = std::get_if<AffineVelocity>(&copy)) {
        scale_affine(*a);
    } else if (auto* m = std::get_if<ModalVelocity>(&copy)) {
        for (auto& x : m->base) {
            x *= factor;
        }
        for (auto& mode : m->modes) {
            for (auto& x : mode.amplitude) {
                x *= factor;
            }
        }
    } else {
        for (auto& f : std::get<SliceTableVelocity>(copy).fields) {
            scale_affine(f);
        }
    }
    return VelocityField(dim_, std::move(copy));
}

void VelocityField::value(double s, std::span<const double> x, std::span<double> out) const {
    const std::size_t d = dim_;
    if (const auto* a = std::get_if<AffineVelocity>(&spec_)) {
        affine_value(*a, d, x, out);
        return;
    }
    if (const auto* m = std::get_if<ModalVelocity>(&spec_)) {
        std::copy(m->base.begin(), m->base.end(), out.begin());
        for (const auto& mode : m->modes) {
            double arg = mode.phase;
            for (std::size_t c = 0; c < d; ++c) {
                arg += mode.wavevector[c] * x[c];
            }
            const double sn = std::sin(arg);
            for (std::size_t r = 0; r < d; ++r) {
                out[r] += mode.amplitude[r] * sn;
            }
        }
        return;
    }
    const auto& t = std::get<SliceTableVelocity>(spec_);
    const auto [k, alpha] = table_position(t, s);
    affine_value(t.fields[k], d, x, out);
    if (alpha > 0.0) {
        std::vector<double> next(d);
        affine_value(t.fields[k + 1], d, x, next);
        for (std::size_t r = 0; r < d; ++r) {
            out[r] = (1.0 - alpha) * out[r] + alpha * next[r];
        }
    }
}

void VelocityField::gradient(double s, std::span<const double> x, std::span<double> out) const {
    const std::size_t d = dim_;
    if (const auto* a = std::get_if<AffineVelocity>(&spec_)) {
        std::copy(a->matrix.begin(), a->matrix.end(), out.begin());
        return;
    }
    if (const auto* m = std::get_if<ModalVelocity>(&spec_)) {
        std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(d * d), 0.0);
        for (const auto& mode : m->modes) {
            double arg = mode.phase;
            for (std::size_t c = 0; c < d; ++c) {
                arg += mode.wavevector[c] * x[c];
            }
            const double cs = std::cos(arg);
            for (std::size_t r = 0; r < d; ++r) {
                for (std::size_t c = 0; c < d; ++c) {
                    out[r * d + c] += mode.amplitude[r] * mode.wavevector[c] * cs;
                }
            }
        }
        return;
    }
    const auto& t = std::get<SliceTableVelocity>(spec_);
    const auto [k, alpha] = table_position(t, s);
    for (std::size_t j = 0; j < d * d; ++j) {
        const double next = alpha > 0.0 ? t.fields[k + 1].matrix[j] : 0.0;
        out[j] = (1.0 - alpha) * t.fields[k].matrix[j] + alpha * next;
    }
}

void VelocityField::time_derivative(double s, std::span<const double> x, std::span<double> out) const {
    const std::size_t d = dim_;
    const auto* t = std::get_if<SliceTableVelocity>(&spec_);
    if (t == nullptr || t->times.size() < 2 || s < t->times.front() || s > t->times.back()) {
        std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(d), 0.0);
        return;
    }
    const auto [k, alpha] = table_position(*t, s);
    std::vector<double> lo(d);
    std::vector<double> hi(d);
    affine_value(t->fields[k], d, x, lo);
    affine_value(t->fields[k + 1], d, x, hi);
    const double span = t->times[k + 1] - t->times[k];
    for (std::size_t r = 0; r < d; ++r) {
        out[r] = (hi[r] - lo[r]) / span;
    }
}

namespace {

std::shared_ptr<NodeSet> build_nodes(const InitialDatum& datum) {
    const std::size_t d = datum.dim;
    std::vector<double> labels;
    std::vector<double> volumes;

    if (const auto* box = std::get_if<BoxDomain>(&datum.domain)) {
        if (box->lower.size() != d || box->upper.size() != d || box->counts.size() != d) {
            throw InvalidDatumError("box domain needs lower, upper and counts of length d");
        }
        std::size_t total = 1;
        double volume = 1.0;
        std::vector<double> spacing(d);
        for (std::size_t k = 0; k < d; ++k) {
            if (box->counts[k] == 0 || !(box->upper[k] > box->lower[k])) {
                throw InvalidDatumError("box domain needs upper > lower and positive counts on every axis");
            }
            spacing[k] = (box->upper[k] - box->lower[k]) / static_cast<double>(box->counts[k]);
            volume *= spacing[k];
            total *= box->counts[k];
        }
        labels.reserve(total * d);
        std::vector<std::size_t> idx(d, 0);
        for (std::size_t n = 0; n < total; ++n) {
            for (std::size_t k = 0; k < d; ++k) {
                labels.push_back(box->lower[k] + (static_cast<double>(idx[k]) + 0.5) * spacing[k]);
            }
            for (std::size_t k = d; k-- > 0;) {
                if (++idx[k] < box->counts[k]) {
                    break;
                }
                idx[k] = 0;
            }
        }
        volumes.assign(total, volume);
    } else {
        const auto& list = std::get<NodeListDomain>(datum.domain);
        if (list.nodes.empty() || list.nodes.size() != list.weights.size() * d) {
            throw InvalidDatumError("node list needs N*d coordinates and N weights");
        }
        for (double w : list.weights) {
            if (!(w > 0.0)) {
                throw InvalidDatumError("node weights must be positive");
            }
        }
        labels = list.nodes;
        volumes = list.weights;
    }

    const std::size_t n = volumes.size();
    std::vector<double> density(n);
    if (const auto* table = std::get_if<TableDensity>(&datum.density)) {
        if (table->values.size() != n) {
            throw InvalidDatumError("density table must hold one value per node");
        }
        density = table->values;
    } else if (const auto* g = std::get_if<GaussianDensity>(&datum.density)) {
        if (g->center.size() != d || !(g->sigma > 0.0)) {
            throw InvalidDatumError("gaussian density needs a length-d center and positive sigma");
        }
        for (std::size_t i = 0; i < n; ++i) {
            double r2 = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double dx = labels[i * d + k] - g->center[k];
                r2 += dx * dx;
            }
            density[i] = std::exp(-r2 / (2.0 * g->sigma * g->sigma));
        }
    } else {
        std::fill(density.begin(), density.end(), 1.0);
    }

    auto nodes = std::make_shared<NodeSet>();
    nodes->dim = d;
    double total_mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(density[i] >= 0.0) || !std::isfinite(density[i])) {
            throw InvalidDatumError("density must be finite and nonnegative");
        }
        if (density[i] == 0.0) {
            continue;
        }
        nodes->labels.insert(nodes->labels.end(), labels.begin() + static_cast<std::ptrdiff_t>(i * d),
                             labels.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
        nodes->masses.push_back(density[i] * volumes[i]);
        nodes->cell_volumes.push_back(volumes[i]);
        total_mass += density[i] * volumes[i];
    }
    if (!(total_mass > 0.0)) {
        throw InvalidDatumError("initial density has zero total mass");
    }
    for (auto& m : nodes->masses) {
        m /= total_mass;
    }
    return nodes;
}

struct Characteristic {
    std::vector<double> eta; // d
    std::vector<double> jac; // d x d
};

// dy/ds for the characteristic and its tangent: (u_s(eta), grad u_s(eta) J).
Characteristic characteristic_rhs(const VelocityField& u, double s, const Characteristic& y) {
    const std::size_t d = u.dim();
    Characteristic out{std::vector<double>(d), std::vector<double>(d * d)};
    std::vector<double> grad(d * d);
    u.value(s, y.eta, out.eta);
    u.gradient(s, y.eta, grad);
    linalg::matmul(grad, y.jac, out.jac, d);
    return out;
}

Characteristic rk4_characteristic(const VelocityField& u, double s, double ds, const Characteristic& y) {
    auto axpy = [](const Characteristic& base, const Characteristic& k, double c) {
        Characteristic r = base;
        for (std::size_t j = 0; j < r.eta.size(); ++j) {
            r.eta[j] += c * k.eta[j];
        }
        for (std::size_t j = 0; j < r.jac.size(); ++j) {
            r.jac[j] += c * k.jac[j];
        }
        return r;
    };
    const Characteristic k1 = characteristic_rhs(u, s, y);
    const Characteristic k2 = characteristic_rhs(u, s + 0.5 * ds, axpy(y, k1, 0.5 * ds));
    const Characteristic k3 = characteristic_rhs(u, s + 0.5 * ds, axpy(y, k2, 0.5 * ds));
    const Characteristic k4 = characteristic_rhs(u, s + ds, axpy(y, k3, ds));
    Characteristic out = y;
    for (std::size_t j = 0; j < out.eta.size(); ++j) {
        out.eta[j] += ds / 6.0 * (k1.eta[j] + 2.0 * k2.eta[j] + 2.0 * k3.eta[j] + k4.eta[j]);
    }
    for (std::size_t j = 0; j < out.jac.size(); ++j) {
        out.jac[j] += ds / 6.0 * (k1.jac[j] + 2.0 * k2.jac[j] + 2.0 * k3.jac[j] + k4.jac[j]);
    }
    return out;
}

// Fills velocities, velocity gradients (and 1D slopes) of a slice whose
// positions and Jacobians are set; returns d/ds of the velocities.
std::vector<double> sample_field(const VelocityField& u, LagrangianEnsemble& e) {
    const std::size_t n = e.size();
    const std::size_t d = e.dim();
    e.velocities.assign(n * d, 0.0);
    e.vel_gradients.assign(n * d * d, 0.0);
    std::vector<double> accel(n * d);
    std::vector<double> grad(d * d);
    std::vector<double> dt(d);
    for (std::size_t i = 0; i < n; ++i) {
        std::span<const double> x(e.positions.data() + i * d, d);
        std::span<double> v(e.velocities.data() + i * d, d);
        u.value(e.time, x, v);
        u.gradient(e.time, x, grad);
        u.time_derivative(e.time, x, dt);
        linalg::matmul(grad, e.jacobian(i), std::span<double>(e.vel_gradients.data() + i * d * d, d * d), d);
        for (std::size_t r = 0; r < d; ++r) {
            double s = dt[r];
            for (std::size_t c = 0; c < d; ++c) {
                s += grad[r * d + c] * v[c];
            }
            accel[i * d + r] = s;
        }
    }
    if (d == 1) {
        e.slopes.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            e.slopes[i] = e.vel_gradients[i] / e.jacobians[i];
        }
    }
    return accel;
}

} // namespace

HistoryBuffer discretize(const InitialDatum& datum, double tau, std::size_t n_history_slices,
                         Interpolation interpolation) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) {
        throw DomainError("delay tau must be finite and nonnegative");
    }
    if (tau > 0.0 && n_history_slices < 2) {
        throw DomainError("a positive delay needs at least two prehistory slices");
    }
    if (datum.velocity.dim() != datum.dim) {
        throw InvalidDatumError("velocity field dimension does not match the datum");
    }
    const std::size_t d = datum.dim;
    auto nodes = build_nodes(datum);
    const std::size_t n = nodes->size();

    const std::size_t n_slices = tau > 0.0 ? n_history_slices : 1;
    const double ds = tau > 0.0 ? tau / static_cast<double>(n_slices - 1) : 0.0;

    std::vector<Characteristic> chars(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto lbl = nodes->label(i);
        chars[i].eta.assign(lbl.begin(), lbl.end());
        chars[i].jac.assign(d * d, 0.0);
        linalg::set_identity(chars[i].jac, d);
    }

    std::vector<LagrangianEnsemble> slices;
    std::vector<std::vector<double>> accels;
    slices.reserve(n_slices);
    auto slice_time = [&](std::size_t k) {
        if (k == 0) {
            return 0.0;
        }
        return k + 1 == n_slices ? -tau : -static_cast<double>(k) * ds;
    };
    for (std::size_t k = 0; k < n_slices; ++k) {
        const double s = slice_time(k);
        if (k > 0) {
            const double s_prev = slice_time(k - 1);
            for (auto& c : chars) {
                c = rk4_characteristic(datum.velocity, s_prev, s - s_prev, c);
            }
        }
        LagrangianEnsemble e;
        e.time = s;
        e.nodes = nodes;
        e.positions.resize(n * d);
        e.jacobians.resize(n * d * d);
        for (std::size_t i = 0; i < n; ++i) {
            std::copy(chars[i].eta.begin(), chars[i].eta.end(), e.positions.begin() + static_cast<std::ptrdiff_t>(i * d));
            std::copy(chars[i].jac.begin(), chars[i].jac.end(),
                      e.jacobians.begin() + static_cast<std::ptrdiff_t>(i * d * d));
        }
        accels.push_back(sample_field(datum.velocity, e));
        slices.push_back(std::move(e));
    }

    HistoryBuffer buffer(tau, interpolation);
    for (std::size_t k = n_slices; k-- > 0;) {
        // The right derivative at t = 0 belongs to the dynamics, not the datum.
        std::vector<double> right = k == 0 ? std::vector<double>{} : accels[k];
        buffer.append(std::move(slices[k]), std::move(accels[k]), std::move(right));
    }
    return buffer;
}

} // namespace flockdde
