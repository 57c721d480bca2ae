#include "flockdde/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "flockdde/errors.hpp"
#include "flockdde/quadrature.hpp"

namespace flockdde {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_nonnegative(double r, const char* what) {
    if (!(r >= 0.0)) {
        throw DomainError(std::string(what) + " must be nonnegative");
    }
}

double cs_eval(double beta, double r2) {
    if (beta == 0.0) {
        return 1.0;
    }
    if (beta == 1.0) {
        return 1.0 / (1.0 + r2);
    }
    return std::pow(1.0 + r2, -beta);
}

// Fritsch-Butland slopes; the last node gets slope 0 so the profile joins its
// constant extension with a continuous derivative.
std::vector<double> monotone_slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> d(n, 0.0);
    if (n < 2) {
        return d;
    }
    std::vector<double> secant(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        secant[k] = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
    }
    d[0] = secant[0];
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const double s0 = secant[k - 1];
        const double s1 = secant[k];
        if (s0 * s1 <= 0.0) {
            d[k] = 0.0;
            continue;
        }
        const double h0 = x[k] - x[k - 1];
        const double h1 = x[k + 1] - x[k];
        const double w1 = 2.0 * h1 + h0;
        const double w2 = h1 + 2.0 * h0;
        d[k] = (w1 + w2) / (w1 / s0 + w2 / s1);
    }
    d[n - 1] = 0.0;
    return d;
}

std::size_t segment_index(const Tabulated& t, double r) {
    auto it = std::upper_bound(t.radii.begin(), t.radii.end(), r);
    return static_cast<std::size_t>(std::distance(t.radii.begin(), it)) - 1;
}

double tab_eval(const Tabulated& t, double r) {
    if (r >= t.radii.back()) {
        return t.values.back();
    }
    const std::size_t k = segment_index(t, r);
    const double h = t.radii[k + 1] - t.radii[k];
    const double s = (r - t.radii[k]) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * t.values[k] + (s3 - 2 * s2 + s) * h * t.slopes[k] +
           (-2 * s3 + 3 * s2) * t.values[k + 1] + (s3 - s2) * h * t.slopes[k + 1];
}

double tab_deriv(const Tabulated& t, double r) {
    if (r >= t.radii.back()) {
        return 0.0;
    }
    const std::size_t k = segment_index(t, r);
    const double h = t.radii[k + 1] - t.radii[k];
    const double s = (r - t.radii[k]) / h;
    const double s2 = s * s;
    const double d = ((6 * s2 - 6 * s) * t.values[k] + (6 * s - 6 * s2) * t.values[k + 1]) / h +
                     (3 * s2 - 4 * s + 1) * t.slopes[k] + (3 * s2 - 2 * s) * t.slopes[k + 1];
    return std::min(d, 0.0);
}

// Integral of (1+s^2)^(-beta) over [r, inf) for r > 1, beta > 1/2, from the
// binomial expansion (1+s^2)^(-beta) = sum_k binom(-beta,k) s^(-2beta-2k).
double cs_asymptotic_tail(double beta, double r) {
    double coeff = 1.0;
    double power = std::pow(r, 1.0 - 2.0 * beta);
    const double inv_r2 = 1.0 / (r * r);
    double sum = 0.0;
    for (int k = 0; k < 2000; ++k) {
        const double term = coeff * power / (2.0 * beta + 2.0 * k - 1.0);
        sum += term;
        if (k > 0 && std::abs(term) <= 1e-18 * std::abs(sum)) {
            break;
        }
        coeff *= -(beta + k) / (k + 1.0);
        power *= inv_r2;
    }
    return sum;
}

} // namespace

InfluenceKernel InfluenceKernel::cucker_smale(double beta) {
    if (!(beta >= 0.0) || !std::isfinite(beta)) {
        throw DomainError("Cucker-Smale exponent beta must be a finite nonnegative number");
    }
    return InfluenceKernel(CuckerSmale{beta});
}

InfluenceKernel InfluenceKernel::tabulated(std::vector<double> radii, std::vector<double> values) {
    if (radii.empty() || radii.size() != values.size()) {
        throw DomainError("tabulated kernel needs matching, non-empty radii and values");
    }
    if (radii.front() != 0.0 || values.front() != 1.0) {
        throw DomainError("tabulated kernel must start at radius 0 with value 1");
    }
    for (std::size_t k = 0; k < radii.size(); ++k) {
        if (!std::isfinite(radii[k]) || !(values[k] > 0.0)) {
            throw DomainError("tabulated kernel values must be positive and radii finite");
        }
        if (k > 0 && !(radii[k] > radii[k - 1])) {
            throw DomainError("tabulated kernel radii must be strictly increasing");
        }
        if (k > 0 && values[k] > values[k - 1]) {
            throw DomainError("tabulated kernel values must be nonincreasing");
        }
    }
    Tabulated t{std::move(radii), std::move(values), {}};
    t.slopes = monotone_slopes(t.radii, t.values);
    return InfluenceKernel(std::move(t));
}

double InfluenceKernel::eval(double r) const {
    require_nonnegative(r, "radius");
    if (const auto* cs = std::get_if<CuckerSmale>(&family_)) {
        return cs_eval(cs->beta, r * r);
    }
    return tab_eval(std::get<Tabulated>(family_), r);
}

double InfluenceKernel::eval_deriv(double r) const {
    require_nonnegative(r, "radius");
    if (const auto* cs = std::get_if<CuckerSmale>(&family_)) {
        if (cs->beta == 0.0) {
            return 0.0;
        }
        const double r2 = r * r;
        return -2.0 * cs->beta * r * cs_eval(cs->beta, r2) / (1.0 + r2);
    }
    return tab_deriv(std::get<Tabulated>(family_), r);
}

RadialTerms InfluenceKernel::radial_terms(double r2) const {
    if (const auto* cs = std::get_if<CuckerSmale>(&family_)) {
        if (cs->beta == 0.0) {
            return {1.0, 0.0};
        }
        const double psi = cs_eval(cs->beta, r2);
        return {psi, -2.0 * cs->beta * psi / (1.0 + r2)};
    }
    const auto& t = std::get<Tabulated>(family_);
    const double r = std::sqrt(r2);
    if (r == 0.0) {
        return {1.0, 0.0};
    }
    return {tab_eval(t, r), tab_deriv(t, r) / r};
}

double InfluenceKernel::integral(double a, double b) const {
    require_nonnegative(a, "integration bound");
    require_nonnegative(b, "integration bound");
    if (a == b) {
        return 0.0;
    }
    if (b < a) {
        return -integral(b, a);
    }
    if (const auto* cs = std::get_if<CuckerSmale>(&family_)) {
        if (cs->beta == 0.0) {
            return b - a;
        }
        const double beta = cs->beta;
        auto f = [beta](double s) { return cs_eval(beta, s * s); };
        return integrate_adaptive(f, a, b, 1e-15, 1e-14, 20000).value;
    }
    const auto& t = std::get<Tabulated>(family_);
    auto f = [&t](double s) { return tab_eval(t, s); };
    // Split at the table nodes so each piece is a single cubic.
    double total = 0.0;
    double lo = a;
    for (double node : t.radii) {
        if (node > lo && node < b) {
            total += integrate_adaptive(f, lo, node).value;
            lo = node;
        }
    }
    if (b > t.radii.back() && lo < t.radii.back()) {
        total += integrate_adaptive(f, lo, t.radii.back()).value;
        lo = t.radii.back();
    }
    if (lo >= t.radii.back()) {
        return total + (b - lo) * t.values.back();
    }
    return total + integrate_adaptive(f, lo, b).value;
}

double InfluenceKernel::tail_integral(double R) const {
    require_nonnegative(R, "tail start");
    const auto* cs = std::get_if<CuckerSmale>(&family_);
    if (cs == nullptr) {
        throw UnsupportedError("tail integral requires a kernel family with a tail model");
    }
    if (cs->beta <= 0.5) {
        return kInf;
    }
    const double cut = std::max(R, 2.0);
    const double partial = cut > R ? integral(R, cut) : 0.0;
    return partial + cs_asymptotic_tail(cs->beta, cut);
}

std::optional<double> InfluenceKernel::log_derivative_bound() const {
    if (const auto* cs = std::get_if<CuckerSmale>(&family_)) {
        return 2.0 * cs->beta;
    }
    return std::nullopt;
}

bool InfluenceKernel::is_flat() const {
    if (const auto* cs = std::get_if<CuckerSmale>(&family_)) {
        return cs->beta == 0.0;
    }
    const auto& t = std::get<Tabulated>(family_);
    return t.values.back() == 1.0;
}

std::string InfluenceKernel::describe() const {
    std::ostringstream os;
    if (const auto* cs = std::get_if<CuckerSmale>(&family_)) {
        os << "cucker-smale(beta=" << cs->beta << ")";
    } else {
        os << "tabulated(" << std::get<Tabulated>(family_).radii.size() << " nodes)";
    }
    return os.str();
}

} // namespace flockdde
