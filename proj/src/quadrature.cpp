#include "flockdde/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <vector>

namespace flockdde {
namespace {

// 15-point Kronrod abscissae (positive half, descending) and weights; the
// even-indexed abscissae are the embedded 7-point Gauss nodes.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.58608723546769113029414483825873,  0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr std::array<double, 8> kWgk = {
    0.02293532201052922496373200805897,  0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.16900472663926790282658342659855,  0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.27970539148927666790146777142378,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a;
    double b;
    double value;
    double error;
    bool operator<(const Segment& other) const { return error < other.error; }
};

Segment gauss_kronrod_15(const std::function<double(double)>& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        const double pair = f(center - dx) + f(center + dx);
        kronrod += kWgk[j] * pair;
        if (j % 2 == 1) {
            gauss += kWg[j / 2] * pair;
        }
    }
    kronrod *= half;
    gauss *= half;
    return {a, b, kronrod, std::abs(kronrod - gauss)};
}

} // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double abs_tol, double rel_tol, int max_intervals) {
    if (a == b) {
        return {0.0, 0.0, 0, true};
    }
    if (b < a) {
        auto r = integrate_adaptive(f, b, a, abs_tol, rel_tol, max_intervals);
        r.value = -r.value;
        return r;
    }

    std::priority_queue<Segment> heap;
    Segment first = gauss_kronrod_15(f, a, b);
    double total = first.value;
    double total_error = first.error;
    heap.push(first);
    int intervals = 1;

    while (total_error > std::max(abs_tol, rel_tol * std::abs(total)) && intervals < max_intervals) {
        Segment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            heap.push(worst);
            break; // interval at floating-point resolution
        }
        Segment left = gauss_kronrod_15(f, worst.a, mid);
        Segment right = gauss_kronrod_15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++intervals;
    }

    // Re-sum from the leaves to drop the drift of the running updates.
    double value = 0.0;
    double error = 0.0;
    std::vector<Segment> leaves;
    leaves.reserve(heap.size());
    while (!heap.empty()) {
        leaves.push_back(heap.top());
        heap.pop();
    }
    std::sort(leaves.begin(), leaves.end(), [](const Segment& x, const Segment& y) { return x.a < y.a; });
    for (const auto& s : leaves) {
        value += s.value;
        error += s.error;
    }
    return {value, error, intervals, error <= std::max(abs_tol, rel_tol * std::abs(value))};
}

} // namespace flockdde
