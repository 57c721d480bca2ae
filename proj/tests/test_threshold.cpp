#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "flockdde/datum.hpp"
#include "flockdde/errors.hpp"
#include "flockdde/simulation.hpp"
#include "flockdde/threshold.hpp"
#include "support.hpp"

using namespace flockdde;

namespace {

DiagnosticsFrame det_frame(double t, double det, std::size_t node = 0) {
    DiagnosticsFrame f;
    f.t = t;
    f.min_detJ = det;
    f.min_detJ_node = node;
    return f;
}

HistoryBuffer linear_buffer(double slope, double beta_tau, std::size_t n, double h) {
    auto datum = scenario::box1d(-1.0, 1.0, n, VelocityField::affine({slope}, {0.0}));
    const std::size_t slices = beta_tau > 0.0 ? static_cast<std::size_t>(std::lround(beta_tau / h)) + 1 : 1;
    return discretize(datum, beta_tau, slices);
}

} // namespace

TEST_CASE("classify: worked examples") {
    auto flat = InfluenceKernel::cucker_smale(0.0);

    auto a = classify(-0.5, flat, 3.0);
    CHECK(a.c_bar == 0.0);
    CHECK(a.w1_minus.value() == -1.0);
    CHECK(a.w2_minus == -1.0);
    CHECK(a.verdict == VerdictKind::GlobalExistence);
    CHECK(!a.blowup_bound);

    auto b = classify(-2.0, flat, 3.0);
    CHECK(b.verdict == VerdictKind::FiniteTimeBlowup);
    CHECK(b.blowup_bound.value() == doctest::Approx(1.0).epsilon(1e-15));

    // c_bar = 2 * 0.125 * 0.5 = 0.125
    auto c = classify_with_bound(-0.2, 0.125, 0.5);
    CHECK(c.c_bar == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(c.w1_minus.value() == doctest::Approx((-1.0 - std::sqrt(0.5)) / 2.0).epsilon(1e-14));
    CHECK(c.w1_minus.value() == doctest::Approx(-0.8536).epsilon(1e-4));
    CHECK(c.w2_minus == doctest::Approx((-1.0 - std::sqrt(1.5)) / 2.0).epsilon(1e-14));
    CHECK(c.verdict == VerdictKind::GlobalExistence);

    // between the two thresholds nothing is claimed
    auto d = classify_with_bound(-1.05, 0.125, 0.5);
    CHECK(d.verdict == VerdictKind::Indeterminate);

    // beyond 4 c_bar = 1 only the blow-up side survives
    auto e = classify_with_bound(-0.1, 1.0, 1.0);
    CHECK(!e.w1_minus);
    CHECK(e.verdict == VerdictKind::Indeterminate);

    CHECK(std::string(to_string(VerdictKind::FiniteTimeBlowup)) == "FiniteTimeBlowup");
    CHECK(classify(-0.5, InfluenceKernel::cucker_smale(1.0), 0.1).note.find("beta") != std::string::npos);
}

TEST_CASE("classify: invariants") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::uniform_real_distribution<double> w(-5.0, 1.0);
    for (int s = 0; s < 5000; ++s) {
        const double w0 = w(rng);
        auto v = classify_with_bound(w0, u(rng), u(rng));
        CHECK(v.w2_minus <= -1.0);
        if (v.w1_minus) {
            CHECK(*v.w1_minus >= -1.0);
            CHECK(*v.w1_minus <= -0.5);
            CHECK(v.w2_minus <= *v.w1_minus);
        }
        if (v.verdict == VerdictKind::FiniteTimeBlowup) {
            CHECK(w0 < v.w2_minus);
            CHECK(*v.blowup_bound > 0.0);
        }
        if (v.verdict == VerdictKind::GlobalExistence) {
            CHECK(w0 >= *v.w1_minus);
        }
    }
    CHECK_THROWS_AS(classify(-0.5, InfluenceKernel::tabulated({0.0, 1.0}, {1.0, 0.5}), 1.0), UnsupportedError);
    CHECK_THROWS_AS(classify_with_bound(-0.5, -1.0, 1.0), DomainError);
    CHECK_THROWS_AS(classify_with_bound(std::nan(""), 1.0, 1.0), DomainError);
}

TEST_CASE("evolve_w follows the Riccati solution for a flat kernel") {
    auto flat = InfluenceKernel::cucker_smale(0.0);
    for (double tau : {0.0, 0.1}) {
        const double h = 1e-3;
        auto buffer = linear_buffer(-0.5, tau, 16, h);
        auto traj = evolve_w(buffer, flat, h, 2000);
        REQUIRE(!traj.blowup);
        REQUIRE(traj.times.size() == 2001);
        double worst = 0.0;
        double gap = 0.0;
        for (std::size_t k = 0; k < traj.times.size(); ++k) {
            const double exact = oracle::riccati_w(-0.5, traj.times[k]);
            for (std::size_t i = 0; i < traj.quotient[k].size(); ++i) {
                worst = std::max(worst, std::abs(traj.quotient[k][i] - exact));
                gap = std::max(gap, std::abs(traj.quotient[k][i] - traj.direct[k][i]));
            }
        }
        CHECK(traj.times.back() == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(worst < 1e-8);
        CHECK(gap < 1e-8);
    }
}

TEST_CASE("evolve_w: quotient and direct agree with a non-flat kernel") {
    auto k = InfluenceKernel::cucker_smale(1.0);
    auto datum = scenario::box1d(-1.0, 1.0, 24, VelocityField::sine({0.0}, {0.3}, {2.0}));
    auto buffer = discretize(datum, 0.1, 101);
    auto traj = evolve_w(buffer, k, 1e-3, 1000);
    REQUIRE(!traj.blowup);
    double gap = 0.0;
    for (std::size_t s = 0; s < traj.times.size(); ++s) {
        for (std::size_t i = 0; i < traj.direct[s].size(); ++i) {
            gap = std::max(gap, std::abs(traj.quotient[s][i] - traj.direct[s][i]));
        }
    }
    CHECK(gap < 1e-8);
}

TEST_CASE("evolve_w: zero slope stays zero") {
    auto datum = scenario::box1d(-1.0, 1.0, 8, VelocityField::constant({0.4}));
    auto buffer = discretize(datum, 0.0, 1);
    auto traj = evolve_w(buffer, InfluenceKernel::cucker_smale(1.0), 1e-2, 100);
    // both forms pick up only the rounding of F/G's gradient
    for (std::size_t s = 0; s < traj.times.size(); ++s) {
        for (std::size_t i = 0; i < traj.direct[s].size(); ++i) {
            CHECK(std::abs(traj.direct[s][i]) < 1e-14);
            CHECK(std::abs(traj.quotient[s][i]) < 1e-14);
        }
    }
}

TEST_CASE("evolve_w: reports the Jacobian collapse") {
    auto buffer = linear_buffer(-2.0, 0.0, 8, 1e-2);
    auto traj = evolve_w(buffer, InfluenceKernel::cucker_smale(0.0), 1e-2, 200);
    REQUIRE(traj.blowup);
    CHECK(traj.blowup->time > 0.6);
    CHECK(traj.blowup->time < 0.75);

    auto two_d = discretize(scenario::box2d(2, 2, VelocityField::constant({0.0, 0.0})), 0.0, 1);
    CHECK_THROWS_AS(evolve_w(two_d, InfluenceKernel::cucker_smale(0.0), 1e-2, 1), DomainError);
}

TEST_CASE("slopes from the tangent flow") {
    auto buffer = linear_buffer(0.7, 0.0, 5, 1e-2);
    auto s = slopes_from_tangent(buffer.current());
    REQUIRE(!s.blowup);
    for (double v : s.values) {
        CHECK(v == doctest::Approx(0.7).epsilon(1e-15));
    }
    auto e = buffer.current();
    e.jacobians[3] = 0.0;
    auto bad = slopes_from_tangent(e);
    REQUIRE(bad.blowup);
    CHECK(bad.blowup->node.value() == 3);
}

TEST_CASE("detect_blowup on synthetic frames") {
    std::vector<DiagnosticsFrame> fine{det_frame(0.0, 1.0), det_frame(1.0, 0.5), det_frame(2.0, 0.2)};
    CHECK(!detect_blowup(fine));

    // linear crossing: 1 - t reaches 1e-6 at t = 1 - 1e-6
    std::vector<DiagnosticsFrame> cross{det_frame(0.0, 1.0), det_frame(0.5, 0.5), det_frame(1.5, -0.5, 7)};
    auto b = detect_blowup(cross);
    REQUIRE(b);
    CHECK(b->time == doctest::Approx(1.0 - 1e-6).epsilon(1e-11));
    CHECK(b->time >= 1.0 - 1e-6);
    CHECK(b->node.value() == 7);

    std::vector<DiagnosticsFrame> initial{det_frame(0.0, 1e-7, 2), det_frame(1.0, 1.0)};
    auto i = detect_blowup(initial);
    REQUIRE(i);
    CHECK(i->time == 0.0);
    CHECK(i->node.value() == 2);

    CHECK(detect_blowup(cross, 0.75)->time == doctest::Approx(0.25).epsilon(1e-11));
    CHECK(!detect_blowup({}));
}

TEST_CASE("Riccati blow-up at ln 2") {
    auto cfg = scenario::config(0.0, scenario::box1d(-1.0, 1.0, 16, VelocityField::affine({-2.0}, {0.0})), 0.1, 1e-3,
                                1.5, 1e-2);
    auto r = simulate(cfg);
    REQUIRE(r.blowup);
    CHECK(std::abs(r.blowup->time - std::numbers::ln2) < 1e-2);
    CHECK(r.blowup->time <= 1.0);
    CHECK(r.frames.back().min_detJ <= 1e-6);

    // the frame stream agrees with the in-run refinement
    auto from_frames = detect_blowup(r.frames);
    REQUIRE(from_frames);
    CHECK(std::abs(from_frames->time - r.blowup->time) < 1e-2);

    auto v = classify(-2.0, cfg.kernel, r.R_V);
    CHECK(v.verdict == VerdictKind::FiniteTimeBlowup);
    CHECK(r.blowup->time <= *v.blowup_bound);
}

TEST_CASE("density reconstruction") {
    const double w0 = -0.5;
    auto datum = scenario::box1d(-1.0, 1.0, 20, VelocityField::affine({w0}, {0.0}));
    auto cfg = scenario::config(0.0, datum, 0.0, 1e-3, 2.0, 0.5);
    std::vector<LagrangianEnsemble> states;
    auto buffer = discretize(datum, 0.0, 1);
    states.push_back(buffer.current());
    for (int n = 0; n < 2000; ++n) {
        REQUIRE(!step(buffer, cfg.kernel, 1e-3));
        if ((n + 1) % 500 == 0) {
            states.push_back(buffer.current());
        }
    }
    for (const auto& e : states) {
        auto rho = reconstruct_density(e);
        REQUIRE(!rho.blowup);
        double mass = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i) {
            CHECK(rho.values[i] == doctest::Approx(0.5 / oracle::riccati_J(w0, e.time)).epsilon(1e-9));
            mass += rho.values[i] * e.jacobians[i] * e.nodes->cell_volumes[i];
        }
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(rho.positions == e.positions);
    }
    // the initial slice reproduces the prescribed density profile
    auto g = scenario::box2d(5, 4, VelocityField::constant({0.3, -0.1}));
    auto initial = discretize(g, 0.0, 1).current();
    auto rho0 = reconstruct_density(initial);
    std::vector<double> ratio;
    for (std::size_t i = 0; i < initial.size(); ++i) {
        const double x = initial.positions[2 * i];
        const double y = initial.positions[2 * i + 1];
        ratio.push_back(rho0.values[i] / std::exp(-(x * x + y * y) / 2.0));
    }
    for (double q : ratio) {
        CHECK(q == doctest::Approx(ratio.front()).epsilon(1e-12));
    }

    // rigid translation leaves the density unchanged
    auto moving = discretize(g, 0.0, 1);
    for (int n = 0; n < 50; ++n) {
        REQUIRE(!step(moving, InfluenceKernel::cucker_smale(1.0), 1e-2));
    }
    auto later = reconstruct_density(moving.current());
    for (std::size_t i = 0; i < initial.size(); ++i) {
        CHECK(later.values[i] == doctest::Approx(rho0.values[i]).epsilon(1e-12));
    }

    auto broken = initial;
    broken.jacobians[4 * 3] = 0.0;
    broken.jacobians[4 * 3 + 3] = 0.0;
    auto b = reconstruct_density(broken);
    REQUIRE(b.blowup);
    CHECK(b.blowup->node.value() == 3);
    CHECK(b.values.empty());
}
