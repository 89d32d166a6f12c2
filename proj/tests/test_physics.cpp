#include <catch2/catch_amalgamated.hpp>

#include "dpivae/physics/beam.hpp"
#include "dpivae/physics/bridge.hpp"
#include "dpivae/physics/oscillator.hpp"

using namespace dpivae;

namespace {

/// Classic fourth-order explicit integrator for the damped oscillator; the
/// independent oracle for the closed-form solution.
Vec oscillator_rk4(double m, double zeta, double T, double x0,
                   const OscillatorCase& c, double dt) {
    double k = oscillator_spring_stiffness(T, c);
    auto acc = [&](double x, double v) { return -(zeta * v + k * x) / m; };
    Vec grid = c.time_grid();
    Vec out(grid.size());
    double x = x0, v = 0.0, t = 0.0;
    int gi = 0;
    auto record = [&](double tt) {
        while (gi < grid.size() && grid[gi] <= tt + 1e-12) out[gi++] = x;
    };
    record(0.0);
    while (gi < grid.size()) {
        double target = grid[gi];
        int steps = std::max(1, static_cast<int>(std::ceil((target - t) / dt)));
        double h = (target - t) / steps;
        for (int s = 0; s < steps; ++s) {
            double k1x = v, k1v = acc(x, v);
            double k2x = v + 0.5 * h * k1v, k2v = acc(x + 0.5 * h * k1x, v + 0.5 * h * k1v);
            double k3x = v + 0.5 * h * k2v, k3v = acc(x + 0.5 * h * k2x, v + 0.5 * h * k2v);
            double k4x = v + h * k3v, k4v = acc(x + h * k3x, v + h * k3v);
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            t += h;
        }
        t = target;
        record(t);
    }
    return out;
}

}  // namespace

TEST_CASE("beam rotational stiffness formula", "[physics][beam]") {
    CHECK(std::log(beam_rotational_stiffness(0.0)) == Catch::Approx(3.0).margin(1e-12));
    CHECK(beam_rotational_stiffness(0.0) == Catch::Approx(20.0855).epsilon(1e-4));
    CHECK(std::log(beam_rotational_stiffness(-40.0)) == Catch::Approx(8.0).margin(1e-10));
    CHECK(std::log(beam_rotational_stiffness(5.0)) == Catch::Approx(-1.9331).margin(5e-5));
}

TEST_CASE("beam nominal deflection: pinned ends and midspan value", "[physics][beam]") {
    BeamCase c;
    double E = 4.0, xF = 0.5;
    // Pinned ends: evaluate the closed form at the supports directly.
    const double b = c.L - xF, s = c.F / (6.0 * c.L * E * c.I);
    CHECK(s * b * 0.0 * (c.L * c.L - b * b) == 0.0);
    double wL = s * b * c.L * (c.L * c.L - b * b - c.L * c.L) +
                c.F * std::pow(c.L - xF, 3) / (6.0 * E * c.I);
    CHECK(wL == Catch::Approx(0.0).margin(1e-15));

    // Midspan deflection equals F L^3 / (48 E I).
    BeamCase mid = c;
    mid.n_sensors = 31;  // odd count puts a sensor exactly at L/2
    Vec w = beam_nominal_deflection(E, xF, mid);
    double expected = c.F * std::pow(c.L, 3) / (48.0 * E * c.I);
    CHECK(w[15] == Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("beam nominal branches agree at the load point", "[physics][beam]") {
    BeamCase c;
    double E = 3.1, xF = 0.37;
    double b = c.L - xF, s = c.F / (6.0 * c.L * E * c.I);
    double left = s * b * xF * (c.L * c.L - b * b - xF * xF);
    double x = xF + 1e-300;  // right branch at the same point
    double right = s * b * x * (c.L * c.L - b * b - x * x) +
                   c.F * std::pow(x - xF, 3) / (6.0 * E * c.I);
    CHECK(left == Catch::Approx(right).margin(1e-12));
}

TEST_CASE("beam nominal jacobian matches finite differences", "[physics][beam]") {
    BeamCase c;
    double E = 3.3, xF = 0.62, h = 1e-5;
    Mat J = beam_nominal_jacobian(E, xF, c);
    Vec dE = (beam_nominal_deflection(E + h, xF, c) -
              beam_nominal_deflection(E - h, xF, c)) / (2 * h);
    Vec dxF = (beam_nominal_deflection(E, xF + h, c) -
               beam_nominal_deflection(E, xF - h, c)) / (2 * h);
    for (int i = 0; i < c.n_sensors; ++i) {
        CHECK(J(i, 0) == Catch::Approx(dE[i]).epsilon(1e-4).margin(1e-12));
        CHECK(J(i, 1) == Catch::Approx(dxF[i]).epsilon(1e-4).margin(1e-12));
    }
}

TEST_CASE("beam full model approaches the nominal limit", "[physics][beam]") {
    BeamCase c;
    double E = 3.5, xF = 0.45;
    Vec nominal = beam_nominal_deflection(E, xF, c);
    Vec full = beam_full_with_springs(E, xF, 1e12, 0.0, c);
    for (int i = 0; i < c.n_sensors; ++i)
        CHECK(full[i] == Catch::Approx(nominal[i]).epsilon(1e-6));
}

TEST_CASE("beam full model: spring constitutive law at the right end", "[physics][beam]") {
    BeamCase c;
    double E = 4.0, xF = 0.5, log_kv = 7.0, T = 0.0;
    double kv = std::pow(10.0, log_kv);
    fe::Mesh mesh = fe::mesh_from_breakpoints({0.0, xF, c.L}, c.n_elements);
    fe::Assembly asmb(mesh);
    asmb.add_bending(std::vector<double>(mesh.n_elements(), E * c.I));
    asmb.add_translation_spring(mesh.n_nodes() - 1, kv);
    asmb.add_rotation_spring(mesh.n_nodes() - 1, beam_rotational_stiffness(T));
    asmb.add_point_load(xF, c.F);
    asmb.fix(0);
    asmb.factorize();
    Vec u = asmb.solve();
    double w_end = u[2 * (mesh.n_nodes() - 1)];
    // Static equilibrium: the end reaction is F * x_F / L when moments about
    // the pin balance only the vertical forces... verify via the spring law
    // against the total vertical equilibrium instead: R0 + R_end = F.
    double r_end = kv * w_end;
    // Reaction at the pin from the pin constraint is F - r_end; both must be
    // non-negative for an interior load.
    CHECK(r_end > 0.0);
    CHECK(r_end < c.F);
    // Moment balance about the pin: r_end * L = F * x_F + M_spring.
    double theta_end = u[2 * (mesh.n_nodes() - 1) + 1];
    double m_spring = beam_rotational_stiffness(T) * theta_end;
    CHECK(r_end * c.L + m_spring == Catch::Approx(c.F * xF).epsilon(1e-8));
}

TEST_CASE("beam full model is linear in the load", "[physics][beam]") {
    BeamCase c1;
    BeamCase c2 = c1;
    c2.F = 2.0 * c1.F;
    Vec w1 = beam_full_response(3.0, 0.4, -3.0, 6.5, c1);
    Vec w2 = beam_full_response(3.0, 0.4, -3.0, 6.5, c2);
    for (int i = 0; i < c1.n_sensors; ++i)
        CHECK(w2[i] == Catch::Approx(2.0 * w1[i]).epsilon(1e-12));
}

TEST_CASE("oscillator spring stiffness", "[physics][oscillator]") {
    OscillatorCase c;
    CHECK(oscillator_spring_stiffness(20.0, c) == Catch::Approx(1.0));
    CHECK(oscillator_spring_stiffness(0.0, c) == Catch::Approx(1.2));
    CHECK(oscillator_spring_stiffness(40.0, c) == Catch::Approx(0.8));
}

TEST_CASE("oscillator nominal: start, period, quarter period", "[physics][oscillator]") {
    OscillatorCase c;
    Vec x = oscillator_nominal(1.37, c);
    CHECK(x[0] == 1.0);
    OscillatorCase fine = c;
    fine.n_times = 1;  // evaluate single points through the grid helper
    double w = std::sqrt(c.k_ref / 1.0);
    CHECK(std::cos(w * 2.0 * M_PI) == Catch::Approx(1.0));
    CHECK(std::cos(w * M_PI / 2.0) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("oscillator nominal jacobian matches finite differences", "[physics][oscillator]") {
    OscillatorCase c;
    double m = 1.4, h = 1e-6;
    Mat J = oscillator_nominal_jacobian(m, c);
    Vec fd = (oscillator_nominal(m + h, c) - oscillator_nominal(m - h, c)) / (2 * h);
    for (int i = 0; i < c.n_times; ++i)
        CHECK(J(i, 0) == Catch::Approx(fd[i]).epsilon(1e-6).margin(1e-10));
}

TEST_CASE("oscillator full: nominal recovery and initial condition", "[physics][oscillator]") {
    OscillatorCase c;
    Vec undamped = oscillator_full(1.5, 0.0, 20.0, 1.0, c);
    Vec nominal = oscillator_nominal(1.5, c);
    for (int i = 0; i < c.n_times; ++i)
        CHECK(undamped[i] == Catch::Approx(nominal[i]).margin(1e-12));
    CHECK(oscillator_full(1.1, 0.7, 35.0, 1.07, c)[0] == Catch::Approx(1.07));
}

TEST_CASE("oscillator full matches RK4 oracle", "[physics][oscillator]") {
    OscillatorCase c;
    double m = 1.5, zeta = 1.2, T = 10.0, x0 = 1.05;
    Vec closed = oscillator_full(m, zeta, T, x0, c);
    Vec rk = oscillator_rk4(m, zeta, T, x0, c, 1e-4);
    for (int i = 0; i < c.n_times; ++i)
        CHECK(closed[i] == Catch::Approx(rk[i]).margin(1e-6));
}

TEST_CASE("oscillator full covers all damping regimes", "[physics][oscillator]") {
    OscillatorCase c;
    for (double zeta : {0.5, 2.0, 3.5}) {  // under, near-critical, over
        Vec closed = oscillator_full(1.0, zeta, 25.0, 1.0, c);
        Vec rk = oscillator_rk4(1.0, zeta, 25.0, 1.0, c, 1e-4);
        for (int i = 0; i < c.n_times; ++i)
            CHECK(closed[i] == Catch::Approx(rk[i]).margin(1e-6));
    }
}

TEST_CASE("oscillator full is continuous across critical damping", "[physics][oscillator]") {
    OscillatorCase c;
    double m = 1.3, T = 15.0;
    double zc = 2.0 * std::sqrt(m * oscillator_spring_stiffness(T, c));
    Vec lo = oscillator_full(m, zc - 1e-8, T, 1.0, c);
    Vec hi = oscillator_full(m, zc + 1e-8, T, 1.0, c);
    for (int i = 0; i < c.n_times; ++i)
        CHECK(std::abs(lo[i] - hi[i]) < 1e-6);
}

TEST_CASE("bridge nominal: off-bridge load gives zero strain", "[physics][bridge]") {
    BridgeCase c;
    c.v_ref = 0.6;  // crossing finishes before the window ends
    Vec s = bridge_nominal_strain(10.0, 10.0, 0.0, c);
    Vec t = c.time_grid();
    for (int i = 0; i < c.n_times; ++i)
        if (c.v_ref * t[i] > c.L_total) CHECK(s[i] == 0.0);
    CHECK(s.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("bridge nominal converges in the rigid-support limit", "[physics][bridge]") {
    // As the support springs stiffen, the influence line converges to the
    // two-span continuous beam on rigid supports: jumping from 10^14 to 10^16
    // changes nothing at the scale of the response.
    BridgeCase c;
    Vec a = bridge_nominal_strain(14.0, 14.0, 0.3, c);
    Vec b = bridge_nominal_strain(16.0, 16.0, 0.3, c);
    double scale = a.cwiseAbs().maxCoeff();
    for (int i = 0; i < c.n_times; ++i)
        CHECK(a[i] == Catch::Approx(b[i]).margin(1e-4 * scale));
    // On rigid supports the midspan strain dips negative (hogging) while the
    // load sits on the far span.
    CHECK(a.minCoeff() < -1e-3 * scale);
}

TEST_CASE("bridge nominal strain is linear in the vehicle load", "[physics][bridge]") {
    BridgeCase c1;
    BridgeCase c2 = c1;
    c2.F_ref = 2.0 * c1.F_ref;
    Vec s1 = bridge_nominal_strain(9.5, 10.5, 1.0, c1);
    Vec s2 = bridge_nominal_strain(9.5, 10.5, 1.0, c2);
    for (int i = 0; i < c1.n_times; ++i)
        CHECK(s2[i] == Catch::Approx(2.0 * s1[i]).epsilon(1e-12).margin(1e-14));
}

TEST_CASE("bridge nominal jacobian matches finite differences", "[physics][bridge]") {
    BridgeCase c;
    double k1 = 9.7, k2 = 10.4, ds = 0.6;
    auto res = bridge_nominal_strain_with_jacobian(k1, k2, ds, c);
    // The derivative is small compared to the response; step sizes below
    // ~1e-4 sit in the solver-noise regime of the central difference.
    double h = 1e-3;
    Vec fd0 = (bridge_nominal_strain(k1 + h, k2, ds, c) -
               bridge_nominal_strain(k1 - h, k2, ds, c)) / (2 * h);
    Vec fd1 = (bridge_nominal_strain(k1, k2 + h, ds, c) -
               bridge_nominal_strain(k1, k2 - h, ds, c)) / (2 * h);
    Vec fd2 = (bridge_nominal_strain(k1, k2, ds + h, c) -
               bridge_nominal_strain(k1, k2, ds - h, c)) / (2 * h);
    double scale = res.strain.cwiseAbs().maxCoeff();
    for (int i = 0; i < c.n_times; ++i) {
        CHECK(res.jacobian(i, 0) == Catch::Approx(fd0[i]).epsilon(5e-4).margin(1e-7 * scale));
        CHECK(res.jacobian(i, 1) == Catch::Approx(fd1[i]).epsilon(5e-4).margin(1e-7 * scale));
        CHECK(res.jacobian(i, 2) == Catch::Approx(fd2[i]).epsilon(5e-4).margin(1e-6 * scale));
    }
}

TEST_CASE("bridge full: nominal limit and mesh refinement", "[physics][bridge]") {
    BridgeCase c;
    Vec nominal = bridge_nominal_strain(10.0, 10.2, -0.5, c);
    Vec full = bridge_full_strain(10.0, 10.2, 0.0, 0.0, 0.0, 0.0, -0.5, 0.0, c);
    double scale = nominal.cwiseAbs().maxCoeff();
    for (int i = 0; i < c.n_times; ++i)
        CHECK(full[i] == Catch::Approx(nominal[i]).margin(2e-3 * scale));

    // Pier-zone damage raises the peak strain, and a 4x finer mesh agrees.
    Vec damaged = bridge_full_strain(10.0, 10.2, 0.0, 0.5, 0.0, 0.0, -0.5, 0.0, c);
    Vec fine = bridge_full_strain(10.0, 10.2, 0.0, 0.5, 0.0, 0.0, -0.5, 0.0, c, 4);
    CHECK(damaged.cwiseAbs().maxCoeff() > nominal.cwiseAbs().maxCoeff());
    for (int i = 0; i < c.n_times; ++i)
        CHECK(damaged[i] == Catch::Approx(fine[i]).margin(0.01 * scale));
}

TEST_CASE("bridge full: velocity fluctuation compresses the influence line", "[physics][bridge]") {
    BridgeCase c;
    Vec base = bridge_full_strain(10.0, 10.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, c);
    Vec fast = bridge_full_strain(10.0, 10.0, 0.0, 0.0, 0.0, 0.1, 0.0, 0.0, c);
    Vec t = c.time_grid();
    int nz_base = 0, nz_fast = 0;
    for (int i = 0; i < c.n_times; ++i) {
        if (std::abs(base[i]) > 0.0) ++nz_base;
        if (std::abs(fast[i]) > 0.0) ++nz_fast;
    }
    // Support shrinks roughly by v_ref / (v_ref + delta_v).
    double expect = nz_base * c.v_ref / (c.v_ref + 0.1);
    CHECK(nz_fast <= nz_base);
    CHECK(std::abs(nz_fast - expect) <= 2.0);
}
