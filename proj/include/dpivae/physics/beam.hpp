#pragma once

#include "dpivae/cases.hpp"
#include "dpivae/physics/fe_beam.hpp"

namespace dpivae {

/// Support rotational stiffness as a function of temperature,
/// k_r = exp(8 - 10 / (1 + exp(-T))).
inline double beam_rotational_stiffness(double T) {
    return std::exp(8.0 - 10.0 * sigmoid(T));
}

/// Deflection of the simply supported beam under a point load at x_F,
/// evaluated at the sensor grid. This is the nominal model embedded in the
/// decoder.
inline Vec beam_nominal_deflection(double E, double x_F, const BeamCase& c) {
    if (!(E > 0.0)) throw ConfigError("beam: E must be positive");
    if (!(x_F > 0.0 && x_F < c.L)) throw ConfigError("beam: x_F outside (0, L)");
    const double b = c.L - x_F;
    const double s = c.F / (6.0 * c.L * E * c.I);
    Vec grid = c.sensor_grid();
    Vec w(grid.size());
    for (int i = 0; i < grid.size(); ++i) {
        double x = grid[i];
        w[i] = s * b * x * (c.L * c.L - b * b - x * x);
        if (x > x_F) {
            double d = x - x_F;
            w[i] += c.F * d * d * d / (6.0 * E * c.I);
        }
    }
    return w;
}

/// Jacobian of beam_nominal_deflection with respect to (E, x_F); d_x x 2.
inline Mat beam_nominal_jacobian(double E, double x_F, const BeamCase& c) {
    const double b = c.L - x_F;
    const double s = c.F / (6.0 * c.L * E * c.I);
    Vec grid = c.sensor_grid();
    Mat J(grid.size(), 2);
    for (int i = 0; i < grid.size(); ++i) {
        double x = grid[i];
        double w = s * b * x * (c.L * c.L - b * b - x * x);
        // d/db of s*b*x*(L^2 - b^2 - x^2); db/dx_F = -1
        double dw_dxF = -s * x * (c.L * c.L - 3.0 * b * b - x * x);
        if (x > x_F) {
            double d = x - x_F;
            w += c.F * d * d * d / (6.0 * E * c.I);
            dw_dxF += -3.0 * c.F * d * d / (6.0 * E * c.I);
        }
        J(i, 0) = -w / E;
        J(i, 1) = dw_dxF;
    }
    return J;
}

/// Ground-truth beam: left pin, right support replaced by a vertical spring
/// k_v and a temperature-dependent rotational spring k_r(T), solved with
/// Hermite elements and a node placed at the load position.
inline Vec beam_full_with_springs(double E, double x_F, double k_v, double k_r,
                                  const BeamCase& c) {
    if (!(E > 0.0)) throw ConfigError("beam: E must be positive");
    if (!(x_F > 0.0 && x_F < c.L)) throw ConfigError("beam: x_F outside (0, L)");
    fe::Mesh mesh = fe::mesh_from_breakpoints({0.0, x_F, c.L}, c.n_elements);
    fe::Assembly asmb(mesh);
    asmb.add_bending(std::vector<double>(mesh.n_elements(), E * c.I));
    asmb.add_translation_spring(mesh.n_nodes() - 1, k_v);
    asmb.add_rotation_spring(mesh.n_nodes() - 1, k_r);
    asmb.add_point_load(x_F, c.F);
    asmb.fix(0);  // left pin
    asmb.factorize();
    Vec u = asmb.solve();
    Vec grid = c.sensor_grid();
    Vec w(grid.size());
    for (int i = 0; i < grid.size(); ++i) w[i] = asmb.deflection_at(u, grid[i]);
    return w;
}

inline Vec beam_full_response(double E, double x_F, double T, double log_kv,
                              const BeamCase& c) {
    return beam_full_with_springs(E, x_F, std::pow(10.0, log_kv),
                                  beam_rotational_stiffness(T), c);
}

}  // namespace dpivae
