#pragma once

#include "dpivae/cases.hpp"

namespace dpivae {

/// Temperature-dependent spring stiffness k = k_ref + alpha_T (T_ref - T).
inline double oscillator_spring_stiffness(double T, const OscillatorCase& c) {
    double k = c.k_ref + c.alpha_T * (c.T_ref - T);
    if (!(k > 0.0)) throw ConfigError("oscillator: non-positive stiffness");
    return k;
}

/// Nominal model: undamped free vibration from unit initial displacement,
/// x(t) = cos(sqrt(k_ref / m) t).
inline Vec oscillator_nominal(double m, const OscillatorCase& c) {
    if (!(m > 0.0)) throw ConfigError("oscillator: m must be positive");
    double w = std::sqrt(c.k_ref / m);
    Vec t = c.time_grid();
    return t.unaryExpr([&](double ti) { return std::cos(w * ti); });
}

/// d/dm of oscillator_nominal; d_x x 1.
inline Mat oscillator_nominal_jacobian(double m, const OscillatorCase& c) {
    double w = std::sqrt(c.k_ref / m);
    Vec t = c.time_grid();
    Mat J(t.size(), 1);
    for (int i = 0; i < t.size(); ++i)
        J(i, 0) = std::sin(w * t[i]) * t[i] * w / (2.0 * m);
    return J;
}

/// Ground truth: closed-form free vibration of m x'' + zeta x' + k(T) x = 0
/// with x(0) = x0, x'(0) = 0. Covers all three damping regimes.
inline Vec oscillator_full(double m, double zeta, double T, double x0,
                           const OscillatorCase& c) {
    if (!(m > 0.0)) throw ConfigError("oscillator: m must be positive");
    if (zeta < 0.0) throw ConfigError("oscillator: zeta must be non-negative");
    double k = oscillator_spring_stiffness(T, c);
    double g = zeta / (2.0 * m);        // decay rate
    double disc = zeta * zeta - 4.0 * m * k;
    Vec t = c.time_grid();
    Vec x(t.size());
    if (disc < 0.0) {
        double wd = std::sqrt(k / m - g * g);
        for (int i = 0; i < t.size(); ++i) {
            double ti = t[i];
            double osc = (wd * ti > 1e-8)
                             ? std::cos(wd * ti) + g / wd * std::sin(wd * ti)
                             : 1.0 + g * ti;  // wd -> 0 limit
            x[i] = x0 * std::exp(-g * ti) * osc;
        }
    } else if (disc == 0.0) {
        for (int i = 0; i < t.size(); ++i)
            x[i] = x0 * std::exp(-g * t[i]) * (1.0 + g * t[i]);
    } else {
        double s = std::sqrt(disc) / (2.0 * m);
        double r1 = -g + s, r2 = -g - s;
        double a = -r2 / (r1 - r2), b = r1 / (r1 - r2);
        for (int i = 0; i < t.size(); ++i)
            x[i] = x0 * (a * std::exp(r1 * t[i]) + b * std::exp(r2 * t[i]));
    }
    return x;
}

}  // namespace dpivae
