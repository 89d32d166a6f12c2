#pragma once

#include <string>
#include <vector>

#include "dpivae/core.hpp"

namespace dpivae {

enum class CaseId { beam, oscillator, bridge };

inline std::string to_string(CaseId id) {
    switch (id) {
        case CaseId::beam: return "beam";
        case CaseId::oscillator: return "oscillator";
        case CaseId::bridge: return "bridge";
    }
    return "?";
}

inline CaseId case_from_string(const std::string& s) {
    if (s == "beam") return CaseId::beam;
    if (s == "oscillator") return CaseId::oscillator;
    if (s == "bridge") return CaseId::bridge;
    throw ConfigError("unknown case id: " + s);
}

/// Which modality a generative factor belongs to.
enum class FactorGroup { physics, domain, cls, unknown };

/// One ground-truth generative factor. All ground-truth distributions in the
/// case studies are uniform on [lo, hi].
struct FactorSpec {
    std::string name;
    FactorGroup group;
    double lo = 0.0;
    double hi = 1.0;
};

struct NoiseSpec {
    double sigma_x = 0.0;
    double sigma_c = 0.0;
    double sigma_y = 0.0;

    void validate() const {
        if (sigma_x < 0 || sigma_c < 0 || sigma_y < 0)
            throw ConfigError("NoiseSpec: negative standard deviation");
    }
};

/// Prior over one physics-grounded latent, evaluated in constrained space.
/// Uniform priors use the transform bounds as support, so their density is
/// constant and their gradient vanishes.
struct PhysicsPrior {
    enum class Kind { normal, uniform } kind = Kind::uniform;
    double mean = 0.0;   // normal only
    double std = 1.0;    // normal only
    double lb = 0.0;     // transform bounds, also uniform support
    double ub = 1.0;

    double log_density(double z) const {
        if (kind == Kind::uniform) return -std::log(ub - lb);
        double r = (z - mean) / std;
        return -0.5 * (kLogTwoPi + r * r) - std::log(std);
    }

    double grad_log_density(double z) const {
        if (kind == Kind::uniform) return 0.0;
        return -(z - mean) / (std * std);
    }
};

// ---------------------------------------------------------------------------
// Case constants
// ---------------------------------------------------------------------------

struct BeamCase {
    double L = 1.0;   // m
    double F = 1.0;   // N
    double I = 2.0;   // m^4
    double A = 1.0;   // m^2
    int n_sensors = 32;
    int n_elements = 64;  // full-physics FE mesh (plus a node at x_F)

    /// Sensors sit strictly inside (0, L), equally spaced.
    Vec sensor_grid() const {
        Vec g(n_sensors);
        for (int i = 0; i < n_sensors; ++i) g[i] = L * (i + 1) / (n_sensors + 1);
        return g;
    }
};

struct OscillatorCase {
    double k_ref = 1.0;    // N/m
    double T_ref = 20.0;   // deg C
    double alpha_T = 0.01; // N/m per deg C
    int n_times = 64;
    double t_end = 10.0;

    Vec time_grid() const { return linspace(0.0, t_end, n_times); }
};

struct BridgeCase {
    double L_total = 12.5;   // m
    double width = 0.1;      // m
    double height = 0.6;     // m
    double E_mat = 210e9;    // Pa
    double rho = 7800.0;     // kg/m^3
    double nu = 0.3;
    double v_ref = 0.5;      // m/s, crossing fills the 25 s window
    double F_ref = 1.0e3;    // N (1 kN reference vehicle load; delta_F is a +/-10% perturbation)
    double damage_zone = 0.1;   // fraction of L_total around each support
    int n_elements = 128;      // nominal/full mesh target element count
    int n_times = 64;
    double t_end = 25.0;
    double strain_unit = 1e6;  // strains reported in microstrain

    Vec time_grid() const { return linspace(0.0, t_end, n_times); }
    double EI() const { return E_mat * width * height * height * height / 12.0; }
};

// ---------------------------------------------------------------------------
// Per-case definition: generative factors (Tables 1-3), observable wiring,
// latent layout defaults and physics priors.
// ---------------------------------------------------------------------------

struct CaseDefinition {
    CaseId id;
    std::vector<FactorSpec> factors;
    int d_x = 0;
    int d_c = 0;
    int d_y = 0;
    int d_zx = 0;
    int d_zc = 0;
    int d_zy = 0;
    std::vector<PhysicsPrior> physics_priors;  // size d_zx
    NoiseSpec default_noise;

    int n_factors() const { return static_cast<int>(factors.size()); }

    int factor_index(const std::string& name) const {
        for (int i = 0; i < n_factors(); ++i)
            if (factors[i].name == name) return i;
        throw ConfigError("unknown generative factor: " + name);
    }

    std::vector<int> indices(FactorGroup g) const {
        std::vector<int> out;
        for (int i = 0; i < n_factors(); ++i)
            if (factors[i].group == g) out.push_back(i);
        return out;
    }
};

inline CaseDefinition case_definition(CaseId id) {
    CaseDefinition def;
    def.id = id;
    switch (id) {
        case CaseId::beam: {
            def.factors = {
                {"E", FactorGroup::physics, 2.5, 4.5},
                {"x_F", FactorGroup::physics, 0.3, 0.7},
                {"T", FactorGroup::domain, -11.0, 5.0},
                {"log_kv", FactorGroup::cls, 6.0, 8.0},
            };
            def.d_x = 32;
            def.d_c = 1;
            def.d_y = 1;
            def.d_zx = 2;
            def.d_zc = 2;
            def.d_zy = 2;
            // E ~ N(4,1) truncated to a positive range via the workspace
            // transform; x_F ~ N(0.5, 0.2) restricted to (0, 1).
            def.physics_priors = {
                {PhysicsPrior::Kind::normal, 4.0, 1.0, 0.1, 10.0},
                {PhysicsPrior::Kind::normal, 0.5, 0.2, 0.0, 1.0},
            };
            // The paper's sigma_x = 0.02 m exceeds the deflection spread
            // produced by its own beam constants; the default is scaled to
            // the actual signal (midspan deflection ~2.6e-3 m).
            def.default_noise = {2e-4, 0.02, 0.02};
            break;
        }
        case CaseId::oscillator: {
            def.factors = {
                {"m", FactorGroup::physics, 1.2, 1.8},
                {"T", FactorGroup::domain, 0.0, 40.0},
                {"zeta", FactorGroup::cls, 0.0, 2.0},
                {"x0", FactorGroup::unknown, 0.9, 1.1},
            };
            def.d_x = 64;
            def.d_c = 1;
            def.d_y = 1;
            def.d_zx = 1;
            def.d_zc = 4;
            def.d_zy = 4;
            def.physics_priors = {
                {PhysicsPrior::Kind::uniform, 0.0, 1.0, 1.0, 2.0},
            };
            def.default_noise = {1e-3, 0.01, 0.01};
            break;
        }
        case CaseId::bridge: {
            def.factors = {
                {"log_kv1", FactorGroup::physics, 9.0, 11.0},
                {"log_kv2", FactorGroup::physics, 9.0, 11.0},
                {"delta_v", FactorGroup::domain, -0.1, 0.1},
                {"delta_s", FactorGroup::domain, -2.0, 2.0},
                {"y1", FactorGroup::cls, 0.0, 0.9},
                {"y2", FactorGroup::cls, 0.0, 0.9},
                {"y3", FactorGroup::cls, 0.0, 0.9},
                {"delta_F", FactorGroup::unknown, -100.0, 100.0},  // N
            };
            def.d_x = 64;
            def.d_c = 2;  // (delta_v, delta_s)
            def.d_y = 3;
            // The pier offset enters the nominal model as a third inferred
            // physics latent alongside the two support log-stiffnesses.
            def.d_zx = 3;
            def.d_zc = 4;
            def.d_zy = 4;
            def.physics_priors = {
                {PhysicsPrior::Kind::uniform, 0.0, 1.0, 8.0, 12.0},
                {PhysicsPrior::Kind::uniform, 0.0, 1.0, 8.0, 12.0},
                {PhysicsPrior::Kind::uniform, 0.0, 1.0, -2.0, 2.0},
            };
            // sigma_c and sigma_y follow the source set-up; sigma_x is
            // rescaled to the microstrain units of the reduced simulator so
            // the noise-to-signal regime matches.
            def.default_noise = {1e-5, 1e-3, 1e-3};
            break;
        }
    }
    return def;
}

}  // namespace dpivae
