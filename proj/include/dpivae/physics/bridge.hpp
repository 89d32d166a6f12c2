#pragma once

#include <vector>

#include "dpivae/cases.hpp"
#include "dpivae/physics/fe_beam.hpp"

namespace dpivae {

namespace detail {

/// Nominal bridge mesh: both spans meshed with a fixed element count so the
/// topology (and hence differentiability in delta_s) is preserved as the pier
/// moves.
struct BridgeNominalMesh {
    fe::Mesh mesh;
    int n1;            // elements in the left span
    int pier_node;
    double sensor_pos;
    std::vector<double> dnode_dds;  // d(node position)/d(delta_s)

    BridgeNominalMesh(const BridgeCase& c, double delta_s) {
        double p = c.L_total / 2.0 + delta_s;
        if (!(p > 0.0 && p < c.L_total))
            throw ConfigError("bridge: pier outside the deck");
        n1 = c.n_elements / 2;
        if (n1 % 2 != 0) ++n1;
        int n2 = c.n_elements - n1;
        mesh.nodes.reserve(n1 + n2 + 1);
        for (int i = 0; i <= n1; ++i) mesh.nodes.push_back(p * i / n1);
        for (int j = 1; j <= n2; ++j)
            mesh.nodes.push_back(p + (c.L_total - p) * j / n2);
        pier_node = n1;
        // The gauge is installed at a fixed station (nominal left midspan);
        // it does not move when the pier offset changes.
        sensor_pos = c.L_total / 4.0;
        dnode_dds.resize(mesh.n_nodes());
        for (int i = 0; i <= n1; ++i) dnode_dds[i] = double(i) / n1;
        for (int j = 1; j <= n2; ++j) dnode_dds[n1 + j] = 1.0 - double(j) / n2;
    }
};

/// Arch-action bookkeeping. Every support is fixed horizontally at the bottom
/// fiber, so each span carries a redundant chord force H_i coupled to the end
/// rotations through the eccentricity h/2. Releasing both chords gives the
/// force method: A H = -b with A(i,j) = Cax_i delta_ij + F1_i^T K^{-1} F1_j
/// and b_i = F1_i^T u0, where F1_i is the moment pair a unit chord force
/// applies at the ends of span i.
struct ArchSystem {
    int end_nodes[3];
    double hh;
    double Cax[2] = {0.0, 0.0};
    Mat F1;   // n_dof x 2 moment-pair loads
    Mat U1;   // n_dof x 2, K^{-1} F1
    Eigen::Matrix2d A;
    Eigen::Matrix2d Ainv;

    ArchSystem(const fe::Assembly& asmb, const fe::Mesh& mesh, int pier_node,
               const std::vector<double>& EA, double half_height) {
        hh = half_height;
        end_nodes[0] = 0;
        end_nodes[1] = pier_node;
        end_nodes[2] = mesh.n_nodes() - 1;
        for (int e = 0; e < mesh.n_elements(); ++e)
            Cax[e < pier_node ? 0 : 1] += mesh.length(e) / EA[e];
        F1 = Mat::Zero(mesh.n_dof(), 2);
        for (int i = 0; i < 2; ++i) {
            F1(2 * end_nodes[i] + 1, i) = -hh;
            F1(2 * end_nodes[i + 1] + 1, i) = hh;
        }
        U1.resize(mesh.n_dof(), 2);
        for (int i = 0; i < 2; ++i) U1.col(i) = asmb.solve(F1.col(i));
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                A(i, j) = (i == j ? Cax[i] : 0.0) + F1.col(i).dot(U1.col(j));
        Ainv = A.inverse();
    }

    /// Chord forces for a particular load solve u0.
    Eigen::Vector2d chord_forces(const Vec& u0) const {
        Eigen::Vector2d b = F1.transpose() * u0;
        return -Ainv * b;
    }
};

}  // namespace detail

struct BridgeStrainResult {
    Vec strain;      // length n_times
    Mat jacobian;    // n_times x 3, d strain / d (log_kv1, log_kv2, delta_s)
};

/// Quasi-static strain influence line at the left-midspan sensor for the
/// reference vehicle traversing at v_ref. End supports share the stiffness
/// 10^log_kv1 (symmetric boundary conditions), the pier carries 10^log_kv2,
/// and the pier offset delta_s is the third nominal parameter. All supports
/// are additionally fixed horizontally at the bottom fiber, so the deck
/// carries membrane chord forces (arch action). The reported strain is the
/// bottom-fiber strain, bending plus membrane, in microstrain.
inline BridgeStrainResult bridge_nominal_strain_with_jacobian(
    double log_kv1, double log_kv2, double delta_s, const BridgeCase& c) {
    const double ln10 = std::log(10.0);
    const double kv1 = std::pow(10.0, log_kv1);
    const double kv2 = std::pow(10.0, log_kv2);
    detail::BridgeNominalMesh bm(c, delta_s);
    const fe::Mesh& mesh = bm.mesh;
    const int n_el = mesh.n_elements();
    const double EI = c.EI();
    const double EA = c.E_mat * c.width * c.height;

    fe::Assembly asmb(mesh);
    asmb.add_bending(std::vector<double>(n_el, EI));
    asmb.add_translation_spring(0, kv1);
    asmb.add_translation_spring(bm.pier_node, kv2);
    asmb.add_translation_spring(mesh.n_nodes() - 1, kv1);
    asmb.factorize();

    detail::ArchSystem arch(asmb, mesh, bm.pier_node,
                            std::vector<double>(n_el, EA), 0.5 * c.height);

    // Strain extraction row: one-sided curvature at the sensor, taken at the
    // element containing it.
    const double unit = -0.5 * c.height * c.strain_unit;  // sagging positive
    int se = mesh.locate(bm.sensor_pos);
    double sh = mesh.length(se);
    double sxi = (bm.sensor_pos - mesh.nodes[se]) / sh;
    auto B = fe::curvature_row(sxi, sh);
    auto dB_dxi = fe::curvature_row_dxi(sxi, sh);
    auto dB_dh = fe::curvature_row_dh(sxi, sh);
    double dsh_dds = bm.dnode_dds[se + 1] - bm.dnode_dds[se];
    // The sensor station is fixed in space, so its element-local coordinate
    // shifts as the mesh stretches under the pier offset.
    double dsxi_dds = -(bm.dnode_dds[se] + sxi * dsh_dds) / sh;

    Vec ext = Vec::Zero(mesh.n_dof());
    for (int a = 0; a < 4; ++a) ext[2 * se + a] = unit * B[a];
    Vec dext_dds = Vec::Zero(mesh.n_dof());
    for (int a = 0; a < 4; ++a)
        dext_dds[2 * se + a] =
            unit * (dB_dxi[a] * dsxi_dds + dB_dh[a] * dsh_dds);

    // Membrane contribution of the left-span chord force at the sensor.
    const double memb = c.strain_unit / EA;

    // Composite extraction: strain = ext.u0 + c_vec.H with H = -Ainv F1^T u0,
    // hence strain = etil.u0 with etil = ext - F1 Ainv c_vec. The adjoint
    // w = K^{-1} etil turns the whole influence line into w.F(t).
    Vec v = asmb.solve(ext);
    Eigen::Vector2d c_vec = arch.U1.transpose() * ext;
    c_vec(0) += memb;
    Eigen::Vector2d ac = arch.Ainv * c_vec;
    Vec etil = ext - arch.F1 * ac;
    Vec w = asmb.solve(etil);

    // Configuration-level sensitivity pieces. dK/dp applied to v and U1.
    // Springs touch single translation DOFs; delta_s morphs every element.
    const int wl = 0, wp = 2 * bm.pier_node, wr = 2 * (mesh.n_nodes() - 1);
    const double dk1 = ln10 * kv1, dk2 = ln10 * kv2;

    // (x^T dK/dp y) helpers for the three parameters.
    auto quad_kv1 = [&](const Vec& x, const Vec& y) {
        return dk1 * (x[wl] * y[wl] + x[wr] * y[wr]);
    };
    auto quad_kv2 = [&](const Vec& x, const Vec& y) {
        return dk2 * x[wp] * y[wp];
    };
    std::vector<Eigen::Matrix4d> dke(n_el);
    for (int el = 0; el < n_el; ++el) {
        double dh = bm.dnode_dds[el + 1] - bm.dnode_dds[el];
        dke[el] = (dh == 0.0)
                      ? Eigen::Matrix4d::Zero().eval()
                      : (fe::element_stiffness_dh(EI, mesh.length(el)) * dh).eval();
    }
    auto quad_ds = [&](const Vec& x, const Vec& y) {
        double acc = 0.0;
        for (int el = 0; el < n_el; ++el) {
            if (dke[el].isZero(0.0)) continue;
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    acc += x[2 * el + a] * dke[el](a, b) * y[2 * el + b];
        }
        return acc;
    };

    // q_p = Ainv dc/dp - Ainv dA/dp Ainv c_vec for each parameter, so that
    // (d etil/dp)^T u0 = dext/dp.u0 - q_p.b(t) with b = F1^T u0.
    auto q_for = [&](auto&& quad, bool is_ds) {
        Eigen::Vector2d dc;
        Eigen::Matrix2d dA;
        for (int i = 0; i < 2; ++i) {
            dc(i) = -quad(arch.U1.col(i), v);
            for (int j = 0; j < 2; ++j)
                dA(i, j) = -quad(arch.U1.col(i), arch.U1.col(j));
        }
        if (is_ds) {
            // span lengths move with the pier: d Cax / d delta_s = +-1/EA
            dA(0, 0) += 1.0 / EA;
            dA(1, 1) -= 1.0 / EA;
            dc += arch.U1.transpose() * dext_dds;
        }
        return Eigen::Vector2d(arch.Ainv * dc - arch.Ainv * (dA * ac));
    };
    Eigen::Vector2d q_kv1 = q_for(quad_kv1, false);
    Eigen::Vector2d q_kv2 = q_for(quad_kv2, false);
    Eigen::Vector2d q_ds = q_for(quad_ds, true);

    Vec t = c.time_grid();
    BridgeStrainResult out{Vec::Zero(t.size()), Mat::Zero(t.size(), 3)};
    for (int i = 0; i < t.size(); ++i) {
        double pos = c.v_ref * t[i];
        if (pos < 0.0 || pos > c.L_total) continue;  // load off the bridge
        int e = mesh.locate(pos);
        double h = mesh.length(e);
        double xi = (pos - mesh.nodes[e]) / h;
        auto N = fe::shape(xi, h);
        Vec F = Vec::Zero(mesh.n_dof());
        for (int a = 0; a < 4; ++a) F[2 * e + a] = c.F_ref * N[a];
        Vec u0 = asmb.solve(F);
        out.strain[i] = etil.dot(u0);

        Eigen::Vector2d b = arch.F1.transpose() * u0;
        // d strain/dp = (d etil/dp).u0 + w.(dF/dp - dK/dp u0)
        out.jacobian(i, 0) = -q_kv1.dot(b) - quad_kv1(w, u0);
        out.jacobian(i, 1) = -q_kv2.dot(b) - quad_kv2(w, u0);

        double dh_dds = bm.dnode_dds[e + 1] - bm.dnode_dds[e];
        double dxi_dds = -(bm.dnode_dds[e] + xi * dh_dds) / h;
        auto dN_dxi = fe::shape_dxi(xi, h);
        auto dN_dh = fe::shape_dh(xi, h);
        double dFds = 0.0;
        for (int a = 0; a < 4; ++a)
            dFds += w[2 * e + a] * c.F_ref *
                    (dN_dxi[a] * dxi_dds + dN_dh[a] * dh_dds);
        out.jacobian(i, 2) = dext_dds.dot(u0) - q_ds.dot(b) -
                             quad_ds(w, u0) + dFds;
    }
    return out;
}

inline Vec bridge_nominal_strain(double log_kv1, double log_kv2, double delta_s,
                                 const BridgeCase& c) {
    return bridge_nominal_strain_with_jacobian(log_kv1, log_kv2, delta_s, c).strain;
}

/// Ground-truth bridge: damage scores y_i thin the out-of-plane section width
/// by (1 - y_i) inside a damage_zone * L window centred on support i, scaling
/// both the bending and the membrane stiffness linearly; the vehicle travels
/// at v_ref + delta_v carrying F_ref + delta_F.
inline Vec bridge_full_strain(double log_kv1, double log_kv2, double y1,
                              double y2, double y3, double delta_v,
                              double delta_s, double delta_F,
                              const BridgeCase& c, int mesh_scale = 1) {
    for (double y : {y1, y2, y3})
        if (y < 0.0 || y > 0.9)
            throw ConfigError("bridge: damage score outside [0, 0.9]");
    const double p = c.L_total / 2.0 + delta_s;
    if (!(p > 0.0 && p < c.L_total))
        throw ConfigError("bridge: pier outside the deck");
    // Each damaged region spans damage_zone * L centred on its support; at
    // the abutments only the inner half lies on the deck.
    const double half = 0.5 * c.damage_zone * c.L_total;
    std::vector<double> breaks = {0.0, half, p - half, p, p + half,
                                  c.L_total - half, c.L_total};
    fe::Mesh mesh = fe::mesh_from_breakpoints(breaks, c.n_elements * mesh_scale);

    const double EI0 = c.EI();
    const double EA0 = c.E_mat * c.width * c.height;
    auto damage_at = [&](double x) {
        if (x < half) return y1;
        if (std::abs(x - p) < half) return y2;
        if (x > c.L_total - half) return y3;
        return 0.0;
    };
    // Width reduction in a plane-stress section enters both stiffnesses
    // linearly: I = w h^3 / 12 and A = w h with w scaled by (1 - y).
    std::vector<double> EI(mesh.n_elements()), EA(mesh.n_elements());
    for (int e = 0; e < mesh.n_elements(); ++e) {
        double mid = 0.5 * (mesh.nodes[e] + mesh.nodes[e + 1]);
        double r = 1.0 - damage_at(mid);
        EI[e] = EI0 * r;
        EA[e] = EA0 * r;
    }

    fe::Assembly asmb(mesh);
    asmb.add_bending(EI);
    // p is a breakpoint, hence a node.
    int pier_node = -1;
    for (int n = 0; n < mesh.n_nodes(); ++n)
        if (std::abs(mesh.nodes[n] - p) < 1e-12 * c.L_total) pier_node = n;
    if (pier_node < 0) throw NumericError("bridge: pier node not on the mesh");
    asmb.add_translation_spring(0, std::pow(10.0, log_kv1));
    asmb.add_translation_spring(pier_node, std::pow(10.0, log_kv2));
    asmb.add_translation_spring(mesh.n_nodes() - 1, std::pow(10.0, log_kv1));
    asmb.factorize();

    detail::ArchSystem arch(asmb, mesh, pier_node, EA, 0.5 * c.height);

    const double sensor = c.L_total / 4.0;
    const int se = mesh.locate(sensor);
    const double v = c.v_ref + delta_v;
    const double P = c.F_ref + delta_F;
    const double unit = -0.5 * c.height * c.strain_unit;
    // The sensor sits mid-span, outside every damage zone, so the undamaged
    // section properties apply at the gauge.
    Vec t = c.time_grid();
    Vec strain = Vec::Zero(t.size());
    for (int i = 0; i < t.size(); ++i) {
        double pos = v * t[i];
        if (pos < 0.0 || pos > c.L_total) continue;
        Vec F = Vec::Zero(mesh.n_dof());
        int e = mesh.locate(pos);
        double h = mesh.length(e);
        double xi = (pos - mesh.nodes[e]) / h;
        auto N = fe::shape(xi, h);
        for (int a = 0; a < 4; ++a) F[2 * e + a] = P * N[a];
        Vec u0 = asmb.solve(F);
        Eigen::Vector2d H = arch.chord_forces(u0);
        Vec u = u0 + arch.U1 * H;
        strain[i] = unit * asmb.curvature_at(u, sensor) +
                    H(0) / EA[se] * c.strain_unit;
    }
    return strain;
}

}  // namespace dpivae
