#include "crcm/manifold.hpp"

namespace crcm {

CRManifold::CRManifold(ConjPoly f1, ConjPoly f2) : F1(std::move(f1)), F2(std::move(f2)) {
    if (!F1.is_real_valued() || !F2.is_real_valued())
        throw ValidationError("defining functions must be real-valued");
}

namespace {

const Cplx I(0, 1);

// Wirtinger slots for the four ambient holomorphic coordinates
enum Hol : int { HZ1 = 0, HZ2 = 1, HW1 = 2, HW2 = 3 };

// first and second derivatives of rho^a = v_a - F_a at a point, in the
// Wirtinger convention over (z1, z2, w1, w2)
struct RhoJet {
    std::array<Cplx, 4> d;                 // d rho / d zeta
    std::array<std::array<Cplx, 4>, 4> dd;  // d^2 rho / d zeta d eta
    std::array<std::array<Cplx, 4>, 4> ddb; // d^2 rho / d zeta d etabar
};

struct PolyJet {
    // F and its derivatives up to second order in the six chart variables
    std::array<Cplx, 6> d;
    std::array<std::array<Cplx, 6>, 6> dd;
};

PolyJet poly_jet(const ConjPoly& f, const PolyPoint& at) {
    PolyJet out{};
    std::array<ConjPoly, 6> firsts;
    for (int v = 0; v < 6; ++v) {
        firsts[v] = f.diff(PolyVar(v));
        out.d[v] = firsts[v].eval(at);
    }
    for (int v = 0; v < 6; ++v)
        for (int w = 0; w < 6; ++w) out.dd[v][w] = firsts[v].diff(PolyVar(w)).eval(at);
    return out;
}

// chain rule through u_b = (w_b + wbar_b)/2, v_a = (w_a - wbar_a)/(2i)
RhoJet rho_jet(const ConjPoly& f, int a, const PolyPoint& at) {
    const PolyJet fj = poly_jet(f, at);
    RhoJet out{};
    // dF/dzeta and dF/dzetabar in terms of chart slots:
    //   zeta = z_k: F_{z_k};  zeta = w_b: (1/2) F_{u_b}
    auto df_hol = [&](int zeta) -> Cplx {
        switch (zeta) {
            case HZ1: return fj.d[Z1];
            case HZ2: return fj.d[Z2];
            case HW1: return 0.5 * fj.d[U1];
            case HW2: return 0.5 * fj.d[U2];
        }
        return 0;
    };
    auto df_anti = [&](int zeta) -> Cplx {
        switch (zeta) {
            case HZ1: return fj.d[Z1B];
            case HZ2: return fj.d[Z2B];
            case HW1: return 0.5 * fj.d[U1];
            case HW2: return 0.5 * fj.d[U2];
        }
        return 0;
    };
    (void)df_anti;
    for (int zeta = 0; zeta < 4; ++zeta) {
        Cplx dv = 0;
        if (zeta == HW1 && a == 0) dv = 1.0 / (2.0 * I);
        if (zeta == HW2 && a == 1) dv = 1.0 / (2.0 * I);
        out.d[zeta] = dv - df_hol(zeta);
    }
    // second derivatives of the F-part; the v-part is linear
    auto slot_hol = [&](int zeta) -> std::pair<int, double> {
        // chart-variable index and chain factor for the holomorphic slot
        switch (zeta) {
            case HZ1: return {Z1, 1.0};
            case HZ2: return {Z2, 1.0};
            case HW1: return {U1, 0.5};
            case HW2: return {U2, 0.5};
        }
        return {Z1, 0.0};
    };
    auto slot_anti = [&](int zeta) -> std::pair<int, double> {
        switch (zeta) {
            case HZ1: return {Z1B, 1.0};
            case HZ2: return {Z2B, 1.0};
            case HW1: return {U1, 0.5};
            case HW2: return {U2, 0.5};
        }
        return {Z1, 0.0};
    };
    for (int zeta = 0; zeta < 4; ++zeta)
        for (int eta = 0; eta < 4; ++eta) {
            const auto [vz, cz] = slot_hol(zeta);
            const auto [ve, ce] = slot_hol(eta);
            out.dd[zeta][eta] = -cz * ce * fj.dd[vz][ve];
            const auto [vb, cb] = slot_anti(eta);
            out.ddb[zeta][eta] = -cz * cb * fj.dd[vz][vb];
        }
    return out;
}

// ambient holomorphic differentials as complex covectors on R^8
Cplx dzeta(int zeta, const Amb& x) {
    switch (zeta) {
        case HZ1: return Cplx(x[0], x[1]);
        case HZ2: return Cplx(x[2], x[3]);
        case HW1: return Cplx(x[4], x[5]);
        case HW2: return Cplx(x[6], x[7]);
    }
    return 0;
}

Amb amb_j(const Amb& x) {
    // multiplication by i on each complex coordinate
    return Amb{-x[1], x[0], -x[3], x[2], -x[5], x[4], -x[7], x[6]};
}

struct PointJets {
    PolyPoint at;
    std::array<RhoJet, 2> rho;
};

PointJets jets_at(const CRManifold& m, const PointOnM& p) {
    PointJets out;
    out.at = p.poly_point();
    out.rho[0] = rho_jet(m.F1, 0, out.at);
    out.rho[1] = rho_jet(m.F2, 1, out.at);
    return out;
}

double drho_on(const RhoJet& j, const Amb& x) {
    Cplx s = 0;
    for (int zeta = 0; zeta < 4; ++zeta) s += j.d[zeta] * dzeta(zeta, x);
    return 2 * s.real(); // d rho = 2 Re(partial)
}

double theta_on(const RhoJet& j, const Amb& x) {
    Cplx s = 0;
    for (int zeta = 0; zeta < 4; ++zeta) s += j.d[zeta] * dzeta(zeta, x);
    return -2 * s.imag(); // i (partial - partialbar)
}

// dtheta^a(X, Y) = -2 Im[ d(partial rho)(X, Y) ], complex-bilinear in the
// slots; works for complexified vectors as well.
Cplx dtheta_on_c(const RhoJet& j, const std::array<Cplx, 8>& x, const std::array<Cplx, 8>& y) {
    auto dz = [&](int zeta, const std::array<Cplx, 8>& v) -> Cplx {
        switch (zeta) {
            case HZ1: return v[0] + I * v[1];
            case HZ2: return v[2] + I * v[3];
            case HW1: return v[4] + I * v[5];
            case HW2: return v[6] + I * v[7];
        }
        return 0;
    };
    auto dzb = [&](int zeta, const std::array<Cplx, 8>& v) -> Cplx {
        switch (zeta) {
            case HZ1: return v[0] - I * v[1];
            case HZ2: return v[2] - I * v[3];
            case HW1: return v[4] - I * v[5];
            case HW2: return v[6] - I * v[7];
        }
        return 0;
    };
    // D_X rho_zeta, then assemble d(partial rho) and take -2 "Im" bilinearly
    auto dpartial = [&](const std::array<Cplx, 8>& vx, const std::array<Cplx, 8>& vy) {
        Cplx s = 0;
        for (int zeta = 0; zeta < 4; ++zeta) {
            Cplx dxz = 0, dyz = 0;
            for (int eta = 0; eta < 4; ++eta) {
                dxz += j.dd[zeta][eta] * dz(eta, vx) + j.ddb[zeta][eta] * dzb(eta, vx);
                dyz += j.dd[zeta][eta] * dz(eta, vy) + j.ddb[zeta][eta] * dzb(eta, vy);
            }
            s += dxz * dz(zeta, vy) - dyz * dz(zeta, vx);
        }
        return s;
    };
    auto conj_vec = [](const std::array<Cplx, 8>& v) {
        std::array<Cplx, 8> o;
        for (int i = 0; i < 8; ++i) o[i] = std::conj(v[i]);
        return o;
    };
    const Cplx a = dpartial(x, y);
    // "Im" extended bilinearly: (f - fbar-form)/2i, where the conjugate form
    // evaluates with conjugated jet entries on conjugated slots
    const Cplx abar = std::conj(dpartial(conj_vec(x), conj_vec(y)));
    return -2.0 * (a - abar) / (2.0 * I);
}

double dtheta_on(const RhoJet& j, const Amb& x, const Amb& y) {
    std::array<Cplx, 8> cx, cy;
    for (int i = 0; i < 8; ++i) {
        cx[i] = x[i];
        cy[i] = y[i];
    }
    return dtheta_on_c(j, cx, cy).real();
}

double dot8(const Amb& a, const Amb& b) {
    double s = 0;
    for (int i = 0; i < 8; ++i) s += a[i] * b[i];
    return s;
}

} // namespace

TangentData tangent_data(const CRManifold& m, const PointOnM& p) {
    const PointJets J = jets_at(m, p);
    TangentData out;
    out.j4 = RMat(4, 4);

    // chart basis of T_pM: directions x1, y1, x2, y2, u1, u2 pushed forward
    const PolyJet f1 = poly_jet(m.F1, J.at), f2 = poly_jet(m.F2, J.at);
    auto chart_vec = [&](int c) {
        Amb v{};
        // dF/d(real chart coordinate) for both F's
        auto d_real = [&](const PolyJet& fj) -> double {
            switch (c) {
                case 0: return (fj.d[Z1] + fj.d[Z1B]).real();
                case 1: return (I * (fj.d[Z1] - fj.d[Z1B])).real();
                case 2: return (fj.d[Z2] + fj.d[Z2B]).real();
                case 3: return (I * (fj.d[Z2] - fj.d[Z2B])).real();
                case 4: return fj.d[U1].real();
                case 5: return fj.d[U2].real();
            }
            return 0;
        };
        if (c < 4)
            v[c] = 1;
        else
            v[c == 4 ? 4 : 6] = 1;           // s_b direction
        v[5] += d_real(f1);                   // t_1 = F_1 rides along
        v[7] += d_real(f2);
        return v;
    };
    for (int c = 0; c < 6; ++c) out.tm_basis[c] = chart_vec(c);

    for (int a = 0; a < 2; ++a)
        for (int i = 0; i < 8; ++i) {
            Amb unit{};
            unit[i] = 1;
            out.drho[a][i] = drho_on(J.rho[a], unit);
            out.conormal[a][i] = theta_on(J.rho[a], unit);
        }

    // D_p: X in T_pM with J X in T_pM, i.e. drho^a(J X) = 0
    RMat cond(2, 6);
    for (int a = 0; a < 2; ++a)
        for (int c = 0; c < 6; ++c) cond(a, c) = drho_on(J.rho[a], amb_j(out.tm_basis[c]));
    const auto null = null_space(cond, 1e-10);
    if (null.size() != 4) throw RankDrop("D_p is not 4-dimensional at this point");
    auto to_amb = [&](const std::vector<double>& coef) {
        Amb v{};
        for (int c = 0; c < 6; ++c)
            for (int i = 0; i < 8; ++i) v[i] += coef[c] * out.tm_basis[c][i];
        return v;
    };
    std::array<Amb, 4> raw;
    for (int k = 0; k < 4; ++k) raw[k] = to_amb(null[k]);

    // adapted J-standard basis (v, Jv, v', Jv'); the complement is taken in
    // the J-invariant metric <x,y> + <Jx,Jy>
    auto jdot = [&](const Amb& a, const Amb& b) { return dot8(a, b) + dot8(amb_j(a), amb_j(b)); };
    Amb v1 = raw[0];
    {
        const double n = std::sqrt(jdot(v1, v1));
        for (double& x : v1) x /= n;
    }
    const Amb v2 = amb_j(v1);
    Amb v3{};
    bool found = false;
    for (int k = 1; k < 4 && !found; ++k) {
        Amb c = raw[k];
        const double a1 = jdot(c, v1), a2 = jdot(c, v2);
        for (int i = 0; i < 8; ++i) c[i] -= a1 * v1[i] / jdot(v1, v1) + a2 * v2[i] / jdot(v2, v2);
        if (std::sqrt(jdot(c, c)) > 1e-8) {
            const double n = std::sqrt(jdot(c, c));
            for (double& x : c) x /= n;
            v3 = c;
            found = true;
        }
    }
    if (!found) throw RankDrop("could not complete a J-adapted basis of D_p");
    const Amb v4 = amb_j(v3);
    out.d_basis = {v1, v2, v3, v4};
    out.j4 = JSpace::standard().J; // by construction
    return out;
}

ConormalData levi_at(const CRManifold& m, const PointOnM& p) {
    const TangentData td = tangent_data(m, p);
    const PointJets J = jets_at(m, p);
    std::array<RMat, 2> forms;
    for (int a = 0; a < 2; ++a) {
        forms[a] = RMat(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                forms[a](i, j) = dtheta_on(J.rho[a], td.d_basis[i], td.d_basis[j]);
        // enforce exact antisymmetry against roundoff
        forms[a] = (forms[a] - forms[a].transpose()) * 0.5;
    }
    return ConormalData(JSpace::standard(), TwoForm(forms[0]), TwoForm(forms[1]));
}

PointType point_type(const CRManifold& m, const PointOnM& p) { return classify(levi_at(m, p)); }

HermitianPair osculating_quadric(const CRManifold& m, const PointOnM& p) {
    const TangentData td = tangent_data(m, p);
    const PointJets J = jets_at(m, p);
    HermitianPair out;
    // D^{10} basis Z_k = (v_{2k} - i J v_{2k})/2
    std::array<std::array<Cplx, 8>, 2> zvec;
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 8; ++i)
            zvec[k][i] = 0.5 * (td.d_basis[2 * k][i] - I * td.d_basis[2 * k + 1][i]);
    for (int a = 0; a < 2; ++a) {
        CMat h(2, 2);
        for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l) {
                std::array<Cplx, 8> wbar;
                for (int i = 0; i < 8; ++i) wbar[i] = std::conj(zvec[l][i]);
                h(k, l) = dtheta_on_c(J.rho[a], zvec[k], wbar) / (2.0 * I);
            }
        (a == 0 ? out.h1 : out.h2) = h;
    }
    return out;
}

ScanReport uniformity_scan(const CRManifold& m, const std::vector<PointOnM>& pts) {
    ScanReport rep;
    for (const PointOnM& p : pts) {
        ScanRecord rec;
        rec.p = p;
        try {
            rec.type = point_type(m, p);
            rep.counts[label_name(rec.type->label)] += 1;
        } catch (const Error& e) {
            rec.error = e.what();
            rep.counts["error"] += 1;
        }
        rep.records.push_back(std::move(rec));
    }
    rep.strongly_uniform = rep.counts.size() == 1 && rep.counts.count("error") == 0;
    return rep;
}

FullLevi levi_full(const CRManifold& m, const PointOnM& p) {
    const TangentData td = tangent_data(m, p);
    const PointJets J = jets_at(m, p);

    // transverse pair with theta^a(w_b) = delta: least squares over the
    // chart basis
    RMat th(2, 6);
    for (int a = 0; a < 2; ++a)
        for (int c = 0; c < 6; ++c) th(a, c) = theta_on(J.rho[a], td.tm_basis[c]);
    auto solve_w = [&](int which) {
        std::vector<double> rhs = {which == 0 ? 1.0 : 0.0, which == 0 ? 0.0 : 1.0};
        const auto coef = min_norm_solve(th, rhs);
        Amb v{};
        for (int c = 0; c < 6; ++c)
            for (int i = 0; i < 8; ++i) v[i] += coef[c] * td.tm_basis[c][i];
        return v;
    };
    std::array<Amb, 6> b6 = {solve_w(0), solve_w(1), td.d_basis[0], td.d_basis[1],
                             td.d_basis[2], td.d_basis[3]};

    std::array<RMat, 2> full;
    for (int a = 0; a < 2; ++a) {
        full[a] = RMat(6, 6);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) full[a](i, j) = dtheta_on(J.rho[a], b6[i], b6[j]);
        full[a] = (full[a] - full[a].transpose()) * 0.5;
    }
    FullLevi out{levi_at(m, p), full, b6};
    return out;
}

namespace {

ConjPoly term(std::array<int, 6> e, Cplx c) {
    ConjPoly p;
    p.add_term(e, c);
    return p;
}

} // namespace

CRManifold manifold_preset(const std::string& name) {
    const Cplx half(0.5), half_i(0, 0.5);
    // Im(z1 zbar2) and Re(z1 zbar2)
    const ConjPoly im_z1z2b = term({1, 0, 0, 1, 0, 0}, -half_i) + term({0, 1, 1, 0, 0, 0}, half_i);
    const ConjPoly re_z1z2b = term({1, 0, 0, 1, 0, 0}, half) + term({0, 1, 1, 0, 0, 0}, half);
    const ConjPoly abs_z1 = term({1, 1, 0, 0, 0, 0}, 1.0);
    const ConjPoly abs_z2 = term({0, 0, 1, 1, 0, 0}, 1.0);
    if (name == "quadric-a") return CRManifold(im_z1z2b, re_z1z2b);
    if (name == "quadric-b") return CRManifold(abs_z1, re_z1z2b);
    if (name == "quadric-c") return CRManifold(abs_z1, abs_z2);
    if (name == "perturbed-a") {
        // cubic perturbation Re(z1^2 zbar2)
        const ConjPoly cubic = term({2, 0, 0, 1, 0, 0}, Cplx(0.025)) + term({0, 2, 1, 0, 0, 0}, Cplx(0.025));
        return CRManifold(im_z1z2b + cubic, re_z1z2b);
    }
    if (name == "perturbed-c") {
        // quartic perturbation Re(z2^2 zbar2) u2
        const ConjPoly quartic =
            term({0, 0, 2, 1, 0, 1}, Cplx(0.05)) + term({0, 0, 1, 2, 0, 1}, Cplx(0.05));
        return CRManifold(abs_z1 + quartic, abs_z2);
    }
    throw ValidationError("unknown preset '" + name + "'");
}

std::vector<std::string> manifold_preset_names() {
    return {"quadric-a", "quadric-b", "quadric-c", "perturbed-a", "perturbed-c"};
}

} // namespace crcm
