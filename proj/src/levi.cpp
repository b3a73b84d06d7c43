#include "crcm/levi.hpp"

#include <random>

namespace crcm {

const char* label_name(PointLabel l) {
    switch (l) {
        case PointLabel::Elliptic: return "Elliptic";
        case PointLabel::Parabolic: return "Parabolic";
        case PointLabel::Hyperbolic: return "Hyperbolic";
    }
    return "?";
}

ConormalData::ConormalData(JSpace sp, TwoForm d1, TwoForm d2)
    : space(std::move(sp)), dtheta{std::move(d1), std::move(d2)} {
    for (const TwoForm& f : dtheta)
        if (!f.j_invariant(space, 1e-9 * (1 + f.m.norm_inf())))
            throw ValidationError("conormal 2-forms must be J-invariant");
}

namespace {

void check_nondegenerate(const ConormalData& data) {
    // Contact-type conditions: values span R^2, annihilator trivial.
    RMat vals(2, 6);
    int c = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            vals(0, c) = data.dtheta[0].m(i, j);
            vals(1, c) = data.dtheta[1].m(i, j);
            ++c;
        }
    const double scale = std::max(1e-300, vals.norm_inf());
    if (rank_of(vals * (1.0 / scale), 1e-9) < 2)
        throw DegenerateLevi("image of the 2-form pair does not span R^2");
    RMat stacked(8, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            stacked(i, j) = data.dtheta[0].m(i, j) / scale;
            stacked(4 + i, j) = data.dtheta[1].m(i, j) / scale;
        }
    if (rank_of(stacked, 1e-9) < 4)
        throw DegenerateLevi("the 2-form pair has a nontrivial annihilator");
}

RMat inv2(const RMat& a) {
    const double d = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    if (std::abs(d) < 1e-13 * (1 + a.norm_inf() * a.norm_inf()))
        throw SingularMatrix("2x2 inverse");
    RMat inv(2, 2);
    inv(0, 0) = a(1, 1) / d;
    inv(1, 1) = a(0, 0) / d;
    inv(0, 1) = -a(0, 1) / d;
    inv(1, 0) = -a(1, 0) / d;
    return inv;
}

} // namespace

Sym2 conormal_matrix(const ConormalData& data) {
    check_nondegenerate(data);
    Sym2 a;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            a[i][j] = g_pairing(data.dtheta[i], data.dtheta[j], data.space);
    return a;
}

PointType classify(const ConormalData& data) {
    const Sym2 a = conormal_matrix(data);
    const double d = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    const double fro2 = a[0][0] * a[0][0] + 2 * a[0][1] * a[0][1] + a[1][1] * a[1][1];
    PointType out;
    out.a_matrix = a;
    out.det_value = d;
    // det scales quadratically with the matrix norm: scale-free threshold
    if (std::abs(d) <= 1e-9 * fro2)
        out.label = PointLabel::Parabolic;
    else
        out.label = d > 0 ? PointLabel::Elliptic : PointLabel::Hyperbolic;
    return out;
}

ConormalData gl2_action(const RMat& a2x2, const ConormalData& data) {
    const RMat inv = inv2(a2x2);
    TwoForm d1 = data.dtheta[0] * inv(0, 0) + data.dtheta[1] * inv(0, 1);
    TwoForm d2 = data.dtheta[0] * inv(1, 0) + data.dtheta[1] * inv(1, 1);
    return ConormalData(data.space, d1, d2);
}

NormalizeResult normalize_to_Ehat(const ConormalData& data) {
    const PointType pt = classify(data);
    if (pt.label == PointLabel::Parabolic)
        throw ParabolicUnsupported("no reduction at parabolic points");

    std::array<double, 2> lam;
    Sym2 rot;
    eig_sym2(pt.a_matrix, lam, rot);
    RMat r(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r(i, j) = rot[i][j];

    RMat a_inv(2, 2);
    bool flip = false;
    if (pt.label == PointLabel::Hyperbolic) {
        // a = R diag(l1, l2) R^T, l1 > 0 > l2; then W D R^T a (..)^T = antidiag(1,1)
        RMat d(2, 2);
        d(0, 0) = 1.0 / std::sqrt(lam[0]);
        d(1, 1) = 1.0 / std::sqrt(-lam[1]);
        RMat w(2, 2);
        const double s = 1.0 / std::sqrt(2.0);
        w(0, 0) = s; w(0, 1) = s; w(1, 0) = s; w(1, 1) = -s;
        a_inv = w * d * r.transpose();
    } else {
        const double sign = lam[0] > 0 ? 1.0 : -1.0; // definite case
        flip = sign < 0;
        RMat d(2, 2);
        d(0, 0) = 1.0 / std::sqrt(sign * lam[0]);
        d(1, 1) = 1.0 / std::sqrt(sign * lam[1]);
        a_inv = d * r.transpose();
    }

    ConormalData out = gl2_action(inv2(a_inv), data);
    if (flip) out.space.tau = -out.space.tau; // definite with the wrong sign
    const Sym2 check = conormal_matrix(out);
    double scale;
    if (pt.label == PointLabel::Hyperbolic) {
        scale = check[0][1];
        if (scale <= 0 || std::abs(check[0][0]) > 1e-9 * scale ||
            std::abs(check[1][1]) > 1e-9 * scale)
            throw NormalFormFailure("hyperbolic reduction missed the normal form");
    } else {
        scale = check[0][0];
        if (scale <= 0 || std::abs(check[0][1]) > 1e-9 * scale ||
            std::abs(check[0][0] - check[1][1]) > 1e-9 * scale)
            throw NormalFormFailure("elliptic reduction missed the normal form");
    }
    return NormalizeResult{inv2(a_inv), out, flip, scale};
}

namespace {

std::vector<double> apply_j(const JSpace& sp, const std::vector<double>& v) { return sp.J * v; }

// complex covector helpers on the complexified D
using CVec = std::array<Cplx, 4>;

CVec comp_j(const JSpace& sp, const CVec& nu) { // nu o J
    CVec out{};
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) out[j] += nu[i] * sp.J(i, j);
    return out;
}

CVec part01(const JSpace& sp, const CVec& nu) {
    const CVec nj = comp_j(sp, nu);
    CVec out;
    for (int i = 0; i < 4; ++i) out[i] = 0.5 * (nu[i] + Cplx(0, 1) * nj[i]);
    return out;
}

CVec part10(const JSpace& sp, const CVec& nu) {
    const CVec nj = comp_j(sp, nu);
    CVec out;
    for (int i = 0; i < 4; ++i) out[i] = 0.5 * (nu[i] - Cplx(0, 1) * nj[i]);
    return out;
}

double cnorm(const CVec& v) {
    double s = 0;
    for (const Cplx& x : v) s += std::norm(x);
    return std::sqrt(s);
}

} // namespace

RMat AdaptedCoframe::d_block() const {
    RMat b(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) b(i, j) = rows[2 + i][2 + j];
    return b;
}

AdaptedCoframe adapt_coframe(const ConormalData& normalized, unsigned seed) {
    const PointType pt = classify(normalized);
    AdaptedCoframe out;
    out.label = pt.label;
    const JSpace& sp = normalized.space;
    const RMat& m1 = normalized.dtheta[0].m;
    const RMat& m2 = normalized.dtheta[1].m;

    std::array<std::vector<double>, 4> covs; // e^3..e^6 restricted to D

    if (pt.label == PointLabel::Hyperbolic) {
        const double off = pt.a_matrix[0][1];
        if (std::abs(pt.a_matrix[0][0]) > 1e-8 * off || std::abs(pt.a_matrix[1][1]) > 1e-8 * off)
            throw NormalFormFailure("input not reduced to the hyperbolic normal form");
        const auto k1 = null_space(m1 * (1.0 / m1.norm_inf()));
        const auto k2 = null_space(m2 * (1.0 / m2.norm_inf()));
        if (k1.size() != 2 || k2.size() != 2)
            throw DegenerateLevi("restricted 2-forms do not have rank 2");

        // The remaining fiber freedom over fixed data is the sign class
        // (f3,f4) -> +-(f3,f4), (f5,f6) -> +-(f5,f6); seed samples it.
        std::mt19937_64 rng(seed);
        auto sgn = [&] { return seed == 0 ? 1.0 : (rng() & 1 ? 1.0 : -1.0); };

        auto build_pair = [&](const RMat& form, const std::vector<std::vector<double>>& plane,
                              int& sign_out) {
            std::vector<double> f = plane[0];
            double n = 0;
            for (double x : f) n += x * x;
            const double flip = sgn();
            for (double& x : f) x *= flip / std::sqrt(n);
            std::vector<double> jf = apply_j(sp, f);
            const TwoForm tf{form};
            double val = tf(f, jf);
            sign_out = val > 0 ? 1 : -1;
            std::vector<double> f4 = jf;
            if (sign_out < 0)
                for (double& x : f4) x = -x;
            val = std::abs(val);
            if (val < 1e-12) throw NormalFormFailure("degenerate restriction to a kernel plane");
            const double sc = 1.0 / std::sqrt(val);
            for (double& x : f) x *= sc;
            for (double& x : f4) x *= sc;
            return std::pair(f, f4);
        };
        int e1 = 1, e2 = 1;
        auto [f3, f4] = build_pair(m1, k2, e1);
        auto [f5, f6] = build_pair(m2, k1, e2);
        out.eps = e1;
        out.eps_prime = e2;

        RMat fr(4, 4);
        const std::vector<std::vector<double>> fs = {f3, f4, f5, f6};
        for (int c = 0; c < 4; ++c)
            for (int r = 0; r < 4; ++r) fr(r, c) = fs[c][r];
        const RMat cof = inverse(fr); // rows = dual covectors
        for (int i = 0; i < 4; ++i) {
            covs[i].resize(4);
            for (int j = 0; j < 4; ++j) covs[i][j] = cof(i, j);
        }
    } else if (pt.label == PointLabel::Elliptic) {
        // Phi = dtheta^1 + i dtheta^2 is decomposable exactly on the
        // reduced set; factor it as (0,1) ^ (1,0).
        (void)seed; // construction is fully deterministic here
        CMat phi(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) phi(i, j) = Cplx(m1(i, j), m2(i, j));
        const Cplx pf = phi(0, 1) * phi(2, 3) - phi(0, 2) * phi(1, 3) + phi(0, 3) * phi(1, 2);
        const double sc2 = phi.norm_inf() * phi.norm_inf();
        if (std::abs(pf) > 1e-8 * sc2)
            throw NormalFormFailure("input not reduced to the elliptic normal form");

        int u = 0;
        double best = -1;
        for (int i = 0; i < 4; ++i) {
            double s = 0;
            for (int j = 0; j < 4; ++j) s += std::norm(phi(i, j));
            if (s > best) { best = s; u = i; }
        }
        int v = 0;
        best = -1;
        for (int j = 0; j < 4; ++j)
            if (j != u && std::abs(phi(u, j)) > best) { best = std::abs(phi(u, j)); v = j; }
        CVec alpha{}, beta{};
        for (int k = 0; k < 4; ++k) {
            alpha[k] = phi(u, k);
            beta[k] = phi(v, k) / phi(u, v);
        }
        const CVec a10 = part10(sp, alpha), b10 = part10(sp, beta);
        int kk = 0;
        best = -1;
        for (int k = 0; k < 4; ++k) {
            const double w = std::abs(a10[k]) + std::abs(b10[k]);
            if (w > best) { best = w; kk = k; }
        }
        const Cplx c1 = b10[kk], c2 = -a10[kk];
        CVec lambda{};
        for (int k = 0; k < 4; ++k) lambda[k] = c1 * alpha[k] + c2 * beta[k];
        if (cnorm(lambda) < 1e-10 || cnorm(part10(sp, lambda)) > 1e-7 * cnorm(lambda))
            throw NormalFormFailure("no pure (0,1) factor; type split failed");

        int w = 0;
        best = -1;
        for (int k = 0; k < 4; ++k)
            if (std::abs(lambda[k]) > best) { best = std::abs(lambda[k]); w = k; }
        CVec mu{};
        for (int k = 0; k < 4; ++k) mu[k] = phi(w, k) / lambda[w];
        const CVec mu01 = part01(sp, mu);
        Cplx num = 0, den = 0;
        for (int k = 0; k < 4; ++k) {
            num += std::conj(lambda[k]) * mu01[k];
            den += std::conj(lambda[k]) * lambda[k];
        }
        for (int k = 0; k < 4; ++k) mu[k] -= (num / den) * lambda[k];

        const Cplx lm_uv = lambda[u] * mu[v] - lambda[v] * mu[u];
        const Cplx fix = phi(u, v) / lm_uv;
        for (int k = 0; k < 4; ++k) mu[k] *= fix;

        // fix the C* freedom: leading lambda entry real positive, norms balanced
        int km = 0;
        best = -1;
        for (int k = 0; k < 4; ++k)
            if (std::abs(lambda[k]) > best) { best = std::abs(lambda[k]); km = k; }
        Cplx c = std::abs(lambda[km]) / lambda[km];
        c *= std::sqrt(cnorm(mu) / cnorm(lambda));
        for (int k = 0; k < 4; ++k) {
            lambda[k] *= c;
            mu[k] /= c;
        }

        for (int i = 0; i < 4; ++i) covs[i].resize(4);
        for (int k = 0; k < 4; ++k) {
            const Cplx e1 = std::conj(lambda[k]); // E^1
            covs[0][k] = e1.real();
            covs[1][k] = e1.imag();
            covs[2][k] = mu[k].real(); // E^2
            covs[3][k] = mu[k].imag();
        }
        out.eps = out.eps_prime = 1;
    } else {
        throw ParabolicUnsupported("no adapted coframe at parabolic points");
    }

    out.rows = {};
    out.rows[0][0] = 1;
    out.rows[1][1] = 1;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) out.rows[2 + i][2 + j] = covs[i][j];

    // verify the normal form by substitution
    auto wedge_restr = [&](int i, int j) {
        RMat m(4, 4);
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                m(a, b) = covs[i][a] * covs[j][b] - covs[i][b] * covs[j][a];
        return m;
    };
    double res = 0;
    if (pt.label == PointLabel::Hyperbolic) {
        res = std::max((wedge_restr(0, 1) - m1).norm_inf(), (wedge_restr(2, 3) - m2).norm_inf());
    } else {
        const RMat w1 = wedge_restr(1, 3) + wedge_restr(0, 2); // e4^e6 + e3^e5
        const RMat w2 = wedge_restr(0, 3) - wedge_restr(1, 2); // e3^e6 - e4^e5
        res = std::max((w1 - m1).norm_inf(), (w2 - m2).norm_inf());
    }
    // J compatibility of the dual frame: J f3 = eps f4, J f5 = eps' f6
    {
        RMat cof(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) cof(i, j) = covs[i][j];
        const RMat dual = inverse(cof);
        auto colv = [&](int j) {
            std::vector<double> v(4);
            for (int i = 0; i < 4; ++i) v[i] = dual(i, j);
            return v;
        };
        auto diff = [&](const std::vector<double>& x, const std::vector<double>& y, int sg) {
            double d = 0;
            for (int i = 0; i < 4; ++i) d = std::max(d, std::abs(x[i] - sg * y[i]));
            return d;
        };
        res = std::max(res, diff(apply_j(sp, colv(0)), colv(1), out.eps));
        res = std::max(res, diff(apply_j(sp, colv(2)), colv(3), out.eps_prime));
    }
    out.residual = res;
    if (res > 1e-9)
        throw NormalFormFailure("normal-form residual " + std::to_string(res));
    return out;
}

Table4Constants table4_constants(const AdaptedCoframe& cf, const std::array<RMat, 2>& dtheta_full) {
    Table4Constants out;
    out.label = cf.label;
    RMat rows(6, 6);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) rows(i, j) = cf.rows[i][j];
    const RMat dual = inverse(rows); // columns W1, W2, F3..F6
    auto colv = [&](int j) {
        std::vector<double> v(6);
        for (int i = 0; i < 6; ++i) v[i] = dual(i, j);
        return v;
    };
    auto ev = [&](int which, const std::vector<double>& x, const std::vector<double>& y) {
        double s = 0;
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) s += dtheta_full[which](i, j) * x[i] * y[j];
        return s;
    };
    const auto w1 = colv(0), w2 = colv(1), f3 = colv(2), f4 = colv(3), f5 = colv(4), f6 = colv(5);
    if (cf.label == PointLabel::Hyperbolic) {
        // surviving slots after absorption; everything else is removable
        out.s = ev(0, f5, w2);
        out.t = ev(0, f6, w2);
        out.s_prime = ev(1, f3, w1);
        out.t_prime = ev(1, f4, w1);
    } else {
        auto cev = [&](const std::array<Cplx, 6>& x, const std::array<Cplx, 6>& y) {
            Cplx s = 0;
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j)
                    s += Cplx(dtheta_full[0](i, j), dtheta_full[1](i, j)) * x[i] * y[j];
            return s;
        };
        std::array<Cplx, 6> f1c{}, f2cb{}, w0b{};
        for (int i = 0; i < 6; ++i) {
            f1c[i] = 0.5 * Cplx(f3[i], -f4[i]);  // F1
            f2cb[i] = 0.5 * Cplx(f5[i], f6[i]);  // conj(F2)
            w0b[i] = 0.5 * Cplx(w1[i], w2[i]);   // conj(W0)
        }
        out.sigma = cev(f1c, w0b);
        out.tau = cev(f2cb, w0b);
    }
    return out;
}

} // namespace crcm
