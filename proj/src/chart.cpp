#include "crcm/chart.hpp"

#include <random>

#include "json.hpp"

namespace crcm {

namespace {

double mono(const std::array<double, 6>& x, const std::array<int, 6>& e) {
    double v = 1;
    for (int k = 0; k < 6; ++k)
        for (int j = 0; j < e[k]; ++j) v *= x[k];
    return v;
}

} // namespace

Coords ConnectionChart::delta_dir(const std::array<double, 6>& x, int dir) const {
    Coords out{};
    for (const DeltaTerm& t : delta)
        if (t.dir == dir) out[t.basis] += t.coeff * mono(x, t.exp);
    return out;
}

Coords ConnectionChart::delta_dir_deriv(const std::array<double, 6>& x, int dir, int nu) const {
    Coords out{};
    for (const DeltaTerm& t : delta) {
        if (t.dir != dir || t.exp[nu] == 0) continue;
        auto e = t.exp;
        e[nu] -= 1;
        out[t.basis] += t.coeff * t.exp[nu] * mono(x, e);
    }
    return out;
}

std::string ConnectionChart::to_json() const {
    nlohmann::json j;
    j["format"] = "crcm-chart-v1";
    j["case"] = case_name(cas);
    j["fd_step"] = fd_step;
    j["inner_step"] = inner_step;
    j["snap_tol"] = snap_tol;
    const GradedBasis& b = basis(cas);
    nlohmann::json terms = nlohmann::json::array();
    for (const DeltaTerm& t : delta) {
        nlohmann::json jt;
        jt["dir"] = t.dir;
        jt["basis"] = b.name_of(t.basis);
        jt["exp"] = t.exp;
        jt["coeff"] = t.coeff;
        terms.push_back(jt);
    }
    j["delta"] = terms;
    nlohmann::json order = nlohmann::json::array();
    for (int i = 6; i < 16; ++i) order.push_back(b.name_of(i));
    j["fiber_order"] = order;
    return j.dump(2);
}

ConnectionChart ConnectionChart::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw ParseError(e.what());
    }
    ConnectionChart c;
    try {
        if (j.value("format", "") != "crcm-chart-v1")
            throw ValidationError("unsupported chart format");
        c.cas = case_from_name(j.at("case").get<std::string>());
        c.fd_step = j.value("fd_step", 1e-4);
        c.inner_step = j.value("inner_step", 1e-2);
        c.snap_tol = j.value("snap_tol", 1e-9);
        const GradedBasis& b = basis(c.cas);
        for (const auto& jt : j.at("delta")) {
            DeltaTerm t;
            t.dir = jt.at("dir").get<int>();
            t.basis = b.index_of(jt.at("basis").get<std::string>());
            const auto e = jt.at("exp");
            for (int k = 0; k < 6; ++k) t.exp[k] = e.at(k).get<int>();
            t.coeff = jt.at("coeff").get<double>();
            if (t.dir < 0 || t.dir > 5) throw ValidationError("delta term dir out of range");
            c.delta.push_back(t);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(e.what());
    }
    return c;
}

ConnectionChart flat_chart(AlgebraCase cas) {
    const GradedBasis& b = basis(cas);
    ConnectionChart c;
    c.cas = cas;
    for (int i = 0; i < 6; ++i) {
        c.delta.push_back({i, i, {0, 0, 0, 0, 0, 0}, 1.0});
        for (int j = 0; j < 6; ++j) {
            const Coords br = b.struct_const(j, i);
            for (int k = 0; k < 16; ++k) {
                if (br[k] == 0.0) continue;
                std::array<int, 6> e{};
                e[j] = 1;
                c.delta.push_back({i, k, e, -0.5 * br[k]});
            }
        }
    }
    return c;
}

ConnectionChart perturbed_chart(AlgebraCase cas, std::uint64_t seed, double amp) {
    // Perturbations must stay inside the class of charts whose base coframe
    // satisfies the adapted structure equations: the distinguished 2-form
    // pattern of the theta pair is preserved exactly, curvature enters
    // through the remaining coframe slots and through arbitrary h_Q rows.
    ConnectionChart c = flat_chart(cas);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-amp, amp);
    std::uniform_int_distribution<int> pick_var(0, 5);
    auto random_poly_terms = [&](int dir, int basis_idx, double scale, int nterms) {
        for (int n = 0; n < nterms; ++n) {
            DeltaTerm t;
            t.dir = dir;
            t.basis = basis_idx;
            t.exp = {0, 0, 0, 0, 0, 0};
            const int deg = 1 + int(rng() % 2);
            for (int d = 0; d < deg; ++d) t.exp[pick_var(rng)] += 1;
            t.coeff = scale * u(rng);
            c.delta.push_back(t);
        }
    };
    if (cas == AlgebraCase::Hyperbolic) {
        // theta^3 += a(x) dx4 and theta^5 += c(x) dx6: wedges against the
        // partner covector vanish, so the normal-form pair is untouched
        random_poly_terms(3, 2, 1.0, 3); // eps3 component of delta(e_4)
        random_poly_terms(5, 4, 1.0, 3); // eps5 component of delta(e_6)
    } else {
        // E^1 += phi(x) E^2-bar: conj(E^1) ^ E^2 is exactly invariant
        for (int n = 0; n < 3; ++n) {
            std::array<int, 6> e{};
            const int deg = 1 + int(rng() % 2);
            for (int d = 0; d < deg; ++d) e[pick_var(rng)] += 1;
            const double re = u(rng), im = u(rng);
            c.delta.push_back({4, 2, e, re});  // Re phi dx5 on theta3
            c.delta.push_back({5, 2, e, im});  // Im phi dx6 on theta3
            c.delta.push_back({4, 3, e, im});  // Im phi dx5 on theta4
            c.delta.push_back({5, 3, e, -re}); // -Re phi dx6 on theta4
        }
    }
    // h_Q rows: moves within the space of good connections.  The elliptic
    // grading pair (V10, V40) would generate the Omega ^ Omega-bar slot that
    // integrable geometries do not carry, so it stays out.
    std::vector<int> hq_rows;
    for (int i = 6; i < 16; ++i) {
        if (cas == AlgebraCase::Elliptic) {
            const std::string& n = basis(cas).name_of(i);
            if (n == "V10" || n == "V40") continue;
        }
        hq_rows.push_back(i);
    }
    std::uniform_int_distribution<size_t> pick_hq(0, hq_rows.size() - 1);
    for (int dir = 0; dir < 6; ++dir)
        for (int n = 0; n < 3; ++n) random_poly_terms(dir, hq_rows[pick_hq(rng)], 1.0, 1);
    return c;
}

ConnectionChart symmetrize_chart(const ConnectionChart& chart) {
    const GradedBasis& b = basis(chart.cas);
    const RMat t = b.ad_matrix_of(b.gsym()); // involution
    // base map on epsilon coordinates (signed permutation)
    std::array<std::array<double, 6>, 6> sig{};
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) sig[i][j] = t(i, j);
    // delta'(x)(v) = 1/2 [ delta(x)(v) + T^{-1} delta(sig x)(sig v) ];
    // T is an involution so T^{-1} = T.  Polynomials compose with the
    // signed permutation exactly.
    ConnectionChart out = chart;
    out.delta.clear();
    auto push_scaled = [&](const DeltaTerm& t0, double scale) {
        DeltaTerm t1 = t0;
        t1.coeff *= scale;
        if (t1.coeff != 0.0) out.delta.push_back(t1);
    };
    for (const DeltaTerm& term : chart.delta) {
        push_scaled(term, 0.5);
        // the translated term: v -> sig v means redistribute over dirs;
        // x -> sig x substitutes variables; T applies to the target basis.
        // sig is a signed permutation: find the image slot of each dir.
        for (int dir2 = 0; dir2 < 6; ++dir2) {
            const double sv = sig[term.dir][dir2]; // coefficient of e_dir2 in sig(e_dir... )
            if (sv == 0.0) continue;
            // substitute x -> sig x in the monomial: x_k -> sum sig[k][l] x_l;
            // signed permutation keeps monomials monomial.
            std::array<int, 6> e2{};
            double sign = 1;
            bool ok = true;
            for (int k = 0; k < 6 && ok; ++k) {
                if (term.exp[k] == 0) continue;
                int img = -1;
                for (int l = 0; l < 6; ++l)
                    if (sig[k][l] != 0.0) { img = l; break; }
                if (img < 0) { ok = false; break; }
                e2[img] += term.exp[k];
                for (int c2 = 0; c2 < term.exp[k]; ++c2) sign *= sig[k][img];
            }
            if (!ok) continue;
            for (int k2 = 0; k2 < 16; ++k2) {
                const double tv = t(k2, term.basis); // T applied to the basis target
                if (tv == 0.0) continue;
                DeltaTerm nt;
                nt.dir = dir2;
                nt.basis = k2;
                nt.exp = e2;
                nt.coeff = 0.5 * term.coeff * sv * sign * tv;
                out.delta.push_back(nt);
            }
        }
    }
    return out;
}

std::vector<ChartPoint> default_test_points(std::uint64_t seed, int n_extra) {
    std::vector<ChartPoint> pts;
    pts.push_back(ChartPoint{}); // base origin, fiber identity
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (int n = 0; n < n_extra; ++n) {
        ChartPoint p;
        for (double& v : p.x) v = u(rng);
        for (double& v : p.t) v = u(rng);
        pts.push_back(p);
    }
    return pts;
}

std::array<double, 10> second_kind_coords(AlgebraCase cas, const CMat& g,
                                          std::array<double, 10> guess) {
    const GradedBasis& b = basis(cas);
    std::array<double, 10> t = guess;
    for (int iter = 0; iter < 50; ++iter) {
        // current product and its fiber Maurer-Cartan columns
        const int n = b.matrix_dim();
        CMat prod = CMat::identity(n);
        std::vector<CMat> suffix(11, CMat::identity(n));
        for (int k = 9; k >= 0; --k)
            suffix[k] = expm(b.matrix_of(6 + k) * Cplx(t[k])) * suffix[k + 1];
        prod = suffix[0];
        const CMat m = inverse(prod) * g;
        const CMat diff = m - CMat::identity(n);
        if (diff.norm_inf() < 1e-13) return t;
        // solve sum dt_k Xi_k = diff in coordinates, restricted to h_Q
        Coords rhs{};
        rhs = b.coords_of(diff, 1e-2); // near-identity: log approx error is quadratic
        RMat sys(16, 10);
        for (int k = 0; k < 10; ++k) {
            const CMat xi = inverse(suffix[k]) * b.matrix_of(6 + k) * suffix[k];
            const Coords xc = b.coords_of(xi, 1e-7);
            for (int r = 0; r < 16; ++r) sys(r, k) = xc[r];
        }
        std::vector<double> rv(16);
        for (int r = 0; r < 16; ++r) rv[r] = rhs[r];
        // least squares via normal equations
        RMat ata(10, 10);
        std::vector<double> atb(10, 0.0);
        for (int i = 0; i < 10; ++i) {
            for (int j = 0; j < 10; ++j) {
                double s = 0;
                for (int r = 0; r < 16; ++r) s += sys(r, i) * sys(r, j);
                ata(i, j) = s;
            }
            for (int r = 0; r < 16; ++r) atb[i] += sys(r, i) * rv[r];
        }
        const auto dt = Lu<double>(ata).solve(atb);
        double step = 0;
        for (int k = 0; k < 10; ++k) {
            t[k] += dt[k];
            step = std::max(step, std::abs(dt[k]));
        }
        if (step < 1e-14) return t;
    }
    throw ValidationError("second-kind coordinate solve did not converge");
}

} // namespace crcm
