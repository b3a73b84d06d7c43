#include "crcm/connection.hpp"

#include <cmath>
#include <map>
#include <set>

namespace crcm {

namespace {

const Cplx IU(0, 1);

using Combo = std::vector<std::pair<int, Cplx>>;

const Combo& comp_combo(CComp c) {
    static const std::array<Combo, 8> tbl = {
        Combo{{0, 1.0}, {1, IU}},    // W0  = psi^e1 + i psi^e2
        Combo{{2, 1.0}, {3, -IU}},   // W1  = psi^e3 - i psi^e4
        Combo{{4, 1.0}, {5, IU}},    // W2  = psi^e5 + i psi^e6
        Combo{{9, 1.0}, {6, -IU}},   // Psi^{I,0}  = psi^V40 - i psi^V10
        Combo{{7, 1.0}, {8, IU}},    // Psi^{II,0} = psi^V20 + i psi^V30
        Combo{{10, 1.0}, {11, IU}},  // Psi^{I,1}  = psi^V11 + i psi^V21
        Combo{{12, 1.0}, {13, IU}},  // Psi^{II,1} = psi^V31 + i psi^V41
        Combo{{14, 1.0}, {15, IU}},  // Psi^{V2}   = psi^V12 + i psi^V22
    };
    return tbl[int(c)];
}

const Combo& frame_combo(CSlot s) {
    static const std::array<Combo, 6> tbl = {
        Combo{{0, 0.5}, {1, -0.5 * IU}}, // f0 = (e1 - i e2)/2
        Combo{{2, 0.5}, {3, 0.5 * IU}},  // f1 = (e3 + i e4)/2
        Combo{{4, 0.5}, {5, -0.5 * IU}}, // f2 = (e5 - i e6)/2
        Combo{{0, 0.5}, {1, 0.5 * IU}},
        Combo{{2, 0.5}, {3, -0.5 * IU}},
        Combo{{4, 0.5}, {5, 0.5 * IU}},
    };
    return tbl[int(s)];
}

ChartPoint shifted(const ChartPoint& p, int nu, double h) {
    ChartPoint q = p;
    if (nu < 6)
        q.x[nu] += h;
    else
        q.t[nu - 6] += h;
    return q;
}

ChartPoint shifted_dir(const ChartPoint& p, const std::array<double, 16>& dir, double h) {
    ChartPoint q = p;
    for (int k = 0; k < 6; ++k) q.x[k] += h * dir[k];
    for (int k = 0; k < 10; ++k) q.t[k] += h * dir[6 + k];
    return q;
}

// Richardson-refined central difference of a matrix-valued map
template <class F>
RMat rich_diff(F&& f, double h) {
    const RMat d1 = (f(h) - f(-h)) * (0.5 / h);
    const RMat d2 = (f(h / 2) - f(-h / 2)) * (1.0 / h);
    return d2 * (4.0 / 3.0) - d1 * (1.0 / 3.0);
}

class GoodConnection final : public ConnectionField {
public:
    explicit GoodConnection(ConnectionChart chart)
        : chart_(std::move(chart)), b_(basis(chart_.cas)) {
        gsym_ad_inv_ = b_.ad_matrix_of(b_.gsym().inverse());
        // reject charts whose delta degenerates at the default sample points
        for (const ChartPoint& p : default_test_points(1)) {
            RMat eps_block(6, 6);
            for (int i = 0; i < 6; ++i) {
                const Coords d = chart_.delta_dir(p.x, i);
                for (int r = 0; r < 6; ++r) eps_block(r, i) = d[r];
            }
            try {
                Lu<double> lu(eps_block, 1e-10);
            } catch (const SingularMatrix&) {
                throw SingularDelta("grade(-2,-1) part of delta is singular");
            }
        }
    }

    AlgebraCase algebra_case() const override { return chart_.cas; }
    const ConnectionChart& chart() const override { return chart_; }
    int stage() const override { return 0; }

    RMat eval(const ChartPoint& p) const override {
        EvalData d;
        build(p, d);
        return d.psi;
    }

    RMat jacobian_dir(const ChartPoint& p, const std::array<double, 16>& dir,
                      double step) const override {
        if (step > 0) // honest numerical differentiation when requested
            return rich_diff([&](double s) { return eval(shifted_dir(p, dir, s)); }, step);
        EvalData d;
        build(p, d);
        RMat out(16, 16);
        for (int nu = 0; nu < 16; ++nu)
            if (dir[nu] != 0.0) out += jac_from(d, p, nu) * dir[nu];
        return out;
    }

    /// one evaluation pass producing psi and the analytic coordinate
    /// jacobians together
    RMat eval_full(const ChartPoint& p, std::array<RMat, 16>* jac) const {
        EvalData d;
        build(p, d);
        if (jac)
            for (int nu = 0; nu < 16; ++nu) (*jac)[nu] = jac_from(d, p, nu);
        return d.psi;
    }

private:
    struct EvalData {
        RMat psi{16, 16};
        RMat adhinv{16, 16};
        std::array<Coords, 10> xi{};   // fiber Maurer-Cartan columns
        std::array<Coords, 6> base{};  // Ad_{h^-1} delta columns
        bool sheet = false;
    };

    void build(const ChartPoint& p, EvalData& out) const {
        const int n = b_.matrix_dim();
        bool at_section = !p.sym_sheet;
        for (double tv : p.t)
            if (tv != 0.0) { at_section = false; break; }
        if (at_section) {
            // h = identity: the fiber part trivializes
            for (int i = 0; i < 16; ++i) out.adhinv(i, i) = 1.0;
            for (int k = 0; k < 10; ++k) out.xi[k][6 + k] = 1.0;
            for (int i = 0; i < 6; ++i) out.base[i] = chart_.delta_dir(p.x, i);
            out.sheet = false;
            for (int i = 0; i < 6; ++i)
                for (int r = 0; r < 16; ++r) out.psi(r, i) = out.base[i][r];
            for (int k = 0; k < 10; ++k) out.psi(6 + k, 6 + k) = 1.0;
            return;
        }
        std::vector<CMat> suffix(11, CMat::identity(n));
        for (int k = 9; k >= 0; --k)
            suffix[k] = expm(b_.matrix_of(6 + k) * Cplx(p.t[k])) * suffix[k + 1];
        std::vector<CMat> suffix_inv(11, CMat::identity(n));
        for (int k = 9; k >= 0; --k)
            suffix_inv[k] = suffix_inv[k + 1] * expm(b_.matrix_of(6 + k) * Cplx(-p.t[k]));
        const CMat& h = suffix[0];
        const CMat& hinv = suffix_inv[0];

        // coordinate matrix of Ad_{h^-1}
        for (int j = 0; j < 16; ++j) {
            const Coords cj = b_.coords_of(hinv * b_.matrix_of(j) * h, 1e-6);
            for (int i = 0; i < 16; ++i) out.adhinv(i, j) = cj[i];
        }
        for (int k = 0; k < 10; ++k) {
            const CMat xi = suffix_inv[k] * b_.matrix_of(6 + k) * suffix[k];
            out.xi[k] = b_.coords_of(xi, 1e-6);
        }
        for (int i = 0; i < 6; ++i) {
            const Coords dc = chart_.delta_dir(p.x, i);
            Coords c{};
            for (int r = 0; r < 16; ++r)
                for (int j = 0; j < 16; ++j) c[r] += out.adhinv(r, j) * dc[j];
            out.base[i] = c;
        }
        out.sheet = p.sym_sheet;
        for (int i = 0; i < 6; ++i)
            for (int r = 0; r < 16; ++r) out.psi(r, i) = out.base[i][r];
        for (int k = 0; k < 10; ++k)
            for (int r = 0; r < 16; ++r) out.psi(r, 6 + k) = out.xi[k][r];
        if (p.sym_sheet) out.psi = gsym_ad_inv_ * out.psi;
    }

    RMat jac_from(const EvalData& d, const ChartPoint& p, int nu) const {
        RMat out(16, 16);
        if (nu < 6) {
            for (int i = 0; i < 6; ++i) {
                const Coords dc = chart_.delta_dir_deriv(p.x, i, nu);
                for (int r = 0; r < 16; ++r) {
                    double s = 0;
                    for (int j = 0; j < 16; ++j) s += d.adhinv(r, j) * dc[j];
                    out(r, i) = s;
                }
            }
        } else {
            const int k = nu - 6;
            for (int i = 0; i < 6; ++i) {
                const Coords br = b_.bracket_coords(d.base[i], d.xi[k]);
                for (int r = 0; r < 16; ++r) out(r, i) = br[r];
            }
            for (int j = 0; j < 10; ++j) {
                if (k < j) continue; // t_k does not enter the suffix of Xi_j
                const Coords br = b_.bracket_coords(d.xi[j], d.xi[k]);
                for (int r = 0; r < 16; ++r) out(r, 6 + j) = br[r];
            }
        }
        if (d.sheet) out = gsym_ad_inv_ * out;
        return out;
    }

    ConnectionChart chart_;
    const GradedBasis& b_;
    RMat gsym_ad_inv_{16, 16};
};

// complex correction table used by the elliptic stages
using CTable = std::array<std::array<Cplx, 6>, 5>;
enum CA : int { AI0 = 0, AII0 = 1, AI1 = 2, AII1 = 3, AI2 = 4 };

SCoeffs realify(const CTable& sc) {
    // omega coefficients of the complex tautological components
    static const std::array<std::array<Cplx, 6>, 3> d = {{
        {1.0, IU, 0.0, 0.0, 0.0, 0.0},
        {0.0, 0.0, 1.0, -IU, 0.0, 0.0},
        {0.0, 0.0, 0.0, 0.0, 1.0, IU},
    }};
    SCoeffs out;
    out.cas = AlgebraCase::Elliptic;
    auto tvec = [&](int a) {
        std::array<Cplx, 6> t{};
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 6; ++k)
                t[k] += sc[a][i] * d[i][k] + sc[a][3 + i] * std::conj(d[i][k]);
        return t;
    };
    const auto t_i0 = tvec(AI0), t_ii0 = tvec(AII0), t_i1 = tvec(AI1), t_ii1 = tvec(AII1),
               t_v2 = tvec(AI2);
    for (int k = 0; k < 6; ++k) {
        out.tab[0][k] = -t_i0[k].imag(); // V10
        out.tab[1][k] = t_ii0[k].real(); // V20
        out.tab[2][k] = t_ii0[k].imag(); // V30
        out.tab[3][k] = t_i0[k].real();  // V40
        out.tab[4][k] = t_i1[k].real();  // V11
        out.tab[5][k] = t_i1[k].imag();  // V21
        out.tab[6][k] = t_ii1[k].real(); // V31
        out.tab[7][k] = t_ii1[k].imag(); // V41
        out.tab[8][k] = t_v2[k].real();  // V12
        out.tab[9][k] = t_v2[k].imag();  // V22
    }
    return out;
}

// Formula registry driver.  With `names` set the evaluators are skipped and
// only the labels are collected (for listing and mutation targeting).
struct StageDriver {
    const StructureFns* f = nullptr;
    const StageOptions* opt = nullptr;
    const FnsProbe* probe = nullptr;
    int stage = 0;
    int idx = 0;
    std::vector<std::string>* names = nullptr;

    mutable std::map<int, std::pair<StructureFns, StructureFns>> probe_cache;

    const std::pair<StructureFns, StructureFns>& probe_tables(int i) const {
        auto it = probe_cache.find(i);
        if (it != probe_cache.end()) return it->second;
        std::array<double, 16> dir{};
        for (int r = 0; r < 16; ++r) dir[r] = f->inv(r, i);
        const double h = probe->step;
        auto [ins, ok] = probe_cache.emplace(i, std::pair(probe->at(dir, h), probe->at(dir, -h)));
        (void)ok;
        return ins->second;
    }
    /// central difference of a structure-function field along the
    /// fundamental frame direction i (0-based); zero without a probe
    template <class G>
    double frame_deriv(int i, G&& g) const {
        if (!probe) return 0.0;
        const auto& [fp, fm] = probe_tables(i);
        return (g(fp) - g(fm)) / (2 * probe->step);
    }
    template <class G>
    Cplx frame_deriv_c(int i, G&& g) const {
        if (!probe) return Cplx(0);
        const auto& [fp, fm] = probe_tables(i);
        return (g(fp) - g(fm)) / (2 * probe->step);
    }

    double mul() const {
        if (names) return 1.0;
        const Mutation* m = opt ? opt->mutation : nullptr;
        return (m && m->stage == stage && m->index == idx) ? m->factor : 1.0;
    }
    template <class Fn>
    void formula(const std::string& name, Fn&& fn) {
        if (names)
            names->push_back(name);
        else
            fn(mul());
        ++idx;
    }
};

// hq table indices for the hyperbolic case
enum HQ : int { V110 = 0, V120 = 1, V210 = 2, V220 = 3, V111 = 4, V121 = 5,
                V211 = 6, V221 = 7, V112 = 8, V122 = 9 };

/// Exact transformation of the frame-pair tables under a sub-correction
/// with table S: new components on the new fundamental frame.  `ds(i, a, k)`
/// supplies the frame-direction derivative e_i(S[a][k]) for the few entries
/// whose derivatives reach the slots the next formulas read; fiber
/// derivatives of S come from the equivariant transport law.
void cascade_tables(const GradedBasis& b, StructureFns& T, const SCoeffs& S,
                    const std::function<double(int, int, int)>& ds) {
    // transport law: V_A(S_j^B) as pointwise algebra in S
    auto transport = [&](int A, int j, int B) {
        double out = 0;
        const Coords& br_aj = b.struct_const(6 + A, j); // [V_A, eps_j]
        for (int jp = 0; jp < 6; ++jp)
            if (br_aj[jp] != 0.0) out += S.tab[B][jp] * br_aj[jp];
        for (int C = 0; C < 10; ++C) {
            if (S.tab[C][j] == 0.0) continue;
            const Coords& br_ac = b.struct_const(6 + A, 6 + C);
            out -= S.tab[C][j] * br_ac[6 + B];
        }
        return out;
    };
    std::array<RMat, 16> nd;
    for (int a = 0; a < 16; ++a) nd[a] = T.d[a];
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            if (i == j) continue;
            Coords c{};
            for (int dl = 0; dl < 16; ++dl) c[dl] = -T.d[dl](i, j);
            for (int B = 0; B < 10; ++B) {
                const double sjB = S.tab[B][j];
                if (sjB != 0.0) {
                    const Coords& br = b.struct_const(6 + B, i); // [V_B, eps_i]
                    for (int dl = 0; dl < 16; ++dl) c[dl] -= sjB * br[dl];
                }
                const double siB = S.tab[B][i];
                if (siB != 0.0) {
                    const Coords& br = b.struct_const(6 + B, j);
                    for (int dl = 0; dl < 16; ++dl) c[dl] += siB * br[dl];
                }
            }
            for (int A = 0; A < 10; ++A) {
                if (S.tab[A][i] == 0.0) continue;
                for (int B = 0; B < 10; ++B) {
                    if (S.tab[B][j] == 0.0) continue;
                    const Coords& br = b.struct_const(6 + A, 6 + B);
                    for (int dl = 0; dl < 16; ++dl) c[dl] += S.tab[A][i] * S.tab[B][j] * br[dl];
                }
            }
            for (int B = 0; B < 10; ++B) {
                // horizontal derivatives of S entering the bracket
                double term = (ds ? ds(i, B, j) : 0.0) - (ds ? ds(j, B, i) : 0.0);
                // fiber derivatives via the transport law
                for (int A = 0; A < 10; ++A) {
                    if (S.tab[A][i] != 0.0) term += S.tab[A][i] * transport(A, j, B);
                    if (S.tab[A][j] != 0.0) term -= S.tab[A][j] * transport(A, i, B);
                }
                c[6 + B] += term;
            }
            // components of the corrected form on the bracket
            for (int gamma = 0; gamma < 16; ++gamma) {
                double v = -c[gamma];
                if (gamma >= 6)
                    for (int k = 0; k < 6; ++k) v += S.tab[gamma - 6][k] * c[k];
                nd[gamma](i, j) = v;
            }
        }
    T.d = nd;
}

void accumulate(SCoeffs& total, const SCoeffs& part) {
    for (int a = 0; a < 10; ++a)
        for (int k = 0; k < 6; ++k) total.tab[a][k] += part.tab[a][k];
}

int sub_count(AlgebraCase, int stage) { return stage == 1 ? 1 : (stage == 2 ? 2 : 3); }

/// probe directions (0-based frame indices) whose derivative data the
/// cascade after the given sub-correction needs
std::vector<int> probe_dirs(AlgebraCase cas, int stage, int sub) {
    if (cas == AlgebraCase::Hyperbolic) {
        if (stage == 2 && sub == 0) return {2, 3, 4, 5};
        if (stage == 3 && sub == 1) return {2, 3, 4, 5};
        return {};
    }
    if (stage == 2 && sub == 0) return {2, 3, 4, 5};
    if (stage == 3 && sub == 0) return {2, 3, 4, 5};
    if (stage == 3 && sub == 1) return {2, 3, 4, 5};
    return {};
}

void hyperbolic_stage(StageDriver& drv, int sub, SCoeffs* s) {
    const StructureFns& f = *drv.f;
    auto dom = [&](int k, int i, int j) { return f.domega(k, i, j); };
    auto dV = [&](int a, int i, int j) { return f.d[6 + a](i - 1, j - 1); };
    auto set = [&](int a, int i1, double v) { s->tab[a][i1 - 1] = v; };

    if (drv.stage == 1) {
        drv.formula("6.26", [&](double m) { set(V210, 3, -0.5 * m * dom(1, 3, 1)); });
        drv.formula("6.27a", [&](double m) { set(V210, 4, -0.5 * m * dom(1, 4, 1)); });
        drv.formula("6.27b", [&](double m) { set(V220, 5, -0.5 * m * dom(2, 5, 2)); });
        drv.formula("6.27c", [&](double m) { set(V220, 6, -0.5 * m * dom(2, 6, 2)); });
        drv.formula("6.28a", [&](double m) { set(V110, 3, m * (-dom(3, 3, 4) - 0.5 * dom(1, 4, 1))); });
        drv.formula("6.28b", [&](double m) { set(V110, 4, m * (-dom(4, 3, 4) + 0.5 * dom(1, 3, 1))); });
        drv.formula("6.28c_sym", [&](double m) { set(V120, 5, m * (-dom(5, 5, 6) - 0.5 * dom(2, 6, 2))); });
        drv.formula("6.28d_sym", [&](double m) { set(V120, 6, m * (-dom(6, 5, 6) + 0.5 * dom(2, 5, 2))); });
        for (int j : {1, 3, 4})
            drv.formula("6.29a_j" + std::to_string(j),
                        [&](double m) { set(V120, j, 0.5 * m * (dom(6, j, 5) - dom(5, j, 6))); });
        for (int k : {2, 5, 6})
            drv.formula("6.29b_k" + std::to_string(k),
                        [&](double m) { set(V110, k, 0.5 * m * (dom(4, k, 3) - dom(3, k, 4))); });
        for (int j : {1, 3, 4})
            drv.formula("6.30_j" + std::to_string(j), [&](double m) {
                set(V220, j, -0.25 * m * (dom(5, j, 5) + dom(6, j, 6) + dom(2, j, 2)));
            });
        for (int k : {2, 5, 6})
            drv.formula("6.31_k" + std::to_string(k), [&](double m) {
                set(V210, k, -0.25 * m * (dom(3, k, 3) + dom(4, k, 4) + dom(1, k, 1)));
            });
        // under-determined block (6.32)-(6.35): minimum-norm solution
        std::array<double, 8> rhs{};
        const char* names[8] = {"6.32a", "6.32b", "6.33a", "6.33b",
                                "6.34a", "6.34b", "6.35a", "6.35b"};
        const double vals[8] = {dom(3, 3, 1), dom(3, 4, 1), dom(4, 1, 3), dom(4, 4, 1),
                                dom(5, 5, 2), dom(5, 6, 2), dom(6, 2, 5), dom(6, 6, 2)};
        for (int e = 0; e < 8; ++e)
            drv.formula(names[e], [&](double m) { rhs[e] = m * vals[e]; });
        if (!drv.names) {
            RMat a(8, 12);
            auto eq = [&](int e, int u1, double c1, int u2, double c2) {
                a(e, u1) = c1;
                a(e, u2) = c2;
            };
            eq(0, 1, 1, 6, -1);
            eq(1, 0, 1, 7, -1);
            eq(2, 0, 1, 4, 1);
            eq(3, 1, 1, 5, -1);
            eq(4, 3, 1, 10, -1);
            eq(5, 2, 1, 11, -1);
            eq(6, 2, 1, 8, 1);
            eq(7, 3, 1, 9, -1);
            std::vector<double> rv(rhs.begin(), rhs.end());
            const auto u = min_norm_solve(a, rv);
            const std::pair<int, int> slots[12] = {{V110, 1}, {V210, 1}, {V120, 2}, {V220, 2},
                                                   {V111, 3}, {V111, 4}, {V211, 3}, {V211, 4},
                                                   {V121, 5}, {V121, 6}, {V221, 5}, {V221, 6}};
            for (int q = 0; q < 12; ++q) set(slots[q].first, slots[q].second, u[q]);
        }
    } else if (drv.stage == 2) {
        if (sub == 0) {
            drv.formula("6.40", [&](double m) {
                const double v = 0.25 * m * dV(V110, 3, 4);
                set(V110, 1, v);
                set(V211, 4, v);
                set(V111, 3, -v);
            });
            drv.formula("6.41_sym", [&](double m) {
                const double v = 0.25 * m * dV(V120, 5, 6);
                set(V120, 2, v);
                if (drv.opt && drv.opt->eq641_literal) {
                    set(V221, 5, v);
                    set(V111, 6, -v);
                } else {
                    set(V221, 6, v);
                    set(V121, 5, -v);
                }
            });
        } else {
            drv.formula("6.42", [&](double m) {
                const double r = m * (dV(V110, 3, 1) + dV(V210, 4, 1));
                set(V211, 1, 2 * r / 5);
                set(V112, 4, -r / 5);
            });
            drv.formula("6.43", [&](double m) {
                const double r = m * (dV(V110, 4, 1) - dV(V210, 3, 1));
                set(V111, 1, 2 * r / 5);
                set(V112, 3, r / 5);
            });
            drv.formula("6.44_sym", [&](double m) {
                const double r = m * (dV(V120, 5, 2) + dV(V220, 6, 2));
                set(V221, 2, 2 * r / 5);
                set(V122, 6, -r / 5);
            });
            drv.formula("6.45", [&](double m) {
                const double r = m * (dV(V120, 6, 2) - dV(V220, 5, 2));
                set(V121, 2, 2 * r / 5);
                set(V122, 5, r / 5);
            });
        }
    } else if (drv.stage == 3) {
        if (sub == 0) {
            for (int j : {1, 3, 4})
                drv.formula("6.57_j" + std::to_string(j), [&](double m) {
                    set(V121, j, -m / 3 * (dom(6, j, 2) + dV(V120, j, 6) - dV(V220, j, 5)));
                });
            for (int j : {1, 3, 4})
                drv.formula("6.58_j" + std::to_string(j), [&](double m) {
                    set(V221, j, -m / 3 * (dom(5, j, 2) + dV(V120, j, 5) + dV(V220, j, 6)));
                });
            for (int k : {2, 5, 6})
                drv.formula("6.59_k" + std::to_string(k), [&](double m) {
                    set(V111, k, -m / 3 * (dom(4, k, 1) + dV(V110, k, 4) - dV(V210, k, 3)));
                });
            for (int k : {2, 5, 6})
                drv.formula("6.60_k" + std::to_string(k), [&](double m) {
                    set(V211, k, -m / 3 * (dom(3, k, 1) + dV(V110, k, 3) + dV(V210, k, 4)));
                });
        } else if (sub == 1) {
            drv.formula("6.61a", [&](double m) { set(V112, 3, -2.0 * m / 3 * dV(V111, 3, 4)); });
            drv.formula("6.61b", [&](double m) { set(V112, 4, 2.0 * m / 3 * dV(V211, 3, 4)); });
            drv.formula("6.62a", [&](double m) { set(V122, 5, -2.0 * m / 3 * dV(V121, 5, 6)); });
            drv.formula("6.62b_sym", [&](double m) { set(V122, 6, 2.0 * m / 3 * dV(V221, 5, 6)); });
            if (!drv.names) {
                // interlocking relations; the 2/3 coefficients assume them
                s->tab[V111][0] = -0.5 * s->tab[V112][2];
                s->tab[V211][0] = 0.5 * s->tab[V112][3];
                s->tab[V121][1] = -0.5 * s->tab[V122][4];
                s->tab[V221][1] = 0.5 * s->tab[V122][5];
            }
        } else {
            drv.formula("6.63a", [&](double m) { set(V112, 1, m * dV(V112, 3, 4)); });
            drv.formula("6.63b", [&](double m) { set(V122, 2, m * dV(V122, 5, 6)); });
            for (int j : {1, 3, 4})
                drv.formula("6.64_j" + std::to_string(j), [&](double m) {
                    set(V122, j, -0.25 * m * (2 * dV(V220, j, 2) + dV(V221, j, 5) + dV(V121, j, 6)));
                });
            for (int k : {2, 5, 6})
                drv.formula("6.65_k" + std::to_string(k), [&](double m) {
                    set(V112, k, -0.25 * m * (2 * dV(V210, k, 1) + dV(V211, k, 3) + dV(V111, k, 4)));
                });
        }
    }
}

void elliptic_stage(StageDriver& drv, int sub, CTable* sc) {
    const StructureFns& f = *drv.f;
    auto cv = [&](CComp c, CSlot a, CSlot b) { return f.cvalue(c, a, b); };
    const CSlot F0 = CSlot::F0, F1 = CSlot::F1, F2 = CSlot::F2;
    const CSlot FB[3] = {CSlot::F0b, CSlot::F1b, CSlot::F2b};
    auto set = [&](int a, int slot, Cplx v) { (*sc)[a][slot] = v; };

    if (drv.stage == 1) {
        drv.formula("6.80a", [&](double m) { set(AI0, 1, 0.5 * m * cv(CComp::W0, F0, F1)); });
        drv.formula("6.80b", [&](double m) { set(AI0, 2, 0.5 * m * cv(CComp::W0, F0, F2)); });
        drv.formula("6.81", [&](double m) {
            set(AII0, 1, m * (0.5 * cv(CComp::W0, F0, F2) - cv(CComp::W1, F1, F2)));
        });
        drv.formula("6.82", [&](double m) {
            set(AII0, 2, m * (-0.5 * cv(CComp::W0, F0, F1) - cv(CComp::W2, F1, F2)));
        });
        for (int j = 0; j < 3; ++j)
            drv.formula("6.83_j" + std::to_string(j), [&](double m) {
                set(AI0, 3 + j,
                    -0.25 * m *
                        (cv(CComp::W0, FB[j], F0) + cv(CComp::W1, FB[j], F1) +
                         cv(CComp::W2, FB[j], F2)));
            });
        for (int j = 0; j < 3; ++j)
            drv.formula("6.84_j" + std::to_string(j), [&](double m) {
                set(AII0, 3 + j, 0.5 * m * (cv(CComp::W2, FB[j], F1) - cv(CComp::W1, FB[j], F2)));
            });
        std::array<Cplx, 4> rhs{};
        const char* names[4] = {"6.85a", "6.85b", "6.86a", "6.86b"};
        const Cplx vals[4] = {cv(CComp::W1, F1, F0), cv(CComp::W1, F2, F0),
                              cv(CComp::W2, F0, F1), cv(CComp::W2, F2, F0)};
        for (int e = 0; e < 4; ++e)
            drv.formula(names[e], [&](double m) { rhs[e] = m * vals[e]; });
        if (!drv.names) {
            // unknowns: S0^I0, S0^II0, S1^II1, S2^I1, S1^I1, S2^II1; the
            // grade-1 labels of the second and fourth equations follow the
            // realized action (consistent with the residual relations)
            CMat a(4, 6);
            a(0, 0) = 1; a(0, 2) = -1;
            a(1, 1) = 1; a(1, 5) = -1;
            a(2, 1) = 1; a(2, 4) = 1;
            a(3, 0) = 1; a(3, 3) = -1;
            std::vector<Cplx> rv(rhs.begin(), rhs.end());
            const auto u = min_norm_solve(a, rv);
            set(AI0, 0, u[0]);
            set(AII0, 0, u[1]);
            set(AII1, 1, u[2]);
            set(AI1, 2, u[3]);
            set(AI1, 1, u[4]);
            set(AII1, 2, u[5]);
        }
    } else if (drv.stage == 2) {
        // the relevant grade-0 component is the non-grading one; the
        // grading component vanishes identically after stage 1
        const CComp C2 = drv.opt && drv.opt->eq641_literal ? CComp::PsiI0 : CComp::PsiII0;
        if (sub == 0) {
            drv.formula("6.90", [&](double m) {
                const Cplx v = 0.25 * m * cv(C2, F1, F2);
                set(AII0, 0, v);
                set(AII1, 2, v);
                set(AI1, 1, -v);
            });
        } else {
            // the conditions alternate the two grade-0 components, mirroring
            // the hyperbolic pair; minimum-norm resolution of 2x -+ y = r
            drv.formula("6.91", [&](double m) {
                const Cplx r = m * (cv(C2, F1, F0) + cv(CComp::PsiI0, F2, F0));
                set(AII1, 0, 2.0 * r / 5.0);
                set(AI2, 2, -r / 5.0);
            });
            drv.formula("6.92", [&](double m) {
                const Cplx r = m * (cv(C2, F2, F0) - cv(CComp::PsiI0, F1, F0));
                set(AI1, 0, 2.0 * r / 5.0);
                set(AI2, 1, r / 5.0);
            });
        }
    } else if (drv.stage == 3) {
        if (sub == 0) {
            for (int j = 0; j < 3; ++j)
                drv.formula("6.100_j" + std::to_string(j), [&](double m) {
                    set(AI1, 3 + j,
                        -m / 3.0 *
                            (cv(CComp::W2, FB[j], F0) + cv(CComp::PsiII0, FB[j], F2) -
                             cv(CComp::PsiI0, FB[j], F1)));
                });
            for (int j = 0; j < 3; ++j)
                drv.formula("6.101_j" + std::to_string(j), [&](double m) {
                    set(AII1, 3 + j,
                        -m / 3.0 *
                            (cv(CComp::W1, FB[j], F0) + cv(CComp::PsiII0, FB[j], F1) +
                             cv(CComp::PsiI0, FB[j], F2)));
                });
        } else if (sub == 1) {
            drv.formula("6.102a",
                        [&](double m) { set(AI2, 1, -2.0 * m / 3 * cv(CComp::PsiI1, F1, F2)); });
            drv.formula("6.102b_sym",
                        [&](double m) { set(AI2, 2, 2.0 * m / 3 * cv(CComp::PsiII1, F1, F2)); });
            if (!drv.names) {
                (*sc)[AI1][0] = -0.5 * (*sc)[AI2][1];
                (*sc)[AII1][0] = 0.5 * (*sc)[AI2][2];
            }
        } else {
            drv.formula("6.103", [&](double m) { set(AI2, 0, m * cv(CComp::PsiV2, F1, F2)); });
            for (int j = 0; j < 3; ++j)
                drv.formula("6.104_j" + std::to_string(j), [&](double m) {
                    set(AI2, 3 + j,
                        -0.25 * m *
                            (2.0 * cv(CComp::PsiI0, FB[j], F0) + cv(CComp::PsiII1, FB[j], F1) +
                             cv(CComp::PsiI1, FB[j], F2)));
                });
        }
    }
}

class CorrectedField final : public ConnectionField {
public:
    CorrectedField(FieldPtr inner, int stage, StageOptions opt)
        : inner_(std::move(inner)), stage_(stage), opt_(std::move(opt)) {
        if (opt_.mutation && opt_.mutation->stage != stage_) opt_.mutation = nullptr;
    }

    AlgebraCase algebra_case() const override { return inner_->algebra_case(); }
    const ConnectionChart& chart() const override { return inner_->chart(); }
    int stage() const override { return stage_; }

    /// The correction functions are the stage formulas on the fiber
    /// identity section, extended along the fiber by the equivariant
    /// transport S(x, h) = N_h S(x, e) M_h^{-1} with M, N the grade blocks
    /// of Ad_{h^{-1}}.  This is the closed-form integral of the derivative
    /// law along fiber directions.
    /// with_feedback controls the horizontal-derivative corrections of the
    /// later stages.  The entries those corrections live in never reach the
    /// condition slots through their own derivatives, so the jacobian path
    /// can skip them; eval must keep them.
    SCoeffs s_table(const ChartPoint& p, bool with_feedback = true) const {
        ChartPoint sec = p;
        sec.t = {};
        sec.sym_sheet = false;
        const StructureFns fns = structure_fns(*inner_, sec, -1, 6);
        FnsProbe probe;
        probe.step = chart().inner_step;
        probe.at = [this, &sec](const std::array<double, 16>& dir, double h) {
            return structure_fns(*inner_, shifted_dir(sec, dir, h), -1, 6);
        };
        const bool use_probe = with_feedback && stage_ >= 2;
        SCoeffs s = stage_S(algebra_case(), stage_, fns, opt_, use_probe ? &probe : nullptr);
        const double snap = chart().snap_tol;
        for (auto& row : s.tab)
            for (double& v : row)
                if (std::abs(v) < snap) v = 0.0;
        bool at_section = !p.sym_sheet;
        for (double tv : p.t)
            if (tv != 0.0) at_section = false;
        if (at_section) return s;

        const GradedBasis& b = basis(algebra_case());
        GroupElem h(algebra_case(), CMat::identity(b.matrix_dim()), false);
        for (int k = 0; k < 10; ++k)
            if (p.t[k] != 0.0) h.mat = h.mat * b.exp_fiber(6 + k, p.t[k]);
        if (p.sym_sheet) h = h * b.gsym();
        const RMat adinv = b.ad_matrix_of(h.inverse());
        RMat m(6, 6), n(10, 10);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) m(i, j) = adinv(i, j);
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < 10; ++j) n(i, j) = adinv(6 + i, 6 + j);
        const RMat minv = inverse(m);
        SCoeffs out;
        out.cas = s.cas;
        for (int a = 0; a < 10; ++a)
            for (int i = 0; i < 6; ++i) {
                double acc = 0;
                for (int c = 0; c < 10; ++c)
                    for (int j = 0; j < 6; ++j) acc += n(a, c) * s.tab[c][j] * minv(j, i);
                out.tab[a][i] = acc;
            }
        return out;
    }

    RMat eval(const ChartPoint& p) const override {
        const SCoeffs s = s_table(p);
        RMat psi = inner_->eval(p);
        apply_rows(s, psi, psi);
        return psi;
    }

    /// product rule: d(L psi) = dL psi + L dpsi, with the inner derivative
    /// analytic at the bottom of the chain; only the correction entries are
    /// differenced
    RMat jacobian_dir(const ChartPoint& p, const std::array<double, 16>& dir,
                      double step) const override {
        const double h = step > 0 ? step : chart().inner_step;
        const SCoeffs s = s_table(p);
        const SCoeffs sp = s_table(shifted_dir(p, dir, h), false);
        const SCoeffs sm = s_table(shifted_dir(p, dir, -h), false);
        const RMat psi_in = inner_->eval(p);
        RMat out = inner_->jacobian_dir(p, dir, step);
        apply_rows(s, out, out); // L * dpsi
        for (int a = 0; a < 10; ++a)
            for (int i = 0; i < 6; ++i) {
                const double ds = (sp.tab[a][i] - sm.tab[a][i]) / (2 * h);
                if (ds == 0.0) continue;
                for (int c = 0; c < 16; ++c) out(6 + a, c) -= ds * psi_in(i, c);
            }
        return out;
    }

private:
    static void apply_rows(const SCoeffs& s, const RMat& in, RMat& out) {
        // out rows 6.. get the correction based on in's epsilon rows; safe
        // when in and out alias because the epsilon rows are untouched
        for (int a = 0; a < 10; ++a)
            for (int i = 0; i < 6; ++i) {
                const double v = s.tab[a][i];
                if (v == 0.0) continue;
                for (int c = 0; c < 16; ++c) out(6 + a, c) -= v * in(i, c);
            }
    }

    FieldPtr inner_;
    int stage_;
    StageOptions opt_;
};

} // namespace

FieldPtr good_connection(const ConnectionChart& chart) {
    return std::make_shared<GoodConnection>(chart);
}

double StructureFns::dpsi(const std::string& vname, int i, int j) const {
    return d[basis(cas).index_of(vname)](i - 1, j - 1);
}

Cplx StructureFns::cvalue(CComp comp, CSlot a, CSlot b) const {
    Cplx s = 0;
    for (const auto& [alpha, ca] : comp_combo(comp))
        for (const auto& [i, ci] : frame_combo(a))
            for (const auto& [j, cj] : frame_combo(b)) s += ca * ci * cj * d[alpha](i, j);
    return s;
}

StructureFns structure_fns(const ConnectionField& field, const ChartPoint& p, double step,
                           int nframe) {
    StructureFns out;
    out.cas = field.algebra_case();
    out.at = p;
    RMat psi(16, 16);
    std::array<RMat, 16> dpsi_dir; // derivative of psi along fundamental field I
    const auto* good = dynamic_cast<const GoodConnection*>(&field);
    if (good && step <= 0) { // analytic coordinate jacobians in one pass
        std::array<RMat, 16> jac;
        psi = good->eval_full(p, &jac);
        const RMat inv = [&] {
            try {
                return inverse(psi);
            } catch (const SingularMatrix&) {
                throw SingularDelta("connection form is singular at the evaluation point");
            }
        }();
        for (int I = 0; I < nframe; ++I) {
            dpsi_dir[I] = RMat(16, 16);
            for (int nu = 0; nu < 16; ++nu) {
                const double c = inv(nu, I);
                if (c != 0.0) dpsi_dir[I] += jac[nu] * c;
            }
        }
        out.inv = inv;
    } else {
        psi = field.eval(p);
        const RMat inv = [&] {
            try {
                return inverse(psi);
            } catch (const SingularMatrix&) {
                throw SingularDelta("connection form is singular at the evaluation point");
            }
        }();
        for (int I = 0; I < nframe; ++I) {
            std::array<double, 16> dir{};
            for (int nu = 0; nu < 16; ++nu) dir[nu] = inv(nu, I);
            dpsi_dir[I] = field.jacobian_dir(p, dir, step);
        }
        out.inv = inv;
    }
    const RMat& inv = out.inv;
    std::vector<std::array<double, 16>> vals(size_t(nframe) * nframe);
    for (int I = 0; I < nframe; ++I)
        for (int J = 0; J < nframe; ++J) {
            auto& u = vals[size_t(I) * nframe + J];
            for (int r = 0; r < 16; ++r) {
                double s = 0;
                for (int c = 0; c < 16; ++c) s += dpsi_dir[I](r, c) * inv(c, J);
                u[r] = s;
            }
        }
    for (int alpha = 0; alpha < 16; ++alpha) {
        out.d[alpha] = RMat(16, 16);
        for (int I = 0; I < nframe; ++I)
            for (int J = 0; J < nframe; ++J)
                out.d[alpha](I, J) =
                    vals[size_t(I) * nframe + J][alpha] - vals[size_t(J) * nframe + I][alpha];
    }
    if (out.cas == AlgebraCase::Hyperbolic) {
        out.S = out.domega(1, 5, 2);
        out.T = out.domega(1, 6, 2);
        out.S_prime = out.domega(2, 3, 1);
        out.T_prime = out.domega(2, 4, 1);
    } else {
        out.sigma = out.cvalue(CComp::W0, CSlot::F1b, CSlot::F0b);
        out.tau = out.cvalue(CComp::W0, CSlot::F2b, CSlot::F0b);
    }
    return out;
}

double SCoeffs::max_abs() const {
    double m = 0;
    for (const auto& row : tab)
        for (double v : row) m = std::max(m, std::abs(v));
    return m;
}

namespace {

// run one sub-correction's formulas on the given tables
SCoeffs run_sub(AlgebraCase cas, int stage, int sub, const StructureFns& T,
                const StageOptions& opt, int* idx_io, std::vector<std::string>* names) {
    StageDriver drv;
    drv.f = &T;
    drv.opt = &opt;
    drv.stage = stage;
    drv.idx = idx_io ? *idx_io : 0;
    drv.names = names;
    SCoeffs part;
    part.cas = cas;
    if (cas == AlgebraCase::Hyperbolic) {
        hyperbolic_stage(drv, sub, &part);
    } else {
        CTable sc{};
        elliptic_stage(drv, sub, &sc);
        part = realify(sc);
        part.cas = cas;
    }
    if (idx_io) *idx_io = drv.idx;
    return part;
}

} // namespace

int stage_formula_count(AlgebraCase cas, int stage) {
    std::vector<std::string> names;
    StructureFns dummy;
    dummy.cas = cas;
    int idx = 0;
    StageOptions opt;
    for (int sub = 0; sub < sub_count(cas, stage); ++sub)
        run_sub(cas, stage, sub, dummy, opt, &idx, &names);
    return int(names.size());
}

std::string stage_formula_name(AlgebraCase cas, int stage, int index) {
    std::vector<std::string> names;
    StructureFns dummy;
    dummy.cas = cas;
    int idx = 0;
    StageOptions opt;
    for (int sub = 0; sub < sub_count(cas, stage); ++sub)
        run_sub(cas, stage, sub, dummy, opt, &idx, &names);
    return names.at(index);
}

SCoeffs stage_S(AlgebraCase cas, int stage, const StructureFns& fns, const StageOptions& opt,
                const FnsProbe* probe) {
    if (stage < 1 || stage > 3) throw ValidationError("stage must be 1, 2 or 3");
    if (fns.cas != cas) throw CaseMismatch("structure functions from the other case");
    const GradedBasis& b = basis(cas);
    const int nsub = sub_count(cas, stage);

    // probe states: tables at the point shifted along fundamental frame
    // directions, cascaded through the same sub-corrections
    struct PState {
        int dir;
        StructureFns plus, minus;
    };
    std::vector<PState> pstates;
    if (probe) {
        std::set<int> dirs;
        for (int sub = 0; sub + 1 < nsub; ++sub)
            for (int d : probe_dirs(cas, stage, sub)) dirs.insert(d);
        for (int d : dirs) {
            std::array<double, 16> dir{};
            for (int r = 0; r < 16; ++r) dir[r] = fns.inv(r, d);
            pstates.push_back({d, probe->at(dir, probe->step), probe->at(dir, -probe->step)});
        }
    }

    StructureFns T = fns;
    SCoeffs total;
    total.cas = cas;
    int idx = 0;
    for (int sub = 0; sub < nsub; ++sub) {
        const SCoeffs part = run_sub(cas, stage, sub, T, opt, &idx, nullptr);
        accumulate(total, part);
        if (sub + 1 == nsub) break;
        // derivative data for the cascade from the probe states
        std::function<double(int, int, int)> ds;
        std::map<int, std::pair<SCoeffs, SCoeffs>> dparts;
        if (probe) {
            int scratch_idx = 0;
            for (auto& ps : pstates) {
                (void)scratch_idx;
                int i1 = 0, i2 = 0;
                dparts.emplace(ps.dir, std::pair(run_sub(cas, stage, sub, ps.plus, opt, &i1, nullptr),
                                                 run_sub(cas, stage, sub, ps.minus, opt, &i2, nullptr)));
            }
            const double h = probe->step;
            ds = [dparts = std::move(dparts), h](int i, int a, int k) -> double {
                auto it = dparts.find(i);
                if (it == dparts.end()) return 0.0;
                return (it->second.first.tab[a][k] - it->second.second.tab[a][k]) / (2 * h);
            };
        }
        cascade_tables(b, T, part, ds);
        if (probe)
            for (auto& ps : pstates) {
                int i1 = 0, i2 = 0;
                const SCoeffs pp = run_sub(cas, stage, sub, ps.plus, opt, &i1, nullptr);
                const SCoeffs pm = run_sub(cas, stage, sub, ps.minus, opt, &i2, nullptr);
                cascade_tables(b, ps.plus, pp, nullptr);
                cascade_tables(b, ps.minus, pm, nullptr);
            }
    }
    return total;
}

FieldPtr apply_correction(FieldPtr inner, int stage, const StageOptions& opt) {
    const int expect = inner->stage() + 1;
    if (stage != expect)
        throw StagePreconditionFailed("stage " + std::to_string(stage) + " on a field of stage " +
                                      std::to_string(inner->stage()));
    return std::make_shared<CorrectedField>(std::move(inner), stage, opt);
}

namespace {

void push(std::vector<ConditionResidual>& out, const std::string& eq, double v) {
    for (auto& r : out)
        if (r.equation == eq) {
            r.residual = std::max(r.residual, std::abs(v));
            return;
        }
    out.push_back({eq, std::abs(v)});
}

void conditions_at(const StructureFns& f, int stage, std::vector<ConditionResidual>& out) {
    if (f.cas == AlgebraCase::Hyperbolic) {
        auto dom = [&](int k, int i, int j) { return f.domega(k, i, j); };
        auto dV = [&](int a, int i, int j) { return f.d[6 + a](i - 1, j - 1); };
        switch (stage) {
            case 0:
                for (int k : {3, 4}) push(out, "6.16", dom(k, 5, 6));
                for (int k : {5, 6}) push(out, "6.16", dom(k, 3, 4));
                break;
            case 1:
                push(out, "6.17", dom(1, 1, 3));
                push(out, "6.17", dom(1, 1, 4));
                push(out, "6.17", dom(2, 2, 5));
                push(out, "6.17", dom(2, 2, 6));
                push(out, "6.18", dom(3, 3, 4));
                push(out, "6.18", dom(4, 3, 4));
                push(out, "6.18", dom(5, 5, 6));
                push(out, "6.18", dom(6, 5, 6));
                for (int j : {1, 3, 4}) {
                    push(out, "6.19", dom(6, j, 5) - dom(5, j, 6));
                    push(out, "6.19", dom(5, j, 5) + dom(6, j, 6) + dom(2, j, 2));
                }
                for (int k : {2, 5, 6}) {
                    push(out, "6.20", dom(4, k, 3) - dom(3, k, 4));
                    push(out, "6.20", dom(3, k, 3) + dom(4, k, 4) + dom(1, k, 1));
                }
                push(out, "6.21", dom(3, 3, 1));
                push(out, "6.21", dom(4, 4, 1));
                push(out, "6.21", dom(3, 4, 1));
                push(out, "6.21", dom(4, 3, 1));
                push(out, "6.22", dom(5, 5, 2));
                push(out, "6.22", dom(6, 6, 2));
                push(out, "6.22", dom(5, 6, 2));
                push(out, "6.22", dom(6, 5, 2));
                for (int j : {1, 3, 4}) push(out, "6.25", dom(2, 2, j));
                for (int k : {2, 5, 6}) push(out, "6.25", dom(1, 1, k));
                for (int a : {V210, V220}) {
                    push(out, "6.25", dV(a, 3, 4));
                    push(out, "6.25", dV(a, 5, 6));
                }
                break;
            case 2:
                push(out, "6.36", dV(V110, 3, 4));
                push(out, "6.36", dV(V120, 5, 6));
                push(out, "6.37", dV(V110, 3, 1) + dV(V210, 4, 1));
                push(out, "6.37", dV(V210, 3, 1) - dV(V110, 4, 1));
                push(out, "6.38", dV(V120, 5, 2) + dV(V220, 6, 2));
                push(out, "6.38", dV(V220, 5, 2) - dV(V120, 6, 2));
                break;
            case 3:
                push(out, "6.46", dV(V111, 3, 4));
                push(out, "6.46", dV(V211, 3, 4));
                push(out, "6.46", dV(V121, 5, 6));
                push(out, "6.46", dV(V221, 5, 6));
                for (int j : {1, 3, 4}) {
                    push(out, "6.47", dom(6, j, 2) + dV(V120, j, 6) - dV(V220, j, 5));
                    push(out, "6.48", dom(5, j, 2) + dV(V120, j, 5) + dV(V220, j, 6));
                }
                for (int k : {2, 5, 6}) {
                    push(out, "6.49", dom(4, k, 1) + dV(V110, k, 4) - dV(V210, k, 3));
                    push(out, "6.50", dom(3, k, 1) + dV(V110, k, 3) + dV(V210, k, 4));
                }
                push(out, "6.51", dV(V112, 3, 4));
                push(out, "6.51", dV(V122, 5, 6));
                for (int j : {1, 3, 4})
                    push(out, "6.52", 2 * dV(V220, j, 2) + dV(V221, j, 5) + dV(V121, j, 6));
                for (int k : {2, 5, 6})
                    push(out, "6.53", 2 * dV(V210, k, 1) + dV(V211, k, 3) + dV(V111, k, 4));
                break;
            default:
                throw ValidationError("stage out of range");
        }
    } else {
        auto cv = [&](CComp c, CSlot a, CSlot b) { return std::abs(f.cvalue(c, a, b)); };
        const CSlot F0 = CSlot::F0, F1 = CSlot::F1, F2 = CSlot::F2;
        const CSlot FB[3] = {CSlot::F0b, CSlot::F1b, CSlot::F2b};
        auto cvv = [&](CComp c, CSlot a, CSlot b) { return f.cvalue(c, a, b); };
        switch (stage) {
            case 0:
                push(out, "6.74", cv(CComp::W0, F0, CSlot::F0b));
                push(out, "6.74", cv(CComp::W1, CSlot::F1b, CSlot::F2b));
                push(out, "6.74", cv(CComp::W2, CSlot::F1b, CSlot::F2b));
                break;
            case 1:
                push(out, "6.75", cv(CComp::W0, F0, F1));
                push(out, "6.75", cv(CComp::W0, F0, F2));
                push(out, "6.75", cv(CComp::W1, F1, F2));
                push(out, "6.75", cv(CComp::W2, F1, F2));
                for (int j = 0; j < 3; ++j) {
                    push(out, "6.76", std::abs(cvv(CComp::W1, FB[j], F2) - cvv(CComp::W2, FB[j], F1)));
                    push(out, "6.76",
                         std::abs(cvv(CComp::W0, FB[j], F0) + cvv(CComp::W1, FB[j], F1) +
                                  cvv(CComp::W2, FB[j], F2)));
                }
                push(out, "6.77", cv(CComp::W1, F1, F0));
                push(out, "6.77", cv(CComp::W2, F2, F0));
                push(out, "6.77", cv(CComp::W1, F2, F0));
                push(out, "6.77", cv(CComp::W2, F1, F0));
                for (int j = 0; j < 3; ++j) push(out, "6.79", cv(CComp::W0, F0, FB[j]));
                push(out, "6.79", cv(CComp::PsiI0, F1, F2));
                push(out, "6.79", cv(CComp::PsiI0, CSlot::F1b, CSlot::F2b));
                break;
            case 2:
                push(out, "6.87", cv(CComp::PsiII0, F1, F2));
                push(out, "6.88",
                     std::abs(cvv(CComp::PsiII0, F1, F0) + cvv(CComp::PsiI0, F2, F0)));
                push(out, "6.88",
                     std::abs(cvv(CComp::PsiII0, F2, F0) - cvv(CComp::PsiI0, F1, F0)));
                break;
            case 3:
                push(out, "6.93", cv(CComp::PsiI1, F1, F2));
                push(out, "6.93", cv(CComp::PsiII1, F1, F2));
                for (int j = 0; j < 3; ++j) {
                    push(out, "6.94",
                         std::abs(cvv(CComp::W2, FB[j], F0) + cvv(CComp::PsiII0, FB[j], F2) -
                                  cvv(CComp::PsiI0, FB[j], F1)));
                    push(out, "6.95",
                         std::abs(cvv(CComp::W1, FB[j], F0) + cvv(CComp::PsiII0, FB[j], F1) +
                                  cvv(CComp::PsiI0, FB[j], F2)));
                    push(out, "6.96",
                         std::abs(2.0 * cvv(CComp::PsiI0, FB[j], F0) + cvv(CComp::PsiII1, FB[j], F1) +
                                  cvv(CComp::PsiI1, FB[j], F2)));
                }
                push(out, "6.96", cv(CComp::PsiV2, F1, F2));
                break;
            default:
                throw ValidationError("stage out of range");
        }
    }
}

} // namespace

std::vector<ConditionResidual> check_conditions(const ConnectionField& field, int stage,
                                                const std::vector<ChartPoint>& pts, double step) {
    std::vector<ConditionResidual> out;
    for (const ChartPoint& p : pts) {
        const StructureFns f = structure_fns(field, p, step, 6);
        conditions_at(f, stage, out);
    }
    return out;
}

double structure_equation_residual(const ConnectionField& field, const ChartPoint& p, double step) {
    const StructureFns f = structure_fns(field, p, step > 0 ? step : field.chart().fd_step);
    const GradedBasis& b = basis(field.algebra_case());
    double worst = 0;
    for (int I = 0; I < 16; ++I)
        for (int J = I + 1; J < 16; ++J) {
            const Coords& br = b.struct_const(I, J);
            for (int alpha = 0; alpha < 16; ++alpha)
                worst = std::max(worst, std::abs(f.d[alpha](I, J) + br[alpha]));
        }
    return worst;
}

double equivariance_61_residual(const ConnectionField& field, const ChartPoint& p,
                                const GroupElem& h) {
    const GradedBasis& b = basis(field.algebra_case());
    const int n = b.matrix_dim();
    auto translate = [&](const ChartPoint& q) {
        // fiber coordinates of h(q.t) * h
        CMat prod = CMat::identity(n);
        for (int k = 9; k >= 0; --k) prod = expm(b.matrix_of(6 + k) * Cplx(q.t[k])) * prod;
        ChartPoint out = q;
        out.t = second_kind_coords(field.algebra_case(), prod * h.mat, q.t);
        return out;
    };
    const ChartPoint pg = translate(p);
    const RMat psi_pg = field.eval(pg);
    const RMat adinv = b.ad_matrix_of(h.inverse());
    const RMat psi_p = field.eval(p);
    const double fd = field.chart().fd_step;
    double worst = 0;
    for (int nu = 0; nu < 16; ++nu) {
        // transport the coordinate direction through the right action
        std::array<double, 16> pushed{};
        {
            const ChartPoint qp = translate(shifted(p, nu, fd));
            const ChartPoint qm = translate(shifted(p, nu, -fd));
            for (int k = 0; k < 6; ++k) pushed[k] = (qp.x[k] - qm.x[k]) / (2 * fd);
            for (int k = 0; k < 10; ++k) pushed[6 + k] = (qp.t[k] - qm.t[k]) / (2 * fd);
        }
        for (int r = 0; r < 16; ++r) {
            double lhs = 0, rhs = 0;
            for (int c = 0; c < 16; ++c) {
                lhs += psi_pg(r, c) * pushed[c];
                rhs += adinv(r, c) * psi_p(c, nu);
            }
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    }
    return worst;
}

double fundamental_field_residual(const ConnectionField& field, const ChartPoint& p) {
    const GradedBasis& b = basis(field.algebra_case());
    const int n = b.matrix_dim();
    const double fd = field.chart().fd_step;
    const RMat psi = field.eval(p);
    double worst = 0;
    for (int k = 0; k < 10; ++k) {
        auto curve = [&](double s) {
            CMat prod = CMat::identity(n);
            for (int j = 9; j >= 0; --j) prod = expm(b.matrix_of(6 + j) * Cplx(p.t[j])) * prod;
            prod = prod * expm(b.matrix_of(6 + k) * Cplx(s));
            ChartPoint q = p;
            q.t = second_kind_coords(field.algebra_case(), prod, p.t);
            return q;
        };
        const ChartPoint qp = curve(fd), qm = curve(-fd);
        std::array<double, 16> v{};
        for (int j = 0; j < 10; ++j) v[6 + j] = (qp.t[j] - qm.t[j]) / (2 * fd);
        for (int r = 0; r < 16; ++r) {
            double s = 0;
            for (int c = 0; c < 16; ++c) s += psi(r, c) * v[c];
            const double want = (r == 6 + k) ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(s - want));
        }
    }
    return worst;
}

double equivariance_610_residual(FieldPtr base, int stage, const ChartPoint& p, int fiber_dir,
                                 const StageOptions& opt) {
    const double fd = base->chart().fd_step;
    const auto corrected = std::dynamic_pointer_cast<const CorrectedField>(
        apply_correction(base, base->stage() + 1 == stage ? stage : base->stage() + 1, opt));
    if (!corrected || corrected->stage() != stage)
        throw ValidationError("equivariance check wants the next stage of the base field");
    auto sfield = [&](const ChartPoint& q) { return corrected->s_table(q); };
    const StructureFns f = structure_fns(*base, p, -1, 16);
    const SCoeffs s0 = sfield(p);
    // direction of the fundamental field V*_B
    const RMat psi = base->eval(p);
    const RMat inv = inverse(psi);
    std::array<double, 16> dir{};
    for (int r = 0; r < 16; ++r) dir[r] = inv(r, 6 + fiber_dir);
    auto along = [&](double h) {
        ChartPoint q = p;
        for (int k = 0; k < 6; ++k) q.x[k] += h * dir[k];
        for (int k = 0; k < 10; ++k) q.t[k] += h * dir[6 + k];
        return sfield(q);
    };
    const SCoeffs sp = along(fd), sm = along(-fd), sp2 = along(fd / 2), sm2 = along(-fd / 2);
    double worst = 0;
    for (int a = 0; a < 10; ++a)
        for (int i = 0; i < 6; ++i) {
            const double d1 = (sp.tab[a][i] - sm.tab[a][i]) / (2 * fd);
            const double d2 = (sp2.tab[a][i] - sm2.tab[a][i]) / fd;
            const double lhs = (4 * d2 - d1) / 3;
            double rhs = 0;
            for (int j = 0; j < 6; ++j) rhs += s0.tab[a][j] * (-f.d[j](6 + fiber_dir, i));
            for (int c = 0; c < 10; ++c)
                rhs -= s0.tab[c][i] * (-f.d[6 + a](6 + fiber_dir, 6 + c));
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    return worst;
}

double gsym_residual(const ConnectionField& field, const ChartPoint& p) {
    const GradedBasis& b = basis(field.algebra_case());
    const RMat adinv = b.ad_matrix_of(b.gsym().inverse());
    ChartPoint pg = p;
    pg.sym_sheet = !p.sym_sheet;
    const RMat lhs = field.eval(pg);
    const RMat rhs = adinv * field.eval(p);
    return (lhs - rhs).norm_inf();
}

ObstructionReport tanaka_obstruction(const ConnectionField& field, const ChartPoint& p, bool full,
                                     bool require_normalized, double tol) {
    const AlgebraCase cas = field.algebra_case();
    const GradedBasis& b = basis(cas);
    const double fd = field.chart().fd_step;
    if (require_normalized) {
        for (int st = 1; st <= 3; ++st)
            for (const auto& r : check_conditions(field, st, {p}))
                if (r.residual > tol)
                    throw NotNormalized("condition " + r.equation + " residual " +
                                        std::to_string(r.residual));
    }
    const StructureFns f0 = structure_fns(field, p, -1, 6);
    ObstructionReport out;
    (void)fd;
    out.scalar = cas == AlgebraCase::Hyperbolic
                     ? f0.d[b.index_of("V112")](0, 2)
                     : std::abs(f0.cvalue(CComp::PsiV2, CSlot::F0, CSlot::F1));
    if (!full) return out;

    const DualBasis duals = dual_basis(cas);
    const RMat psi = field.eval(p);
    const RMat inv = inverse(psi);
    // derivative of the table entries d psi(eps_A, eps_B) along the dual
    // fundamental directions
    std::array<std::array<std::array<Coords, 6>, 6>, 6> dterm{}; // [A][B] per direction A
    for (int A = 0; A < 6; ++A) {
        std::array<double, 16> dir{};
        for (int r = 0; r < 16; ++r) {
            double s = 0;
            for (int c = 0; c < 16; ++c) s += inv(r, c) * duals.dual[A].coords[c];
            dir[r] = s;
        }
        auto table = [&](double h) {
            ChartPoint q = p;
            for (int k = 0; k < 6; ++k) q.x[k] += h * dir[k];
            for (int k = 0; k < 10; ++k) q.t[k] += h * dir[6 + k];
            return structure_fns(field, q, -1, 6);
        };
        const double h = field.chart().inner_step;
        const StructureFns fp = table(h), fm = table(-h);
        for (int B = 0; B < 6; ++B)
            for (int a2 = 0; a2 < 6; ++a2)
                for (int alpha = 0; alpha < 16; ++alpha)
                    dterm[A][B][a2][alpha] = (fp.d[alpha](a2, B) - fm.d[alpha](a2, B)) / (2 * h);
    }
    out.max_component = 0;
    for (int B = 0; B < 6; ++B) {
        Coords res{};
        for (int A = 0; A < 6; ++A) {
            // term 1: hat-eps^A (d psi(hat-eps_A, hat-eps_B))
            for (int alpha = 0; alpha < 16; ++alpha) res[alpha] += dterm[A][B][A][alpha];
            // term 2: -(1/2) d psi([eps^A, eps_B]_m-hat, hat-eps_A)
            Coords br{};
            Coords eb{};
            eb[B] = 1;
            br = b.bracket_coords(duals.dual[A].coords, eb);
            for (int i = 0; i < 6; ++i)
                if (br[i] != 0.0)
                    for (int alpha = 0; alpha < 16; ++alpha)
                        res[alpha] -= 0.5 * br[i] * f0.d[alpha](i, A);
            // right side: (1/2) [[eps^A, eps_B]_m, eps_A]
            Coords brm{};
            for (int i = 0; i < 6; ++i) brm[i] = br[i];
            Coords ea{};
            ea[A] = 1;
            const Coords rhs = b.bracket_coords(brm, ea);
            for (int alpha = 0; alpha < 16; ++alpha) res[alpha] -= 0.5 * rhs[alpha];
        }
        out.residual[B] = res;
        for (double v : res) out.max_component = std::max(out.max_component, std::abs(v));
    }
    if (cas == AlgebraCase::Hyperbolic) {
        out.scalar_component = std::abs(out.residual[2][b.index_of("V112")]);
    } else {
        out.scalar_component = std::hypot(out.residual[2][b.index_of("V12")],
                                          out.residual[2][b.index_of("V22")]);
    }
    return out;
}

FieldPtr StagePipeline::at(int stage) const {
    switch (stage) {
        case 0: return psi0;
        case 1: return psi1;
        case 2: return psi2;
        case 3: return psi3;
    }
    throw ValidationError("stage out of range");
}

StagePipeline normalize_stages(const ConnectionChart& chart, const StageOptions& opt) {
    StagePipeline out;
    out.psi0 = good_connection(chart);
    out.psi1 = apply_correction(out.psi0, 1, opt);
    out.psi2 = apply_correction(out.psi1, 2, opt);
    out.psi3 = apply_correction(out.psi2, 3, opt);
    return out;
}

} // namespace crcm
