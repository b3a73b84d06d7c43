#include "crcm/lie.hpp"

#include <mutex>

namespace crcm {

AlgebraCase case_from_name(const std::string& s) {
    if (s == "hyperbolic") return AlgebraCase::Hyperbolic;
    if (s == "elliptic") return AlgebraCase::Elliptic;
    throw ValidationError("unknown case '" + s + "'");
}

namespace {

const Cplx I(0, 1);

CMat block6(int block, std::initializer_list<std::array<int, 2>> pos, std::initializer_list<Cplx> val) {
    CMat m(6, 6);
    auto it = val.begin();
    for (const auto& p : pos) m(3 * block + p[0], 3 * block + p[1]) = *it++;
    return m;
}

CMat mat3(std::initializer_list<std::array<int, 2>> pos, std::initializer_list<Cplx> val) {
    CMat m(3, 3);
    auto it = val.begin();
    for (const auto& p : pos) m(p[0], p[1]) = *it++;
    return m;
}

std::vector<double> vec_of(const CMat& m) {
    std::vector<double> v;
    v.reserve(size_t(2) * m.rows() * m.cols());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) {
            v.push_back(m(i, j).real());
            v.push_back(m(i, j).imag());
        }
    return v;
}

} // namespace

GradedBasis::GradedBasis(AlgebraCase c) : cas_(c), n_(c == AlgebraCase::Hyperbolic ? 6 : 3) {
    if (c == AlgebraCase::Hyperbolic) {
        // su(2,1) + su(2,1), each factor a 3x3 block.
        auto half = Cplx(0.5);
        mats_ = {
            block6(0, {{0, 2}}, {-1.0}),                 // eps1
            block6(1, {{0, 2}}, {-1.0}),                 // eps2
            block6(0, {{0, 1}, {1, 2}}, {half, I}),      // eps3
            block6(0, {{0, 1}, {1, 2}}, {half * I, 1.0}),// eps4
            block6(1, {{0, 1}, {1, 2}}, {half, I}),      // eps5
            block6(1, {{0, 1}, {1, 2}}, {half * I, 1.0}),// eps6
            block6(0, {{0, 0}, {1, 1}, {2, 2}}, {I / 3.0, -2.0 * I / 3.0, I / 3.0}), // V110
            block6(1, {{0, 0}, {1, 1}, {2, 2}}, {I / 3.0, -2.0 * I / 3.0, I / 3.0}), // V120
            block6(0, {{0, 0}, {2, 2}}, {-1.0, 1.0}),    // V210
            block6(1, {{0, 0}, {2, 2}}, {-1.0, 1.0}),    // V220
            block6(0, {{1, 0}, {2, 1}}, {1.0, -half * I}),// V111
            block6(1, {{1, 0}, {2, 1}}, {1.0, -half * I}),// V121
            block6(0, {{1, 0}, {2, 1}}, {I, -half}),     // V211
            block6(1, {{1, 0}, {2, 1}}, {I, -half}),     // V221
            block6(0, {{2, 0}}, {1.0}),                  // V112
            block6(1, {{2, 0}}, {1.0}),                  // V122
        };
        names_ = {"eps1", "eps2", "eps3", "eps4", "eps5", "eps6",
                  "V110", "V120", "V210", "V220",
                  "V111", "V121", "V211", "V221", "V112", "V122"};
    } else {
        // sl3(C) as a real Lie algebra.
        auto half = Cplx(0.5);
        mats_ = {
            mat3({{0, 2}}, {1.0}),                        // eps1
            mat3({{0, 2}}, {I}),                          // eps2
            mat3({{0, 1}, {1, 2}}, {half, I}),            // eps3
            mat3({{0, 1}, {1, 2}}, {-half * I, 1.0}),     // eps4
            mat3({{0, 1}, {1, 2}}, {-half * I, -1.0}),    // eps5
            mat3({{0, 1}, {1, 2}}, {half, -I}),           // eps6
            mat3({{0, 0}, {2, 2}}, {I, -I}),              // V10
            mat3({{0, 0}, {1, 1}, {2, 2}}, {-I / 3.0, 2.0 * I / 3.0, -I / 3.0}), // V20
            mat3({{0, 0}, {1, 1}, {2, 2}}, {1.0 / 3, -2.0 / 3, 1.0 / 3}),        // V30
            mat3({{0, 0}, {2, 2}}, {-1.0, 1.0}),          // V40
            mat3({{1, 0}, {2, 1}}, {1.0, -half * I}),     // V11
            mat3({{1, 0}, {2, 1}}, {I, half}),            // V21
            mat3({{1, 0}, {2, 1}}, {-I, half}),           // V31
            mat3({{1, 0}, {2, 1}}, {1.0, half * I}),      // V41
            mat3({{2, 0}}, {-1.0}),                       // V12
            mat3({{2, 0}}, {-I}),                         // V22
        };
        names_ = {"eps1", "eps2", "eps3", "eps4", "eps5", "eps6",
                  "V10", "V20", "V30", "V40",
                  "V11", "V21", "V31", "V41", "V12", "V22"};
    }
    grades_ = {-2, -2, -1, -1, -1, -1, 0, 0, 0, 0, 1, 1, 1, 1, 2, 2};

    // Coordinate extraction via the Gram system of the vectorized basis.
    const int dim = 2 * n_ * n_;
    bt_.resize(16);
    for (int i = 0; i < 16; ++i) bt_[i] = vec_of(mats_[i]);
    RMat gram(16, 16);
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) {
            double s = 0;
            for (int k = 0; k < dim; ++k) s += bt_[i][k] * bt_[j][k];
            gram(i, j) = s;
        }
    gram_fact_ = std::make_shared<Lu<double>>(gram);

    sparse_.resize(16);
    for (int k = 0; k < 16; ++k)
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                if (mats_[k](i, j) != Cplx(0)) sparse_[k].emplace_back(i, j, mats_[k](i, j));


    // Structure constants.
    sc_.resize(16);
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) {
            const CMat br = mats_[i] * mats_[j] - mats_[j] * mats_[i];
            sc_[i][j] = coords_of(br, 1e-8);
        }

    // closed-form exponentials for the fiber generators
    fiber_exp_.resize(16);
    for (int k = 6; k < 16; ++k) {
        FiberExp fe;
        fe.diagonal = true;
        for (int i = 0; i < n_ && fe.diagonal; ++i)
            for (int j = 0; j < n_; ++j)
                if (i != j && mats_[k](i, j) != Cplx(0)) { fe.diagonal = false; break; }
        if (fe.diagonal) {
            for (int i = 0; i < n_; ++i) fe.diag[i] = mats_[k](i, i);
        } else {
            fe.sq = mats_[k] * mats_[k];
            if ((fe.sq * mats_[k]).norm_inf() != 0.0)
                throw ValidationError("fiber generator is neither diagonal nor nilpotent");
        }
        fiber_exp_[k] = fe;
    }

    // Killing form from ad traces on the 16-dimensional coordinates.
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) {
            double s = 0;
            for (int a = 0; a < 16; ++a)
                for (int b = 0; b < 16; ++b) s += sc_[i][b][a] * sc_[j][a][b];
            killing_(i, j) = s;
        }
}

int GradedBasis::index_of(const std::string& name) const {
    for (int i = 0; i < 16; ++i)
        if (names_[i] == name) return i;
    throw ValidationError("unknown basis element '" + name + "'");
}

std::vector<int> GradedBasis::indices_of_grade(int g) const {
    std::vector<int> out;
    for (int i = 0; i < 16; ++i)
        if (grades_[i] == g) out.push_back(i);
    return out;
}

Coords GradedBasis::bracket_coords(const Coords& x, const Coords& y) const {
    Coords out{};
    for (int i = 0; i < 16; ++i) {
        if (x[i] == 0.0) continue;
        for (int j = 0; j < 16; ++j) {
            if (y[j] == 0.0) continue;
            const double f = x[i] * y[j];
            const Coords& c = sc_[i][j];
            for (int k = 0; k < 16; ++k) out[k] += f * c[k];
        }
    }
    return out;
}

Coords GradedBasis::coords_of(const CMat& m, double tol) const {
    std::vector<double> rhs(16, 0.0);
    for (int i = 0; i < 16; ++i) {
        double s = 0;
        const auto& bt = bt_[i];
        size_t k = 0;
        for (int r = 0; r < n_; ++r)
            for (int c = 0; c < n_; ++c) {
                const Cplx v = m(r, c);
                s += bt[k] * v.real() + bt[k + 1] * v.imag();
                k += 2;
            }
        rhs[i] = s;
    }
    const auto sol = gram_fact_->solve(rhs);
    Coords out{};
    for (int i = 0; i < 16; ++i) out[i] = sol[i];
    // reconstruction residual over the sparse basis entries
    std::array<Cplx, 36> rec{};
    for (int i = 0; i < 16; ++i) {
        if (out[i] == 0.0) continue;
        for (const auto& [r, c, v] : sparse_[i]) rec[size_t(r) * n_ + c] += v * out[i];
    }
    double res = 0;
    for (int r = 0; r < n_; ++r)
        for (int c = 0; c < n_; ++c)
            res = std::max(res, std::abs(rec[size_t(r) * n_ + c] - m(r, c)));
    if (res > tol * (1.0 + m.norm_inf()))
        throw NotInAlgebra("matrix is not in the algebra (residual " + std::to_string(res) + ")");
    return out;
}

CMat GradedBasis::matrix_of_coords(const Coords& x) const {
    CMat m(n_, n_);
    for (int i = 0; i < 16; ++i)
        if (x[i] != 0.0) m += mats_[i] * Cplx(x[i]);
    return m;
}

double GradedBasis::membership_residual(const CMat& m) const {
    try {
        coords_of(m, 0.0);
        return 0.0;
    } catch (const NotInAlgebra&) {
    }
    // recompute residual without throwing
    const auto v = vec_of(m);
    std::vector<double> rhs(16, 0.0);
    for (int i = 0; i < 16; ++i) {
        double s = 0;
        for (size_t k = 0; k < v.size(); ++k) s += bt_[i][k] * v[k];
        rhs[i] = s;
    }
    const auto sol = gram_fact_->solve(rhs);
    CMat rec(n_, n_);
    for (int i = 0; i < 16; ++i) rec += mats_[i] * Cplx(sol[i]);
    return (rec - m).norm_inf();
}

int GradedBasis::grading_element_index() const {
    return cas_ == AlgebraCase::Hyperbolic ? index_of("V210") : index_of("V40");
}

GroupElem GradedBasis::gsym() const {
    if (cas_ == AlgebraCase::Hyperbolic) {
        CMat s(6, 6);
        for (int k = 0; k < 3; ++k) {
            s(k, k + 3) = 1;
            s(k + 3, k) = 1;
        }
        return GroupElem(AlgebraCase::Hyperbolic, s, false);
    }
    // Complex conjugation; a representative of the non-identity component,
    // shifted from the literal swap by a rotation in H_Q^o.
    return GroupElem(AlgebraCase::Elliptic, CMat::identity(3), true);
}

RMat GradedBasis::ad_matrix_of(const GroupElem& g) const {
    RMat out(16, 16);
    for (int j = 0; j < 16; ++j) {
        const Coords cj = coords_of(g.ad_action(mats_[j]), 1e-7);
        for (int i = 0; i < 16; ++i) out(i, j) = cj[i];
    }
    return out;
}

CMat GradedBasis::exp_fiber(int idx, double t) const {
    const FiberExp& fe = fiber_exp_[idx];
    CMat out = CMat::identity(n_);
    if (fe.diagonal) {
        for (int i = 0; i < n_; ++i) out(i, i) = std::exp(fe.diag[i] * t);
        return out;
    }
    out += mats_[idx] * Cplx(t);
    out += fe.sq * Cplx(0.5 * t * t);
    return out;
}

const GradedBasis& basis(AlgebraCase c) {
    static std::once_flag once[2];
    static const GradedBasis* cache[2] = {nullptr, nullptr};
    const int k = c == AlgebraCase::Hyperbolic ? 0 : 1;
    std::call_once(once[k], [&] { cache[k] = new GradedBasis(c); });
    return *cache[k];
}

LieElem::LieElem(AlgebraCase c, const Coords& x) : cas(c), coords(x) {
    mat = basis(c).matrix_of_coords(x);
}

LieElem LieElem::from_matrix(AlgebraCase c, const CMat& m, double tol) {
    LieElem e;
    e.cas = c;
    e.coords = basis(c).coords_of(m, tol);
    e.mat = m;
    return e;
}

LieElem LieElem::basis_elem(AlgebraCase c, int index) {
    Coords x{};
    x[index] = 1.0;
    return LieElem(c, x);
}

LieElem LieElem::operator+(const LieElem& o) const {
    Coords x = coords;
    for (int i = 0; i < 16; ++i) x[i] += o.coords[i];
    return LieElem(cas, x);
}

LieElem LieElem::operator-(const LieElem& o) const {
    Coords x = coords;
    for (int i = 0; i < 16; ++i) x[i] -= o.coords[i];
    return LieElem(cas, x);
}

LieElem LieElem::operator*(double s) const {
    Coords x = coords;
    for (double& v : x) v *= s;
    return LieElem(cas, x);
}

double LieElem::norm() const {
    double s = 0;
    for (double v : coords) s += v * v;
    return std::sqrt(s);
}

GroupElem GroupElem::operator*(const GroupElem& o) const {
    if (cas != o.cas) throw CaseMismatch("group elements from different cases");
    const CMat rhs = conj ? crcm::conj(o.mat) : o.mat;
    return GroupElem(cas, mat * rhs, conj != o.conj);
}

GroupElem GroupElem::inverse() const {
    CMat inv = crcm::inverse(mat);
    if (conj) inv = crcm::conj(inv);
    return GroupElem(cas, inv, conj);
}

CMat GroupElem::ad_action(const CMat& x) const {
    const CMat arg = conj ? crcm::conj(x) : x;
    return mat * arg * crcm::inverse(mat);
}

LieElem bracket(const LieElem& x, const LieElem& y) {
    if (x.cas != y.cas) throw CaseMismatch("bracket of elements from different cases");
    const Coords c = basis(x.cas).bracket_coords(x.coords, y.coords);
    return LieElem(x.cas, c);
}

double killing(const LieElem& x, const LieElem& y) {
    if (x.cas != y.cas) throw CaseMismatch("killing of elements from different cases");
    const RMat& k = basis(x.cas).killing_matrix();
    double s = 0;
    for (int i = 0; i < 16; ++i) {
        if (x.coords[i] == 0.0) continue;
        for (int j = 0; j < 16; ++j) s += x.coords[i] * k(i, j) * y.coords[j];
    }
    return s;
}

GroupElem exp_elem(const LieElem& x) { return GroupElem(x.cas, expm(x.mat), false); }

RMat ad_matrix(const LieElem& x) {
    const GradedBasis& b = basis(x.cas);
    RMat out(16, 16);
    for (int j = 0; j < 16; ++j) {
        Coords ej{};
        ej[j] = 1.0;
        const Coords c = b.bracket_coords(x.coords, ej);
        for (int i = 0; i < 16; ++i) out(i, j) = c[i];
    }
    return out;
}

DualBasis dual_basis(AlgebraCase c) {
    const GradedBasis& b = basis(c);
    // B pairs g^{-} with g^{+}; solve against the positive-grade block
    // spanned by indices 10..15.
    RMat blk(6, 6);
    for (int p = 0; p < 6; ++p)
        for (int a = 0; a < 6; ++a) blk(a, p) = b.killing_entry(10 + p, a);
    Lu<double> lu = [&] {
        try {
            return Lu<double>(blk, 1e-12);
        } catch (const SingularMatrix&) {
            throw SingularPairing("Killing block g^- x g^+ is singular");
        }
    }();
    DualBasis out;
    for (int bidx = 0; bidx < 6; ++bidx) {
        std::vector<double> rhs(6, 0.0);
        rhs[bidx] = 1.0;
        const auto sol = lu.solve(rhs);
        Coords x{};
        for (int p = 0; p < 6; ++p) x[10 + p] = sol[p];
        out.dual[bidx] = LieElem(c, x);
        out.paper_rescaled[bidx] = out.dual[bidx] * (-6.0);
    }
    return out;
}

} // namespace crcm
