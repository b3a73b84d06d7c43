#include "crcm/exterior.hpp"

namespace crcm {

JSpace JSpace::standard(double tau) {
    JSpace sp;
    sp.J = RMat(4, 4);
    sp.J(1, 0) = 1; sp.J(0, 1) = -1; // J e1 = e2, J e2 = -e1
    sp.J(3, 2) = 1; sp.J(2, 3) = -1;
    sp.tau = tau;
    return sp;
}

bool JSpace::has_standard_j(double tol) const {
    const JSpace ref = standard();
    return (J - ref.J).norm_inf() <= tol;
}

TwoForm::TwoForm(RMat coeffs) : m(std::move(coeffs)) {
    if (m.rows() != 4 || m.cols() != 4) throw SizeMismatch("TwoForm wants 4x4");
    if ((m + m.transpose()).norm_inf() > 1e-10)
        throw ValidationError("TwoForm coefficients must be antisymmetric");
}

double TwoForm::operator()(const std::vector<double>& x, const std::vector<double>& y) const {
    double s = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) s += m(i, j) * x[i] * y[j];
    return s;
}

TwoForm TwoForm::wedge(int i, int j) {
    RMat m(4, 4);
    m(i - 1, j - 1) = 1;
    m(j - 1, i - 1) = -1;
    return TwoForm(m);
}

bool TwoForm::j_invariant(const JSpace& sp, double tol) const {
    const RMat pulled = sp.J.transpose() * m * sp.J;
    return (pulled - m).norm_inf() <= tol;
}

std::array<TwoForm, 4> lambda2C_basis(const JSpace& space) {
    if (!space.has_standard_j())
        throw NonStandardJ("lambda2C_basis assumes J e1 = e2, J e3 = e4");
    const TwoForm e12 = TwoForm::wedge(1, 2), e34 = TwoForm::wedge(3, 4);
    const TwoForm e24 = TwoForm::wedge(2, 4), e13 = TwoForm::wedge(1, 3);
    const TwoForm e14 = TwoForm::wedge(1, 4), e23 = TwoForm::wedge(2, 3);
    return {
        (e12 + e34) * 0.5, // xi^0
        (e12 - e34) * 0.5, // xi^1
        (e24 + e13) * 0.5, // xi^2
        (e14 - e23) * 0.5, // xi^3
    };
}

double g_pairing(const TwoForm& alpha, const TwoForm& beta, const JSpace& space) {
    if (space.tau == 0.0) throw ValidationError("tau must be nonzero");
    const RMat& a = alpha.m;
    const RMat& b = beta.m;
    // Wedge coefficient against e1^e2^e3^e4, normalized so the (xi^i)
    // basis has pairing matrix exactly diag(1,-1,-1,-1).
    const double shuffle = a(0, 1) * b(2, 3) + a(2, 3) * b(0, 1)
                         - a(0, 2) * b(1, 3) - a(1, 3) * b(0, 2)
                         + a(0, 3) * b(1, 2) + a(1, 2) * b(0, 3);
    return 2.0 * shuffle / space.tau;
}

TwoForm pullback(const RMat& a, const TwoForm& alpha) {
    return TwoForm(a.transpose() * alpha.m * a);
}

Cplx det_c(const RMat& a) {
    // Complex 2x2 matrix of A in the basis (f1, f2), f1 = e1 - i e2,
    // f2 = e3 - i e4; valid when A commutes with the standard J.
    auto entry = [&](int block_r, int block_c) {
        const int r = 2 * block_r, c = 2 * block_c;
        return Cplx(a(r, c), a(r + 1, c));
    };
    const Cplx m00 = entry(0, 0), m01 = entry(0, 1), m10 = entry(1, 0), m11 = entry(1, 1);
    return m00 * m11 - m01 * m10;
}

} // namespace crcm
