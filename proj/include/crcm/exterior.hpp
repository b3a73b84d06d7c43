#pragma once

#include <array>

#include "crcm/linalg.hpp"

namespace crcm {

/// 4-dimensional real vector space carrying a complex structure J and an
/// orientation 4-vector tau (one coefficient against e1^e2^e3^e4).
struct JSpace {
    RMat J;           // 4x4, J^2 = -I
    double tau = 1.0; // nonzero

    static JSpace standard(double tau = 1.0);
    bool has_standard_j(double tol = 1e-12) const; // J e1 = e2, J e3 = e4
};

/// 2-form on a JSpace, stored as the antisymmetric coefficient matrix
/// m[i][j] = alpha(e_i, e_j).
struct TwoForm {
    RMat m;

    TwoForm() : m(4, 4) {}
    explicit TwoForm(RMat coeffs);

    double operator()(const std::vector<double>& x, const std::vector<double>& y) const;
    static TwoForm wedge(int i, int j); // e^i ^ e^j (1-based indices)

    TwoForm operator+(const TwoForm& o) const { return TwoForm(m + o.m); }
    TwoForm operator-(const TwoForm& o) const { return TwoForm(m - o.m); }
    TwoForm operator*(double s) const { return TwoForm(m * s); }

    bool j_invariant(const JSpace& sp, double tol = 1e-12) const;
};

/// The orthonormal basis xi^0..xi^3 of the J-invariant 2-forms for a space
/// in the standard normal form; rejects non-standard J.
std::array<TwoForm, 4> lambda2C_basis(const JSpace& space);

/// Pairing G(alpha, beta) = (alpha ^ beta)(tau), normalized so that the
/// (xi^i) basis is exactly Lorentz-orthonormal diag(1,-1,-1,-1) and scaling
/// inversely in the tau coefficient.
double g_pairing(const TwoForm& alpha, const TwoForm& beta, const JSpace& space);

/// Pullback by a linear map: result(x, y) = alpha(Ax, Ay).
TwoForm pullback(const RMat& a, const TwoForm& alpha);

/// Complex determinant of a 4x4 real matrix commuting with the standard J,
/// in the complex basis (e1 - i e2, e3 - i e4).
Cplx det_c(const RMat& a);

} // namespace crcm
