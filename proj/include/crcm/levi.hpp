#pragma once

#include <array>

#include "crcm/exterior.hpp"

namespace crcm {

enum class PointLabel { Elliptic, Parabolic, Hyperbolic };
const char* label_name(PointLabel l);

using Sym2 = std::array<std::array<double, 2>, 2>;

/// Point data for classification: the model (D_x, J) plus the restricted
/// pair of 2-forms.  Construction validates J-invariance of both forms.
struct ConormalData {
    JSpace space;
    std::array<TwoForm, 2> dtheta;

    ConormalData(JSpace sp, TwoForm d1, TwoForm d2);
};

struct PointType {
    PointLabel label;
    Sym2 a_matrix;
    double det_value;
};

/// a^{ij} = G(dtheta^i, dtheta^j); throws DegenerateLevi when the span or
/// annihilator condition fails.
Sym2 conormal_matrix(const ConormalData& data);

PointType classify(const ConormalData& data);

/// Conormal action: dtheta^i -> sum_j (A^{-1})^i_j dtheta^j.
ConormalData gl2_action(const RMat& a2x2, const ConormalData& data);

struct NormalizeResult {
    RMat A;            // the group element applied (data_out = gl2_action(A, data))
    ConormalData data; // conormal matrix proportional to the case normal form
    bool tau_flipped;  // negative-definite elliptic input needed a tau flip
    double scale;      // positive factor against the normal form
};
NormalizeResult normalize_to_Ehat(const ConormalData& data);

/// Adapted coframe over the 6-dimensional tangent model: coordinates 0,1
/// transverse (theta-dual), 2..5 span D.  Rows 0,1 are the theta pair,
/// rows 2..5 carry e^3..e^6.
struct AdaptedCoframe {
    PointLabel label;
    std::array<std::array<double, 6>, 6> rows;
    int eps = 1, eps_prime = 1; // J f3 = eps f4, J f5 = eps' f6
    double residual = 0;        // normal-form residual after substitution

    /// e^3..e^6 restricted to D as a 4x4 matrix (row i = covector).
    RMat d_block() const;
};

AdaptedCoframe adapt_coframe(const ConormalData& normalized, unsigned seed = 0);

struct Table4Constants {
    PointLabel label;
    double s = 0, t = 0, s_prime = 0, t_prime = 0; // hyperbolic
    Cplx sigma, tau;                               // elliptic
};

/// First-order constants surviving absorption, read from the full
/// 6-dimensional dtheta pair (6x6 antisymmetric matrices in the model
/// coordinates of AdaptedCoframe).
Table4Constants table4_constants(const AdaptedCoframe& cf, const std::array<RMat, 2>& dtheta_full);

} // namespace crcm
