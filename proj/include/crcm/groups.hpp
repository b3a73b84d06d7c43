#pragma once

#include <optional>
#include <string>
#include <vector>

#include "crcm/levi.hpp"

namespace crcm {

enum class GroupId { Ghat, Gtilde, GFiberElliptic, GFiberHyperbolic };

/// Fiber group parameters.  Elliptic: the unipotent-by-scaling factor
/// together with a discrete label in Z_4.  Hyperbolic: one block per
/// quadric factor, |C_i| = 1 and A_i real.
struct FiberParamsElliptic {
    Cplx A{0}, C{1}, F{0}, H{0};
    int discrete = 0; // power of the rotation generator, 0..3
};
struct FiberParamsHyperbolic {
    Cplx B1{0}, B2{0}, C1{1}, C2{1};
    double A1 = 0, A2 = 0;
};

/// Realized matrices: elliptic acts on the quadruple (E0, E1bar, E2, E00);
/// hyperbolic is block-diagonal on two quadruples (e^a, E^a, Ebar^a, e^a_a).
CMat fiber_matrix(const FiberParamsElliptic& p);
CMat fiber_matrix(const FiberParamsHyperbolic& p); // 8x8 block diagonal

/// Membership with tolerance: the matrix re-parameterizes into the group's
/// form with residual below tol.
bool in_group(PointLabel cs, GroupId id, const CMat& mat, double tol = 1e-10);
double group_residual(PointLabel cs, GroupId id, const CMat& mat);

/// Gtilde elements act on the covectors (e^3..e^6); rho maps them onto
/// the conormal-pair action.
RMat rho(PointLabel cs, const RMat& gtilde_elem); // throws NotInGroup

struct GtildeGen {
    RMat mat;      // 4x4
    RMat rho_mat;  // 2x2 image
    std::string name;
};
std::vector<GtildeGen> gtilde_generators(PointLabel cs);

RMat random_ghat(PointLabel cs, std::uint64_t seed);
RMat random_gtilde(PointLabel cs, std::uint64_t seed);
CMat random_fiber(PointLabel cs, std::uint64_t seed);

/// Coframe for the 8-dimensional bundle model: real covector rows e^1..e^8.
/// Rows 0,1 are the tautological pair, 2..5 the D-covectors, 6,7 the fiber
/// duals.  The reference dtheta tensors ride along so adaptedness stays
/// checkable after group moves.
struct CoframeVec {
    PointLabel label;
    std::array<std::array<double, 8>, 8> rows;
    std::array<RMat, 2> dtheta; // 8x8 antisymmetric model tensors

    static CoframeVec model(PointLabel cs);
};

/// Residual of the Table 4 normal form (s, t / sigma, tau slots free).
double adapted_residual(const CoframeVec& cf);

struct GhatElem {
    RMat a; // 2x2, in Ghat
};

CoframeVec coframe_action(const GhatElem& g, const CoframeVec& cf);
CoframeVec coframe_action(const FiberParamsElliptic& g, const CoframeVec& cf);
CoframeVec coframe_action(const FiberParamsHyperbolic& g, const CoframeVec& cf);

/// Generator-level comparison of the fiber groups with exp(h_Q): nilpotency
/// degrees per parameter direction, dimension counts, identity behavior.
struct IsoCheckEntry {
    std::string name;
    double residual;
    bool pass;
};
std::vector<IsoCheckEntry> hq_isomorphism_check(PointLabel cs);

} // namespace crcm
