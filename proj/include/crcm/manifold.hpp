#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crcm/levi.hpp"
#include "crcm/poly.hpp"

namespace crcm {

/// Graph-type codimension-two submanifold of C^4: { Im w_a = F_a } with the
/// F_a real-valued polynomials of (z1, z1bar, z2, z2bar, u1, u2), u_a = Re w_a.
struct CRManifold {
    ConjPoly F1, F2;

    CRManifold(ConjPoly f1, ConjPoly f2);
};

/// Point in graph coordinates; v_a follows from F_a.
struct PointOnM {
    Cplx z1, z2;
    double u1 = 0, u2 = 0;

    PolyPoint poly_point() const { return PolyPoint{z1, z2, u1, u2}; }
};

/// Ambient coordinates are (x1, y1, x2, y2, s1, t1, s2, t2) with
/// z_k = x_k + i y_k and w_b = s_b + i t_b.
using Amb = std::array<double, 8>;

struct TangentData {
    std::array<Amb, 6> tm_basis;     // chart pushforward basis of T_pM
    std::array<Amb, 4> d_basis;      // adapted basis of D_p: (v, Jv, v', Jv')
    RMat j4;                         // J in d_basis (standard by construction)
    std::array<Amb, 2> conormal;     // theta^a as ambient covectors
    std::array<Amb, 2> drho;         // dRho^a as ambient covectors
};

TangentData tangent_data(const CRManifold& m, const PointOnM& p);

/// Pointwise Levi data for the classifier: the restricted dtheta pair over
/// the adapted D-basis with standard J and tau = 1.
ConormalData levi_at(const CRManifold& m, const PointOnM& p);

PointType point_type(const CRManifold& m, const PointOnM& p);

struct HermitianPair {
    CMat h1{2, 2}, h2{2, 2};
};
HermitianPair osculating_quadric(const CRManifold& m, const PointOnM& p);

struct ScanRecord {
    PointOnM p;
    std::optional<PointType> type;
    std::string error; // empty when classified
};
struct ScanReport {
    std::vector<ScanRecord> records;
    std::map<std::string, int> counts;
    bool strongly_uniform = false;
};
ScanReport uniformity_scan(const CRManifold& m, const std::vector<PointOnM>& pts);

/// Everything the first-order constants need: the classifier data plus the
/// full 6-dimensional dtheta pair over the basis (w1, w2, d_basis) with
/// theta^a(w_b) = delta.
struct FullLevi {
    ConormalData data;
    std::array<RMat, 2> dtheta_full; // 6x6
    std::array<Amb, 6> basis6;
};
FullLevi levi_full(const CRManifold& m, const PointOnM& p);

/// Built-in manifolds: quadric-a, quadric-b, quadric-c, perturbed-a
/// (cubic term), perturbed-c (quartic term).
CRManifold manifold_preset(const std::string& name);
std::vector<std::string> manifold_preset_names();

} // namespace crcm
