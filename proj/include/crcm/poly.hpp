#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "crcm/linalg.hpp"

namespace crcm {

/// Variable slots of a ConjPoly, in the fixed order used everywhere.
enum PolyVar : int { Z1 = 0, Z1B = 1, Z2 = 2, Z2B = 3, U1 = 4, U2 = 5 };

/// Evaluation point: zbar slots are implied by the z slots.
struct PolyPoint {
    Cplx z1, z2;
    double u1 = 0, u2 = 0;

    std::array<Cplx, 6> values() const {
        return {z1, std::conj(z1), z2, std::conj(z2), Cplx(u1), Cplx(u2)};
    }
};

/// Sparse polynomial in (z1, z1bar, z2, z2bar, u1, u2) with complex
/// coefficients, differentiated in the Wirtinger convention (z and zbar
/// independent).  Terms are kept in graded-lexicographic order so that
/// serialization is reproducible.
class ConjPoly {
public:
    using Exp = std::array<int, 6>;

    struct GrlexLess {
        bool operator()(const Exp& a, const Exp& b) const {
            int da = 0, db = 0;
            for (int v : a) da += v;
            for (int v : b) db += v;
            if (da != db) return da < db;
            return a < b;
        }
    };

    ConjPoly() = default;

    static ConjPoly constant(Cplx c);
    static ConjPoly var(PolyVar v);
    /// p + conj-mirror(p): real-valued by construction.
    static ConjPoly real_part_doubled(const ConjPoly& p) { return p + p.conj_mirror(); }

    ConjPoly& add_term(const Exp& e, Cplx coeff);

    ConjPoly operator+(const ConjPoly& o) const;
    ConjPoly operator-(const ConjPoly& o) const;
    ConjPoly operator*(const ConjPoly& o) const;
    ConjPoly operator*(Cplx s) const;

    ConjPoly diff(PolyVar v) const;
    Cplx eval(const PolyPoint& p) const;
    /// Evaluation against raw slot values; no conjugate-consistency check.
    Cplx eval_raw(const std::array<Cplx, 6>& vals) const;

    /// Swap z <-> zbar exponents and conjugate coefficients.
    ConjPoly conj_mirror() const;
    bool is_real_valued(double tol = 1e-12) const;

    bool empty() const { return terms_.empty(); }
    const std::map<Exp, Cplx, GrlexLess>& terms() const { return terms_; }

private:
    std::map<Exp, Cplx, GrlexLess> terms_;
    void prune();
};

/// Checks zbar slots equal conjugated z slots (used by manifold file input).
void check_conjugate_consistent(const std::array<Cplx, 6>& vals, double tol = 1e-12);

} // namespace crcm
