#pragma once

#include <array>
#include <string>
#include <memory>
#include <vector>

#include "crcm/linalg.hpp"

namespace crcm {

enum class AlgebraCase { Hyperbolic, Elliptic };

inline const char* case_name(AlgebraCase c) {
    return c == AlgebraCase::Hyperbolic ? "hyperbolic" : "elliptic";
}
AlgebraCase case_from_name(const std::string& s);

class GradedBasis;
const GradedBasis& basis(AlgebraCase c);

using Coords = std::array<double, 16>;

/// Element of g_Q: matrix in the standard realization plus coordinates over
/// the 16-element graded basis.
struct LieElem {
    AlgebraCase cas;
    Coords coords{};
    CMat mat;

    LieElem() : cas(AlgebraCase::Hyperbolic) {}
    LieElem(AlgebraCase c, const Coords& x);
    static LieElem from_matrix(AlgebraCase c, const CMat& m, double tol = 1e-9);
    static LieElem basis_elem(AlgebraCase c, int index);
    static LieElem zero(AlgebraCase c) { return LieElem(c, Coords{}); }

    LieElem operator+(const LieElem& o) const;
    LieElem operator-(const LieElem& o) const;
    LieElem operator*(double s) const;
    double norm() const;
};

/// Group element; `conj` marks conjugate-linear action (the elliptic
/// symmetry component lives there).
struct GroupElem {
    AlgebraCase cas;
    CMat mat;
    bool conj = false;

    GroupElem() : cas(AlgebraCase::Hyperbolic) {}
    GroupElem(AlgebraCase c, CMat m, bool conj_flag = false)
        : cas(c), mat(std::move(m)), conj(conj_flag) {}

    GroupElem operator*(const GroupElem& o) const;
    GroupElem inverse() const;
    /// Ad_g X = g (conj^f X) g^{-1}
    CMat ad_action(const CMat& x) const;
};

/// The 16-element special basis with grades, structure constants, Killing
/// form, coordinate extraction and the distinguished discrete symmetry.
class GradedBasis {
public:
    explicit GradedBasis(AlgebraCase c);

    AlgebraCase algebra_case() const { return cas_; }
    int matrix_dim() const { return n_; }

    const CMat& matrix_of(int i) const { return mats_[i]; }
    int grade_of(int i) const { return grades_[i]; }
    const std::string& name_of(int i) const { return names_[i]; }
    int index_of(const std::string& name) const;
    std::vector<int> indices_of_grade(int g) const;

    /// Coordinates of [B_i, B_j].
    const Coords& struct_const(int i, int j) const { return sc_[i][j]; }
    Coords bracket_coords(const Coords& x, const Coords& y) const;

    Coords coords_of(const CMat& m, double tol = 1e-9) const;
    CMat matrix_of_coords(const Coords& x) const;
    double membership_residual(const CMat& m) const;

    double killing_entry(int i, int j) const { return killing_(i, j); }
    const RMat& killing_matrix() const { return killing_; }

    /// Grading element: ad acts as multiplication by the grade on its own
    /// simple factor (hyperbolic) / on everything (elliptic).
    int grading_element_index() const;

    GroupElem gsym() const;
    /// Coordinate matrix of Ad_g on the 16-dimensional basis.
    RMat ad_matrix_of(const GroupElem& g) const;

    /// exp(t * B_idx) for the fiber generators (idx in 6..15): closed form,
    /// every positive-grade generator is diagonal or nilpotent.
    CMat exp_fiber(int idx, double t) const;

private:
    AlgebraCase cas_;
    int n_;
    std::vector<CMat> mats_;
    std::vector<std::string> names_;
    std::vector<int> grades_;
    std::vector<std::array<Coords, 16>> sc_;
    RMat killing_{16, 16};
    // coordinate extraction: coords = gram^-1 * B^T vec(X)
    std::vector<std::vector<double>> bt_; // 16 x (2 n^2)
    std::shared_ptr<const Lu<double>> gram_fact_;
    struct FiberExp {
        bool diagonal;
        std::array<Cplx, 6> diag; // eigenvalues when diagonal
        CMat sq;                  // B^2 when nilpotent (B^3 = 0)
    };
    std::vector<FiberExp> fiber_exp_;
    // nonzero entries of each basis matrix, for cheap reconstruction
    std::vector<std::vector<std::tuple<int, int, Cplx>>> sparse_;
};

LieElem bracket(const LieElem& x, const LieElem& y);
double killing(const LieElem& x, const LieElem& y);
GroupElem exp_elem(const LieElem& x);
/// Matrix of ad(X) in basis coordinates.
RMat ad_matrix(const LieElem& x);

struct DualBasis {
    std::array<LieElem, 6> dual;          // B(dual[A], eps_B) = delta_AB
    std::array<LieElem, 6> paper_rescaled; // dual * (-6); matches the listed
                                           // hyperbolic elements
};
DualBasis dual_basis(AlgebraCase c);

} // namespace crcm
