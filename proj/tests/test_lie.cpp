#include "checks.hpp"

#include <algorithm>
#include <random>

#include "crcm/lie.hpp"

using namespace crcm;

namespace {

LieElem by_name(AlgebraCase c, const std::string& n) {
    return LieElem::basis_elem(c, basis(c).index_of(n));
}

LieElem random_elem(AlgebraCase c, std::mt19937_64& rng, double amp = 1.0) {
    std::uniform_real_distribution<double> u(-amp, amp);
    Coords x{};
    for (double& v : x) v = u(rng);
    return LieElem(c, x);
}

} // namespace

TEST_CASE("bracket table: hyperbolic row") {
    const AlgebraCase c = AlgebraCase::Hyperbolic;
    auto check_is = [&](const LieElem& e, const std::string& n, double coeff) {
        Coords want{};
        want[basis(c).index_of(n)] = coeff;
        for (int i = 0; i < 16; ++i) CHECK_NEAR(e.coords[i], want[i], 1e-12);
    };
    check_is(bracket(by_name(c, "eps3"), by_name(c, "eps4")), "eps1", -1);
    check_is(bracket(by_name(c, "eps5"), by_name(c, "eps6")), "eps2", -1);
    CHECK(bracket(by_name(c, "eps3"), by_name(c, "eps5")).norm() == 0.0);
    CHECK(bracket(by_name(c, "eps3"), by_name(c, "eps6")).norm() == 0.0);
    CHECK(bracket(by_name(c, "eps4"), by_name(c, "eps5")).norm() == 0.0);
    CHECK(bracket(by_name(c, "eps4"), by_name(c, "eps6")).norm() == 0.0);
    // grading element against a grade -1 vector
    check_is(bracket(by_name(c, "V210"), by_name(c, "eps3")), "eps3", -1);
}

TEST_CASE("bracket table: elliptic row") {
    const AlgebraCase c = AlgebraCase::Elliptic;
    auto check_is = [&](const LieElem& e, const std::string& n, double coeff) {
        Coords want{};
        want[basis(c).index_of(n)] = coeff;
        for (int i = 0; i < 16; ++i) CHECK_NEAR(e.coords[i], want[i], 1e-12);
    };
    check_is(bracket(by_name(c, "eps3"), by_name(c, "eps5")), "eps1", -1);
    check_is(bracket(by_name(c, "eps4"), by_name(c, "eps6")), "eps1", -1);
    check_is(bracket(by_name(c, "eps3"), by_name(c, "eps6")), "eps2", -1);
    check_is(bracket(by_name(c, "eps4"), by_name(c, "eps5")), "eps2", 1);
    CHECK(bracket(by_name(c, "eps3"), by_name(c, "eps4")).norm() == 0.0);
    CHECK(bracket(by_name(c, "eps5"), by_name(c, "eps6")).norm() == 0.0);
}

TEST_CASE("antisymmetry and case mismatch") {
    for (AlgebraCase c : {AlgebraCase::Hyperbolic, AlgebraCase::Elliptic})
        for (int i = 0; i < 16; ++i) {
            const LieElem x = LieElem::basis_elem(c, i);
            CHECK(bracket(x, x).norm() == 0.0);
        }
    CHECK_THROWS_AS(bracket(by_name(AlgebraCase::Hyperbolic, "eps1"),
                            by_name(AlgebraCase::Elliptic, "eps1")),
                    CaseMismatch);
}

TEST_CASE("grading: brackets respect degrees, both cases") {
    for (AlgebraCase c : {AlgebraCase::Hyperbolic, AlgebraCase::Elliptic}) {
        const GradedBasis& b = basis(c);
        for (int i = 0; i < 16; ++i)
            for (int j = 0; j < 16; ++j) {
                const int g = b.grade_of(i) + b.grade_of(j);
                const Coords br = b.struct_const(i, j);
                for (int k = 0; k < 16; ++k)
                    if (b.grade_of(k) != g) CHECK(std::abs(br[k]) < 1e-12);
                if (g > 2 || g < -2)
                    for (int k = 0; k < 16; ++k) CHECK(std::abs(br[k]) < 1e-12);
            }
    }
}

TEST_CASE("Jacobi identity on all basis triples") {
    for (AlgebraCase c : {AlgebraCase::Hyperbolic, AlgebraCase::Elliptic}) {
        const GradedBasis& b = basis(c);
        double worst = 0;
        for (int i = 0; i < 16; ++i)
            for (int j = 0; j < 16; ++j)
                for (int k = 0; k < 16; ++k) {
                    Coords ei{}, ej{}, ek{};
                    ei[i] = ej[j] = ek[k] = 1.0;
                    const Coords a = b.bracket_coords(ei, b.struct_const(j, k));
                    const Coords bb = b.bracket_coords(ej, b.struct_const(k, i));
                    const Coords cc = b.bracket_coords(ek, b.struct_const(i, j));
                    for (int m = 0; m < 16; ++m)
                        worst = std::max(worst, std::abs(a[m] + bb[m] + cc[m]));
                }
        CHECK(worst <= 1e-10);
    }
}

TEST_CASE("Killing anchors and grade pairing") {
    const AlgebraCase c = AlgebraCase::Hyperbolic;
    CHECK(killing(by_name(c, "V210"), by_name(c, "V210")) == doctest::Approx(12.0));
    CHECK(killing(by_name(c, "eps1"), by_name(c, "V112")) == doctest::Approx(-6.0));
    for (AlgebraCase cc : {AlgebraCase::Hyperbolic, AlgebraCase::Elliptic}) {
        const GradedBasis& b = basis(cc);
        for (int i = 0; i < 16; ++i)
            for (int j = 0; j < 16; ++j)
                if (b.grade_of(i) + b.grade_of(j) != 0)
                    CHECK(std::abs(b.killing_entry(i, j)) < 1e-10);
    }
}

TEST_CASE("dual basis") {
    for (AlgebraCase c : {AlgebraCase::Hyperbolic, AlgebraCase::Elliptic}) {
        const DualBasis d = dual_basis(c);
        for (int a = 0; a < 6; ++a)
            for (int bidx = 0; bidx < 6; ++bidx) {
                const double want = a == bidx ? 1.0 : 0.0;
                CHECK_NEAR(killing(d.dual[a], LieElem::basis_elem(c, bidx)), want, 1e-10);
            }
    }
    // the hyperbolic rescaled list
    const AlgebraCase c = AlgebraCase::Hyperbolic;
    const DualBasis d = dual_basis(c);
    const std::pair<std::string, double> expect[6] = {
        {"V112", 1}, {"V122", 1}, {"V111", -1}, {"V211", 1}, {"V121", -1}, {"V221", 1}};
    for (int a = 0; a < 6; ++a) {
        Coords want{};
        want[basis(c).index_of(expect[a].first)] = expect[a].second;
        for (int i = 0; i < 16; ++i)
            CHECK_NEAR(d.paper_rescaled[a].coords[i], want[i], 1e-10);
    }
    // in particular, the dual of eps1 is -(1/6) V112
    CHECK(d.dual[0].coords[basis(c).index_of("V112")] == doctest::Approx(-1.0 / 6));
}

TEST_CASE("exponential") {
    std::mt19937_64 rng(31);
    for (AlgebraCase c : {AlgebraCase::Hyperbolic, AlgebraCase::Elliptic}) {
        const GroupElem id = exp_elem(LieElem::zero(c));
        CHECK((id.mat - CMat::identity(basis(c).matrix_dim())).norm_inf() < 1e-14);

        for (int trial = 0; trial < 5; ++trial) {
            const LieElem x = random_elem(c, rng);
            const GroupElem g = exp_elem(x), ginv = exp_elem(x * -1.0);
            CHECK(((g * ginv).mat - CMat::identity(basis(c).matrix_dim())).norm_inf() < 1e-12);
        }
    }
    // nilpotency: exp(t V112) = I + t V112
    const AlgebraCase c = AlgebraCase::Hyperbolic;
    const LieElem v = by_name(c, "V112") * 0.7;
    CHECK((v.mat * v.mat).norm_inf() == 0.0);
    const GroupElem g = exp_elem(v);
    CHECK((g.mat - (CMat::identity(6) + v.mat)).norm_inf() < 1e-15);
}

TEST_CASE("ad matrix") {
    const AlgebraCase c = AlgebraCase::Hyperbolic;
    const GradedBasis& b = basis(c);
    // grading element: diagonal with the grades on its own factor
    const RMat ad = ad_matrix(by_name(c, "V210"));
    const std::vector<std::string> first_factor = {"eps1", "eps3", "eps4", "V110",
                                                   "V210", "V111", "V211", "V112"};
    for (int j = 0; j < 16; ++j) {
        const bool in_first = std::find(first_factor.begin(), first_factor.end(),
                                        b.name_of(j)) != first_factor.end();
        const double want = in_first ? double(b.grade_of(j)) : 0.0;
        CHECK_NEAR(ad(j, j), want, 1e-12);
        for (int i = 0; i < 16; ++i)
            if (i != j) CHECK_NEAR(ad(i, j), 0.0, 1e-12);
    }
    CHECK(ad_matrix(LieElem::zero(c)).norm_inf() == 0.0);

    // trace(ad X ad Y) == killing(X, Y) on random pairs
    std::mt19937_64 rng(37);
    for (AlgebraCase cc : {AlgebraCase::Hyperbolic, AlgebraCase::Elliptic})
        for (int trial = 0; trial < 20; ++trial) {
            const LieElem x = random_elem(cc, rng), y = random_elem(cc, rng);
            const RMat prod = ad_matrix(x) * ad_matrix(y);
            double tr = 0;
            for (int i = 0; i < 16; ++i) tr += prod(i, i);
            CHECK(tr == doctest::Approx(killing(x, y)).epsilon(1e-9));
        }
}

TEST_CASE("h_Q closure and Ad(exp) = exp(ad)") {
    std::mt19937_64 rng(41);
    for (AlgebraCase c : {AlgebraCase::Hyperbolic, AlgebraCase::Elliptic}) {
        const GradedBasis& b = basis(c);
        for (int i = 6; i < 16; ++i)
            for (int j = 6; j < 16; ++j) {
                const Coords br = b.struct_const(i, j);
                for (int k = 0; k < 6; ++k) CHECK(std::abs(br[k]) < 1e-12);
            }
        for (int trial = 0; trial < 5; ++trial) {
            const LieElem x = random_elem(c, rng, 1.0);
            const RMat lhs = b.ad_matrix_of(exp_elem(x));
            // exp of the 16x16 ad matrix via the complex expm
            const RMat adx = ad_matrix(x);
            CMat adc(16, 16);
            for (int i = 0; i < 16; ++i)
                for (int j = 0; j < 16; ++j) adc(i, j) = adx(i, j);
            const CMat rhs = expm(adc);
            double worst = 0;
            for (int i = 0; i < 16; ++i)
                for (int j = 0; j < 16; ++j)
                    worst = std::max(worst, std::abs(lhs(i, j) - rhs(i, j)));
            CHECK(worst <= 1e-8);
        }
    }
}

TEST_CASE("matrix membership: NotInAlgebra on junk") {
    CMat junk(6, 6);
    junk(0, 0) = 1.0; // not traceless within the su(2,1) block pattern
    CHECK_THROWS_AS(LieElem::from_matrix(AlgebraCase::Hyperbolic, junk), NotInAlgebra);
}

TEST_CASE("gsym is an involutive grade-preserving automorphism") {
    for (AlgebraCase c : {AlgebraCase::Hyperbolic, AlgebraCase::Elliptic}) {
        const GradedBasis& b = basis(c);
        const GroupElem g = b.gsym();
        const RMat t = b.ad_matrix_of(g);
        // involution
        const RMat t2 = t * t;
        CHECK((t2 - RMat::identity(16)).norm_inf() < 1e-12);
        // grade preserved
        for (int j = 0; j < 16; ++j)
            for (int i = 0; i < 16; ++i)
                if (b.grade_of(i) != b.grade_of(j)) CHECK(std::abs(t(i, j)) < 1e-12);
        // automorphism: T[x,y] = [Tx, Ty] on a few pairs
        std::mt19937_64 rng(43);
        for (int trial = 0; trial < 10; ++trial) {
            const LieElem x = random_elem(c, rng), y = random_elem(c, rng);
            auto apply = [&](const LieElem& e) {
                Coords out{};
                for (int i = 0; i < 16; ++i)
                    for (int j = 0; j < 16; ++j) out[i] += t(i, j) * e.coords[j];
                return LieElem(c, out);
            };
            const LieElem lhs = apply(bracket(x, y));
            const LieElem rhs = bracket(apply(x), apply(y));
            CHECK((lhs - rhs).norm() < 1e-10);
        }
    }
    // hyperbolic: factor swap on the epsilons
    const GradedBasis& b = basis(AlgebraCase::Hyperbolic);
    const RMat t = b.ad_matrix_of(b.gsym());
    CHECK(t(b.index_of("eps2"), b.index_of("eps1")) == doctest::Approx(1.0));
    CHECK(t(b.index_of("eps5"), b.index_of("eps3")) == doctest::Approx(1.0));
}
