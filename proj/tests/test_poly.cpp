#include "doctest.h"

#include <random>

#include "crcm/poly.hpp"

using namespace crcm;

namespace {

// central differences with one Richardson step, treating z1 = x + iy
Cplx fd_wirtinger_z1(const ConjPoly& p, const PolyPoint& at, double h) {
    auto val = [&](double dx, double dy) {
        PolyPoint q = at;
        q.z1 += Cplx(dx, dy);
        return p.eval(q);
    };
    auto d_at = [&](double step) {
        const Cplx fx = (val(step, 0) - val(-step, 0)) / (2 * step);
        const Cplx fy = (val(0, step) - val(0, -step)) / (2 * step);
        return 0.5 * (fx - Cplx(0, 1) * fy); // d/dz = (d/dx - i d/dy)/2
    };
    return (d_at(h / 2) * 4.0 - d_at(h)) / 3.0;
}

} // namespace

TEST_CASE("monomial rule: d/dz1 of z1 z1bar is z1bar") {
    const ConjPoly p = ConjPoly::var(Z1) * ConjPoly::var(Z1B);
    const ConjPoly d = p.diff(Z1);
    CHECK(d.terms().size() == 1);
    const auto& [e, c] = *d.terms().begin();
    CHECK(e == ConjPoly::Exp{0, 1, 0, 0, 0, 0});
    CHECK(c == Cplx(1.0));
}

TEST_CASE("|z1|^2 at 1+i evaluates to 2") {
    const ConjPoly p = ConjPoly::var(Z1) * ConjPoly::var(Z1B);
    PolyPoint pt;
    pt.z1 = Cplx(1, 1);
    CHECK(p.eval(pt) == Cplx(2.0));
}

TEST_CASE("eval rejects conjugate-inconsistent raw slots") {
    std::array<Cplx, 6> vals{Cplx(1, 1), Cplx(1, 1), 0, 0, 0, 0}; // z1bar wrong
    CHECK_THROWS_AS(check_conjugate_consistent(vals), ConjugateMismatch);
}

TEST_CASE("second mixed partials of a degree-4 polynomial match finite differences") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    // random real-valued degree-4 polynomial
    ConjPoly raw;
    for (int t = 0; t < 12; ++t) {
        ConjPoly::Exp e{};
        int deg = 0;
        for (int k = 0; k < 6 && deg < 4; ++k) {
            e[k] = int(std::floor(3 * (u(rng) + 0.5))) % (5 - deg);
            deg += e[k];
        }
        raw.add_term(e, Cplx(u(rng), u(rng)));
    }
    const ConjPoly p = ConjPoly::real_part_doubled(raw);
    REQUIRE(p.is_real_valued());

    PolyPoint at;
    at.z1 = Cplx(0.3, -0.2);
    at.z2 = Cplx(-0.1, 0.4);
    at.u1 = 0.25;
    at.u2 = -0.15;

    const ConjPoly dz1 = p.diff(Z1);
    const ConjPoly d2 = dz1.diff(Z1B); // mixed d^2/dz1 dz1bar
    // d/dz1bar of (dp/dz1) via finite differences of dp/dz1 in z1:
    // f(z1, z1bar) with z1bar = conj(z1): d/dz1bar = conj-direction derivative.
    auto g = [&](double dx, double dy) {
        PolyPoint q = at;
        q.z1 += Cplx(dx, dy);
        return dz1.eval(q);
    };
    const double h = 1e-4;
    auto dbar_at = [&](double step) {
        const Cplx fx = (g(step, 0) - g(-step, 0)) / (2 * step);
        const Cplx fy = (g(0, step) - g(0, -step)) / (2 * step);
        return 0.5 * (fx + Cplx(0, 1) * fy); // d/dzbar = (d/dx + i d/dy)/2
    };
    const Cplx fd = (dbar_at(h / 2) * 4.0 - dbar_at(h)) / 3.0;
    const Cplx exact = d2.eval(at);
    CHECK(std::abs(fd - exact) <= 1e-7 * (1 + std::abs(exact)));

    // first derivative cross-check as well
    const Cplx fd1 = fd_wirtinger_z1(p, at, 1e-4);
    const Cplx exact1 = dz1.eval(at);
    CHECK(std::abs(fd1 - exact1) <= 1e-7 * (1 + std::abs(exact1)));
}

TEST_CASE("real-valued polynomials evaluate real at conjugate-consistent points") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 20; ++trial) {
        ConjPoly raw;
        for (int t = 0; t < 8; ++t) {
            ConjPoly::Exp e{};
            for (int k = 0; k < 6; ++k) e[k] = (std::abs(int(10 * u(rng))) % 3 == 0) ? 1 : 0;
            raw.add_term(e, Cplx(u(rng), u(rng)));
        }
        const ConjPoly p = ConjPoly::real_part_doubled(raw);
        PolyPoint at;
        at.z1 = Cplx(u(rng), u(rng));
        at.z2 = Cplx(u(rng), u(rng));
        at.u1 = u(rng);
        at.u2 = u(rng);
        const Cplx v = p.eval(at);
        CHECK(std::abs(v.imag()) <= 1e-12 * (1 + std::abs(v.real())));
    }
}

TEST_CASE("graded-lex term order is deterministic") {
    ConjPoly p;
    p.add_term({2, 0, 0, 0, 0, 0}, 1.0);
    p.add_term({0, 0, 0, 0, 0, 1}, 2.0);
    p.add_term({1, 1, 0, 0, 0, 0}, 3.0);
    std::vector<int> degs;
    for (const auto& [e, c] : p.terms()) {
        int d = 0;
        for (int v : e) d += v;
        degs.push_back(d);
    }
    CHECK(std::is_sorted(degs.begin(), degs.end()));
}
