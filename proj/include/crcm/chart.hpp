#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crcm/lie.hpp"

namespace crcm {

/// Point of the 16-dimensional chart base x fiber; `sym_sheet` marks the
/// translate by the discrete symmetry (h replaced by h * g_sym).
struct ChartPoint {
    std::array<double, 6> x{};
    std::array<double, 10> t{};
    bool sym_sheet = false;
};

struct DeltaTerm {
    int dir;               // base direction 0..5
    int basis;             // g_Q basis index 0..15
    std::array<int, 6> exp; // monomial in x1..x6
    double coeff;
};

/// Chart-level data for a good Cartan connection: the polynomial family
/// delta_x plus the numerical knobs.  The fiber is parameterized as the
/// ordered product exp(t_1 W_1) ... exp(t_10 W_10) over the h_Q basis
/// (indices 6..15 of the graded basis, in order).
struct ConnectionChart {
    AlgebraCase cas = AlgebraCase::Hyperbolic;
    std::vector<DeltaTerm> delta;
    double fd_step = 1e-4;    // reporting-level differentiation step
    double inner_step = 5e-3; // correction-level differentiation step
    double snap_tol = 1e-9;   // S entries below this are treated as exact zeros

    Coords delta_dir(const std::array<double, 6>& x, int dir) const;
    /// d/dx_nu of delta_dir
    Coords delta_dir_deriv(const std::array<double, 6>& x, int dir, int nu) const;

    std::string to_json() const;
    static ConnectionChart from_json(const std::string& text);
};

/// The model connection chart: delta_x = (left log-derivative of exp at
/// delta(x)) applied to the epsilon directions, which makes the resulting
/// connection exactly Maurer-Cartan (zero structure-equation residual).
ConnectionChart flat_chart(AlgebraCase cas);

/// Flat chart plus seeded random polynomial terms of degree <= 2 in every
/// component; amp controls the coefficient range.
ConnectionChart perturbed_chart(AlgebraCase cas, std::uint64_t seed, double amp = 0.2);

/// Average of the chart with its g_sym translate.
ConnectionChart symmetrize_chart(const ConnectionChart& chart);

/// Default verification points: the fiber identity plus seeded fiber points.
std::vector<ChartPoint> default_test_points(std::uint64_t seed, int n_extra = 3);

/// Ordered-product coordinates of a group element near the identity
/// (Newton solve); used to realize right translations in the chart.
std::array<double, 10> second_kind_coords(AlgebraCase cas, const CMat& g,
                                          std::array<double, 10> guess = {});

} // namespace crcm
