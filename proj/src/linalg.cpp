#include "crcm/linalg.hpp"

#include <algorithm>

namespace crcm {

CMat expm(const CMat& x) {
    const int n = x.rows();
    // Nilpotent fast path: series terminates within 6 terms.
    {
        CMat term = CMat::identity(n);
        CMat sum = term;
        for (int k = 1; k <= 6; ++k) {
            term = term * x;
            double fact = 1;
            for (int j = 2; j <= k; ++j) fact *= j;
            if (term.norm_inf() == 0.0) return sum;
            sum += term * Cplx(1.0 / fact);
        }
    }
    // Scaling and squaring.
    double nrm = x.norm_inf();
    int s = 0;
    while (nrm > 0.5) { nrm /= 2; ++s; }
    CMat y = x * Cplx(std::ldexp(1.0, -s));
    CMat term = CMat::identity(n);
    CMat sum = term;
    double fact = 1;
    for (int k = 1; k <= 18; ++k) {
        fact *= k;
        term = term * y;
        sum += term * Cplx(1.0 / fact);
    }
    for (int k = 0; k < s; ++k) sum = sum * sum;
    return sum;
}

std::vector<double> min_norm_solve(const RMat& a, const std::vector<double>& b) {
    // x = A^T (A A^T)^{-1} b
    RMat aat(a.rows(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.rows(); ++j) {
            double s = 0;
            for (int k = 0; k < a.cols(); ++k) s += a(i, k) * a(j, k);
            aat(i, j) = s;
        }
    auto y = Lu<double>(aat).solve(b);
    std::vector<double> x(a.cols(), 0.0);
    for (int k = 0; k < a.cols(); ++k)
        for (int i = 0; i < a.rows(); ++i) x[k] += a(i, k) * y[i];
    return x;
}

std::vector<Cplx> min_norm_solve(const CMat& a, const std::vector<Cplx>& b) {
    CMat aat(a.rows(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.rows(); ++j) {
            Cplx s = 0;
            for (int k = 0; k < a.cols(); ++k) s += a(i, k) * std::conj(a(j, k));
            aat(i, j) = s;
        }
    auto y = Lu<Cplx>(aat).solve(b);
    std::vector<Cplx> x(a.cols(), Cplx(0));
    for (int k = 0; k < a.cols(); ++k)
        for (int i = 0; i < a.rows(); ++i) x[k] += std::conj(a(i, k)) * y[i];
    return x;
}

void eig_sym2(const std::array<std::array<double, 2>, 2>& a,
              std::array<double, 2>& lam, std::array<std::array<double, 2>, 2>& rot) {
    const double p = a[0][0], q = a[0][1], r = a[1][1];
    const double tr = p + r;
    const double disc = std::sqrt(std::max(0.0, (p - r) * (p - r) + 4 * q * q));
    lam[0] = (tr + disc) / 2;
    lam[1] = (tr - disc) / 2;
    double vx, vy;
    if (std::abs(q) > 1e-300) {
        vx = lam[0] - r;
        vy = q;
    } else if (p >= r) {
        vx = 1; vy = 0;
    } else {
        vx = 0; vy = 1;
    }
    const double len = std::hypot(vx, vy);
    vx /= len; vy /= len;
    rot[0][0] = vx; rot[1][0] = vy;   // first eigenvector
    rot[0][1] = -vy; rot[1][1] = vx;  // second, orthogonal
}

std::vector<std::vector<double>> null_space(const RMat& a, double tol) {
    const int m = a.rows(), n = a.cols();
    RMat r = a;
    std::vector<int> pivot_col;
    int row = 0;
    for (int col = 0; col < n && row < m; ++col) {
        int p = row;
        double best = std::abs(r(row, col));
        for (int i = row + 1; i < m; ++i)
            if (std::abs(r(i, col)) > best) { best = std::abs(r(i, col)); p = i; }
        if (best <= tol) continue;
        if (p != row)
            for (int j = 0; j < n; ++j) std::swap(r(p, j), r(row, j));
        const double inv = 1.0 / r(row, col);
        for (int j = 0; j < n; ++j) r(row, j) *= inv;
        for (int i = 0; i < m; ++i) {
            if (i == row) continue;
            const double f = r(i, col);
            if (f == 0.0) continue;
            for (int j = 0; j < n; ++j) r(i, j) -= f * r(row, j);
        }
        pivot_col.push_back(col);
        ++row;
    }
    std::vector<bool> is_pivot(n, false);
    for (int c : pivot_col) is_pivot[c] = true;
    std::vector<std::vector<double>> basis;
    for (int free = 0; free < n; ++free) {
        if (is_pivot[free]) continue;
        std::vector<double> v(n, 0.0);
        v[free] = 1.0;
        for (size_t k = 0; k < pivot_col.size(); ++k) v[pivot_col[k]] = -r(int(k), free);
        basis.push_back(std::move(v));
    }
    return basis;
}

int rank_of(const RMat& a, double tol) {
    return a.cols() - int(null_space(a, tol).size());
}

} // namespace crcm
