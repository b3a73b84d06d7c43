#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <vector>

#include "crcm/errors.hpp"

namespace crcm {

using Cplx = std::complex<double>;

inline bool near(double a, double b, double tol = 1e-12) { return std::abs(a - b) <= tol; }

/// Dense row-major matrix, sized at runtime.  Everything in this project is
/// small (at most 16x16 real or 6x6 complex), so no blocking or views.
template <class T>
class Mat {
public:
    Mat() : r_(0), c_(0) {}
    Mat(int rows, int cols, T fill = T{}) : r_(rows), c_(cols), a_(size_t(rows) * cols, fill) {}

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = T(1);
        return m;
    }

    int rows() const { return r_; }
    int cols() const { return c_; }

    T& operator()(int i, int j) { return a_[size_t(i) * c_ + j]; }
    const T& operator()(int i, int j) const { return a_[size_t(i) * c_ + j]; }

    Mat operator+(const Mat& o) const {
        Mat m(r_, c_);
        for (size_t k = 0; k < a_.size(); ++k) m.a_[k] = a_[k] + o.a_[k];
        return m;
    }
    Mat operator-(const Mat& o) const {
        Mat m(r_, c_);
        for (size_t k = 0; k < a_.size(); ++k) m.a_[k] = a_[k] - o.a_[k];
        return m;
    }
    Mat operator-() const {
        Mat m(r_, c_);
        for (size_t k = 0; k < a_.size(); ++k) m.a_[k] = -a_[k];
        return m;
    }
    Mat operator*(const Mat& o) const {
        assert(c_ == o.r_);
        Mat m(r_, o.c_);
        for (int i = 0; i < r_; ++i)
            for (int k = 0; k < c_; ++k) {
                const T aik = (*this)(i, k);
                if (aik == T{}) continue;
                for (int j = 0; j < o.c_; ++j) m(i, j) += aik * o(k, j);
            }
        return m;
    }
    Mat operator*(T s) const {
        Mat m(r_, c_);
        for (size_t k = 0; k < a_.size(); ++k) m.a_[k] = a_[k] * s;
        return m;
    }
    Mat& operator+=(const Mat& o) {
        for (size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
        return *this;
    }
    Mat& operator-=(const Mat& o) {
        for (size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
        return *this;
    }

    std::vector<T> operator*(const std::vector<T>& v) const {
        assert(int(v.size()) == c_);
        std::vector<T> w(r_, T{});
        for (int i = 0; i < r_; ++i)
            for (int j = 0; j < c_; ++j) w[i] += (*this)(i, j) * v[j];
        return w;
    }

    Mat transpose() const {
        Mat m(c_, r_);
        for (int i = 0; i < r_; ++i)
            for (int j = 0; j < c_; ++j) m(j, i) = (*this)(i, j);
        return m;
    }

    double norm_inf() const {
        double best = 0;
        for (const T& v : a_) best = std::max(best, std::abs(v));
        return best;
    }
    double norm_fro() const {
        double s = 0;
        for (const T& v : a_) s += std::norm(std::complex<double>(v));
        return std::sqrt(s);
    }

    const std::vector<T>& data() const { return a_; }

private:
    int r_, c_;
    std::vector<T> a_;
};

using RMat = Mat<double>;
using CMat = Mat<Cplx>;

inline CMat conj(const CMat& m) {
    CMat out(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) out(i, j) = std::conj(m(i, j));
    return out;
}

inline CMat adjoint(const CMat& m) { return conj(m).transpose(); }

/// LU with partial pivoting; throws SingularMatrix when the pivot collapses.
template <class T>
class Lu {
public:
    explicit Lu(Mat<T> m, double tol = 0.0) : lu_(std::move(m)), piv_(lu_.rows()) {
        const int n = lu_.rows();
        if (n != lu_.cols()) throw SizeMismatch("LU needs a square matrix");
        for (int i = 0; i < n; ++i) piv_[i] = i;
        for (int k = 0; k < n; ++k) {
            int p = k;
            double best = std::abs(lu_(k, k));
            for (int i = k + 1; i < n; ++i)
                if (std::abs(lu_(i, k)) > best) { best = std::abs(lu_(i, k)); p = i; }
            if (best <= tol) throw SingularMatrix("pivot " + std::to_string(k));
            if (p != k) {
                std::swap(piv_[p], piv_[k]);
                for (int j = 0; j < n; ++j) std::swap(lu_(p, j), lu_(k, j));
                sign_ = -sign_;
            }
            for (int i = k + 1; i < n; ++i) {
                lu_(i, k) = lu_(i, k) / lu_(k, k);
                const T f = lu_(i, k);
                for (int j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
            }
        }
    }

    std::vector<T> solve(const std::vector<T>& b) const {
        const int n = lu_.rows();
        std::vector<T> x(n);
        for (int i = 0; i < n; ++i) x[i] = b[piv_[i]];
        for (int i = 1; i < n; ++i)
            for (int j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
        for (int i = n - 1; i >= 0; --i) {
            for (int j = i + 1; j < n; ++j) x[i] -= lu_(i, j) * x[j];
            x[i] /= lu_(i, i);
        }
        return x;
    }

    Mat<T> solve(const Mat<T>& b) const {
        Mat<T> out(b.rows(), b.cols());
        std::vector<T> col(b.rows());
        for (int j = 0; j < b.cols(); ++j) {
            for (int i = 0; i < b.rows(); ++i) col[i] = b(i, j);
            auto x = solve(col);
            for (int i = 0; i < b.rows(); ++i) out(i, j) = x[i];
        }
        return out;
    }

    T det() const {
        T d = T(sign_);
        for (int i = 0; i < lu_.rows(); ++i) d *= lu_(i, i);
        return d;
    }

private:
    Mat<T> lu_;
    std::vector<int> piv_;
    int sign_ = 1;
};

template <class T>
Mat<T> inverse(const Mat<T>& m) {
    return Lu<T>(m).solve(Mat<T>::identity(m.rows()));
}

template <class T>
T det(const Mat<T>& m) {
    try {
        return Lu<T>(m).det();
    } catch (const SingularMatrix&) {
        return T{};
    }
}

/// Matrix exponential.  Nilpotent arguments terminate the series exactly
/// (all the positive-grade generators here do); otherwise scaling and
/// squaring with an 18-term series.
CMat expm(const CMat& x);

/// Minimum-norm least-squares solve of A x = b (A real, possibly wide),
/// via the normal equations on A A^T.  Systems here are tiny and well
/// conditioned by construction.
std::vector<double> min_norm_solve(const RMat& a, const std::vector<double>& b);
std::vector<Cplx> min_norm_solve(const CMat& a, const std::vector<Cplx>& b);

/// Eigendecomposition of a symmetric 2x2: returns (eigenvalues, rotation)
/// with columns of the rotation the eigenvectors, ordered descending.
void eig_sym2(const std::array<std::array<double, 2>, 2>& a,
              std::array<double, 2>& lam, std::array<std::array<double, 2>, 2>& rot);

/// Null space basis of an m x n real matrix (rows = constraints), by
/// Gauss elimination with partial pivoting; deterministic pivot order.
std::vector<std::vector<double>> null_space(const RMat& a, double tol = 1e-10);

int rank_of(const RMat& a, double tol = 1e-10);

} // namespace crcm
