#pragma once

// Test-only reference routines. Nothing here calls into the code paths it is
// used to check.

#include "zskl/common.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace zskl::oracle {

inline Matrix random_matrix(std::mt19937_64 &rng, Eigen::Index rows, Eigen::Index cols, double lo = -2.0,
                            double hi = 2.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) { m(i, j) = u(rng); }
    }
    return m;
}

inline Vector random_vector(std::mt19937_64 &rng, Eigen::Index n, double lo = -2.0, double hi = 2.0) {
    return random_matrix(rng, n, 1, lo, hi).col(0);
}

inline double uniform(std::mt19937_64 &rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Central differences of f w.r.t. every entry of w.
inline Matrix finite_difference(const std::function<double(const Matrix &)> &f, const Matrix &w, double step = 1e-5) {
    Matrix grad(w.rows(), w.cols());
    Matrix probe = w;
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            const double orig = probe(i, j);
            probe(i, j) = orig + step;
            const double up = f(probe);
            probe(i, j) = orig - step;
            const double down = f(probe);
            probe(i, j) = orig;
            grad(i, j) = (up - down) / (2.0 * step);
        }
    }
    return grad;
}

/// ||a - b|| / max(||a||, ||b||), with an absolute floor for vanishing gradients.
inline double relative_error(const Matrix &analytic, const Matrix &numeric, double floor = 1e-7) {
    const double scale = std::max({analytic.norm(), numeric.norm(), floor});
    return (analytic - numeric).norm() / scale;
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
inline std::vector<double> jacobi_eigenvalues(Matrix a, int max_sweeps = 100) {
    const Eigen::Index n = a.rows();
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) { off += a(p, q) * a(p, q); }
        }
        if (off < 1e-30 * std::max(1.0, a.squaredNorm())) { break; }
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) { continue; }
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) { eig[static_cast<std::size_t>(i)] = a(i, i); }
    std::sort(eig.begin(), eig.end());
    return eig;
}

}  // namespace zskl::oracle
