#pragma once

// Test-only oracles, deliberately independent of the library's computation
// paths: spectral norms via cyclic Jacobi on the Gram matrix, babel values by
// full subset enumeration, derivatives by central differences.

#include <cmath>
#include <functional>
#include <vector>

#include "sllcert/babel.hpp"
#include "sllcert/matrix.hpp"
#include "sllcert/rng.hpp"

namespace oracle {

using sllcert::DenseMatrix;
using sllcert::Vector;

// Largest eigenvalue of a symmetric matrix by cyclic Jacobi sweeps.
inline double max_eigenvalue_jacobi(DenseMatrix a) {
    const std::size_t n = a.rows;
    if (n == 0) return 0.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    double mx = a(0, 0);
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, a(i, i));
    return mx;
}

inline double spectral_norm_svd(const DenseMatrix& m) {
    if (m.rows == 0 || m.cols == 0) return 0.0;
    const bool tall = m.rows >= m.cols;
    const std::size_t n = tall ? m.cols : m.rows;
    DenseMatrix gram(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            if (tall) {
                for (std::size_t k = 0; k < m.rows; ++k) s += m(k, i) * m(k, j);
            } else {
                for (std::size_t k = 0; k < m.cols; ++k) s += m(i, k) * m(j, k);
            }
            gram(i, j) = s;
        }
    double lam = max_eigenvalue_jacobi(gram);
    return lam > 0.0 ? std::sqrt(lam) : 0.0;
}

inline void subsets_of_size(std::size_t n, std::size_t k, const std::function<void(const std::vector<std::size_t>&)>& visit) {
    std::vector<std::size_t> pick;
    std::function<void(std::size_t)> rec = [&](std::size_t start) {
        if (pick.size() == k) {
            visit(pick);
            return;
        }
        for (std::size_t i = start; i + (k - pick.size()) <= n; ++i) {
            pick.push_back(i);
            rec(i + 1);
            pick.pop_back();
        }
    };
    rec(0);
}

// Reduced babel by direct double enumeration over (J1, J2), per the
// definition. Mode selects the denominators.
inline double reduced_babel_brute(const DenseMatrix& w, std::size_t s1, std::size_t s2,
                                  sllcert::BabelMode mode) {
    const std::size_t d1 = w.rows;
    const std::size_t d2 = w.cols;
    if (s1 == d1 - 1) return 0.0;
    double group = 0.0;
    for (std::size_t i = 0; i < d1; ++i) group = std::max(group, w.row_norm(i));

    auto pair_value = [&](std::size_t i, std::size_t j) {
        double best = 0.0;
        subsets_of_size(d2, d2 - s2, [&](const std::vector<std::size_t>& j2) {
            double num = 0.0, ni = 0.0, nj = 0.0;
            for (std::size_t c : j2) {
                num += w(i, c) * w(j, c);
                ni += w(i, c) * w(i, c);
                nj += w(j, c) * w(j, c);
            }
            double denom = mode == sllcert::BabelMode::Exact ? std::sqrt(ni) * std::sqrt(nj) : group * group;
            if (denom > 0.0) best = std::max(best, std::abs(num) / denom);
        });
        return best;
    };

    double best = 0.0;
    subsets_of_size(d1, d1 - s1, [&](const std::vector<std::size_t>& j1) {
        for (std::size_t j : j1) {
            double sum = 0.0;
            for (std::size_t i : j1)
                if (i != j) sum += pair_value(i, j);
            best = std::max(best, sum);
        }
    });
    return best;
}

inline DenseMatrix random_matrix(sllcert::Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
    DenseMatrix m(rows, cols);
    for (auto& v : m.data) v = scale * rng.gaussian();
    return m;
}

inline double central_difference(const std::function<double(double)>& f, double h = 1e-5) {
    return (f(h) - f(-h)) / (2.0 * h);
}

} // namespace oracle
