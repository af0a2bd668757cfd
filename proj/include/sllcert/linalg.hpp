#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "sllcert/matrix.hpp"
#include "sllcert/rng.hpp"

namespace sllcert {

inline constexpr double kSpectralTol = 1e-9;
inline constexpr std::size_t kSpectralMaxIter = 1000;

inline double frobenius_norm(const DenseMatrix& m) {
    double s = 0.0;
    for (double x : m.data) s += x * x;
    return std::sqrt(s);
}

// max over rows of the row l2 norm, i.e. the (2,inf) group norm
inline double row_group_norm(const DenseMatrix& m) {
    if (m.rows == 0 || m.cols == 0) throw std::invalid_argument("row_group_norm: empty matrix");
    double best = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) best = std::max(best, m.row_norm(i));
    return best;
}

// Largest singular value by power iteration on the Gram matrix, iterating in
// the smaller of the two spaces. The start vector comes from a fixed seed so
// repeated runs produce identical certificates.
inline double spectral_norm(const DenseMatrix& m, double tol = kSpectralTol,
                            std::size_t max_iter = kSpectralMaxIter) {
    if (tol <= 0.0) throw std::invalid_argument("spectral_norm: tol must be positive");
    if (max_iter < 1) throw std::invalid_argument("spectral_norm: max_iter must be >= 1");
    if (m.rows == 0 || m.cols == 0) return 0.0;
    if (!m.finite()) throw std::invalid_argument("spectral_norm: non-finite entries");

    const bool tall = m.rows >= m.cols;
    const std::size_t n = tall ? m.cols : m.rows;

    Rng rng(0x5eedULL);
    Vector v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    double vn = norm2(v);
    if (vn == 0.0) { v[0] = 1.0; vn = 1.0; }
    for (auto& x : v) x /= vn;

    Vector u, w;
    double sigma = 0.0;
    for (std::size_t it = 0; it < max_iter; ++it) {
        if (tall) {
            matvec(m, v, u);    // u = M v
            matvec_t(m, u, w);  // w = M^T u
        } else {
            matvec_t(m, v, u);  // u = M^T v
            matvec(m, u, w);    // w = M u
        }
        double un = norm2(u);
        double wn = norm2(w);
        if (wn == 0.0) return 0.0;  // v landed in the null space of a zero map
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / wn;
        double prev = sigma;
        sigma = un;
        if (it > 0 && std::abs(sigma - prev) <= 0.5 * tol * std::max(1.0, sigma)) break;
    }
    return sigma;
}

inline DenseMatrix submatrix(const DenseMatrix& m, const IndexSet& row_set, const IndexSet& col_set) {
    if (row_set.universe != m.rows || col_set.universe != m.cols)
        throw std::invalid_argument("submatrix: index set universe does not match matrix shape");
    DenseMatrix out(row_set.size(), col_set.size());
    for (std::size_t a = 0; a < row_set.size(); ++a) {
        const double* src = m.row_ptr(row_set.idx[a]);
        double* dst = out.data.data() + a * out.cols;
        for (std::size_t b = 0; b < col_set.size(); ++b) dst[b] = src[col_set.idx[b]];
    }
    return out;
}

namespace detail {

// Indices ordered by value descending, ties by lowest index first.
inline std::vector<std::size_t> order_desc(const Vector& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    return order;
}

} // namespace detail

// s-th largest entry; s = 0 returns +inf (the "no constraint" selection).
inline double kth_largest(const Vector& v, std::size_t s) {
    if (s == 0) return std::numeric_limits<double>::infinity();
    if (s > v.size()) throw std::invalid_argument("kth_largest: s exceeds vector length");
    Vector tmp = v;
    std::nth_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(s - 1), tmp.end(),
                     [](double a, double b) { return a > b; });
    return tmp[s - 1];
}

inline IndexSet top_k_indices(const Vector& v, std::size_t s) {
    if (s > v.size()) throw std::invalid_argument("top_k_indices: s exceeds vector length");
    std::vector<std::size_t> order = detail::order_desc(v);
    order.resize(s);
    return IndexSet(std::move(order), v.size());
}

} // namespace sllcert
