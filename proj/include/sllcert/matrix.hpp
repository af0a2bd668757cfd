#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace sllcert {

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

using Vector = std::vector<double>;

inline double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline bool all_finite(const Vector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// Row-major dense matrix. Shapes are immutable after construction; entries are
// plain doubles so every certificate is reproducible bit for bit.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
    DenseMatrix(std::size_t r, std::size_t c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
        if (data.size() != rows * cols) throw std::invalid_argument("DenseMatrix: data length != rows*cols");
    }

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    const double* row_ptr(std::size_t i) const { return data.data() + i * cols; }

    Vector row(std::size_t i) const {
        return Vector(data.begin() + static_cast<std::ptrdiff_t>(i * cols),
                      data.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols));
    }

    double row_norm(std::size_t i) const {
        double s = 0.0;
        const double* p = row_ptr(i);
        for (std::size_t j = 0; j < cols; ++j) s += p[j] * p[j];
        return std::sqrt(s);
    }

    bool finite() const { return all_finite(data); }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline DenseMatrix transpose(const DenseMatrix& m) {
    DenseMatrix t(m.cols, m.rows);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
    return t;
}

// y = M x
inline void matvec(const DenseMatrix& m, const Vector& x, Vector& y) {
    if (x.size() != m.cols) throw std::invalid_argument("matvec: dimension mismatch");
    y.assign(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* p = m.row_ptr(i);
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) s += p[j] * x[j];
        y[i] = s;
    }
}

inline Vector matvec(const DenseMatrix& m, const Vector& x) {
    Vector y;
    matvec(m, x, y);
    return y;
}

// y = M^T x
inline void matvec_t(const DenseMatrix& m, const Vector& x, Vector& y) {
    if (x.size() != m.rows) throw std::invalid_argument("matvec_t: dimension mismatch");
    y.assign(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* p = m.row_ptr(i);
        double xi = x[i];
        if (xi == 0.0) continue;
        for (std::size_t j = 0; j < m.cols; ++j) y[j] += p[j] * xi;
    }
}

inline Vector matvec_t(const DenseMatrix& m, const Vector& x) {
    Vector y;
    matvec_t(m, x, y);
    return y;
}

// Sorted, duplicate-free index set over a fixed universe [0, universe).
struct IndexSet {
    std::vector<std::size_t> idx;
    std::size_t universe = 0;

    IndexSet() = default;
    IndexSet(std::vector<std::size_t> indices, std::size_t universe_size)
        : idx(std::move(indices)), universe(universe_size) {
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
        for (std::size_t i : idx)
            if (i >= universe) throw std::invalid_argument("IndexSet: index " + std::to_string(i) + " out of range");
    }

    static IndexSet full(std::size_t universe_size) {
        std::vector<std::size_t> v(universe_size);
        for (std::size_t i = 0; i < universe_size; ++i) v[i] = i;
        return IndexSet(std::move(v), universe_size);
    }

    static IndexSet empty(std::size_t universe_size) { return IndexSet({}, universe_size); }

    std::size_t size() const { return idx.size(); }

    bool contains(std::size_t i) const { return std::binary_search(idx.begin(), idx.end(), i); }

    IndexSet complement() const {
        std::vector<std::size_t> out;
        out.reserve(universe - idx.size());
        std::size_t p = 0;
        for (std::size_t i = 0; i < universe; ++i) {
            if (p < idx.size() && idx[p] == i) { ++p; continue; }
            out.push_back(i);
        }
        return IndexSet(std::move(out), universe);
    }

    bool operator==(const IndexSet& o) const { return universe == o.universe && idx == o.idx; }
};

} // namespace sllcert
