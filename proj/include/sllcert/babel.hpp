#pragma once

#include <algorithm>
#include <bit>
#include <map>
#include <stdexcept>
#include <vector>

#include "sllcert/linalg.hpp"
#include "sllcert/matrix.hpp"

namespace sllcert {

enum class BabelMode { Cheap, Exact };

inline constexpr std::size_t kExactBabelDimLimit = 10;

namespace detail {

// max over column subsets of size m of |sum of products|, via the largest-m
// and smallest-m partial sums of the elementwise product vector.
inline double max_abs_subset_sum(Vector products, std::size_t m) {
    if (m == 0 || products.empty()) return 0.0;
    std::nth_element(products.begin(), products.begin() + static_cast<std::ptrdiff_t>(m - 1), products.end(),
                     [](double a, double b) { return a > b; });
    double top = 0.0;
    for (std::size_t c = 0; c < m; ++c) top += products[c];
    std::nth_element(products.begin(), products.begin() + static_cast<std::ptrdiff_t>(m - 1), products.end());
    double bot = 0.0;
    for (std::size_t c = 0; c < m; ++c) bot += products[c];
    return std::max(top, -bot);
}

// max over all non-empty column subsets: positive-part vs negative-part sum.
inline double max_abs_subset_sum_any_size(const double* a, const double* b, std::size_t n) {
    double pos = 0.0, neg = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        double p = a[c] * b[c];
        if (p > 0.0) pos += p;
        else neg -= p;
    }
    return std::max(pos, neg);
}

inline double sum_top_k(std::vector<double> v, std::size_t k) {
    if (k == 0) return 0.0;
    k = std::min(k, v.size());
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k - 1), v.end(),
                     [](double a, double b) { return a > b; });
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += v[i];
    return s;
}

// exact-mode per-pair coherence: max over column subsets of size m with
// row-restricted denominators; 0/0 guarded as 0
inline double exact_pair_coherence(const DenseMatrix& w, std::size_t i, std::size_t j, std::size_t m) {
    const std::size_t d2 = w.cols;
    double best = 0.0;
    const unsigned full = 1u << d2;
    for (unsigned mask = 0; mask < full; ++mask) {
        if (static_cast<std::size_t>(std::popcount(mask)) != m) continue;
        double num = 0.0, ni = 0.0, nj = 0.0;
        for (std::size_t c = 0; c < d2; ++c) {
            if (!(mask & (1u << c))) continue;
            num += w(i, c) * w(j, c);
            ni += w(i, c) * w(i, c);
            nj += w(j, c) * w(j, c);
        }
        double denom = std::sqrt(ni) * std::sqrt(nj);
        if (denom > 0.0) best = std::max(best, std::abs(num) / denom);
    }
    return best;
}

} // namespace detail

// Cheap-variant pairwise coherence table at column sparsity s2: the Def. 4
// inner maximization with both denominators replaced by ||W||_{2,inf}.
// Diagonal entries are unused and left at zero.
inline DenseMatrix pairwise_coherence_cheap(const DenseMatrix& w, std::size_t s2) {
    if (w.cols == 0 || s2 > w.cols - 1) throw std::invalid_argument("pairwise_coherence_cheap: s2 out of range");
    const std::size_t d1 = w.rows;
    const std::size_t d2 = w.cols;
    const std::size_t m = d2 - s2;
    double g = row_group_norm(w);
    DenseMatrix table(d1, d1, 0.0);
    if (g == 0.0) return table;  // zero matrix: all coherences defined as 0
    const double denom = g * g;
    Vector products(d2);
    for (std::size_t i = 0; i < d1; ++i) {
        const double* wi = w.row_ptr(i);
        for (std::size_t j = i + 1; j < d1; ++j) {
            const double* wj = w.row_ptr(j);
            for (std::size_t c = 0; c < d2; ++c) products[c] = wi[c] * wj[c];
            double v = detail::max_abs_subset_sum(products, m) / denom;
            table(i, j) = v;
            table(j, i) = v;
        }
    }
    return table;
}

// Reduced babel function mu_{s1,s2}(W). Cheap mode realizes the outer max over
// J1 exactly for its objective: per reference row, sum the top (d1-s1-1)
// coherences, then max over rows. Exact mode enumerates column subsets per
// pair and is restricted to small matrices.
inline double reduced_babel(const DenseMatrix& w, std::size_t s1, std::size_t s2,
                            BabelMode mode = BabelMode::Cheap) {
    const std::size_t d1 = w.rows;
    const std::size_t d2 = w.cols;
    if (d1 == 0 || d2 == 0) throw std::invalid_argument("reduced_babel: empty matrix");
    if (s1 > d1 - 1) throw std::invalid_argument("reduced_babel: s1 out of range");
    if (s2 > d2 - 1) throw std::invalid_argument("reduced_babel: s2 out of range");
    if (s1 == d1 - 1) return 0.0;  // singleton J1 has no cross terms

    DenseMatrix table;
    if (mode == BabelMode::Cheap) {
        table = pairwise_coherence_cheap(w, s2);
    } else {
        if (d1 > kExactBabelDimLimit || d2 > kExactBabelDimLimit)
            throw std::invalid_argument("reduced_babel: exact mode limited to dimensions <= 10");
        table = DenseMatrix(d1, d1, 0.0);
        const std::size_t m = d2 - s2;
        for (std::size_t i = 0; i < d1; ++i)
            for (std::size_t j = i + 1; j < d1; ++j) {
                double v = detail::exact_pair_coherence(w, i, j, m);
                table(i, j) = v;
                table(j, i) = v;
            }
    }

    const std::size_t terms = d1 - s1 - 1;
    double best = 0.0;
    std::vector<double> col(d1 - 1);
    for (std::size_t j = 0; j < d1; ++j) {
        std::size_t n = 0;
        for (std::size_t i = 0; i < d1; ++i)
            if (i != j) col[n++] = table(i, j);
        best = std::max(best, detail::sum_top_k(col, terms));
    }
    return best;
}

// Sub-matrix operator norm bound: any (d1-s1) x (d2-s2) block of W
// has spectral norm at most sqrt(1 + mu) * ||W||_{2,inf}.
inline double babel_bound(const DenseMatrix& w, std::size_t s1, std::size_t s2,
                          BabelMode mode = BabelMode::Cheap) {
    return std::sqrt(1.0 + reduced_babel(w, s1, s2, mode)) * row_group_norm(w);
}

// Column-size-free cheap babel: the per-pair subset maximization runs over all
// non-empty column subsets, so the result dominates mu_{s1,s2} for every s2.
// Returned as a full table over s1 (index s1 in [0, d1-1]); used to build
// hypothesis-class constraint tables that must be valid for any input
// sparsity level. Monotone non-increasing in s1 with value 0 at d1-1.
inline std::vector<double> reduced_babel_column_max(const DenseMatrix& w) {
    const std::size_t d1 = w.rows;
    const std::size_t d2 = w.cols;
    if (d1 == 0 || d2 == 0) throw std::invalid_argument("reduced_babel_column_max: empty matrix");
    double g = row_group_norm(w);
    if (g == 0.0) return std::vector<double>(d1, 0.0);
    const double denom = g * g;

    DenseMatrix table(d1, d1, 0.0);
    for (std::size_t i = 0; i < d1; ++i)
        for (std::size_t j = i + 1; j < d1; ++j) {
            double v = detail::max_abs_subset_sum_any_size(w.row_ptr(i), w.row_ptr(j), d2) / denom;
            table(i, j) = v;
            table(j, i) = v;
        }

    std::vector<double> out(d1, 0.0);
    std::vector<double> col(d1 > 0 ? d1 - 1 : 0);
    std::vector<double> prefix(d1, 0.0);
    for (std::size_t j = 0; j < d1; ++j) {
        std::size_t n = 0;
        for (std::size_t i = 0; i < d1; ++i)
            if (i != j) col[n++] = table(i, j);
        std::sort(col.begin(), col.end(), [](double a, double b) { return a > b; });
        double run = 0.0;
        for (std::size_t t = 0; t < col.size(); ++t) {
            run += col[t];
            prefix[t] = run;
        }
        // terms summed for sparsity s1 is d1-s1-1
        for (std::size_t s1 = 0; s1 + 1 < d1; ++s1) {
            std::size_t terms = d1 - s1 - 1;
            out[s1] = std::max(out[s1], prefix[terms - 1]);
        }
    }
    return out;
}

// Diagnostic cache of mu values for one layer matrix.
struct BabelTable {
    std::size_t layer = 0;
    BabelMode mode = BabelMode::Cheap;
    std::map<std::pair<std::size_t, std::size_t>, double> values;

    double at(const DenseMatrix& w, std::size_t s1, std::size_t s2) {
        auto key = std::make_pair(s1, s2);
        auto it = values.find(key);
        if (it != values.end()) return it->second;
        double v = reduced_babel(w, s1, s2, mode);
        values.emplace(key, v);
        return v;
    }
};

} // namespace sllcert
