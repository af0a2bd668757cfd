#include <doctest.h>

#include "oracles.hpp"
#include "sllcert/linalg.hpp"

using namespace sllcert;

TEST_CASE("spectral_norm on fixed matrices") {
    CHECK(spectral_norm(DenseMatrix::identity(2)) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(spectral_norm(DenseMatrix(2, 2, {0, 0, 0, 0})) == doctest::Approx(0.0));
    // rank-1: norm equals the row norm
    CHECK(spectral_norm(DenseMatrix(2, 2, {3, 4, 0, 0})) == doctest::Approx(5.0).epsilon(1e-10));
    CHECK(spectral_norm(DenseMatrix(2, 2, {3, 4, 0, -5})) == doctest::Approx(std::sqrt(45.0)).epsilon(1e-10));
}

TEST_CASE("spectral_norm rejects bad input") {
    DenseMatrix nan_mat(1, 2, {1.0, std::nan("")});
    CHECK_THROWS_AS(spectral_norm(nan_mat), std::invalid_argument);
    CHECK_THROWS_AS(spectral_norm(DenseMatrix::identity(2), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(spectral_norm(DenseMatrix::identity(2), 1e-9, 0), std::invalid_argument);
    CHECK(spectral_norm(DenseMatrix(0, 3)) == 0.0);
}

TEST_CASE("spectral_norm matches the Jacobi oracle on small matrices") {
    Rng rng(42);
    for (int trial = 0; trial < 60; ++trial) {
        std::size_t r = 1 + rng.index(8);
        std::size_t c = 1 + rng.index(8);
        DenseMatrix m = oracle::random_matrix(rng, r, c, 2.0);
        double expect = oracle::spectral_norm_svd(m);
        CHECK(spectral_norm(m) == doctest::Approx(expect).epsilon(1e-8));
    }
}

TEST_CASE("spectral_norm bounded by the Frobenius norm") {
    Rng rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        DenseMatrix m = oracle::random_matrix(rng, 1 + rng.index(12), 1 + rng.index(12));
        CHECK(spectral_norm(m) <= frobenius_norm(m) + 1e-9);
    }
}

TEST_CASE("row_group_norm") {
    CHECK(row_group_norm(DenseMatrix(2, 2, {3, 4, 0, -5})) == doctest::Approx(5.0));
    CHECK(row_group_norm(DenseMatrix::identity(4)) == doctest::Approx(1.0));
    CHECK(row_group_norm(DenseMatrix(3, 3)) == doctest::Approx(0.0));
    CHECK_THROWS_AS(row_group_norm(DenseMatrix(0, 0)), std::invalid_argument);
}

TEST_CASE("submatrix selection") {
    DenseMatrix m(2, 2, {1, 2, 3, 4});
    DenseMatrix sub = submatrix(m, IndexSet({1}, 2), IndexSet({0}, 2));
    CHECK(sub.rows == 1);
    CHECK(sub.cols == 1);
    CHECK(sub(0, 0) == 3);

    DenseMatrix all = submatrix(m, IndexSet::full(2), IndexSet::full(2));
    CHECK(all.data == m.data);

    DenseMatrix none = submatrix(m, IndexSet::empty(2), IndexSet::full(2));
    CHECK(none.rows == 0);
    CHECK(none.cols == 2);

    CHECK_THROWS_AS(submatrix(m, IndexSet({0}, 3), IndexSet::full(2)), std::invalid_argument);
}

TEST_CASE("submatrix never increases the spectral norm") {
    Rng rng(99);
    for (int trial = 0; trial < 25; ++trial) {
        std::size_t r = 2 + rng.index(7);
        std::size_t c = 2 + rng.index(7);
        DenseMatrix m = oracle::random_matrix(rng, r, c);
        double full = spectral_norm(m);
        std::vector<std::size_t> rs, cs;
        for (std::size_t i = 0; i < r; ++i)
            if (rng.uniform() < 0.6) rs.push_back(i);
        for (std::size_t j = 0; j < c; ++j)
            if (rng.uniform() < 0.6) cs.push_back(j);
        DenseMatrix sub = submatrix(m, IndexSet(rs, r), IndexSet(cs, c));
        CHECK(spectral_norm(sub) <= full + 1e-9);
    }
}

TEST_CASE("kth_largest and top_k_indices") {
    Vector v{0.8, -1.0, 0.3};
    CHECK(kth_largest(v, 1) == doctest::Approx(0.8));
    CHECK(top_k_indices(v, 1) == IndexSet({0}, 3));
    CHECK(kth_largest(v, 2) == doctest::Approx(0.3));
    CHECK(top_k_indices(v, 2) == IndexSet({0, 2}, 3));

    Vector ties{1.0, 1.0};
    CHECK(kth_largest(ties, 1) == doctest::Approx(1.0));
    CHECK(top_k_indices(ties, 1) == IndexSet({0}, 2));  // lowest index wins

    CHECK(top_k_indices(v, 0).size() == 0);
    CHECK(kth_largest(v, 0) == kInf);
    CHECK_THROWS_AS(kth_largest(v, 4), std::invalid_argument);
    CHECK_THROWS_AS(top_k_indices(v, 4), std::invalid_argument);
}

TEST_CASE("top_k selections nest as k grows") {
    Rng rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        std::size_t n = 2 + rng.index(10);
        Vector v(n);
        for (auto& x : v) x = rng.index(4) * 0.5 - 1.0;  // coarse values force ties
        for (std::size_t s = 0; s + 1 <= n; ++s) {
            IndexSet a = top_k_indices(v, s);
            IndexSet b = top_k_indices(v, s + 1);
            for (std::size_t i : a.idx) CHECK(b.contains(i));
        }
    }
}

TEST_CASE("IndexSet complement involution") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t n = 1 + rng.index(12);
        std::vector<std::size_t> pick;
        for (std::size_t i = 0; i < n; ++i)
            if (rng.uniform() < 0.5) pick.push_back(i);
        IndexSet s(pick, n);
        CHECK(s.complement().complement() == s);
        CHECK(s.size() + s.complement().size() == n);
    }
}
