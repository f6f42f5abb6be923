#include "doctest.h"
#include "support.hpp"

#include <cstring>
#include <limits>
#include <sstream>

using namespace dh2;
using namespace testing;

TEST_CASE("svd of the 2x2 identity") {
    const SVDResult s = svd(CMatrix::identity(2));
    CHECK(s.singular[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.singular[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(orthogonality_defect(s.left) < 1e-14);
    CHECK(orthogonality_defect(s.right) < 1e-14);
}

TEST_CASE("svd of a rank-1 outer product") {
    CVector u{{0.6, 0.0}, {0.0, 0.8}}, v{{0.0, 1.0}, {0.0, 0.0}};
    CMatrix a(2, 2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            a(i, j) = u[i] * std::conj(v[j]);
    const SVDResult s = svd(a);
    CHECK(s.singular[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s.singular[1] < 1e-15);
}

TEST_CASE("svd of a random 8x5 matrix against the Jacobi eigen oracle") {
    const CMatrix a = random_matrix(8, 5, 7);
    const SVDResult s = svd(a);
    const auto oracle = oracle_singular_values(a);
    REQUIRE(s.singular.size() == 5);
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(std::abs(s.singular[i] - oracle[i]) < 1e-12 * oracle[0]);
    for (std::size_t i = 1; i < 5; ++i)
        CHECK(s.singular[i] <= s.singular[i - 1]);
    CHECK(orthogonality_defect(s.left) < 1e-12);
    CHECK(orthogonality_defect(s.right) < 1e-12);

    CMatrix us = s.left;
    for (std::size_t j = 0; j < 5; ++j)
        for (auto &v : us.column(j))
            v *= s.singular[j];
    const CMatrix r = a - naive_multiply(us, naive_adjoint(s.right));
    // Frobenius bounds the spectral norm from above.
    CHECK(frobenius_norm(r) <= 1e-12 * s.singular[0]);
}

TEST_CASE("svd reconstruction property on random shapes") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const std::size_t m = 1 + seed % 7, n = 1 + (seed * 5) % 9;
        const CMatrix a = random_matrix(m, n, seed + 100);
        const SVDResult s = svd(a);
        CMatrix us = s.left;
        for (std::size_t j = 0; j < s.singular.size(); ++j)
            for (auto &v : us.column(j))
                v *= s.singular[j];
        CHECK(frobenius_norm(a - multiply_adjoint(us, s.right)) <= 1e-12 * s.singular[0]);
        CHECK(a.all_finite());
    }
}

TEST_CASE("svd sign convention makes the largest entry of each left vector real positive") {
    const SVDResult s = svd(random_matrix(6, 4, 3));
    for (std::size_t j = 0; j < s.left.cols(); ++j) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < s.left.rows(); ++i)
            if (std::abs(s.left(i, j)) > std::abs(s.left(best, j)))
                best = i;
        CHECK(std::abs(s.left(best, j).imag()) < 1e-14);
        CHECK(s.left(best, j).real() > 0.0);
    }
}

TEST_CASE("svd rejects empty and non-finite input") {
    CHECK_THROWS(svd(CMatrix()));
    CMatrix a(2, 2);
    a(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS(svd(a));
}

TEST_CASE("left_svd agrees with svd on wide and tall matrices") {
    for (auto [m, n] : {std::pair<std::size_t, std::size_t>{4, 30}, {30, 4}, {5, 5}}) {
        const CMatrix a = random_matrix(m, n, m * 31 + n);
        const SVDResult full = svd(a);
        const LeftSVD left = left_svd(a);
        REQUIRE(left.singular.size() == full.singular.size());
        for (std::size_t i = 0; i < full.singular.size(); ++i)
            CHECK(std::abs(left.singular[i] - full.singular[i]) < 1e-12 * full.singular[0]);
        CHECK(orthogonality_defect(left.left) < 1e-12);
        // same projector onto the leading 2-dimensional subspace
        const CMatrix p1 = multiply_adjoint(leading_columns(left.left, 2), leading_columns(left.left, 2));
        const CMatrix p2 = multiply_adjoint(leading_columns(full.left, 2), leading_columns(full.left, 2));
        CHECK(max_abs(p1 - p2) < 1e-10);
    }
}

TEST_CASE("truncation_rank examples") {
    CHECK(truncation_rank(std::vector<double>{5, 0.3, 1e-9}, 1e-4, 10) == 2);
    CHECK(truncation_rank(std::vector<double>{0, 0}, 1e-4, 10) == 0);
    CHECK(truncation_rank(std::vector<double>{1, 0.5, 0.25, 0.125}, 0.2, 2) == 2);
    CHECK(truncation_rank(std::vector<double>{0.5, 0.1}, 1.0, 10) == 1);
}

TEST_CASE("truncation_rank is monotone in the tolerance") {
    const std::vector<double> s{10, 3, 1, 0.3, 0.1, 0.03, 0.01, 0};
    std::size_t prev = truncation_rank(s, 0.0, 100);
    for (double tol = 1e-3; tol < 100; tol *= 1.7) {
        const std::size_t k = truncation_rank(s, tol, 100);
        CHECK(k <= prev);
        prev = k;
    }
}

TEST_CASE("power iteration on a diagonal operator") {
    const std::vector<double> d{3, 1, 0.5};
    auto op = [&](const CVector &x) {
        CVector y(3);
        for (std::size_t i = 0; i < 3; ++i)
            y[i] = d[i] * x[i];
        return y;
    };
    CHECK(std::abs(power_iteration_norm(op, op, 3, 50, 1) - 3.0) < 1e-10);
}

TEST_CASE("power iteration matches the largest singular value") {
    const CMatrix a = random_matrix(16, 16, 11);
    const double sigma = svd(a).singular[0];
    const double est = power_iteration_norm([&](const CVector &x) { return naive_apply(a, x); },
                                            [&](const CVector &x) { return naive_apply(naive_adjoint(a), x); }, 16,
                                            200, 5);
    CHECK(std::abs(est - sigma) < 1e-8 * sigma);
}

TEST_CASE("power iteration agrees with svd for separated spectra") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        CMatrix a = random_matrix(12, 9, seed);
        SVDResult s = svd(a);
        // enforce sigma1 / sigma2 >= 1.1
        s.singular[0] = std::max(s.singular[0], 1.1 * s.singular[1]);
        CMatrix us = s.left;
        for (std::size_t j = 0; j < s.singular.size(); ++j)
            for (auto &v : us.column(j))
                v *= s.singular[j];
        a = multiply_adjoint(us, s.right);
        const double est = power_iteration_norm([&](const CVector &x) { return dh2::apply(a, x); },
                                                [&](const CVector &x) { return dh2::apply_adjoint(a, x); }, 9, 50,
                                                seed);
        CHECK(std::abs(est - s.singular[0]) < 1e-6 * s.singular[0]);
    }
}

TEST_CASE("power iteration of the zero operator is zero") {
    auto zero = [](const CVector &x) { return CVector(x.size()); };
    CHECK(power_iteration_norm(zero, zero, 4, 10, 1) == 0.0);
}

TEST_CASE("power iteration is deterministic for a fixed seed") {
    const CMatrix a = random_matrix(10, 10, 2);
    auto f = [&](const CVector &x) { return dh2::apply(a, x); };
    auto g = [&](const CVector &x) { return dh2::apply_adjoint(a, x); };
    CHECK(power_iteration_norm(f, g, 10, 7, 42) == power_iteration_norm(f, g, 10, 7, 42));
}

TEST_CASE("products agree with naive loops") {
    const CMatrix a = random_matrix(7, 5, 1), b = random_matrix(5, 6, 2), c = random_matrix(7, 6, 3);
    CHECK(max_abs(multiply(a, b) - naive_multiply(a, b)) < 1e-13);
    CHECK(max_abs(adjoint_multiply(a, c) - naive_multiply(naive_adjoint(a), c)) < 1e-13);
    CHECK(max_abs(multiply_adjoint(c, b) - naive_multiply(c, naive_adjoint(b))) < 1e-13);
    const CVector x = random_vector(5, 9);
    CHECK(vec_diff(dh2::apply(a, x), naive_apply(a, x)) < 1e-13);
    const CVector z = random_vector(7, 10);
    CHECK(vec_diff(dh2::apply_adjoint(a, z), naive_apply(naive_adjoint(a), z)) < 1e-13);
    CHECK(std::abs(dotc(x, x) - cplx(norm2(x) * norm2(x))) < 1e-13);
    CHECK_THROWS(multiply(a, a));
}

TEST_CASE("sub-matrix extraction and concatenation") {
    const CMatrix a = random_matrix(6, 4, 5);
    const IndexList rows{4, 0, 2}, cols{3, 1};
    const CMatrix s = submatrix(a, rows, cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            CHECK(s(i, j) == a(rows[i], cols[j]));
    const std::vector<CMatrix> parts{row_range(a, 0, 2), row_range(a, 2, 4)};
    CHECK(max_abs(vertical_concat(parts) - a) == 0.0);
    CHECK(max_abs(leading_columns(a, 2) - submatrix(a, IndexList{0, 1, 2, 3, 4, 5}, IndexList{0, 1})) == 0.0);
}

TEST_CASE("qr has orthonormal Q and reproduces the input") {
    const CMatrix a = random_matrix(9, 4, 8);
    const QRResult f = qr(a);
    CHECK(orthogonality_defect(f.q) < 1e-13);
    CHECK(max_abs(multiply(f.q, f.r) - a) < 1e-12);
    for (std::size_t j = 0; j < f.r.cols(); ++j)
        for (std::size_t i = j + 1; i < f.r.rows(); ++i)
            CHECK(f.r(i, j) == cplx(0.0));
}

TEST_CASE("CMX1 round trip and layout") {
    const CMatrix a = random_matrix(3, 2, 4);
    std::stringstream ss;
    write_cmx(ss, a);
    const std::string bytes = ss.str();
    REQUIRE(bytes.size() == 4 + 16 + 3 * 2 * 16);
    CHECK(bytes.substr(0, 4) == "CMX1");
    CHECK(static_cast<unsigned char>(bytes[4]) == 3);
    CHECK(static_cast<unsigned char>(bytes[12]) == 2);
    double re = 0.0;
    std::memcpy(&re, bytes.data() + 20 + 16, sizeof re); // entry (1, 0)
    CHECK(re == a(1, 0).real());
    const CMatrix b = read_cmx(ss);
    CHECK(max_abs(a - b) == 0.0);

    std::stringstream bad("XXXX");
    CHECK_THROWS(read_cmx(bad));
}
