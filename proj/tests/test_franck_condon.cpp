#include <cmath>

#include <gtest/gtest.h>

#include "optospec/franck_condon.hpp"
#include "oracles.hpp"

using namespace optospec;

TEST(Laguerre, BaseCases) {
    for (unsigned s : {0u, 1u, 5u, 40u})
        for (double x : {0.0, 0.3, 7.5}) EXPECT_EQ(laguerre_assoc(0, s, x), 1.0);
    EXPECT_DOUBLE_EQ(laguerre_assoc(1, 2, 0.5), 2.5);
}

TEST(Laguerre, MatchesSeriesAtSmallOrder) {
    EXPECT_NEAR(laguerre_assoc(3, 1, 0.64), oracle_ref::laguerre_series(3, 1, 0.64), 1e-14);
}

TEST(Laguerre, MatchesSeriesOverTableRange) {
    for (unsigned n = 0; n <= 20; ++n)
        for (unsigned s = 0; s <= 10; ++s)
            for (double x = 0.0; x <= 9.0; x += 0.25) {
                const double ref = oracle_ref::laguerre_series(n, s, x);
                const double got = laguerre_assoc(n, s, x);
                EXPECT_LE(std::abs(got - ref), 1e-11 * std::abs(ref)) << "n=" << n << " s=" << s << " x=" << x;
            }
}

TEST(Laguerre, RejectsBadArguments) {
    EXPECT_THROW(laguerre_assoc(2, 1, -0.1), InvalidParameter);
    EXPECT_THROW(laguerre_assoc(400, 200, 1.0), RangeError);
}

TEST(Overlap, ZeroDisplacementIsIdentity) {
    for (unsigned m = 0; m < 10; ++m)
        for (unsigned n = 0; n < 10; ++n) EXPECT_EQ(overlap(m, n, 0.0), m == n ? 1.0 : 0.0);
    const auto ov = overlap_matrix(4, 0.0);
    for (std::size_t m = 0; m < 4; ++m)
        for (std::size_t n = 0; n < 4; ++n) EXPECT_EQ(ov(m, n), m == n ? 1.0 : 0.0);
}

TEST(Overlap, GroundStateOverlap) {
    EXPECT_NEAR(overlap(0, 0, 0.8), std::exp(-0.32), 1e-15);
    EXPECT_NEAR(overlap(0, 0, 0.8), 0.72615, 5e-6);
}

TEST(Overlap, MatchesMatrixExponential) {
    const auto d = oracle_ref::displacement(60, 1.3);
    EXPECT_NEAR(overlap(2, 5, 1.3), static_cast<double>(d[2][5]), 1e-12);
    const auto ov = overlap_matrix(30, 1.3);
    for (std::size_t m = 0; m < 30; ++m)
        for (std::size_t n = 0; n < 30; ++n)
            EXPECT_NEAR(ov(m, n), static_cast<double>(d[m][n]), 1e-10) << m << "," << n;
}

TEST(Overlap, InversionSymmetry) {
    for (double beta : {0.3, 0.8, 1.3}) {
        const auto d = oracle_ref::displacement(60, beta);
        for (unsigned m = 0; m <= 30; ++m)
            for (unsigned n = 0; n <= 30; ++n) {
                const double sign = (m + n) % 2 ? -1.0 : 1.0;
                EXPECT_NEAR(overlap(m, n, beta), sign * overlap(n, m, beta), 1e-13);
                if (m <= 25 && n <= 25) {
                    // D(-beta) = D(beta)^T
                    EXPECT_NEAR(sign * overlap(n, m, beta), static_cast<double>(d[m][n]), 1e-10);
                }
            }
    }
}

TEST(OverlapMatrix, ColumnNormsAt80Levels) {
    const auto ov = overlap_matrix(80, 0.8);
    for (std::size_t n = 0; n <= 20; ++n) {
        double norm = 0.0;
        for (std::size_t m = 0; m < 80; ++m) norm += ov(m, n) * ov(m, n);
        EXPECT_NEAR(norm, 1.0, 1e-10);
        EXPECT_LT(ov.column_norm_deficit(n), 1e-10);
        EXPECT_LT(ov.row_norm_deficit(n), 1e-10);
    }
}

TEST(OverlapMatrix, RowAndColumnOrthonormality) {
    for (double beta : {0.3, 0.8, 1.3}) {
        const auto ov = overlap_matrix(200, beta);
        EXPECT_LT(ov.orthonormality_defect(31), 1e-10);
        for (std::size_t a = 0; a <= 30; ++a)
            for (std::size_t b = 0; b <= 30; ++b) {
                double rows = 0.0;
                for (std::size_t n = 0; n < 200; ++n) rows += ov(a, n) * ov(b, n);
                EXPECT_NEAR(rows, a == b ? 1.0 : 0.0, 1e-10);
            }
    }
}

TEST(OverlapMatrix, LargeIndicesStayFinite) {
    const auto ov = overlap_matrix(300, 2.0);
    for (double v : ov.entries().flat()) EXPECT_TRUE(std::isfinite(v));
    EXPECT_LT(ov.orthonormality_defect(100), 1e-10);
}
