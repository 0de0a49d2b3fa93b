#include "gridtree/whitening.hpp"

#include <doctest.h>

#include <random>

using namespace gridtree;

namespace {

ComplexMatrix random_hermitian_pd(Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    ComplexMatrix b(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) b(i, j) = Complex(n01(rng), n01(rng));
    }
    ComplexMatrix sigma = b * b.adjoint();
    sigma.diagonal().array() += 0.5;
    return sigma;
}

ComplexMatrix random_complex(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    ComplexMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) m(i, j) = Complex(n01(rng), n01(rng));
    }
    return m;
}

}  // namespace

TEST_CASE("sample covariance") {
    SUBCASE("identical columns have unit correlation") {
        std::mt19937_64 rng(1);
        ComplexMatrix data(64, 2);
        data.col(0) = random_complex(64, 1, rng);
        data.col(1) = data.col(0);
        const ComplexMatrix sigma = sample_covariance(data);
        CHECK(std::abs(sigma(0, 1) - sigma(0, 0)) < 1e-12);
        CHECK(std::abs(sigma(0, 1) - sigma(1, 1)) < 1e-12);
    }
    SUBCASE("orthogonal columns have vanishing off-diagonals") {
        ComplexMatrix data = ComplexMatrix::Zero(8, 2);
        data(0, 0) = Complex(2, 1);
        data(3, 1) = Complex(-1, 4);
        const ComplexMatrix sigma = sample_covariance(data);
        CHECK(std::abs(sigma(0, 1)) <= 1e-12);
        CHECK(std::abs(sigma(1, 0)) <= 1e-12);
    }
    SUBCASE("insufficient samples rejected") {
        CHECK_THROWS_WITH_AS(sample_covariance(ComplexMatrix::Zero(3, 3)),
                             "insufficient samples", std::invalid_argument);
    }
}

TEST_CASE("upper Cholesky factor") {
    SUBCASE("identity") {
        const ComplexMatrix eye = ComplexMatrix::Identity(3, 3);
        const WhiteningPair p = cholesky_upper(eye);
        CHECK(rel_frobenius(p.m, eye) < 1e-14);
        CHECK(rel_frobenius(p.w, eye) < 1e-14);
    }
    SUBCASE("2x2 hand-checked factor") {
        ComplexMatrix sigma(2, 2);
        sigma << Complex(5, 0), Complex(2, 0), Complex(2, 0), Complex(1, 0);
        const WhiteningPair p = cholesky_upper(sigma);
        CHECK(std::abs(p.m(0, 0) - Complex(1, 0)) < 1e-12);
        CHECK(std::abs(p.m(0, 1) - Complex(2, 0)) < 1e-12);
        CHECK(std::abs(p.m(1, 0)) == 0.0);
        CHECK(std::abs(p.m(1, 1) - Complex(1, 0)) < 1e-12);
        CHECK(rel_frobenius(p.m * p.m.adjoint(), sigma) < 1e-12);
    }
    SUBCASE("diagonal covariance") {
        ComplexMatrix sigma = ComplexMatrix::Zero(2, 2);
        sigma(0, 0) = 2.0;
        sigma(1, 1) = 8.0;
        const WhiteningPair p = cholesky_upper(sigma);
        CHECK(std::abs(p.m(0, 0) - std::sqrt(2.0)) < 1e-12);
        CHECK(std::abs(p.m(1, 1) - std::sqrt(8.0)) < 1e-12);
        CHECK(std::abs(p.m(0, 1)) < 1e-15);
    }
    SUBCASE("factor properties on random Hermitian PD matrices") {
        std::mt19937_64 rng(7);
        for (int rep = 0; rep < 25; ++rep) {
            const Index n = 2 + rep % 8;
            const ComplexMatrix sigma = random_hermitian_pd(n, rng);
            const WhiteningPair p = cholesky_upper(sigma);
            CHECK(rel_frobenius(p.m * p.m.adjoint(), sigma) < 1e-9);
            CHECK(rel_frobenius(p.m * p.w, ComplexMatrix::Identity(n, n)) < 1e-10);
            for (Index i = 0; i < n; ++i) {
                CHECK(p.m(i, i).real() > 0.0);
                CHECK(std::abs(p.m(i, i).imag()) < 1e-12);
                for (Index j = 0; j < i; ++j) CHECK(std::abs(p.m(i, j)) == 0.0);
            }
        }
    }
    SUBCASE("singular covariance rejected") {
        ComplexMatrix sigma(2, 2);
        sigma << Complex(1, 0), Complex(1, 0), Complex(1, 0), Complex(-1, 0);
        CHECK_THROWS_WITH_AS(cholesky_upper(sigma), "singular covariance",
                             std::runtime_error);
    }
}

TEST_CASE("whitening the data") {
    std::mt19937_64 rng(11);
    SUBCASE("identity whitening is a no-op") {
        const ComplexMatrix data = random_complex(32, 3, rng);
        const ComplexMatrix out = whiten(data, ComplexMatrix::Identity(3, 3));
        CHECK(rel_frobenius(out, data) == 0.0);
    }
    SUBCASE("correlated columns whiten to an orthogonal set") {
        ComplexMatrix data = random_complex(500, 3, rng);
        data.col(1) += 0.8 * data.col(0);
        data.col(2) -= 0.5 * data.col(0);
        data.rowwise() -= data.colwise().mean();
        const WhiteningPair p = cholesky_upper(sample_covariance(data));
        const ComplexMatrix white = whiten(data, p.w);
        const ComplexMatrix gram = white.adjoint() * white / 500.0;
        CHECK(rel_frobenius(gram, ComplexMatrix::Identity(3, 3)) < 1e-8);
        for (Index a = 0; a < 3; ++a) {
            for (Index b = 0; b < 3; ++b) {
                if (a == b) continue;
                const double bound =
                    1e-8 * white.col(a).norm() * white.col(b).norm();
                CHECK(std::abs(white.col(a).dot(white.col(b))) <= bound);
            }
        }
        // Unwhitening (multiplying back through M) inverts the transform.
        const ComplexMatrix back = whiten(white, p.m);
        CHECK(rel_frobenius(back, data) < 1e-10);
    }
    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(whiten(ComplexMatrix::Zero(4, 3), ComplexMatrix::Identity(2, 2)),
                        std::invalid_argument);
    }
}

TEST_CASE("trailing-block factor consistency (100 random instances)") {
    std::mt19937_64 rng(23);
    for (int rep = 0; rep < 100; ++rep) {
        const Index n = 4 + rep % 17;  // dims 4..20
        std::uniform_int_distribution<Index> obs_dist(1, n - 1);
        const Index obs = obs_dist(rng);
        const ComplexMatrix sigma = random_hermitian_pd(n, rng);
        const TheoremReport report = check_theorem1(sigma, n - obs, obs);
        CHECK(report.pass);
        CHECK(report.deviation <= 1e-9);
    }
}

TEST_CASE("trailing-block check rejects a leading observed range") {
    std::mt19937_64 rng(5);
    const ComplexMatrix sigma = random_hermitian_pd(6, rng);
    CHECK_THROWS_WITH_AS(check_theorem1(sigma, 0, 2),
                         "ordering violates Theorem 1 premise", std::invalid_argument);
}

TEST_CASE("block-diagonal covariance gives exact trailing-block consistency") {
    std::mt19937_64 rng(29);
    ComplexMatrix sigma = ComplexMatrix::Zero(6, 6);
    sigma.topLeftCorner(3, 3) = random_hermitian_pd(3, rng);
    sigma.bottomRightCorner(3, 3) = random_hermitian_pd(3, rng);
    const TheoremReport report = check_theorem1(sigma, 3, 3);
    CHECK(report.deviation == 0.0);
}

TEST_CASE("zero cross-covariance zeroes the off-diagonal factor block") {
    std::mt19937_64 rng(31);
    SUBCASE("100 random block-diagonal instances") {
        for (int rep = 0; rep < 100; ++rep) {
            const Index hidden = 1 + rep % 6;
            const Index obs = 2 + rep % 7;
            ComplexMatrix sigma = ComplexMatrix::Zero(hidden + obs, hidden + obs);
            sigma.topLeftCorner(hidden, hidden) = random_hermitian_pd(hidden, rng);
            sigma.bottomRightCorner(obs, obs) = random_hermitian_pd(obs, rng);
            const TheoremReport report = check_theorem2(sigma, obs);
            CHECK(report.pass);
            CHECK(report.deviation <= 1e-8);
        }
    }
    SUBCASE("fully diagonal covariance gives an exactly zero block") {
        ComplexMatrix sigma = ComplexMatrix::Zero(5, 5);
        sigma.diagonal() << 1.0, 2.0, 3.0, 4.0, 5.0;
        CHECK(check_theorem2(sigma, 2).deviation == 0.0);
    }
    SUBCASE("nonzero cross block fails as a negative control") {
        ComplexMatrix sigma = ComplexMatrix::Zero(5, 5);
        sigma.topLeftCorner(2, 2) = random_hermitian_pd(2, rng);
        sigma.bottomRightCorner(3, 3) = random_hermitian_pd(3, rng);
        sigma.diagonal().array() += 10.0;  // keep PD with the cross block
        sigma.topRightCorner(2, 3).setConstant(Complex(0.5, 0.2));
        sigma.bottomLeftCorner(3, 2) = sigma.topRightCorner(2, 3).adjoint();
        const TheoremReport report = check_theorem2(sigma, 3);
        CHECK_FALSE(report.pass);
        CHECK(report.deviation > 1e-6);
    }
}
