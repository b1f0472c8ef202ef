#include "zskl/kernels.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace zskl;
using zskl::oracle::finite_difference;
using zskl::oracle::jacobi_eigenvalues;
using zskl::oracle::random_matrix;
using zskl::oracle::random_vector;
using zskl::oracle::relative_error;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) { out(i++) = x; }
    return out;
}

KernelSpec random_spec(std::mt19937_64 &rng, KernelFamily family) {
    switch (family) {
        case KernelFamily::Gaussian: return KernelSpec::gaussian(oracle::uniform(rng, 0.5, 3.0));
        case KernelFamily::Cauchy: return KernelSpec::cauchy(oracle::uniform(rng, 0.05, 2.0));
        case KernelFamily::Polynomial:
            return KernelSpec::polynomial(1 + static_cast<int>(rng() % 6), oracle::uniform(rng, 0.0, 2.0));
    }
    return {};
}

}  // namespace

TEST(KernelSpec, RejectsInvalidParameters) {
    EXPECT_THROW(KernelSpec::gaussian(0.0), Error);
    EXPECT_THROW(KernelSpec::cauchy(-1.0), Error);
    EXPECT_THROW(KernelSpec::polynomial(0, 1.0), Error);
    EXPECT_THROW(KernelSpec::polynomial(2, -0.5), Error);
    EXPECT_NO_THROW(KernelSpec::polynomial(2, 0.0));
}

TEST(KernelSpec, JsonOmitsIrrelevantFields) {
    const auto g = to_json(KernelSpec::gaussian(0.7));
    EXPECT_EQ(g.dump(), R"({"family":"gaussian","sigma":0.7})");
    const auto p = to_json(KernelSpec::polynomial(4, 0.5));
    EXPECT_FALSE(p.contains("sigma"));
    EXPECT_EQ(kernel_from_json(p), KernelSpec::polynomial(4, 0.5));
    EXPECT_EQ(kernel_from_json(g), KernelSpec::gaussian(0.7));
    EXPECT_THROW(kernel_from_json(nlohmann::json{{"family", "laplace"}, {"sigma", 1.0}}), Error);
}

TEST(KernelValue, GaussianIsOneAtZeroDistance) {
    std::mt19937_64 rng(1);
    const Matrix w = random_matrix(rng, 4, 3);
    const Vector x = random_vector(rng, 4);
    const Vector y = w.transpose() * x;
    for (double s : {0.1, 1.0, 7.0}) {
        EXPECT_DOUBLE_EQ(kernel_value(KernelSpec::gaussian(s), w, x, y, Direction::ProjectX), 1.0);
    }
}

TEST(KernelValue, TableExamples) {
    const Matrix id = Matrix::Identity(2, 2);
    EXPECT_NEAR(kernel_value(KernelSpec::gaussian(1.0), id, vec({1, 0}), vec({0, 1}), Direction::ProjectX),
                std::exp(-1.0), 1e-15);
    EXPECT_NEAR(kernel_value(KernelSpec::gaussian(1.0), id, vec({1, 0}), vec({0, 1}), Direction::ProjectX), 0.36788,
                1e-5);
    EXPECT_DOUBLE_EQ(kernel_value(KernelSpec::polynomial(1, 0.0), id, vec({2, 0}), vec({0.5, 3}), Direction::ProjectX),
                     1.0);
    // ||W^T x - y||^2 = 1
    EXPECT_DOUBLE_EQ(kernel_value(KernelSpec::cauchy(2.0), id, vec({1, 0}), vec({0, 0}), Direction::ProjectX),
                     1.0 / 3.0);
    EXPECT_DOUBLE_EQ(kernel_value(KernelSpec::cauchy(2.0), id, vec({1, 0}), vec({0, 0}), Direction::ProjectY),
                     1.0 / 3.0);
}

TEST(KernelValue, ProjectYUsesFeatureSpaceDistance) {
    std::mt19937_64 rng(2);
    const Matrix w = random_matrix(rng, 5, 2);
    const Vector x = random_vector(rng, 5);
    const Vector y = random_vector(rng, 2);
    const double sq = (x - w * y).squaredNorm();
    EXPECT_NEAR(kernel_value(KernelSpec::gaussian(1.3), w, x, y, Direction::ProjectY), std::exp(-sq / (2 * 1.69)),
                1e-15);
    EXPECT_NEAR(kernel_value(KernelSpec::cauchy(0.4), w, x, y, Direction::ProjectY), 1.0 / (1.0 + 0.4 * sq), 1e-15);
}

TEST(KernelValue, ShapeMismatchThrows) {
    const Matrix w = Matrix::Identity(3, 2);
    EXPECT_THROW(kernel_value(KernelSpec::gaussian(1.0), w, vec({1, 2}), vec({1, 2}), Direction::ProjectX), Error);
    EXPECT_THROW(kernel_grad_w(KernelSpec::gaussian(1.0), w, vec({1, 2, 3}), vec({1}), Direction::ProjectY), Error);
}

TEST(KernelValue, RbfRangeAndShiftInvariance) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const Matrix w = random_matrix(rng, 4, 3);
        const Vector x = random_vector(rng, 4);
        const Vector y = random_vector(rng, 3);
        for (auto spec : {KernelSpec::gaussian(oracle::uniform(rng, 0.5, 3.0)),
                          KernelSpec::cauchy(oracle::uniform(rng, 0.1, 2.0))}) {
            for (Direction dir : {Direction::ProjectX, Direction::ProjectY}) {
                const double k = kernel_value(spec, w, x, y, dir);
                EXPECT_GT(k, 0.0);
                EXPECT_LE(k, 1.0);
            }
            // Translating both W^T x and y by v: with x' = x + u and y' = y + W^T u the
            // projected pair moves by the same v = W^T u.
            const Vector u = random_vector(rng, 4);
            const double k0 = kernel_value(spec, w, x, y, Direction::ProjectX);
            const double k1 = kernel_value(spec, w, x + u, y + w.transpose() * u, Direction::ProjectX);
            EXPECT_NEAR(k0, k1, 1e-12);
            const Vector v = random_vector(rng, 3);
            const double ky0 = kernel_value(spec, w, x, y, Direction::ProjectY);
            const double ky1 = kernel_value(spec, w, x + w * v, y + v, Direction::ProjectY);
            EXPECT_NEAR(ky0, ky1, 1e-12);
        }
    }
}

TEST(KernelValue, PolynomialDirectionsCoincide) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        const auto spec = random_spec(rng, KernelFamily::Polynomial);
        const Matrix w = random_matrix(rng, 3, 4);
        const Vector x = random_vector(rng, 3);
        const Vector y = random_vector(rng, 4);
        EXPECT_EQ(kernel_value(spec, w, x, y, Direction::ProjectX), kernel_value(spec, w, x, y, Direction::ProjectY));
        EXPECT_TRUE(kernel_grad_w(spec, w, x, y, Direction::ProjectX) == kernel_grad_w(spec, w, x, y, Direction::ProjectY));
    }
}

TEST(KernelGrad, ZeroAtCoincidentGaussian) {
    std::mt19937_64 rng(5);
    const Matrix w = random_matrix(rng, 4, 2);
    const Vector x = random_vector(rng, 4);
    EXPECT_TRUE(kernel_grad_w(KernelSpec::gaussian(0.8), w, x, w.transpose() * x, Direction::ProjectX).isZero(0.0));
}

TEST(KernelGrad, LinearPolynomialIsOuterProduct) {
    std::mt19937_64 rng(6);
    const Vector x = random_vector(rng, 3);
    const Vector y = random_vector(rng, 2);
    const Matrix expected = x * y.transpose();
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix w = random_matrix(rng, 3, 2);
        EXPECT_TRUE(kernel_grad_w(KernelSpec::polynomial(1, 0.7), w, x, y, Direction::ProjectX).isApprox(expected));
    }
}

TEST(KernelGrad, MatchesFiniteDifferences) {
    std::mt19937_64 rng(7);
    double worst = 0.0;
    for (auto family : {KernelFamily::Gaussian, KernelFamily::Cauchy, KernelFamily::Polynomial}) {
        for (Direction dir : {Direction::ProjectX, Direction::ProjectY}) {
            for (int trial = 0; trial < 100; ++trial) {
                const auto spec = random_spec(rng, family);
                const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng() % 4);
                const Eigen::Index da = 1 + static_cast<Eigen::Index>(rng() % 3);
                const Matrix w = random_matrix(rng, d, da);
                const Vector x = random_vector(rng, d);
                const Vector y = random_vector(rng, da);
                const Matrix numeric = finite_difference(
                    [&](const Matrix &wp) { return kernel_value(spec, wp, x, y, dir); }, w);
                const double err = relative_error(kernel_grad_w(spec, w, x, y, dir), numeric);
                worst = std::max(worst, err);
                EXPECT_LT(err, 1e-5) << to_string(family) << " dir " << static_cast<int>(dir);
            }
        }
    }
    RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(TransformedValueGrad, MinimaAndLimits) {
    std::mt19937_64 rng(8);
    const Matrix w = random_matrix(rng, 4, 3);
    const Vector x = random_vector(rng, 4);
    const Vector y = w.transpose() * x;
    const auto [v, g] = transformed_value_grad(KernelSpec::gaussian(1.0), w, x, y, Direction::ProjectX, Transform::within());
    EXPECT_EQ(v, 0.0);
    EXPECT_TRUE(g.isZero(0.0));
    // Far apart: k underflows toward 0, so k^2 and its gradient vanish.
    const Vector far = y + Vector::Constant(3, 1e3);
    const auto [vb, gb] = transformed_value_grad(KernelSpec::gaussian(1.0), w, x, far, Direction::ProjectX, Transform::between());
    EXPECT_EQ(vb, 0.0);
    EXPECT_TRUE(gb.isZero(0.0));
    const auto [vc, gc] = transformed_value_grad(KernelSpec::cauchy(1.0), w, x, far, Direction::ProjectX, Transform::between());
    EXPECT_LT(vc, 1e-10);
    EXPECT_LT(gc.norm(), 1e-10);
}

TEST(TransformedValueGrad, LinearSigns) {
    std::mt19937_64 rng(9);
    const Matrix w = random_matrix(rng, 3, 2);
    const Vector x = random_vector(rng, 3);
    const Vector y = random_vector(rng, 2);
    const auto spec = KernelSpec::cauchy(0.5);
    const auto base = kernel_eval(spec, w, x, y, Direction::ProjectX);
    const auto [vn, gn] = transformed_value_grad(spec, w, x, y, Direction::ProjectX, Transform::linear(-1));
    EXPECT_EQ(vn, -base.value);
    EXPECT_TRUE(gn == -base.grad);
    const auto [vp, gp] = transformed_value_grad(spec, w, x, y, Direction::ProjectX, Transform::linear(1));
    EXPECT_EQ(vp, base.value);
    EXPECT_TRUE(gp == base.grad);
}

TEST(TransformedValueGrad, SquaredRejectsPolynomial) {
    const Matrix w = Matrix::Identity(2, 2);
    EXPECT_THROW(transformed_value_grad(KernelSpec::polynomial(2, 1.0), w, vec({1, 0}), vec({0, 1}),
                                        Direction::ProjectX, Transform::within()),
                 Error);
    EXPECT_NO_THROW(transformed_value_grad(KernelSpec::polynomial(2, 1.0), w, vec({1, 0}), vec({0, 1}),
                                           Direction::ProjectX, Transform::linear(-1)));
}

TEST(TransformedValueGrad, MatchesFiniteDifferences) {
    std::mt19937_64 rng(10);
    for (auto family : {KernelFamily::Gaussian, KernelFamily::Cauchy}) {
        for (Direction dir : {Direction::ProjectX, Direction::ProjectY}) {
            for (Transform t : {Transform::within(), Transform::between()}) {
                for (int trial = 0; trial < 100; ++trial) {
                    const auto spec = random_spec(rng, family);
                    const Matrix w = random_matrix(rng, 3, 2);
                    const Vector x = random_vector(rng, 3);
                    const Vector y = random_vector(rng, 2);
                    const Matrix numeric = finite_difference(
                        [&](const Matrix &wp) { return transformed_value_grad(spec, wp, x, y, dir, t).first; }, w);
                    const Matrix analytic = transformed_value_grad(spec, w, x, y, dir, t).second;
                    // (1-k)^2 is O(1) so differencing noise is ~1e-11 absolute.
                    EXPECT_LT(relative_error(analytic, numeric, 1e-5), 1e-5)
                        << "norm " << analytic.norm() << " family " << to_string(family);
                }
            }
        }
    }
}

TEST(GramMatrix, EntriesMatchKernelValue) {
    std::mt19937_64 rng(11);
    const auto spec = KernelSpec::cauchy(0.7);
    const Matrix w = random_matrix(rng, 3, 2);
    const Matrix x = random_matrix(rng, 3, 4);
    const Matrix y = random_matrix(rng, 2, 5);
    const Matrix k = gram_matrix(spec, w, x, y, Direction::ProjectY);
    ASSERT_EQ(k.rows(), 4);
    ASSERT_EQ(k.cols(), 5);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 5; ++j) { EXPECT_EQ(k(i, j), kernel_value(spec, w, x.col(i), y.col(j), Direction::ProjectY)); }
    }
    const Matrix one = gram_matrix(spec, w, x.leftCols(1), y.leftCols(1), Direction::ProjectX);
    EXPECT_EQ(one(0, 0), kernel_value(spec, w, x.col(0), y.col(0), Direction::ProjectX));
    EXPECT_THROW(gram_matrix(spec, w, y, y, Direction::ProjectX), Error);
}

TEST(GramMatrix, GaussianOnProjectedPointsHasUnitDiagonalAndIsPsd) {
    std::mt19937_64 rng(12);
    const Matrix w = random_matrix(rng, 6, 3);
    const Matrix x = random_matrix(rng, 6, 5);
    const Matrix k = gram_matrix(KernelSpec::gaussian(2.0), w, x, w.transpose() * x, Direction::ProjectX);
    for (int i = 0; i < 5; ++i) { EXPECT_DOUBLE_EQ(k(i, i), 1.0); }
    EXPECT_LT((k - k.transpose()).norm(), 1e-15);
    EXPECT_GE(jacobi_eigenvalues(k).front(), -1e-8);
}

TEST(GramMatrix, PsdForAllFamilies) {
    std::mt19937_64 rng(13);
    std::vector<KernelSpec> specs;
    for (double s : {0.3, 1.0, 3.0}) {
        specs.push_back(KernelSpec::gaussian(s));
        specs.push_back(KernelSpec::cauchy(s));
    }
    for (int r : {2, 4, 6}) {
        for (double c : {0.0, 1.0}) { specs.push_back(KernelSpec::polynomial(r, c)); }
    }
    for (const auto &spec : specs) {
        for (int trial = 0; trial < 5; ++trial) {
            const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng() % 19);
            const Matrix w = random_matrix(rng, 4, 3, -1.0, 1.0);
            const Matrix x = random_matrix(rng, 4, m, -1.0, 1.0);
            const Matrix k = gram_matrix(spec, w, x, w.transpose() * x, Direction::ProjectX);
            const auto eig = jacobi_eigenvalues(k);
            EXPECT_GE(eig.front(), -1e-8 * eig.back()) << to_json(spec).dump();
        }
    }
}
