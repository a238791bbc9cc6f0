#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "leukex/error.hpp"
#include "leukex/surrogate.hpp"
#include "ridge_oracle.hpp"

namespace leukex {
namespace {

using namespace explain;
using testing::dense_ridge;

MaskMatrix full_enumeration(std::size_t s) {
    MaskMatrix m{std::size_t{1} << s, s, {}};
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < s; ++c) {
            m.bits.push_back(static_cast<std::uint8_t>((r >> c) & 1));
        }
    }
    return m;
}

TEST(SampleMasks, FirstRowIsAllOnes) {
    RandomStream rng(3);
    const auto m = sample_masks(7, 50, rng);
    ASSERT_EQ(m.rows, 50u);
    for (std::size_t c = 0; c < 7; ++c) {
        EXPECT_EQ(m(0, c), 1);
    }
}

TEST(SampleMasks, ColumnsAreFairCoins) {
    RandomStream rng(11);
    const auto m = sample_masks(10, 10001, rng);
    for (std::size_t c = 0; c < 10; ++c) {
        double sum = 0.0;
        for (std::size_t r = 1; r < m.rows; ++r) {
            sum += m(r, c);
        }
        const double mean = sum / 10000.0;
        EXPECT_GE(mean, 0.47);
        EXPECT_LE(mean, 0.53);
    }
}

TEST(SampleMasks, SeededAndValidated) {
    RandomStream a(5);
    RandomStream b(5);
    EXPECT_EQ(sample_masks(9, 100, a).bits, sample_masks(9, 100, b).bits);
    RandomStream c(5);
    EXPECT_THROW(sample_masks(0, 10, c), ArgumentError);
    EXPECT_THROW(sample_masks(3, 1, c), ArgumentError);
}

TEST(KernelWeights, ClosedForm) {
    MaskMatrix m{3, 8, {}};
    m.bits = {1, 1, 1, 1, 1, 1, 1, 1,  //
              1, 1, 1, 1, 0, 0, 0, 0,  //
              0, 0, 0, 0, 0, 0, 0, 0};
    const auto w = kernel_weights(m, 0.25);
    EXPECT_EQ(w[0], 1.0);
    const double d = 1.0 - 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(d, 0.292893, 1e-6);
    EXPECT_NEAR(w[1], std::exp(-d * d / 0.0625), 1e-15);
    EXPECT_NEAR(w[1], 0.25346, 1e-5);
    EXPECT_NEAR(w[2], std::exp(-1.0 / 0.0625), 1e-15);
}

TEST(KernelWeights, DecreaseAsOnesAreRemoved) {
    const std::size_t s = 12;
    MaskMatrix m{s + 1, s, {}};
    for (std::size_t r = 0; r <= s; ++r) {
        for (std::size_t c = 0; c < s; ++c) {
            m.bits.push_back(c < s - r ? 1 : 0);
        }
    }
    const auto w = kernel_weights(m);
    for (std::size_t r = 1; r <= s; ++r) {
        EXPECT_LT(w[r], w[r - 1]);
    }
    RandomStream rng(2);
    const auto random = sample_masks(s, 300, rng);
    const auto rw = kernel_weights(random);
    EXPECT_EQ(*std::max_element(rw.begin(), rw.end()), rw[0]);
}

TEST(FitSurrogate, RecoversExactAffineResponse) {
    const auto m = full_enumeration(6);
    std::vector<double> y(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) {
        y[r] = 0.2 + 0.5 * m(r, 3);
    }
    const std::vector<double> w(m.rows, 1.0);
    const auto fit = fit_surrogate(m, y, w, 0.0);
    for (std::size_t j = 0; j < 6; ++j) {
        EXPECT_NEAR(fit.coefficients[j], j == 3 ? 0.5 : 0.0, 1e-12) << j;
    }
    EXPECT_NEAR(fit.intercept, 0.2, 1e-12);
    EXPECT_NEAR(fit.r2, 1.0, 1e-12);
}

TEST(FitSurrogate, ConstantResponses) {
    RandomStream rng(4);
    const auto m = sample_masks(8, 200, rng);
    const std::vector<double> y(m.rows, 0.37);
    const auto w = kernel_weights(m);
    const auto fit = fit_surrogate(m, y, w, 1.0);
    for (double c : fit.coefficients) {
        EXPECT_EQ(c, 0.0);
    }
    EXPECT_EQ(fit.intercept, 0.37);
    EXPECT_EQ(fit.r2, 1.0);
}

TEST(FitSurrogate, HeavyRidgeShrinksToWeightedMean) {
    RandomStream rng(6);
    const auto m = sample_masks(8, 400, rng);
    std::vector<double> y(m.rows);
    std::mt19937 gen(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& v : y) {
        v = u(gen);
    }
    const auto w = kernel_weights(m);
    const auto fit = fit_surrogate(m, y, w, 1e6);
    double wy = 0.0;
    double ws = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        wy += w[i] * y[i];
        ws += w[i];
    }
    for (double c : fit.coefficients) {
        EXPECT_LT(std::abs(c), 1e-3);
    }
    EXPECT_NEAR(fit.intercept, wy / ws, 1e-3);
}

TEST(FitSurrogate, MatchesDenseOracle) {
    std::mt19937 gen(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t s = 1 + gen() % 12;
        const std::size_t n = 2 * s + 2 + gen() % 400;
        RandomStream rng(static_cast<std::uint64_t>(trial));
        const auto m = sample_masks(s, n, rng);
        std::vector<double> y(n);
        for (auto& v : y) {
            v = u(gen);
        }
        const auto w = kernel_weights(m, 0.25 + 0.5 * (trial % 3));
        const double alpha = trial % 2 ? 1.0 : 0.01;
        const auto fit = fit_surrogate(m, y, w, alpha);
        const auto oracle = dense_ridge(m, y, w, alpha);
        EXPECT_NEAR(fit.intercept, oracle(0), 1e-8) << trial;
        for (std::size_t j = 0; j < s; ++j) {
            EXPECT_NEAR(fit.coefficients[j], oracle(static_cast<Eigen::Index>(j + 1)), 1e-8) << trial;
        }
    }
}

TEST(FitSurrogate, SingularSystemThrows) {
    MaskMatrix m{3, 2, {1, 1, 1, 1, 1, 1}};
    const std::vector<double> y{0.1, 0.2, 0.3};
    const std::vector<double> w{1, 1, 1};
    EXPECT_THROW(fit_surrogate(m, y, w, 0.0), NumericError);
    EXPECT_THROW(fit_surrogate(m, std::vector<double>{0.1}, w, 0.0), ArgumentError);
}

TEST(FitSurrogate, PermutingColumnsPermutesCoefficients) {
    RandomStream rng(8);
    const auto m = sample_masks(5, 300, rng);
    std::vector<double> y(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) {
        y[r] = 0.1 * m(r, 0) + 0.4 * m(r, 2) - 0.2 * m(r, 4) + 0.01 * std::sin(static_cast<double>(r));
    }
    const std::vector<std::size_t> perm{3, 0, 4, 1, 2};  // new column j holds old column perm[j]
    MaskMatrix pm{m.rows, m.cols, std::vector<std::uint8_t>(m.bits.size())};
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            pm.bits[r * m.cols + j] = m(r, perm[j]);
        }
    }
    const auto w = kernel_weights(m);
    const auto a = fit_surrogate(m, y, w, 1.0);
    const auto b = fit_surrogate(pm, y, w, 1.0);
    for (std::size_t j = 0; j < m.cols; ++j) {
        EXPECT_NEAR(b.coefficients[j], a.coefficients[perm[j]], 1e-12);
    }
}

}  // namespace
}  // namespace leukex
