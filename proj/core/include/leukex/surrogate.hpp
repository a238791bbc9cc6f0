#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "leukex/random_stream.hpp"

namespace leukex::explain {

inline constexpr double kDefaultKernelWidth = 0.25;
inline constexpr double kDefaultRidgeAlpha = 1.0;

/// n x S binary matrix; row 0 is the unperturbed instance (all ones).
struct MaskMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> bits;  // row-major

    std::uint8_t operator()(std::size_t r, std::size_t c) const { return bits[r * cols + c]; }
    std::span<const std::uint8_t> row(std::size_t r) const {
        return std::span<const std::uint8_t>(bits).subspan(r * cols, cols);
    }
};

/// Row 0 all ones; every other entry an independent fair coin from `rng`
/// (row-major draw order, uniform() < 0.5 means "keep").
MaskMatrix sample_masks(std::size_t segments, std::size_t samples, RandomStream& rng);

/// exp(-d^2 / width^2) with d the cosine distance from each row to the
/// all-ones vector, i.e. d = 1 - sqrt(k / S) for a row with k ones. An
/// all-zero row takes d = 1.
std::vector<double> kernel_weights(const MaskMatrix& masks, double kernel_width = kDefaultKernelWidth);

struct SurrogateFit {
    std::vector<double> coefficients;
    double intercept = 0.0;
    double r2 = 0.0;
    double alpha = 0.0;
};

/// Weighted ridge regression of `responses` on the mask columns with an
/// unpenalized intercept: minimizes
///   sum_i w_i (y_i - b0 - z_i . beta)^2 + alpha |beta|^2.
/// Solved through the weighted-centered normal equations with a Cholesky
/// factorization. r2 is the weighted coefficient of determination against
/// the weighted mean (1 when the responses are constant and fit exactly).
/// Throws NumericError if the system is not positive definite.
SurrogateFit fit_surrogate(const MaskMatrix& masks, std::span<const double> responses,
                           std::span<const double> weights, double alpha = kDefaultRidgeAlpha);

/// In-place Cholesky solve of the symmetric positive-definite n x n system
/// a x = b (row-major). Returns false if a pivot is not positive.
bool cholesky_solve(std::vector<double>& a, std::vector<double>& b, std::size_t n);

}  // namespace leukex::explain
