#include "leukex/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "leukex/error.hpp"

namespace leukex::explain {

MaskMatrix sample_masks(std::size_t segments, std::size_t samples, RandomStream& rng) {
    if (segments < 1 || samples < 2) {
        throw ArgumentError("sample_masks needs at least one segment and two samples");
    }
    MaskMatrix m{samples, segments, std::vector<std::uint8_t>(samples * segments, 1)};
    for (std::size_t i = segments; i < m.bits.size(); ++i) {
        m.bits[i] = rng.uniform() < 0.5 ? 1 : 0;
    }
    return m;
}

std::vector<double> kernel_weights(const MaskMatrix& masks, double kernel_width) {
    if (!(kernel_width > 0.0)) {
        throw ArgumentError("kernel width must be positive");
    }
    std::vector<double> w(masks.rows);
    const double width2 = kernel_width * kernel_width;
    for (std::size_t r = 0; r < masks.rows; ++r) {
        std::size_t ones = 0;
        for (std::uint8_t b : masks.row(r)) {
            ones += b;
        }
        const double d = ones == 0 ? 1.0
                                   : 1.0 - std::sqrt(static_cast<double>(ones) / static_cast<double>(masks.cols));
        w[r] = std::exp(-d * d / width2);
    }
    return w;
}

bool cholesky_solve(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) {
            diag -= a[j * n + k] * a[j * n + k];
        }
        if (!(diag > 0.0)) {
            return false;
        }
        const double ljj = std::sqrt(diag);
        a[j * n + j] = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / ljj;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) {
            s -= a[k * n + ii] * b[k];
        }
        b[ii] = s / a[ii * n + ii];
    }
    return true;
}

SurrogateFit fit_surrogate(const MaskMatrix& masks, std::span<const double> responses,
                           std::span<const double> weights, double alpha) {
    const std::size_t n = masks.rows;
    const std::size_t s = masks.cols;
    if (responses.size() != n || weights.size() != n) {
        throw ArgumentError("fit_surrogate: masks, responses and weights must have the same row count");
    }
    if (n == 0 || s == 0) {
        throw ArgumentError("fit_surrogate: empty design");
    }
    if (!(alpha >= 0.0)) {
        throw ArgumentError("fit_surrogate: alpha must be non-negative");
    }
    double total = 0.0;
    for (double w : weights) {
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw ArgumentError("fit_surrogate: weights must be positive and finite");
        }
        total += w;
    }

    std::vector<double> z_mean(s, 0.0);
    double y_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = masks.row(i);
        for (std::size_t j = 0; j < s; ++j) {
            z_mean[j] += weights[i] * row[j];
        }
        y_mean += weights[i] * responses[i];
    }
    for (double& v : z_mean) {
        v /= total;
    }
    y_mean /= total;
    if (std::all_of(responses.begin(), responses.end(), [&](double y) { return y == responses[0]; })) {
        y_mean = responses[0];
    }

    std::vector<double> a(s * s, 0.0);
    std::vector<double> b(s, 0.0);
    std::vector<double> zc(s);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = masks.row(i);
        for (std::size_t j = 0; j < s; ++j) {
            zc[j] = row[j] - z_mean[j];
        }
        const double wi = weights[i];
        const double yc = responses[i] - y_mean;
        for (std::size_t j = 0; j < s; ++j) {
            const double wz = wi * zc[j];
            b[j] += wz * yc;
            for (std::size_t k = 0; k <= j; ++k) {
                a[j * s + k] += wz * zc[k];
            }
        }
    }
    for (std::size_t j = 0; j < s; ++j) {
        a[j * s + j] += alpha;
        for (std::size_t k = 0; k < j; ++k) {
            a[k * s + j] = a[j * s + k];
        }
    }
    if (!cholesky_solve(a, b, s)) {
        throw NumericError("fit_surrogate: normal equations are singular (alpha=" + std::to_string(alpha) + ")");
    }

    SurrogateFit fit;
    fit.coefficients = std::move(b);
    fit.alpha = alpha;
    fit.intercept = y_mean;
    for (std::size_t j = 0; j < s; ++j) {
        fit.intercept -= z_mean[j] * fit.coefficients[j];
    }

    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = masks.row(i);
        double pred = fit.intercept;
        for (std::size_t j = 0; j < s; ++j) {
            pred += row[j] * fit.coefficients[j];
        }
        ss_res += weights[i] * (responses[i] - pred) * (responses[i] - pred);
        ss_tot += weights[i] * (responses[i] - y_mean) * (responses[i] - y_mean);
    }
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
    return fit;
}

}  // namespace leukex::explain
