#include "leukex/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "leukex/error.hpp"

namespace leukex::metrics {

ProbabilityMatrix::ProbabilityMatrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                                     double tolerance)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (cols_ == 0) {
        throw ArgumentError("probability matrix needs at least one column");
    }
    if (values_.size() != rows_ * cols_) {
        throw ArgumentError("probability matrix data length does not match rows*cols");
    }
    for (std::size_t r = 0; r < rows_; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < cols_; ++c) {
            const double v = values_[r * cols_ + c];
            if (!(v >= 0.0 && v <= 1.0)) {
                throw ArgumentError("probability at row " + std::to_string(r) + " column " + std::to_string(c) +
                                    " is outside [0,1]");
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > tolerance) {
            throw ArgumentError("row " + std::to_string(r) + " sums to " + std::to_string(sum) + ", not 1");
        }
    }
}

ProbabilityMatrix ProbabilityMatrix::from_positive(std::span<const double> p_positive) {
    std::vector<double> values;
    values.reserve(p_positive.size() * 2);
    for (double p : p_positive) {
        values.push_back(1.0 - p);
        values.push_back(p);
    }
    return ProbabilityMatrix(p_positive.size(), 2, std::move(values));
}

std::size_t ProbabilityMatrix::argmax(std::size_t r) const {
    const auto rw = row(r);
    return static_cast<std::size_t>(std::max_element(rw.begin(), rw.end()) - rw.begin());
}

ConfusionCounts confusion(std::span<const int> y_true, const ProbabilityMatrix& p, double threshold) {
    if (y_true.size() != p.rows()) {
        throw ArgumentError("confusion: " + std::to_string(y_true.size()) + " labels vs " +
                            std::to_string(p.rows()) + " prediction rows");
    }
    if (p.cols() != 2) {
        throw ArgumentError("confusion: binary task requires two probability columns");
    }
    ConfusionCounts c;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const bool predicted = p(i, 1) >= threshold;
        const bool actual = y_true[i] == 1;
        if (predicted && actual) {
            ++c.tp;
        } else if (predicted) {
            ++c.fp;
        } else if (actual) {
            ++c.fn;
        } else {
            ++c.tn;
        }
    }
    return c;
}

double accuracy(const ConfusionCounts& c) {
    if (c.total() == 0) {
        throw ArgumentError("accuracy of an empty confusion table is undefined");
    }
    return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

double precision(const ConfusionCounts& c) {
    if (c.total() == 0) {
        throw ArgumentError("precision of an empty confusion table is undefined");
    }
    return c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

double recall(const ConfusionCounts& c) {
    if (c.total() == 0) {
        throw ArgumentError("recall of an empty confusion table is undefined");
    }
    return c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double f1(const ConfusionCounts& c) {
    const double p = precision(c);
    const double r = recall(c);
    if (c.tp == 0) {
        return 0.0;
    }
    return 2.0 * p * r / (p + r);
}

double log_loss(const ProbabilityMatrix& y_onehot, const ProbabilityMatrix& p, double eps) {
    if (y_onehot.rows() != p.rows() || y_onehot.cols() != p.cols()) {
        throw ArgumentError("log_loss: target and prediction shapes differ");
    }
    if (p.rows() == 0) {
        throw ArgumentError("log_loss of zero rows is undefined");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < p.rows(); ++i) {
        for (std::size_t j = 0; j < p.cols(); ++j) {
            const double y = y_onehot(i, j);
            if (y != 0.0) {
                sum += y * std::log(std::clamp(p(i, j), eps, 1.0 - eps));
            }
        }
    }
    return -sum / static_cast<double>(p.rows());
}

double log_loss(std::span<const int> y_true, const ProbabilityMatrix& p, double eps) {
    if (y_true.size() != p.rows()) {
        throw ArgumentError("log_loss: " + std::to_string(y_true.size()) + " labels vs " +
                            std::to_string(p.rows()) + " prediction rows");
    }
    std::vector<double> onehot(p.rows() * p.cols(), 0.0);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] < 0 || static_cast<std::size_t>(y_true[i]) >= p.cols()) {
            throw ArgumentError("log_loss: label out of range at row " + std::to_string(i));
        }
        onehot[i * p.cols() + static_cast<std::size_t>(y_true[i])] = 1.0;
    }
    return log_loss(ProbabilityMatrix(p.rows(), p.cols(), std::move(onehot)), p, eps);
}

MetricReport evaluate(std::span<const int> y_true, const ProbabilityMatrix& p, double threshold) {
    MetricReport r;
    r.counts = confusion(y_true, p, threshold);
    r.accuracy = accuracy(r.counts);
    r.precision = precision(r.counts);
    r.recall = recall(r.counts);
    r.f1 = f1(r.counts);
    r.logloss = log_loss(y_true, p);
    return r;
}

void to_json(nlohmann::json& j, const ConfusionCounts& c) {
    j = nlohmann::json{{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

void to_json(nlohmann::json& j, const MetricReport& r) {
    j = nlohmann::json{{"accuracy", r.accuracy}, {"precision", r.precision}, {"recall", r.recall},
                       {"f1", r.f1},             {"logloss", r.logloss},     {"confusion", r.counts}};
}

}  // namespace leukex::metrics
