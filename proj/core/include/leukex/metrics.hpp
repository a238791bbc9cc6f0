#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace leukex::metrics {

inline constexpr double kLogLossEpsilon = 1e-15;
inline constexpr double kRowSumTolerance = 1e-9;

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const noexcept { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// N x M row-stochastic matrix of class probabilities.
class ProbabilityMatrix {
public:
    ProbabilityMatrix() = default;
    /// Validates entries in [0,1] and row sums within `tolerance` of 1.
    ProbabilityMatrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                      double tolerance = kRowSumTolerance);

    /// Binary matrix [1 - p, p] from positive-class probabilities.
    static ProbabilityMatrix from_positive(std::span<const double> p_positive);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
    std::span<const double> row(std::size_t r) const {
        return std::span<const double>(values_).subspan(r * cols_, cols_);
    }
    std::span<const double> values() const noexcept { return values_; }

    /// Index of the largest entry in row r (lowest index on ties).
    std::size_t argmax(std::size_t r) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

/// Predicts class 1 when p(r, 1) >= threshold; class 1 is the positive class.
ConfusionCounts confusion(std::span<const int> y_true, const ProbabilityMatrix& p, double threshold = 0.5);

double accuracy(const ConfusionCounts& c);
/// 0 when tp + fp == 0.
double precision(const ConfusionCounts& c);
/// 0 when tp + fn == 0.
double recall(const ConfusionCounts& c);
/// 2PR/(P+R); 0 when tp == 0.
double f1(const ConfusionCounts& c);

/// -(1/N) sum_i sum_j y_ij log(clip(p_ij, eps, 1 - eps)) over a one-hot y.
double log_loss(const ProbabilityMatrix& y_onehot, const ProbabilityMatrix& p, double eps = kLogLossEpsilon);
/// Same, with y given as class ids.
double log_loss(std::span<const int> y_true, const ProbabilityMatrix& p, double eps = kLogLossEpsilon);

struct MetricReport {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double logloss = 0.0;
    ConfusionCounts counts;
};

MetricReport evaluate(std::span<const int> y_true, const ProbabilityMatrix& p, double threshold = 0.5);

void to_json(nlohmann::json& j, const ConfusionCounts& c);
void to_json(nlohmann::json& j, const MetricReport& r);

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    double accuracy = 0.0;
    double f1 = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
    double val_f1 = 0.0;

    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

/// Per-epoch training curves; epochs numbered contiguously from 1.
class TrainingHistory {
public:
    void append(EpochRecord record);
    const std::vector<EpochRecord>& epochs() const noexcept { return epochs_; }
    bool empty() const noexcept { return epochs_.empty(); }
    std::size_t size() const noexcept { return epochs_.size(); }

    friend bool operator==(const TrainingHistory&, const TrainingHistory&) = default;

private:
    std::vector<EpochRecord> epochs_;
};

/// Column order of history.csv.
inline constexpr const char* kHistoryColumns[] = {"epoch", "loss", "accuracy", "f1", "val_loss", "val_accuracy", "val_f1"};

std::string history_csv(const TrainingHistory& h);
/// Line chart of the six series with a legend. `comment` is embedded verbatim
/// in a <metadata> element when non-empty.
std::string history_svg(const TrainingHistory& h, const std::string& comment = {});

/// Writes history.csv and history.svg into out_dir (created if missing).
void emit_history(const TrainingHistory& h, const std::filesystem::path& out_dir, const std::string& svg_comment = {});

}  // namespace leukex::metrics
