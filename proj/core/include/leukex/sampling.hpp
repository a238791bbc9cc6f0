#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace leukex::sampling {

inline constexpr int kDefaultFolds = 3;
/// The second fold (0-based index 1) is the one reported by default.
inline constexpr int kDefaultReportFold = 1;

/// Class ids in 0..n_classes-1, one per sample.
struct LabelVector {
    std::vector<int> y;
    int n_classes = 2;

    LabelVector() = default;
    LabelVector(std::vector<int> labels, int classes);

    std::size_t size() const noexcept { return y.size(); }
    std::vector<std::size_t> counts() const;
};

struct ClassWeights {
    std::vector<double> w;

    double operator[](int cls) const { return w.at(static_cast<std::size_t>(cls)); }
    std::size_t size() const noexcept { return w.size(); }

    static ClassWeights uniform(int n_classes) { return {std::vector<double>(static_cast<std::size_t>(n_classes), 1.0)}; }
};

/// n_samples / (n_classes * count_c), the "balanced" heuristic.
/// Throws ArgumentError naming the first absent class.
ClassWeights compute_class_weights(const LabelVector& labels);

/// fold_of value for a sample excluded from every fold (a holdout set).
inline constexpr int kHeldOut = -1;

struct FoldAssignment {
    int k = kDefaultFolds;
    std::uint64_t seed = 0;
    std::vector<int> fold_of;

    friend bool operator==(const FoldAssignment&, const FoldAssignment&) = default;
};

/// Shuffles each class's indices with its own seeded sub-stream, then deals
/// all classes (class 0 first) round-robin with one running counter, so fold
/// sizes differ by at most one and every class is split floor/ceil.
FoldAssignment stratified_kfold(const LabelVector& labels, int k, std::uint64_t seed);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

/// Validation = samples in fold i; train = the rest except held-out samples.
/// Both ascending.
Split fold_split(const FoldAssignment& fa, int fold);

/// Returns a description of the first violated stratification invariant, or
/// an empty string if the assignment is valid for these labels.
std::string check_stratification(const FoldAssignment& fa, const LabelVector& labels);

/// Stratified holdout: the first ceil(fraction * n_c) shuffled members of
/// each class. Returned ascending. fraction in [0, 1).
std::vector<std::size_t> stratified_holdout(const LabelVector& labels, double fraction, std::uint64_t seed);

void to_json(nlohmann::json& j, const FoldAssignment& fa);
void from_json(const nlohmann::json& j, FoldAssignment& fa);
void to_json(nlohmann::json& j, const ClassWeights& w);

}  // namespace leukex::sampling
