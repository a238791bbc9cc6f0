#include <gtest/gtest.h>

#include <algorithm>
#include <charconv>
#include <random>
#include <set>

#include "leukex/error.hpp"
#include "leukex/sampling.hpp"

namespace leukex {
namespace {

using namespace sampling;

std::string shortest(double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

LabelVector from_counts(std::size_t neg, std::size_t pos) {
    std::vector<int> y(neg, 0);
    y.insert(y.end(), pos, 1);
    return LabelVector(y, 2);
}

TEST(ClassWeights, ReproducesPublishedImbalanceWeights) {
    const auto w = compute_class_weights(from_counts(3389, 7272));
    EXPECT_EQ(shortest(w[0]), "1.5728828562997934");
    EXPECT_EQ(shortest(w[1]), "0.7330170517051705");
    EXPECT_EQ(w[0], 10661.0 / 6778.0);
    EXPECT_EQ(w[1], 10661.0 / 14544.0);
}

TEST(ClassWeights, BalancedAndSmallCases) {
    const auto even = compute_class_weights(from_counts(5, 5));
    EXPECT_EQ(even[0], 1.0);
    EXPECT_EQ(even[1], 1.0);
    const auto skew = compute_class_weights(from_counts(1, 3));
    EXPECT_EQ(skew[0], 2.0);
    EXPECT_DOUBLE_EQ(skew[1], 2.0 / 3.0);
}

TEST(ClassWeights, ReciprocalsSumToClassCount) {
    std::mt19937 gen(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto neg = 1 + gen() % 5000;
        const auto pos = 1 + gen() % 5000;
        const auto w = compute_class_weights(from_counts(neg, pos));
        EXPECT_NEAR(1.0 / w[0] + 1.0 / w[1], 2.0, 1e-12);
    }
}

TEST(ClassWeights, MissingClassIsNamed) {
    try {
        compute_class_weights(from_counts(4, 0));
        FAIL();
    } catch (const ArgumentError& e) {
        EXPECT_NE(std::string(e.what()).find("1"), std::string::npos);
    }
    EXPECT_THROW(LabelVector({0, 2}, 2), ArgumentError);
}

TEST(StratifiedKFold, DivisibleCaseIsExact) {
    const auto labels = from_counts(6, 3);
    const auto fa = stratified_kfold(labels, 3, 1);
    for (int f = 0; f < 3; ++f) {
        int pos = 0;
        int neg = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (fa.fold_of[i] == f) {
                (labels.y[i] ? pos : neg)++;
            }
        }
        EXPECT_EQ(pos, 1);
        EXPECT_EQ(neg, 2);
    }
    const auto s = fold_split(fa, 1);
    EXPECT_EQ(s.validation.size(), 3u);
    EXPECT_EQ(s.train.size(), 6u);
}

TEST(StratifiedKFold, RoundRobinDealOnTenSamples) {
    const auto labels = from_counts(6, 4);
    const auto fa = stratified_kfold(labels, 3, 8);
    std::vector<int> sizes(3, 0);
    std::vector<int> pos(3, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        ++sizes[static_cast<std::size_t>(fa.fold_of[i])];
        pos[static_cast<std::size_t>(fa.fold_of[i])] += labels.y[i];
    }
    std::sort(sizes.begin(), sizes.end());
    std::sort(pos.begin(), pos.end());
    EXPECT_EQ(sizes, (std::vector<int>{3, 3, 4}));
    EXPECT_EQ(pos, (std::vector<int>{1, 1, 2}));
}

TEST(StratifiedKFold, DeterministicPerSeed) {
    const auto labels = from_counts(40, 17);
    EXPECT_EQ(stratified_kfold(labels, 4, 3), stratified_kfold(labels, 4, 3));
    EXPECT_NE(stratified_kfold(labels, 4, 3).fold_of, stratified_kfold(labels, 4, 4).fold_of);
}

TEST(StratifiedKFold, InvalidKIsRejected) {
    EXPECT_THROW(stratified_kfold(from_counts(5, 5), 1, 0), ArgumentError);
    EXPECT_THROW(stratified_kfold(from_counts(5, 5), 999, 0), ArgumentError);
    EXPECT_THROW(stratified_kfold(from_counts(5, 2), 3, 0), ArgumentError);
}

TEST(FoldSplit, ValidationSetsPartitionIndices) {
    const auto labels = from_counts(13, 7);
    const auto fa = stratified_kfold(labels, 3, 2);
    std::multiset<std::size_t> seen;
    for (int f = 0; f < 3; ++f) {
        const auto s = fold_split(fa, f);
        seen.insert(s.validation.begin(), s.validation.end());
        std::set<std::size_t> tr(s.train.begin(), s.train.end());
        for (auto v : s.validation) {
            EXPECT_EQ(tr.count(v), 0u);
        }
        EXPECT_EQ(tr.size() + s.validation.size(), labels.size());
    }
    EXPECT_EQ(seen.size(), labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        EXPECT_EQ(seen.count(i), 1u);
    }
    EXPECT_THROW(fold_split(fa, 3), ArgumentError);
    EXPECT_TRUE(check_stratification(fa, labels).empty());
}

TEST(FoldSplit, HeldOutSamplesJoinNoFold) {
    const auto labels = from_counts(12, 6);
    const auto holdout = stratified_holdout(labels, 0.25, 1);
    EXPECT_EQ(holdout.size(), 3u + 2u);  // ceil(0.25*12) + ceil(0.25*6)
    FoldAssignment fa = stratified_kfold(labels, 3, 1);
    for (auto i : holdout) {
        fa.fold_of[i] = kHeldOut;
    }
    for (int f = 0; f < 3; ++f) {
        const auto s = fold_split(fa, f);
        for (auto i : holdout) {
            EXPECT_EQ(std::count(s.train.begin(), s.train.end(), i), 0);
            EXPECT_EQ(std::count(s.validation.begin(), s.validation.end(), i), 0);
        }
    }
}

TEST(CheckStratification, DetectsViolations) {
    const auto labels = from_counts(6, 3);
    FoldAssignment fa{3, 0, {0, 0, 0, 0, 1, 2, 1, 2, 1}};
    EXPECT_FALSE(check_stratification(fa, labels).empty());
    fa.fold_of = {0, 1};
    EXPECT_FALSE(check_stratification(fa, labels).empty());
}

TEST(FoldAssignment, JsonRoundTrip) {
    const auto fa = stratified_kfold(from_counts(9, 9), 3, 42);
    const nlohmann::json j = fa;
    EXPECT_EQ(j.get<FoldAssignment>(), fa);
    const nlohmann::json w = compute_class_weights(from_counts(1, 3));
    EXPECT_EQ(w.at("0").get<double>(), 2.0);
}

}  // namespace
}  // namespace leukex
