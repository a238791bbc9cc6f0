#include "leukex/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "leukex/error.hpp"
#include "leukex/random_stream.hpp"

namespace leukex::sampling {

namespace {

// Holdout and fold shuffles draw from disjoint stream ranges of one seed.
constexpr std::uint64_t kHoldoutStreamBase = 1u << 20;

std::vector<std::vector<std::size_t>> members_by_class(const LabelVector& labels) {
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(labels.n_classes));
    for (std::size_t i = 0; i < labels.y.size(); ++i) {
        members[static_cast<std::size_t>(labels.y[i])].push_back(i);
    }
    return members;
}

}  // namespace

LabelVector::LabelVector(std::vector<int> labels, int classes) : y(std::move(labels)), n_classes(classes) {
    if (n_classes < 1) {
        throw ArgumentError("n_classes must be positive");
    }
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] < 0 || y[i] >= n_classes) {
            throw ArgumentError("label " + std::to_string(y[i]) + " at index " + std::to_string(i) +
                                " is outside 0.." + std::to_string(n_classes - 1));
        }
    }
}

std::vector<std::size_t> LabelVector::counts() const {
    std::vector<std::size_t> c(static_cast<std::size_t>(n_classes), 0);
    for (int v : y) {
        ++c.at(static_cast<std::size_t>(v));
    }
    return c;
}

ClassWeights compute_class_weights(const LabelVector& labels) {
    const auto counts = labels.counts();
    const auto n = static_cast<std::int64_t>(labels.size());
    ClassWeights out;
    out.w.reserve(counts.size());
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0) {
            throw ArgumentError("class " + std::to_string(c) + " has no samples; cannot compute class weights");
        }
        // Integer denominator first, then one floating division.
        const auto denom = static_cast<std::int64_t>(labels.n_classes) * static_cast<std::int64_t>(counts[c]);
        out.w.push_back(static_cast<double>(n) / static_cast<double>(denom));
    }
    return out;
}

FoldAssignment stratified_kfold(const LabelVector& labels, int k, std::uint64_t seed) {
    if (k < 2) {
        throw ArgumentError("k must be at least 2 (got " + std::to_string(k) + ")");
    }
    const auto counts = labels.counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] < static_cast<std::size_t>(k)) {
            throw ArgumentError("k=" + std::to_string(k) + " exceeds the " + std::to_string(counts[c]) +
                                " samples of class " + std::to_string(c));
        }
    }

    FoldAssignment fa;
    fa.k = k;
    fa.seed = seed;
    fa.fold_of.assign(labels.size(), -1);
    auto members = members_by_class(labels);
    std::size_t dealt = 0;
    for (std::size_t c = 0; c < members.size(); ++c) {
        RandomStream rng = RandomStream::substream(seed, c);
        rng.shuffle(std::span<std::size_t>(members[c]));
        for (std::size_t idx : members[c]) {
            fa.fold_of[idx] = static_cast<int>(dealt % static_cast<std::size_t>(k));
            ++dealt;
        }
    }
    return fa;
}

Split fold_split(const FoldAssignment& fa, int fold) {
    if (fold < 0 || fold >= fa.k) {
        throw ArgumentError("fold " + std::to_string(fold) + " out of range 0.." + std::to_string(fa.k - 1));
    }
    Split s;
    for (std::size_t i = 0; i < fa.fold_of.size(); ++i) {
        if (fa.fold_of[i] == kHeldOut) {
            continue;
        }
        (fa.fold_of[i] == fold ? s.validation : s.train).push_back(i);
    }
    return s;
}

std::string check_stratification(const FoldAssignment& fa, const LabelVector& labels) {
    if (fa.fold_of.size() != labels.size()) {
        return "fold assignment covers " + std::to_string(fa.fold_of.size()) + " samples, labels have " +
               std::to_string(labels.size());
    }
    const auto k = static_cast<std::size_t>(fa.k);
    std::vector<std::size_t> sizes(k, 0);
    std::vector<std::vector<std::size_t>> per_class(k, std::vector<std::size_t>(static_cast<std::size_t>(labels.n_classes), 0));
    std::vector<std::size_t> counts(static_cast<std::size_t>(labels.n_classes), 0);
    for (std::size_t i = 0; i < fa.fold_of.size(); ++i) {
        const int f = fa.fold_of[i];
        if (f == kHeldOut) {
            continue;
        }
        if (f < 0 || f >= fa.k) {
            return "sample " + std::to_string(i) + " has fold id " + std::to_string(f);
        }
        ++sizes[static_cast<std::size_t>(f)];
        ++per_class[static_cast<std::size_t>(f)][static_cast<std::size_t>(labels.y[i])];
        ++counts[static_cast<std::size_t>(labels.y[i])];
    }
    const auto [mn, mx] = std::minmax_element(sizes.begin(), sizes.end());
    if (*mn == 0) {
        return "a fold is empty";
    }
    if (*mx - *mn > 1) {
        return "fold sizes differ by more than one";
    }
    for (std::size_t f = 0; f < k; ++f) {
        for (std::size_t c = 0; c < counts.size(); ++c) {
            const double expected = static_cast<double>(counts[c]) / static_cast<double>(k);
            if (std::abs(static_cast<double>(per_class[f][c]) - expected) >= 1.0) {
                return "fold " + std::to_string(f) + " holds " + std::to_string(per_class[f][c]) + " of class " +
                       std::to_string(c) + ", expected about " + std::to_string(expected);
            }
        }
    }
    return {};
}

std::vector<std::size_t> stratified_holdout(const LabelVector& labels, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction < 1.0)) {
        throw ArgumentError("holdout fraction must lie in [0, 1)");
    }
    std::vector<std::size_t> out;
    if (fraction == 0.0) {
        return out;
    }
    auto members = members_by_class(labels);
    for (std::size_t c = 0; c < members.size(); ++c) {
        RandomStream rng = RandomStream::substream(seed, kHoldoutStreamBase + c);
        rng.shuffle(std::span<std::size_t>(members[c]));
        const auto take = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(members[c].size())));
        out.insert(out.end(), members[c].begin(), members[c].begin() + static_cast<std::ptrdiff_t>(std::min(take, members[c].size())));
    }
    std::sort(out.begin(), out.end());
    return out;
}

void to_json(nlohmann::json& j, const FoldAssignment& fa) {
    j = nlohmann::json{{"k", fa.k}, {"seed", fa.seed}, {"fold_of", fa.fold_of}};
}

void from_json(const nlohmann::json& j, FoldAssignment& fa) {
    fa.k = j.at("k").get<int>();
    fa.seed = j.at("seed").get<std::uint64_t>();
    fa.fold_of = j.at("fold_of").get<std::vector<int>>();
}

void to_json(nlohmann::json& j, const ClassWeights& w) {
    j = nlohmann::json::object();
    for (std::size_t c = 0; c < w.w.size(); ++c) {
        j[std::to_string(c)] = w.w[c];
    }
}

}  // namespace leukex::sampling
