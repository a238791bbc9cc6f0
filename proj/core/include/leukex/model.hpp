#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "leukex/image_tensor.hpp"
#include "leukex/metrics.hpp"
#include "leukex/sampling.hpp"

namespace leukex::model {

/// Black-box image classifier. Implementations must be safe to call
/// concurrently and deterministic for fixed inputs; each returned row sums to
/// one within 1e-6 and there is one row per input image.
class Classifier {
public:
    virtual ~Classifier() = default;

    virtual metrics::ProbabilityMatrix predict_proba(std::span<const ImageTensor> batch) const = 0;

    /// Human-readable class names indexed by class id.
    virtual std::vector<std::string> class_names() const = 0;

    std::size_t n_classes() const { return class_names().size(); }
};

/// Names for the binary task, indexed by label.
std::vector<std::string> default_class_names();

/// Class-weighted binary cross entropy with probabilities clipped to
/// [eps, 1 - eps]:  -(1/N) sum_i w[y_i] (y_i log p_i + (1 - y_i) log(1 - p_i)).
double weighted_bce(std::span<const double> p_positive, std::span<const int> y, const sampling::ClassWeights& w,
                    double eps = metrics::kLogLossEpsilon);

}  // namespace leukex::model
