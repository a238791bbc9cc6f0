#include "leukex/model.hpp"

#include <algorithm>
#include <cmath>

#include "leukex/error.hpp"

namespace leukex::model {

std::vector<std::string> default_class_names() {
    return {"Normal", "ALL"};
}

double weighted_bce(std::span<const double> p_positive, std::span<const int> y, const sampling::ClassWeights& w,
                    double eps) {
    if (p_positive.size() != y.size()) {
        throw ArgumentError("weighted_bce: " + std::to_string(p_positive.size()) + " predictions vs " +
                            std::to_string(y.size()) + " labels");
    }
    if (y.empty()) {
        throw ArgumentError("weighted_bce of an empty batch is undefined");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] != 0 && y[i] != 1) {
            throw ArgumentError("weighted_bce: labels must be binary");
        }
        const double p = std::clamp(p_positive[i], eps, 1.0 - eps);
        const double term = y[i] == 1 ? std::log(p) : std::log(1.0 - p);
        sum += w[y[i]] * term;
    }
    return -sum / static_cast<double>(y.size());
}

}  // namespace leukex::model
