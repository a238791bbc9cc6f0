#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "leukex/model.hpp"

namespace leukex::model {

enum class TensorLayout { NHWC, NCHW };

/// How a [0,1] RGB image is turned into the network's input tensor:
/// x' = (x * scale - mean[c]) / std[c], laid out per `layout`.
struct InputSpec {
    int height = kModelSide;
    int width = kModelSide;
    int channels = kChannels;
    TensorLayout layout = TensorLayout::NHWC;
    double scale = 1.0;
    std::array<double, 3> mean{0.0, 0.0, 0.0};
    std::array<double, 3> std{1.0, 1.0, 1.0};
};

/// What the network's first output means. With `logits` the outputs are
/// softmax-normalized (a single column goes through a sigmoid). Otherwise they
/// are probabilities; a single column is taken as P(class 1).
struct OutputSpec {
    std::vector<std::string> class_names = default_class_names();
    bool logits = true;
};

/// An ONNX file plus the JSON sidecar describing its input and output.
///
/// Sidecar schema:
///   { "input":  { "height": 299, "width": 299, "channels": 3,
///                 "layout": "NHWC" | "NCHW", "scale": 1.0,
///                 "mean": [r, g, b], "std": [r, g, b] },
///     "output": { "class_names": ["Normal", "ALL"], "logits": true } }
struct InterchangeModelHandle {
    std::filesystem::path path;
    InputSpec input;
    OutputSpec output;

    /// Reads the sidecar; throws ModelError when it is missing, malformed, or
    /// declares input dimensions other than 299 x 299 x 3.
    static InterchangeModelHandle from_sidecar(const std::filesystem::path& model_path,
                                               const std::filesystem::path& sidecar_path);
    /// Sidecar path convention: "<model path>.json".
    static std::filesystem::path default_sidecar(const std::filesystem::path& model_path);
};

/// Loads an ONNX graph restricted to the operator subset
///   Identity, Dropout, Flatten, Reshape, Transpose, Concat, Gemm, MatMul,
///   Add, Sub, Mul, Div, Relu, Sigmoid, Tanh, Softmax, Conv,
///   BatchNormalization, MaxPool, AveragePool, GlobalAveragePool
/// with float32 tensors (int64 for shapes). Throws ModelError naming the first
/// unsupported operator, or on a shape mismatch with the declared input.
std::unique_ptr<Classifier> load_interchange(const InterchangeModelHandle& handle);

}  // namespace leukex::model
