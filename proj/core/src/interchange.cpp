#include "leukex/interchange.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "leukex/error.hpp"
#include "leukex/imagestore.hpp"
#include "onnx/onnx.pb.h"

namespace leukex::model {

namespace {

using Shape = std::vector<std::int64_t>;

const std::set<std::string> kSupportedOps = {
    "Identity", "Dropout", "Flatten", "Reshape", "Transpose", "Concat", "Gemm", "MatMul",
    "Add", "Sub", "Mul", "Div", "Relu", "Sigmoid", "Tanh", "Softmax", "Conv",
    "BatchNormalization", "MaxPool", "AveragePool", "GlobalAveragePool"};

std::int64_t numel(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::int64_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += (i ? "," : "") + std::to_string(s[i]);
    }
    return out + "]";
}

struct Tensor {
    Shape shape;
    std::vector<float> data;
    std::vector<std::int64_t> ints;  // populated instead of `data` for int64 tensors
    bool is_int = false;

    std::int64_t rank() const { return static_cast<std::int64_t>(shape.size()); }
};

Tensor make_float(Shape shape) {
    Tensor t;
    t.data.assign(static_cast<std::size_t>(numel(shape)), 0.0f);
    t.shape = std::move(shape);
    return t;
}

Tensor from_proto(const onnx::TensorProto& p) {
    Tensor t;
    t.shape.assign(p.dims().begin(), p.dims().end());
    const auto n = static_cast<std::size_t>(numel(t.shape));
    if (p.data_location() == onnx::TensorProto::EXTERNAL) {
        throw ModelError("initializer '" + p.name() + "' uses external data, which is not supported");
    }
    if (p.data_type() == onnx::TensorProto::FLOAT) {
        if (!p.raw_data().empty()) {
            if (p.raw_data().size() != n * sizeof(float)) {
                throw ModelError("initializer '" + p.name() + "' raw data size does not match its shape");
            }
            t.data.resize(n);
            std::memcpy(t.data.data(), p.raw_data().data(), n * sizeof(float));
        } else {
            t.data.assign(p.float_data().begin(), p.float_data().end());
        }
        if (t.data.size() != n) {
            throw ModelError("initializer '" + p.name() + "' has " + std::to_string(t.data.size()) +
                             " values for shape " + shape_str(t.shape));
        }
    } else if (p.data_type() == onnx::TensorProto::INT64) {
        t.is_int = true;
        if (!p.raw_data().empty()) {
            if (p.raw_data().size() != n * sizeof(std::int64_t)) {
                throw ModelError("initializer '" + p.name() + "' raw data size does not match its shape");
            }
            t.ints.resize(n);
            std::memcpy(t.ints.data(), p.raw_data().data(), n * sizeof(std::int64_t));
        } else {
            t.ints.assign(p.int64_data().begin(), p.int64_data().end());
        }
        if (t.ints.size() != n) {
            throw ModelError("initializer '" + p.name() + "' value count does not match its shape");
        }
    } else {
        throw ModelError("initializer '" + p.name() + "' has unsupported data type " +
                         std::to_string(p.data_type()));
    }
    return t;
}

class Attributes {
public:
    explicit Attributes(const onnx::NodeProto& node) {
        for (const auto& a : node.attribute()) {
            attrs_.emplace(a.name(), &a);
        }
    }
    std::int64_t i(const std::string& name, std::int64_t fallback) const {
        auto it = attrs_.find(name);
        return it == attrs_.end() ? fallback : it->second->i();
    }
    float f(const std::string& name, float fallback) const {
        auto it = attrs_.find(name);
        return it == attrs_.end() ? fallback : it->second->f();
    }
    std::string s(const std::string& name, const std::string& fallback) const {
        auto it = attrs_.find(name);
        return it == attrs_.end() ? fallback : it->second->s();
    }
    Shape ints(const std::string& name, Shape fallback) const {
        auto it = attrs_.find(name);
        if (it == attrs_.end()) {
            return fallback;
        }
        return Shape(it->second->ints().begin(), it->second->ints().end());
    }

private:
    std::unordered_map<std::string, const onnx::AttributeProto*> attrs_;
};

std::int64_t normalize_axis(std::int64_t axis, std::int64_t rank, const std::string& op) {
    if (axis < 0) {
        axis += rank;
    }
    if (axis < 0 || axis >= std::max<std::int64_t>(rank, 1)) {
        throw ModelError(op + ": axis out of range");
    }
    return axis;
}

Shape strides_of(const Shape& s) {
    Shape st(s.size(), 1);
    for (std::int64_t i = static_cast<std::int64_t>(s.size()) - 2; i >= 0; --i) {
        st[static_cast<std::size_t>(i)] = st[static_cast<std::size_t>(i + 1)] * s[static_cast<std::size_t>(i + 1)];
    }
    return st;
}

Tensor broadcast_binary(const Tensor& a, const Tensor& b, const std::function<float(float, float)>& fn,
                        const std::string& op) {
    const std::size_t rank = std::max(a.shape.size(), b.shape.size());
    Shape sa(rank, 1);
    Shape sb(rank, 1);
    std::copy(a.shape.begin(), a.shape.end(), sa.begin() + static_cast<std::ptrdiff_t>(rank - a.shape.size()));
    std::copy(b.shape.begin(), b.shape.end(), sb.begin() + static_cast<std::ptrdiff_t>(rank - b.shape.size()));
    Shape out_shape(rank);
    for (std::size_t d = 0; d < rank; ++d) {
        if (sa[d] != sb[d] && sa[d] != 1 && sb[d] != 1) {
            throw ModelError(op + ": cannot broadcast " + shape_str(a.shape) + " with " + shape_str(b.shape));
        }
        out_shape[d] = std::max(sa[d], sb[d]);
    }
    Tensor out = make_float(out_shape);
    const Shape st_a = strides_of(sa);
    const Shape st_b = strides_of(sb);
    const Shape st_o = strides_of(out_shape);
    const auto n = static_cast<std::int64_t>(out.data.size());
    for (std::int64_t idx = 0; idx < n; ++idx) {
        std::int64_t ia = 0;
        std::int64_t ib = 0;
        std::int64_t rem = idx;
        for (std::size_t d = 0; d < rank; ++d) {
            const std::int64_t coord = rem / st_o[d];
            rem %= st_o[d];
            if (sa[d] != 1) {
                ia += coord * st_a[d];
            }
            if (sb[d] != 1) {
                ib += coord * st_b[d];
            }
        }
        out.data[static_cast<std::size_t>(idx)] =
            fn(a.data[static_cast<std::size_t>(ia)], b.data[static_cast<std::size_t>(ib)]);
    }
    return out;
}

Tensor unary(const Tensor& x, const std::function<float(float)>& fn) {
    Tensor out = x;
    for (float& v : out.data) {
        v = fn(v);
    }
    return out;
}

Tensor matmul2d(const float* a, const float* b, std::int64_t m, std::int64_t k, std::int64_t n, bool trans_a,
                bool trans_b) {
    Tensor out = make_float({m, n});
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t p = 0; p < k; ++p) {
            const float av = trans_a ? a[p * m + i] : a[i * k + p];
            if (av == 0.0f) {
                continue;
            }
            for (std::int64_t j = 0; j < n; ++j) {
                const float bv = trans_b ? b[j * k + p] : b[p * n + j];
                out.data[static_cast<std::size_t>(i * n + j)] += av * bv;
            }
        }
    }
    return out;
}

struct PoolGeometry {
    std::int64_t kh, kw, sh, sw, dh, dw, pt, pl, pb, pr, oh, ow;
};

PoolGeometry pool_geometry(const Attributes& at, std::int64_t h, std::int64_t w, std::int64_t kh, std::int64_t kw,
                           const std::string& op) {
    PoolGeometry g{};
    g.kh = kh;
    g.kw = kw;
    const Shape strides = at.ints("strides", {1, 1});
    const Shape dil = at.ints("dilations", {1, 1});
    Shape pads = at.ints("pads", {0, 0, 0, 0});
    if (strides.size() != 2 || dil.size() != 2 || pads.size() != 4) {
        throw ModelError(op + ": only 2-D spatial attributes are supported");
    }
    g.sh = strides[0];
    g.sw = strides[1];
    g.dh = dil[0];
    g.dw = dil[1];
    const bool ceil_mode = at.i("ceil_mode", 0) != 0;
    const std::string auto_pad = at.s("auto_pad", "NOTSET");
    if (auto_pad == "SAME_UPPER" || auto_pad == "SAME_LOWER") {
        auto same = [&](std::int64_t in, std::int64_t k, std::int64_t s, std::int64_t d, std::int64_t& lo,
                        std::int64_t& hi) {
            const std::int64_t out = (in + s - 1) / s;
            const std::int64_t total = std::max<std::int64_t>(0, (out - 1) * s + (k - 1) * d + 1 - in);
            lo = auto_pad == "SAME_UPPER" ? total / 2 : total - total / 2;
            hi = total - lo;
        };
        same(h, kh, g.sh, g.dh, pads[0], pads[2]);
        same(w, kw, g.sw, g.dw, pads[1], pads[3]);
    } else if (auto_pad == "VALID") {
        pads = {0, 0, 0, 0};
    } else if (auto_pad != "NOTSET") {
        throw ModelError(op + ": unsupported auto_pad '" + auto_pad + "'");
    }
    g.pt = pads[0];
    g.pl = pads[1];
    g.pb = pads[2];
    g.pr = pads[3];
    auto out_len = [&](std::int64_t in, std::int64_t k, std::int64_t s, std::int64_t d, std::int64_t p0,
                       std::int64_t p1) {
        const std::int64_t span = in + p0 + p1 - ((k - 1) * d + 1);
        if (span < 0) {
            throw ModelError(op + ": kernel larger than padded input");
        }
        return (ceil_mode ? (span + s - 1) / s : span / s) + 1;
    };
    g.oh = out_len(h, kh, g.sh, g.dh, g.pt, g.pb);
    g.ow = out_len(w, kw, g.sw, g.dw, g.pl, g.pr);
    return g;
}

class OnnxGraph {
public:
    explicit OnnxGraph(const onnx::ModelProto& model) {
        opset_ = 1;
        for (const auto& imp : model.opset_import()) {
            if (imp.domain().empty() || imp.domain() == "ai.onnx") {
                opset_ = imp.version();
            }
        }
        const auto& graph = model.graph();
        for (const auto& init : graph.initializer()) {
            initializers_.emplace(init.name(), from_proto(init));
        }
        for (const auto& in : graph.input()) {
            if (!initializers_.contains(in.name())) {
                if (!input_name_.empty()) {
                    throw ModelError("graph has more than one runtime input");
                }
                input_name_ = in.name();
                if (in.type().has_tensor_type() && in.type().tensor_type().has_shape()) {
                    for (const auto& d : in.type().tensor_type().shape().dim()) {
                        input_dims_.push_back(d.has_dim_value() ? d.dim_value() : -1);
                    }
                }
            }
        }
        if (input_name_.empty()) {
            throw ModelError("graph declares no runtime input");
        }
        if (graph.output_size() < 1) {
            throw ModelError("graph declares no output");
        }
        output_name_ = graph.output(0).name();
        for (const auto& node : graph.node()) {
            if (!node.domain().empty() && node.domain() != "ai.onnx") {
                throw ModelError("unsupported operator '" + node.domain() + "::" + node.op_type() + "'");
            }
            if (!kSupportedOps.contains(node.op_type())) {
                throw ModelError("unsupported operator '" + node.op_type() + "'");
            }
            nodes_.push_back(node);
        }
    }

    const Shape& input_dims() const { return input_dims_; }

    Tensor run(Tensor input) const {
        std::unordered_map<std::string, Tensor> values;
        values.emplace(input_name_, std::move(input));
        auto get = [&](const std::string& name) -> const Tensor& {
            if (auto it = values.find(name); it != values.end()) {
                return it->second;
            }
            if (auto it = initializers_.find(name); it != initializers_.end()) {
                return it->second;
            }
            throw ModelError("graph references undefined value '" + name + "'");
        };
        for (const auto& node : nodes_) {
            std::vector<const Tensor*> ins;
            for (const auto& name : node.input()) {
                ins.push_back(name.empty() ? nullptr : &get(name));
            }
            Tensor out = execute(node, ins);
            values.insert_or_assign(node.output(0), std::move(out));
        }
        return get(output_name_);
    }

private:
    static const Tensor& need(const std::vector<const Tensor*>& ins, std::size_t i, const std::string& op) {
        if (i >= ins.size() || ins[i] == nullptr) {
            throw ModelError(op + ": missing input " + std::to_string(i));
        }
        if (ins[i]->is_int) {
            throw ModelError(op + ": input " + std::to_string(i) + " must be float");
        }
        return *ins[i];
    }

    Tensor execute(const onnx::NodeProto& node, const std::vector<const Tensor*>& ins) const {
        const std::string& op = node.op_type();
        const Attributes at(node);

        if (op == "Identity" || op == "Dropout") {
            return need(ins, 0, op);
        }
        if (op == "Relu") {
            return unary(need(ins, 0, op), [](float v) { return v > 0.0f ? v : 0.0f; });
        }
        if (op == "Sigmoid") {
            return unary(need(ins, 0, op), [](float v) {
                return static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(v))));
            });
        }
        if (op == "Tanh") {
            return unary(need(ins, 0, op), [](float v) { return std::tanh(v); });
        }
        if (op == "Add" || op == "Sub" || op == "Mul" || op == "Div") {
            static const std::unordered_map<std::string, std::function<float(float, float)>> kOps = {
                {"Add", std::plus<float>()}, {"Sub", std::minus<float>()},
                {"Mul", std::multiplies<float>()}, {"Div", std::divides<float>()}};
            return broadcast_binary(need(ins, 0, op), need(ins, 1, op), kOps.at(op), op);
        }
        if (op == "Flatten") {
            Tensor out = need(ins, 0, op);
            const std::int64_t axis = at.i("axis", 1) < 0 ? at.i("axis", 1) + out.rank() : at.i("axis", 1);
            if (axis < 0 || axis > out.rank()) {
                throw ModelError("Flatten: axis out of range");
            }
            const Shape head(out.shape.begin(), out.shape.begin() + axis);
            const std::int64_t outer = numel(head);
            out.shape = {outer, numel(out.shape) / std::max<std::int64_t>(outer, 1)};
            return out;
        }
        if (op == "Reshape") {
            Tensor out = need(ins, 0, op);
            if (ins.size() < 2 || ins[1] == nullptr || !ins[1]->is_int) {
                throw ModelError("Reshape: shape input must be an int64 initializer");
            }
            Shape target = ins[1]->ints;
            std::int64_t known = 1;
            std::int64_t infer = -1;
            for (std::size_t d = 0; d < target.size(); ++d) {
                if (target[d] == 0 && at.i("allowzero", 0) == 0) {
                    if (d >= out.shape.size()) {
                        throw ModelError("Reshape: zero refers past input rank");
                    }
                    target[d] = out.shape[d];
                }
                if (target[d] == -1) {
                    if (infer >= 0) {
                        throw ModelError("Reshape: more than one -1 in target shape");
                    }
                    infer = static_cast<std::int64_t>(d);
                } else {
                    known *= target[d];
                }
            }
            const std::int64_t total = numel(out.shape);
            if (infer >= 0) {
                if (known == 0 || total % known != 0) {
                    throw ModelError("Reshape: cannot infer dimension");
                }
                target[static_cast<std::size_t>(infer)] = total / known;
            }
            if (numel(target) != total) {
                throw ModelError("Reshape: " + shape_str(out.shape) + " cannot become " + shape_str(target));
            }
            out.shape = target;
            return out;
        }
        if (op == "Transpose") {
            const Tensor& x = need(ins, 0, op);
            Shape perm = at.ints("perm", {});
            if (perm.empty()) {
                for (std::int64_t d = x.rank() - 1; d >= 0; --d) {
                    perm.push_back(d);
                }
            }
            if (static_cast<std::int64_t>(perm.size()) != x.rank()) {
                throw ModelError("Transpose: perm length does not match rank");
            }
            Shape out_shape(perm.size());
            for (std::size_t d = 0; d < perm.size(); ++d) {
                out_shape[d] = x.shape[static_cast<std::size_t>(perm[d])];
            }
            Tensor out = make_float(out_shape);
            const Shape st_in = strides_of(x.shape);
            const Shape st_out = strides_of(out_shape);
            for (std::int64_t idx = 0; idx < numel(out_shape); ++idx) {
                std::int64_t rem = idx;
                std::int64_t src = 0;
                for (std::size_t d = 0; d < perm.size(); ++d) {
                    const std::int64_t coord = rem / st_out[d];
                    rem %= st_out[d];
                    src += coord * st_in[static_cast<std::size_t>(perm[d])];
                }
                out.data[static_cast<std::size_t>(idx)] = x.data[static_cast<std::size_t>(src)];
            }
            return out;
        }
        if (op == "Concat") {
            const Tensor& first = need(ins, 0, op);
            const std::int64_t axis = normalize_axis(at.i("axis", 0), first.rank(), op);
            Shape out_shape = first.shape;
            out_shape[static_cast<std::size_t>(axis)] = 0;
            for (std::size_t i = 0; i < ins.size(); ++i) {
                const Tensor& t = need(ins, i, op);
                if (t.rank() != first.rank()) {
                    throw ModelError("Concat: rank mismatch");
                }
                for (std::int64_t d = 0; d < t.rank(); ++d) {
                    if (d != axis && t.shape[static_cast<std::size_t>(d)] != first.shape[static_cast<std::size_t>(d)]) {
                        throw ModelError("Concat: shape mismatch off the concat axis");
                    }
                }
                out_shape[static_cast<std::size_t>(axis)] += t.shape[static_cast<std::size_t>(axis)];
            }
            const Shape outer_dims(first.shape.begin(), first.shape.begin() + axis);
            const std::int64_t outer = numel(outer_dims);
            Tensor out = make_float(out_shape);
            std::size_t pos = 0;
            for (std::int64_t o = 0; o < outer; ++o) {
                for (std::size_t i = 0; i < ins.size(); ++i) {
                    const Tensor& t = *ins[i];
                    const std::int64_t chunk = numel(t.shape) / std::max<std::int64_t>(outer, 1);
                    const float* src = t.data.data() + o * chunk;
                    std::copy(src, src + chunk, out.data.begin() + static_cast<std::ptrdiff_t>(pos));
                    pos += static_cast<std::size_t>(chunk);
                }
            }
            return out;
        }
        if (op == "Gemm") {
            const Tensor& a = need(ins, 0, op);
            const Tensor& b = need(ins, 1, op);
            if (a.rank() != 2 || b.rank() != 2) {
                throw ModelError("Gemm: inputs must be rank 2, got " + shape_str(a.shape) + " and " + shape_str(b.shape));
            }
            const bool ta = at.i("transA", 0) != 0;
            const bool tb = at.i("transB", 0) != 0;
            const std::int64_t m = ta ? a.shape[1] : a.shape[0];
            const std::int64_t k = ta ? a.shape[0] : a.shape[1];
            const std::int64_t kb = tb ? b.shape[1] : b.shape[0];
            const std::int64_t n = tb ? b.shape[0] : b.shape[1];
            if (k != kb) {
                throw ModelError("Gemm: inner dimensions differ (" + std::to_string(k) + " vs " + std::to_string(kb) + ")");
            }
            Tensor out = matmul2d(a.data.data(), b.data.data(), m, k, n, ta, tb);
            const float alpha = at.f("alpha", 1.0f);
            const float beta = at.f("beta", 1.0f);
            for (float& v : out.data) {
                v *= alpha;
            }
            if (ins.size() > 2 && ins[2] != nullptr) {
                Tensor c = need(ins, 2, op);
                for (float& v : c.data) {
                    v *= beta;
                }
                out = broadcast_binary(out, c, std::plus<float>(), op);
            }
            return out;
        }
        if (op == "MatMul") {
            const Tensor& a = need(ins, 0, op);
            const Tensor& b = need(ins, 1, op);
            if (a.rank() < 2 || b.rank() != 2) {
                throw ModelError("MatMul: only [..., M, K] x [K, N] is supported");
            }
            const std::int64_t k = a.shape.back();
            if (k != b.shape[0]) {
                throw ModelError("MatMul: inner dimensions differ");
            }
            const std::int64_t m = numel(a.shape) / k;
            Tensor out = matmul2d(a.data.data(), b.data.data(), m, k, b.shape[1], false, false);
            Shape out_shape = a.shape;
            out_shape.back() = b.shape[1];
            out.shape = out_shape;
            return out;
        }
        if (op == "Softmax") {
            Tensor out = need(ins, 0, op);
            const std::int64_t default_axis = opset_ >= 13 ? -1 : 1;
            const std::int64_t axis = normalize_axis(at.i("axis", default_axis), out.rank(), op);
            // Before opset 13 the input is coerced to 2-D around `axis`.
            const Shape head(out.shape.begin(), out.shape.begin() + axis);
            std::int64_t outer = numel(head);
            std::int64_t len = out.shape[static_cast<std::size_t>(axis)];
            std::int64_t inner = numel(out.shape) / (outer * len);
            if (opset_ < 13) {
                len *= inner;
                inner = 1;
            }
            for (std::int64_t o = 0; o < outer; ++o) {
                for (std::int64_t in = 0; in < inner; ++in) {
                    float* base = out.data.data() + o * len * inner + in;
                    float mx = -std::numeric_limits<float>::infinity();
                    for (std::int64_t j = 0; j < len; ++j) {
                        mx = std::max(mx, base[j * inner]);
                    }
                    double sum = 0.0;
                    for (std::int64_t j = 0; j < len; ++j) {
                        sum += std::exp(static_cast<double>(base[j * inner] - mx));
                    }
                    for (std::int64_t j = 0; j < len; ++j) {
                        base[j * inner] = static_cast<float>(std::exp(static_cast<double>(base[j * inner] - mx)) / sum);
                    }
                }
            }
            return out;
        }
        if (op == "GlobalAveragePool") {
            const Tensor& x = need(ins, 0, op);
            if (x.rank() != 4) {
                throw ModelError("GlobalAveragePool: expected NCHW input, got " + shape_str(x.shape));
            }
            const std::int64_t hw = x.shape[2] * x.shape[3];
            Tensor out = make_float({x.shape[0], x.shape[1], 1, 1});
            for (std::int64_t nc = 0; nc < x.shape[0] * x.shape[1]; ++nc) {
                double sum = 0.0;
                for (std::int64_t i = 0; i < hw; ++i) {
                    sum += x.data[static_cast<std::size_t>(nc * hw + i)];
                }
                out.data[static_cast<std::size_t>(nc)] = static_cast<float>(sum / static_cast<double>(hw));
            }
            return out;
        }
        if (op == "BatchNormalization") {
            Tensor out = need(ins, 0, op);
            const Tensor& scale = need(ins, 1, op);
            const Tensor& bias = need(ins, 2, op);
            const Tensor& mean = need(ins, 3, op);
            const Tensor& var = need(ins, 4, op);
            if (out.rank() < 2) {
                throw ModelError("BatchNormalization: input rank must be at least 2");
            }
            const float eps = at.f("epsilon", 1e-5f);
            const std::int64_t c = out.shape[1];
            const std::int64_t inner = numel(out.shape) / (out.shape[0] * c);
            for (std::int64_t n = 0; n < out.shape[0]; ++n) {
                for (std::int64_t ch = 0; ch < c; ++ch) {
                    const auto sc = static_cast<std::size_t>(ch);
                    const float mul = scale.data[sc] / std::sqrt(var.data[sc] + eps);
                    const float add = bias.data[sc] - mean.data[sc] * mul;
                    float* base = out.data.data() + (n * c + ch) * inner;
                    for (std::int64_t i = 0; i < inner; ++i) {
                        base[i] = base[i] * mul + add;
                    }
                }
            }
            return out;
        }
        if (op == "Conv") {
            const Tensor& x = need(ins, 0, op);
            const Tensor& w = need(ins, 1, op);
            if (x.rank() != 4 || w.rank() != 4) {
                throw ModelError("Conv: only 2-D NCHW convolution is supported");
            }
            const std::int64_t group = at.i("group", 1);
            const std::int64_t n = x.shape[0];
            const std::int64_t c = x.shape[1];
            const std::int64_t m = w.shape[0];
            const std::int64_t cg = w.shape[1];
            if (group < 1 || c != cg * group || m % group != 0) {
                throw ModelError("Conv: channel/group mismatch " + shape_str(x.shape) + " * " + shape_str(w.shape));
            }
            const PoolGeometry g = pool_geometry(at, x.shape[2], x.shape[3], w.shape[2], w.shape[3], op);
            Tensor out = make_float({n, m, g.oh, g.ow});
            const std::int64_t m_per_group = m / group;
            for (std::int64_t b = 0; b < n; ++b) {
                for (std::int64_t oc = 0; oc < m; ++oc) {
                    const std::int64_t grp = oc / m_per_group;
                    const float bias = ins.size() > 2 && ins[2] ? need(ins, 2, op).data[static_cast<std::size_t>(oc)] : 0.0f;
                    for (std::int64_t oy = 0; oy < g.oh; ++oy) {
                        for (std::int64_t ox = 0; ox < g.ow; ++ox) {
                            double acc = bias;
                            for (std::int64_t ic = 0; ic < cg; ++ic) {
                                const std::int64_t xc = grp * cg + ic;
                                for (std::int64_t ky = 0; ky < g.kh; ++ky) {
                                    const std::int64_t iy = oy * g.sh - g.pt + ky * g.dh;
                                    if (iy < 0 || iy >= x.shape[2]) {
                                        continue;
                                    }
                                    for (std::int64_t kx = 0; kx < g.kw; ++kx) {
                                        const std::int64_t ix = ox * g.sw - g.pl + kx * g.dw;
                                        if (ix < 0 || ix >= x.shape[3]) {
                                            continue;
                                        }
                                        acc += static_cast<double>(
                                                   x.data[static_cast<std::size_t>(((b * c + xc) * x.shape[2] + iy) * x.shape[3] + ix)]) *
                                               w.data[static_cast<std::size_t>(((oc * cg + ic) * g.kh + ky) * g.kw + kx)];
                                    }
                                }
                            }
                            out.data[static_cast<std::size_t>(((b * m + oc) * g.oh + oy) * g.ow + ox)] = static_cast<float>(acc);
                        }
                    }
                }
            }
            return out;
        }
        if (op == "MaxPool" || op == "AveragePool") {
            const Tensor& x = need(ins, 0, op);
            if (x.rank() != 4) {
                throw ModelError(op + ": expected NCHW input");
            }
            const Shape kernel = at.ints("kernel_shape", {});
            if (kernel.size() != 2) {
                throw ModelError(op + ": kernel_shape must have two entries");
            }
            const PoolGeometry g = pool_geometry(at, x.shape[2], x.shape[3], kernel[0], kernel[1], op);
            const bool is_max = op == "MaxPool";
            const bool include_pad = at.i("count_include_pad", 0) != 0;
            Tensor out = make_float({x.shape[0], x.shape[1], g.oh, g.ow});
            for (std::int64_t nc = 0; nc < x.shape[0] * x.shape[1]; ++nc) {
                const float* plane = x.data.data() + nc * x.shape[2] * x.shape[3];
                for (std::int64_t oy = 0; oy < g.oh; ++oy) {
                    for (std::int64_t ox = 0; ox < g.ow; ++ox) {
                        double acc = is_max ? -std::numeric_limits<double>::infinity() : 0.0;
                        std::int64_t count = 0;
                        std::int64_t padded = 0;
                        for (std::int64_t ky = 0; ky < g.kh; ++ky) {
                            const std::int64_t iy = oy * g.sh - g.pt + ky * g.dh;
                            for (std::int64_t kx = 0; kx < g.kw; ++kx) {
                                const std::int64_t ix = ox * g.sw - g.pl + kx * g.dw;
                                if (iy < 0 || iy >= x.shape[2] || ix < 0 || ix >= x.shape[3]) {
                                    // Positions inside explicit padding still count when requested.
                                    if (iy < x.shape[2] + g.pb && ix < x.shape[3] + g.pr) {
                                        ++padded;
                                    }
                                    continue;
                                }
                                const double v = plane[iy * x.shape[3] + ix];
                                acc = is_max ? std::max(acc, v) : acc + v;
                                ++count;
                            }
                        }
                        if (!is_max) {
                            const std::int64_t denom = include_pad ? count + padded : count;
                            acc = denom > 0 ? acc / static_cast<double>(denom) : 0.0;
                        }
                        out.data[static_cast<std::size_t>((nc * g.oh + oy) * g.ow + ox)] = static_cast<float>(acc);
                    }
                }
            }
            return out;
        }
        throw ModelError("unsupported operator '" + op + "'");
    }

    std::int64_t opset_ = 1;
    std::unordered_map<std::string, Tensor> initializers_;
    std::vector<onnx::NodeProto> nodes_;
    std::string input_name_;
    std::string output_name_;
    Shape input_dims_;
};

class InterchangeClassifier final : public Classifier {
public:
    InterchangeClassifier(std::unique_ptr<OnnxGraph> graph, InterchangeModelHandle handle)
        : graph_(std::move(graph)), handle_(std::move(handle)) {}

    metrics::ProbabilityMatrix predict_proba(std::span<const ImageTensor> batch) const override {
        const auto& in = handle_.input;
        const auto n = static_cast<std::int64_t>(batch.size());
        const Shape shape = in.layout == TensorLayout::NHWC ? Shape{n, in.height, in.width, in.channels}
                                                            : Shape{n, in.channels, in.height, in.width};
        Tensor x = make_float(shape);
        for (std::int64_t b = 0; b < n; ++b) {
            const ImageTensor& img = batch[static_cast<std::size_t>(b)];
            if (img.height() != in.height || img.width() != in.width) {
                throw ModelError("image " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                                 " does not match the declared model input " + std::to_string(in.height) + "x" +
                                 std::to_string(in.width));
            }
            for (int r = 0; r < in.height; ++r) {
                for (int c = 0; c < in.width; ++c) {
                    for (int ch = 0; ch < kChannels; ++ch) {
                        const double v = (img.at(r, c, ch) * in.scale - in.mean[static_cast<std::size_t>(ch)]) /
                                         in.std[static_cast<std::size_t>(ch)];
                        const std::int64_t idx =
                            in.layout == TensorLayout::NHWC
                                ? ((b * in.height + r) * in.width + c) * kChannels + ch
                                : ((b * kChannels + ch) * in.height + r) * in.width + c;
                        x.data[static_cast<std::size_t>(idx)] = static_cast<float>(v);
                    }
                }
            }
        }
        const Tensor y = graph_->run(std::move(x));
        if (y.is_int || y.shape.empty() || y.shape[0] != n) {
            throw ModelError("model output shape " + shape_str(y.shape) + " does not have one row per image");
        }
        const std::int64_t cols = n == 0 ? 0 : numel(y.shape) / n;
        const auto classes = static_cast<std::int64_t>(handle_.output.class_names.size());
        const bool single = cols == 1;
        if (!(single && classes == 2) && cols != classes) {
            throw ModelError("model emits " + std::to_string(cols) + " outputs per image but the sidecar names " +
                             std::to_string(classes) + " classes");
        }
        std::vector<double> probs;
        probs.reserve(static_cast<std::size_t>(n * classes));
        for (std::int64_t b = 0; b < n; ++b) {
            const float* row = y.data.data() + b * cols;
            if (single) {
                double p = row[0];
                if (handle_.output.logits) {
                    p = 1.0 / (1.0 + std::exp(-p));
                }
                p = std::clamp(p, 0.0, 1.0);
                probs.push_back(1.0 - p);
                probs.push_back(p);
                continue;
            }
            std::vector<double> v(row, row + cols);
            if (handle_.output.logits) {
                const double mx = *std::max_element(v.begin(), v.end());
                for (double& e : v) {
                    e = std::exp(e - mx);
                }
            } else {
                for (double& e : v) {
                    e = std::max(e, 0.0);
                }
            }
            const double sum = std::accumulate(v.begin(), v.end(), 0.0);
            if (!(sum > 0.0) || !std::isfinite(sum)) {
                throw ModelError("model produced a degenerate probability row");
            }
            for (double e : v) {
                probs.push_back(e / sum);
            }
        }
        return metrics::ProbabilityMatrix(static_cast<std::size_t>(n), static_cast<std::size_t>(classes),
                                          std::move(probs), 1e-6);
    }

    std::vector<std::string> class_names() const override { return handle_.output.class_names; }

private:
    std::unique_ptr<OnnxGraph> graph_;
    InterchangeModelHandle handle_;
};

}  // namespace

std::filesystem::path InterchangeModelHandle::default_sidecar(const std::filesystem::path& model_path) {
    return std::filesystem::path(model_path.string() + ".json");
}

InterchangeModelHandle InterchangeModelHandle::from_sidecar(const std::filesystem::path& model_path,
                                                            const std::filesystem::path& sidecar_path) {
    std::ifstream in(sidecar_path);
    if (!in) {
        throw ModelError("cannot open model sidecar " + sidecar_path.string());
    }
    InterchangeModelHandle h;
    h.path = model_path;
    try {
        nlohmann::json j;
        in >> j;
        const auto& input = j.at("input");
        h.input.height = input.value("height", kModelSide);
        h.input.width = input.value("width", kModelSide);
        h.input.channels = input.value("channels", kChannels);
        const std::string layout = input.value("layout", "NHWC");
        if (layout == "NHWC") {
            h.input.layout = TensorLayout::NHWC;
        } else if (layout == "NCHW") {
            h.input.layout = TensorLayout::NCHW;
        } else {
            throw ModelError("sidecar layout must be NHWC or NCHW, got " + layout);
        }
        h.input.scale = input.value("scale", 1.0);
        if (input.contains("mean")) {
            h.input.mean = input.at("mean").get<std::array<double, 3>>();
        }
        if (input.contains("std")) {
            h.input.std = input.at("std").get<std::array<double, 3>>();
        }
        if (j.contains("output")) {
            const auto& output = j.at("output");
            h.output.class_names = output.value("class_names", default_class_names());
            h.output.logits = output.value("logits", true);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ModelError("malformed model sidecar " + sidecar_path.string() + ": " + e.what());
    }
    if (h.input.height != kModelSide || h.input.width != kModelSide || h.input.channels != kChannels) {
        throw ModelError("sidecar declares input " + std::to_string(h.input.height) + "x" +
                         std::to_string(h.input.width) + "x" + std::to_string(h.input.channels) +
                         "; only 299x299x3 is supported");
    }
    for (double s : h.input.std) {
        if (!(s > 0.0)) {
            throw ModelError("sidecar std entries must be positive");
        }
    }
    if (h.output.class_names.size() < 2) {
        throw ModelError("sidecar must name at least two classes");
    }
    return h;
}

std::unique_ptr<Classifier> load_interchange(const InterchangeModelHandle& handle) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(handle.path, ec)) {
        throw ModelError("model file not found: " + handle.path.string());
    }
    std::vector<std::uint8_t> bytes;
    try {
        bytes = imagestore::read_file_bytes(handle.path);
    } catch (const IoError& e) {
        throw ModelError(e.what());
    }
    onnx::ModelProto proto;
    if (!proto.ParseFromArray(bytes.data(), static_cast<int>(bytes.size()))) {
        throw ModelError("cannot parse ONNX model " + handle.path.string());
    }
    auto graph = std::make_unique<OnnxGraph>(proto);

    const auto& in = handle.input;
    const Shape expected = in.layout == TensorLayout::NHWC ? Shape{-1, in.height, in.width, in.channels}
                                                           : Shape{-1, in.channels, in.height, in.width};
    const Shape& declared = graph->input_dims();
    if (!declared.empty()) {
        bool ok = declared.size() == expected.size();
        for (std::size_t d = 1; ok && d < declared.size(); ++d) {
            ok = declared[d] < 0 || declared[d] == expected[d];
        }
        if (!ok) {
            throw ModelError("shape mismatch: graph input " + shape_str(declared) + " vs sidecar " +
                             shape_str(expected));
        }
    }
    return std::make_unique<InterchangeClassifier>(std::move(graph), handle);
}

}  // namespace leukex::model
