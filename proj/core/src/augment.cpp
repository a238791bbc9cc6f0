#include "leukex/augment.hpp"

#include <algorithm>
#include <string>

#include "leukex/error.hpp"

namespace leukex::augment {

namespace {

constexpr double kLumaR = 0.299;
constexpr double kLumaG = 0.587;
constexpr double kLumaB = 0.114;
constexpr double kWindowSlack = 1e-12;

void check_probability(double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ArgumentError(std::string(name) + " must be a probability in [0,1]");
    }
}

void check_range(const Range& r, const char* name) {
    if (!(r.lo <= r.hi)) {
        throw ArgumentError(std::string(name) + " range is empty (lo > hi)");
    }
}

}  // namespace

void AugmentConfig::validate() const {
    check_probability(p_flip_v, "p_flip_v");
    check_probability(p_flip_h, "p_flip_h");
    if (transpose_threshold != kTransposeThreshold) {
        throw ArgumentError("transpose_threshold is fixed at 0.75");
    }
    check_range(brightness_delta, "brightness_delta");
    check_range(saturation_factor, "saturation_factor");
    check_range(contrast_factor, "contrast_factor");
    check_range(crop_fraction, "crop_fraction");
    if (crop_fraction.lo <= 0.0 || crop_fraction.hi > 1.0) {
        throw ArgumentError("crop_fraction must lie in (0, 1]");
    }
}

AugmentConfig AugmentConfig::neutral() {
    AugmentConfig cfg;
    cfg.p_flip_v = 0.0;
    cfg.p_flip_h = 0.0;
    cfg.transpose = false;
    cfg.brightness_delta = {0.0, 0.0};
    cfg.saturation_factor = {1.0, 1.0};
    cfg.contrast_factor = {1.0, 1.0};
    cfg.crop_fraction = {1.0, 1.0};
    return cfg;
}

ImageTensor flip_vertical(const ImageTensor& t) {
    ImageTensor out(t.height(), t.width());
    for (int r = 0; r < t.height(); ++r) {
        for (int c = 0; c < t.width(); ++c) {
            for (int ch = 0; ch < kChannels; ++ch) {
                out.at(r, c, ch) = t.at(t.height() - 1 - r, c, ch);
            }
        }
    }
    return out;
}

ImageTensor flip_horizontal(const ImageTensor& t) {
    ImageTensor out(t.height(), t.width());
    for (int r = 0; r < t.height(); ++r) {
        for (int c = 0; c < t.width(); ++c) {
            for (int ch = 0; ch < kChannels; ++ch) {
                out.at(r, c, ch) = t.at(r, t.width() - 1 - c, ch);
            }
        }
    }
    return out;
}

ImageTensor transpose_gate(const ImageTensor& t, double u, double threshold) {
    if (!(u > threshold)) {
        return t;
    }
    ImageTensor out(t.width(), t.height());
    for (int r = 0; r < t.height(); ++r) {
        for (int c = 0; c < t.width(); ++c) {
            for (int ch = 0; ch < kChannels; ++ch) {
                out.at(c, r, ch) = t.at(r, c, ch);
            }
        }
    }
    return out;
}

ImageTensor photometric(const ImageTensor& t, double brightness_delta, double saturation, double contrast) {
    const std::size_t pixels = t.size() / kChannels;
    std::vector<double> work(t.data().begin(), t.data().end());

    if (brightness_delta != 0.0) {
        for (double& v : work) {
            v += brightness_delta;
        }
    }
    if (saturation != 1.0) {
        for (std::size_t p = 0; p < pixels; ++p) {
            double* px = work.data() + p * kChannels;
            const double gray = kLumaR * px[0] + kLumaG * px[1] + kLumaB * px[2];
            for (int ch = 0; ch < kChannels; ++ch) {
                px[ch] = gray + saturation * (px[ch] - gray);
            }
        }
    }
    if (contrast != 1.0) {
        double means[kChannels] = {0.0, 0.0, 0.0};
        for (std::size_t i = 0; i < work.size(); ++i) {
            means[i % kChannels] += work[i];
        }
        for (double& m : means) {
            m /= static_cast<double>(pixels);
        }
        for (std::size_t i = 0; i < work.size(); ++i) {
            const double m = means[i % kChannels];
            work[i] = m + contrast * (work[i] - m);
        }
    }

    ImageTensor out(t.height(), t.width());
    auto dst = out.data();
    for (std::size_t i = 0; i < work.size(); ++i) {
        dst[i] = static_cast<float>(std::clamp(work[i], 0.0, 1.0));
    }
    return out;
}

ImageTensor crop_resize(const ImageTensor& t, double top, double left, double size) {
    if (!(size > 0.0 && size <= 1.0) || !(top >= 0.0) || !(left >= 0.0) ||
        top + size > 1.0 + kWindowSlack || left + size > 1.0 + kWindowSlack) {
        throw ArgumentError("crop window out of bounds: top=" + std::to_string(top) +
                            " left=" + std::to_string(left) + " size=" + std::to_string(size));
    }
    const double h = t.height();
    const double w = t.width();
    return resample_window(t, top * h, left * w, size * h, size * w, kModelSide, kModelSide);
}

AugmentTrace draw_trace(RandomStream& rng, const AugmentConfig& cfg) {
    cfg.validate();
    AugmentTrace tr;
    tr.flipped_v = rng.bernoulli(cfg.p_flip_v);
    tr.flipped_h = rng.bernoulli(cfg.p_flip_h);
    tr.transpose_draw = rng.uniform();
    tr.transposed = cfg.transpose && tr.transpose_draw > cfg.transpose_threshold;
    tr.brightness = rng.uniform(cfg.brightness_delta.lo, cfg.brightness_delta.hi);
    tr.saturation = rng.uniform(cfg.saturation_factor.lo, cfg.saturation_factor.hi);
    tr.contrast = rng.uniform(cfg.contrast_factor.lo, cfg.contrast_factor.hi);
    tr.crop_size = rng.uniform(cfg.crop_fraction.lo, cfg.crop_fraction.hi);
    tr.crop_top = rng.uniform(0.0, 1.0 - tr.crop_size);
    tr.crop_left = rng.uniform(0.0, 1.0 - tr.crop_size);
    return tr;
}

ImageTensor apply_trace(const ImageTensor& t, const AugmentTrace& tr) {
    ImageTensor out = t;
    if (tr.flipped_v) {
        out = flip_vertical(out);
    }
    if (tr.flipped_h) {
        out = flip_horizontal(out);
    }
    if (tr.transposed) {
        out = transpose_gate(out, tr.transpose_draw, kTransposeThreshold);
    }
    out = photometric(out, tr.brightness, tr.saturation, tr.contrast);
    return crop_resize(out, tr.crop_top, tr.crop_left, tr.crop_size);
}

ImageTensor augment_sample(const ImageTensor& t, RandomStream& rng, const AugmentConfig& cfg,
                           AugmentTrace* trace) {
    const AugmentTrace tr = draw_trace(rng, cfg);
    if (trace != nullptr) {
        *trace = tr;
    }
    return apply_trace(t, tr);
}

void to_json(nlohmann::json& j, const AugmentConfig& cfg) {
    j = nlohmann::json{
        {"p_flip_v", cfg.p_flip_v},
        {"p_flip_h", cfg.p_flip_h},
        {"transpose", cfg.transpose},
        {"transpose_threshold", cfg.transpose_threshold},
        {"brightness_delta", {cfg.brightness_delta.lo, cfg.brightness_delta.hi}},
        {"saturation_factor", {cfg.saturation_factor.lo, cfg.saturation_factor.hi}},
        {"contrast_factor", {cfg.contrast_factor.lo, cfg.contrast_factor.hi}},
        {"crop_fraction", {cfg.crop_fraction.lo, cfg.crop_fraction.hi}},
        {"seed", cfg.seed},
    };
}

void from_json(const nlohmann::json& j, AugmentConfig& cfg) {
    auto range = [&](const char* key, Range& r) {
        if (j.contains(key)) {
            r.lo = j.at(key).at(0).get<double>();
            r.hi = j.at(key).at(1).get<double>();
        }
    };
    cfg.p_flip_v = j.value("p_flip_v", cfg.p_flip_v);
    cfg.p_flip_h = j.value("p_flip_h", cfg.p_flip_h);
    cfg.transpose = j.value("transpose", cfg.transpose);
    cfg.transpose_threshold = j.value("transpose_threshold", cfg.transpose_threshold);
    range("brightness_delta", cfg.brightness_delta);
    range("saturation_factor", cfg.saturation_factor);
    range("contrast_factor", cfg.contrast_factor);
    range("crop_fraction", cfg.crop_fraction);
    cfg.seed = j.value("seed", cfg.seed);
}

}  // namespace leukex::augment
