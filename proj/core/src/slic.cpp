#include "leukex/slic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "leukex/error.hpp"

namespace leukex::explain {

namespace {

double srgb_to_linear(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
    constexpr double delta = 6.0 / 29.0;
    return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

struct Center {
    double l, a, b, y, x;
};

constexpr int kDy[4] = {-1, 1, 0, 0};
constexpr int kDx[4] = {0, 0, -1, 1};

}  // namespace

std::vector<std::size_t> SegmentMap::sizes() const {
    std::vector<std::size_t> out(static_cast<std::size_t>(std::max(n_segments, 0)), 0);
    for (int s : seg_of) {
        if (s >= 0 && s < n_segments) {
            ++out[static_cast<std::size_t>(s)];
        }
    }
    return out;
}

std::string SegmentMap::check() const {
    if (height < 1 || width < 1 || seg_of.size() != static_cast<std::size_t>(height) * width) {
        return "segment map dimensions do not match its data";
    }
    for (int s : seg_of) {
        if (s < 0 || s >= n_segments) {
            return "segment id " + std::to_string(s) + " outside 0.." + std::to_string(n_segments - 1);
        }
    }
    const auto sz = sizes();
    for (std::size_t s = 0; s < sz.size(); ++s) {
        if (sz[s] == 0) {
            return "segment " + std::to_string(s) + " is empty";
        }
    }
    std::vector<int> comp;
    if (connected_components(*this, comp) != n_segments) {
        return "a segment is not 4-connected";
    }
    return {};
}

void SlicParams::validate() const {
    if (n_segments < 2) {
        throw ArgumentError("n_segments must be at least 2");
    }
    if (!(compactness > 0.0)) {
        throw ArgumentError("compactness must be positive");
    }
    if (iterations < 0) {
        throw ArgumentError("iterations must be non-negative");
    }
}

std::vector<double> rgb_to_lab(const ImageTensor& image) {
    const std::size_t pixels = image.size() / kChannels;
    std::vector<double> lab(pixels * 3);
    const auto src = image.data();
    for (std::size_t p = 0; p < pixels; ++p) {
        const double r = srgb_to_linear(src[p * 3]);
        const double g = srgb_to_linear(src[p * 3 + 1]);
        const double b = srgb_to_linear(src[p * 3 + 2]);
        const double x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
        const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
        const double z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
        const double fx = lab_f(x);
        const double fy = lab_f(y);
        const double fz = lab_f(z);
        lab[p * 3] = 116.0 * fy - 16.0;
        lab[p * 3 + 1] = 500.0 * (fx - fy);
        lab[p * 3 + 2] = 200.0 * (fy - fz);
    }
    return lab;
}

int connected_components(const SegmentMap& seg, std::vector<int>& component_of) {
    const int h = seg.height;
    const int w = seg.width;
    component_of.assign(seg.seg_of.size(), -1);
    std::vector<int> stack;
    int count = 0;
    for (int start = 0; start < h * w; ++start) {
        if (component_of[static_cast<std::size_t>(start)] >= 0) {
            continue;
        }
        const int label = seg.seg_of[static_cast<std::size_t>(start)];
        component_of[static_cast<std::size_t>(start)] = count;
        stack.push_back(start);
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            const int r = p / w;
            const int c = p % w;
            for (int d = 0; d < 4; ++d) {
                const int nr = r + kDy[d];
                const int nc = c + kDx[d];
                if (nr < 0 || nr >= h || nc < 0 || nc >= w) {
                    continue;
                }
                const int q = nr * w + nc;
                if (component_of[static_cast<std::size_t>(q)] < 0 && seg.seg_of[static_cast<std::size_t>(q)] == label) {
                    component_of[static_cast<std::size_t>(q)] = count;
                    stack.push_back(q);
                }
            }
        }
        ++count;
    }
    return count;
}

SegmentMap slic_segment(const ImageTensor& image, const SlicParams& params) {
    params.validate();
    if (image.empty()) {
        throw ArgumentError("slic_segment: empty image");
    }
    const int h = image.height();
    const int w = image.width();
    const long long n_pixels = static_cast<long long>(h) * w;
    if (params.n_segments > n_pixels) {
        throw ArgumentError("n_segments (" + std::to_string(params.n_segments) + ") exceeds the pixel count (" +
                            std::to_string(n_pixels) + ")");
    }

    const std::vector<double> lab = rgb_to_lab(image);
    auto lab_at = [&](int r, int c) { return lab.data() + (static_cast<std::size_t>(r) * w + c) * 3; };

    // Grid layout.
    const int nx = std::clamp(static_cast<int>(std::ceil(std::sqrt(params.n_segments * static_cast<double>(w) / h))), 1, w);
    const int ny = std::clamp(static_cast<int>(std::lround(static_cast<double>(params.n_segments) / nx)), 1, h);
    const double step_y = static_cast<double>(h) / ny;
    const double step_x = static_cast<double>(w) / nx;
    const double grid_step = std::sqrt(static_cast<double>(n_pixels) / (static_cast<double>(nx) * ny));
    const double spatial_weight = params.compactness / grid_step;
    const int window = static_cast<int>(std::ceil(grid_step));

    auto gradient = [&](int r, int c) {
        const double* left = lab_at(r, std::max(c - 1, 0));
        const double* right = lab_at(r, std::min(c + 1, w - 1));
        const double* up = lab_at(std::max(r - 1, 0), c);
        const double* down = lab_at(std::min(r + 1, h - 1), c);
        double g = 0.0;
        for (int k = 0; k < 3; ++k) {
            g += (right[k] - left[k]) * (right[k] - left[k]) + (down[k] - up[k]) * (down[k] - up[k]);
        }
        return g;
    };

    std::vector<Center> centers;
    centers.reserve(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            int cy = std::min(static_cast<int>((j + 0.5) * step_y), h - 1);
            int cx = std::min(static_cast<int>((i + 0.5) * step_x), w - 1);
            double best = gradient(cy, cx);
            int by = cy;
            int bx = cx;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int yy = cy + dy;
                    const int xx = cx + dx;
                    if (yy < 0 || yy >= h || xx < 0 || xx >= w) {
                        continue;
                    }
                    const double g = gradient(yy, xx);
                    if (g < best) {
                        best = g;
                        by = yy;
                        bx = xx;
                    }
                }
            }
            cy = by;
            cx = bx;
            const double* px = lab_at(cy, cx);
            centers.push_back({px[0], px[1], px[2], static_cast<double>(cy), static_cast<double>(cx)});
        }
    }

    const auto n = static_cast<std::size_t>(n_pixels);
    std::vector<int> label(n, -1);
    std::vector<double> dist(n);
    auto distance = [&](const Center& k, int r, int c) {
        const double* px = lab_at(r, c);
        const double dl = px[0] - k.l;
        const double da = px[1] - k.a;
        const double db = px[2] - k.b;
        const double dy = r - k.y;
        const double dx = c - k.x;
        return std::sqrt(dl * dl + da * da + db * db) + spatial_weight * std::sqrt(dy * dy + dx * dx);
    };

    const int rounds = std::max(params.iterations, 1);
    for (int it = 0; it < rounds; ++it) {
        std::fill(label.begin(), label.end(), -1);
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        for (std::size_t k = 0; k < centers.size(); ++k) {
            const Center& ck = centers[k];
            const int r0 = std::max(0, static_cast<int>(std::floor(ck.y)) - window);
            const int r1 = std::min(h - 1, static_cast<int>(std::ceil(ck.y)) + window);
            const int c0 = std::max(0, static_cast<int>(std::floor(ck.x)) - window);
            const int c1 = std::min(w - 1, static_cast<int>(std::ceil(ck.x)) + window);
            for (int r = r0; r <= r1; ++r) {
                for (int c = c0; c <= c1; ++c) {
                    const double d = distance(ck, r, c);
                    const std::size_t p = static_cast<std::size_t>(r) * w + c;
                    if (d < dist[p]) {
                        dist[p] = d;
                        label[p] = static_cast<int>(k);
                    }
                }
            }
        }
        if (it + 1 == params.iterations || params.iterations == 0) {
            break;
        }
        std::vector<Center> sums(centers.size(), Center{0, 0, 0, 0, 0});
        std::vector<std::size_t> counts(centers.size(), 0);
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                const int k = label[static_cast<std::size_t>(r) * w + c];
                if (k < 0) {
                    continue;
                }
                const double* px = lab_at(r, c);
                Center& s = sums[static_cast<std::size_t>(k)];
                s.l += px[0];
                s.a += px[1];
                s.b += px[2];
                s.y += r;
                s.x += c;
                ++counts[static_cast<std::size_t>(k)];
            }
        }
        for (std::size_t k = 0; k < centers.size(); ++k) {
            if (counts[k] == 0) {
                continue;
            }
            const double inv = 1.0 / static_cast<double>(counts[k]);
            centers[k] = {sums[k].l * inv, sums[k].a * inv, sums[k].b * inv, sums[k].y * inv, sums[k].x * inv};
        }
    }

    // Pixels no window reached fall back to the globally nearest center.
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const std::size_t p = static_cast<std::size_t>(r) * w + c;
            if (label[p] >= 0) {
                continue;
            }
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < centers.size(); ++k) {
                const double d = distance(centers[k], r, c);
                if (d < best) {
                    best = d;
                    label[p] = static_cast<int>(k);
                }
            }
        }
    }

    // Connectivity: each label keeps its largest component; orphans merge
    // into the adjacent component whose (growing) segment is largest.
    SegmentMap raw{h, w, static_cast<int>(centers.size()), label};
    std::vector<int> comp;
    const int n_comp = connected_components(raw, comp);
    std::vector<std::size_t> comp_size(static_cast<std::size_t>(n_comp), 0);
    std::vector<int> comp_label(static_cast<std::size_t>(n_comp), -1);
    for (std::size_t p = 0; p < n; ++p) {
        ++comp_size[static_cast<std::size_t>(comp[p])];
        comp_label[static_cast<std::size_t>(comp[p])] = label[p];
    }
    std::vector<int> main_comp(centers.size(), -1);
    for (int ci = 0; ci < n_comp; ++ci) {
        int& m = main_comp[static_cast<std::size_t>(comp_label[static_cast<std::size_t>(ci)])];
        if (m < 0 || comp_size[static_cast<std::size_t>(ci)] > comp_size[static_cast<std::size_t>(m)]) {
            m = ci;
        }
    }
    // owner[ci] = main component that component ci now belongs to (-1 = unresolved orphan).
    std::vector<int> owner(static_cast<std::size_t>(n_comp), -1);
    std::vector<std::size_t> owner_size(static_cast<std::size_t>(n_comp), 0);
    for (int m : main_comp) {
        if (m >= 0) {
            owner[static_cast<std::size_t>(m)] = m;
            owner_size[static_cast<std::size_t>(m)] = comp_size[static_cast<std::size_t>(m)];
        }
    }
    std::vector<std::vector<int>> neighbours(static_cast<std::size_t>(n_comp));
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const int a = comp[static_cast<std::size_t>(r) * w + c];
            if (c + 1 < w) {
                const int b = comp[static_cast<std::size_t>(r) * w + c + 1];
                if (a != b) {
                    neighbours[static_cast<std::size_t>(a)].push_back(b);
                    neighbours[static_cast<std::size_t>(b)].push_back(a);
                }
            }
            if (r + 1 < h) {
                const int b = comp[static_cast<std::size_t>(r + 1) * w + c];
                if (a != b) {
                    neighbours[static_cast<std::size_t>(a)].push_back(b);
                    neighbours[static_cast<std::size_t>(b)].push_back(a);
                }
            }
        }
    }
    bool pending = true;
    while (pending) {
        pending = false;
        bool progressed = false;
        for (int ci = 0; ci < n_comp; ++ci) {
            if (owner[static_cast<std::size_t>(ci)] >= 0) {
                continue;
            }
            int best = -1;
            for (int nb : neighbours[static_cast<std::size_t>(ci)]) {
                const int o = owner[static_cast<std::size_t>(nb)];
                if (o < 0) {
                    continue;
                }
                if (best < 0 || owner_size[static_cast<std::size_t>(o)] > owner_size[static_cast<std::size_t>(best)] ||
                    (owner_size[static_cast<std::size_t>(o)] == owner_size[static_cast<std::size_t>(best)] && o < best)) {
                    best = o;
                }
            }
            if (best < 0) {
                pending = true;
                continue;
            }
            owner[static_cast<std::size_t>(ci)] = best;
            owner_size[static_cast<std::size_t>(best)] += comp_size[static_cast<std::size_t>(ci)];
            progressed = true;
        }
        if (pending && !progressed) {
            throw NumericError("slic_segment: orphan components could not be resolved");
        }
    }

    // Relabel by first appearance in scan order.
    SegmentMap out{h, w, 0, std::vector<int>(n, -1)};
    std::vector<int> new_id(static_cast<std::size_t>(n_comp), -1);
    for (std::size_t p = 0; p < n; ++p) {
        const int o = owner[static_cast<std::size_t>(comp[p])];
        int& id = new_id[static_cast<std::size_t>(o)];
        if (id < 0) {
            id = out.n_segments++;
        }
        out.seg_of[p] = id;
    }
    return out;
}

}  // namespace leukex::explain
