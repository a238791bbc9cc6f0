#include "test_util.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "leukex/cli.hpp"

namespace leukex::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("leukex_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

ImageTensor constant_tensor(int h, int w, float r, float g, float b) {
    ImageTensor t(h, w);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            t.at(i, j, 0) = r;
            t.at(i, j, 1) = g;
            t.at(i, j, 2) = b;
        }
    }
    return t;
}

ImageTensor two_tone(int h, int w, int split, std::array<float, 3> left, std::array<float, 3> right) {
    ImageTensor t(h, w);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const auto& c = j < split ? left : right;
            for (int ch = 0; ch < 3; ++ch) {
                t.at(i, j, ch) = c[static_cast<std::size_t>(ch)];
            }
        }
    }
    return t;
}

ImageTensor noise_tensor(int h, int w, std::uint32_t seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<float> dist(0.0f, 1.0f);
    ImageTensor t(h, w);
    for (auto& v : t.data()) {
        v = dist(gen);
    }
    return t;
}

Rgb8Image solid_rgb8(int h, int w, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    Rgb8Image img(h, w);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            auto* p = img.pixel(i, j);
            p[0] = r;
            p[1] = g;
            p[2] = b;
        }
    }
    return img;
}

void write_bmp(const fs::path& path, const Rgb8Image& image) {
    fs::create_directories(path.parent_path());
    imagestore::write_file_bytes(path, imagestore::encode_bmp(image));
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
    const auto s = read_text(path);
    return {s.begin(), s.end()};
}

std::vector<imagestore::CellImage> bright_dark(std::size_t n, int side, std::uint32_t seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<float> jitter(0.0f, 0.26f);
    std::vector<imagestore::CellImage> out;
    for (std::size_t i = 0; i < n; ++i) {
        imagestore::CellImage c;
        c.label = static_cast<int>(i % 2);
        c.pixels = ImageTensor(side, side);
        for (auto& v : c.pixels.data()) {
            v = (c.label ? 0.72f : 0.02f) + jitter(gen);
        }
        out.push_back(std::move(c));
    }
    return out;
}

void write_bright_dark_tree(const fs::path& root, int n_per_class, int side) {
    std::mt19937 gen(12345);
    for (int i = 0; i < n_per_class; ++i) {
        for (int cls = 0; cls < 2; ++cls) {
            Rgb8Image img(side, side);
            const int base = cls ? 190 : 25;
            for (auto& v : img.data) {
                v = static_cast<std::uint8_t>(base + gen() % 40);
            }
            write_bmp(root / (cls ? "all" : "hem") / ("img_" + std::to_string(i) + ".bmp"), img);
        }
    }
}

CliResult run_cli(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    CliResult r;
    r.code = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

imagestore::Manifest label_only_manifest(const std::vector<int>& labels) {
    imagestore::Manifest m;
    m.root = "/nonexistent";
    m.created_at = "1970-01-01T00:00:00Z";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        imagestore::ManifestRecord r;
        r.id = "c" + std::to_string(i);
        r.path = "x/" + std::to_string(i) + ".bmp";
        r.label = labels[i];
        r.digest = std::string(64, '0');
        m.records.push_back(r);
    }
    return m;
}

}  // namespace leukex::testing
