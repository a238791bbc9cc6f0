#include "leukex/metrics.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "leukex/error.hpp"
#include "leukex/imagestore.hpp"

namespace leukex::metrics {

namespace {

std::string shortest(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Series {
    const char* name;
    const char* color;
    const char* dash;
    double EpochRecord::*field;
};

constexpr Series kSeries[] = {
    {"loss", "#1f77b4", "", &EpochRecord::loss},
    {"accuracy", "#ff7f0e", "", &EpochRecord::accuracy},
    {"f1", "#2ca02c", "", &EpochRecord::f1},
    {"val_loss", "#1f77b4", "6,4", &EpochRecord::val_loss},
    {"val_accuracy", "#ff7f0e", "6,4", &EpochRecord::val_accuracy},
    {"val_f1", "#2ca02c", "6,4", &EpochRecord::val_f1},
};

}  // namespace

void TrainingHistory::append(EpochRecord record) {
    const int expected = static_cast<int>(epochs_.size()) + 1;
    if (record.epoch != expected) {
        throw ArgumentError("history epochs must be contiguous from 1; expected " + std::to_string(expected) +
                            ", got " + std::to_string(record.epoch));
    }
    epochs_.push_back(record);
}

std::string history_csv(const TrainingHistory& h) {
    std::ostringstream out;
    for (std::size_t i = 0; i < std::size(kHistoryColumns); ++i) {
        out << (i ? "," : "") << kHistoryColumns[i];
    }
    out << '\n';
    for (const auto& e : h.epochs()) {
        out << e.epoch << ',' << shortest(e.loss) << ',' << shortest(e.accuracy) << ',' << shortest(e.f1) << ','
            << shortest(e.val_loss) << ',' << shortest(e.val_accuracy) << ',' << shortest(e.val_f1) << '\n';
    }
    return out.str();
}

std::string history_svg(const TrainingHistory& h, const std::string& comment) {
    constexpr double kWidth = 800;
    constexpr double kHeight = 480;
    constexpr double kLeft = 60;
    constexpr double kRight = 170;
    constexpr double kTop = 30;
    constexpr double kBottom = 50;
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;

    double y_max = 1.0;
    for (const auto& e : h.epochs()) {
        for (const auto& s : kSeries) {
            if (std::isfinite(e.*s.field)) {
                y_max = std::max(y_max, e.*s.field);
            }
        }
    }
    const auto n = h.epochs().size();
    auto px = [&](int epoch) {
        return n <= 1 ? kLeft + plot_w / 2 : kLeft + plot_w * (epoch - 1) / static_cast<double>(n - 1);
    };
    auto py = [&](double v) { return kTop + plot_h * (1.0 - std::clamp(v, 0.0, y_max) / y_max); };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    if (!comment.empty()) {
        out << "<metadata>" << xml_escape(comment) << "</metadata>\n";
    }
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kLeft << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">"
        << "Training history</text>\n";
    out << "<g stroke=\"#333\" stroke-width=\"1\">\n"
        << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
        << kTop + plot_h << "\"/>\n"
        << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
        << "\"/>\n</g>\n";
    out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = y_max * t / 4.0;
        out << "<text x=\"" << kLeft - 6 << "\" y=\"" << fixed(py(v) + 4, 2) << "\" text-anchor=\"end\">"
            << fixed(v, 2) << "</text>\n";
    }
    if (n > 0) {
        out << "<text x=\"" << fixed(px(1), 2) << "\" y=\"" << kTop + plot_h + 16
            << "\" text-anchor=\"middle\">1</text>\n";
        out << "<text x=\"" << fixed(px(static_cast<int>(n)), 2) << "\" y=\"" << kTop + plot_h + 16
            << "\" text-anchor=\"middle\">" << n << "</text>\n";
    }
    out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
        << "\" text-anchor=\"middle\">epoch</text>\n</g>\n";

    for (const auto& s : kSeries) {
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\"";
        if (*s.dash) {
            out << " stroke-dasharray=\"" << s.dash << "\"";
        }
        out << " points=\"";
        bool first = true;
        for (const auto& e : h.epochs()) {
            out << (first ? "" : " ") << fixed(px(e.epoch), 2) << ',' << fixed(py(e.*s.field), 2);
            first = false;
        }
        out << "\"><title>" << s.name << "</title></polyline>\n";
    }

    out << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    for (std::size_t i = 0; i < std::size(kSeries); ++i) {
        const auto& s = kSeries[i];
        const double y = kTop + 10 + 20 * static_cast<double>(i);
        const double x = kWidth - kRight + 15;
        out << "<line x1=\"" << x << "\" y1=\"" << y << "\" x2=\"" << x + 30 << "\" y2=\"" << y << "\" stroke=\""
            << s.color << "\" stroke-width=\"2\"";
        if (*s.dash) {
            out << " stroke-dasharray=\"" << s.dash << "\"";
        }
        out << "/>\n<text x=\"" << x + 36 << "\" y=\"" << y + 4 << "\">" << s.name << "</text>\n";
    }
    out << "</g>\n</svg>\n";
    return out.str();
}

void emit_history(const TrainingHistory& h, const std::filesystem::path& out_dir, const std::string& svg_comment) {
    if (h.empty()) {
        throw ArgumentError("cannot emit an empty training history");
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    }
    imagestore::write_text_file(out_dir / "history.csv", history_csv(h));
    imagestore::write_text_file(out_dir / "history.svg", history_svg(h, svg_comment));
}

}  // namespace leukex::metrics
