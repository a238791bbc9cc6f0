#include "leukex/imagestore.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iterator>
#include <regex>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "leukex/digest.hpp"
#include "leukex/error.hpp"
#include "leukex/parallel.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace leukex::imagestore {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string iso8601_utc(fs::file_time_type t) {
    const auto sys = std::chrono::file_clock::to_sys(t);
    const std::time_t secs = std::chrono::system_clock::to_time_t(
        std::chrono::time_point_cast<std::chrono::seconds>(sys));
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::optional<int> label_for(const fs::path& relative, const LabelRule& rule) {
    std::map<std::string, int> lowered;
    for (const auto& [name, label] : rule) {
        lowered.emplace(lower(name), label);
    }
    for (fs::path dir = relative.parent_path(); !dir.empty(); dir = dir.parent_path()) {
        if (auto it = lowered.find(lower(dir.filename().string())); it != lowered.end()) {
            return it->second;
        }
    }
    return std::nullopt;
}

struct Candidate {
    fs::path absolute;
    std::string relative;
    int label = 0;
    std::string digest;
    fs::file_time_type mtime;
    std::string failure;
};

}  // namespace

std::vector<int> Manifest::labels() const {
    std::vector<int> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        out.push_back(r.label);
    }
    return out;
}

fs::path Manifest::resolve(const ManifestRecord& record) const {
    return fs::path(root) / fs::path(record.path);
}

LabelRule default_label_rule() {
    return {{"all", kLabelAll}, {"hem", kLabelNormal}, {"normal", kLabelNormal}};
}

ImageTensor normalize_resize(const RawImage& raw) {
    if (raw.height < 1 || raw.width < 1 ||
        raw.data.size() != static_cast<std::size_t>(raw.height) * raw.width * 3) {
        throw ArgumentError("normalize_resize: invalid raw image");
    }
    std::vector<float> values(raw.data.begin(), raw.data.end());
    const ImageTensor wide(raw.height, raw.width, std::move(values));
    ImageTensor out = resize_bilinear(wide, kModelSide, kModelSide);
    for (float& v : out.data()) {
        v = static_cast<float>(static_cast<double>(v) / 255.0);
    }
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw IoError("failed reading " + path.string());
    }
    return bytes;
}

void write_file_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

IngestResult ingest(const fs::path& root_dir, const LabelRule& label_rule, const IngestOptions& options) {
    std::error_code ec;
    if (!fs::is_directory(root_dir, ec)) {
        throw IngestError("not a directory: " + root_dir.string());
    }
    const fs::path root = fs::weakly_canonical(root_dir);

    IngestResult result;
    std::vector<Candidate> candidates;
    for (auto it = fs::recursive_directory_iterator(root, fs::directory_options::skip_permission_denied, ec);
         !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (!it->is_regular_file(ec) || lower(it->path().extension().string()) != ".bmp") {
            continue;
        }
        Candidate c;
        c.absolute = it->path();
        c.relative = fs::relative(it->path(), root).generic_string();
        const auto label = label_for(fs::path(c.relative), label_rule);
        if (!label) {
            result.warnings.push_back("no label rule matches " + c.relative + "; skipped");
            continue;
        }
        c.label = *label;
        candidates.push_back(std::move(c));
    }
    if (ec) {
        throw IngestError("cannot walk " + root.string() + ": " + ec.message());
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) { return a.relative < b.relative; });

    // Hashing and decode validation are independent per file.
    parallel_for(candidates.size(), options.workers, [&](std::size_t i) {
        Candidate& c = candidates[i];
        try {
            const auto bytes = read_file_bytes(c.absolute);
            (void)decode_bmp(bytes);
            c.digest = sha256_hex(bytes);
            c.mtime = fs::last_write_time(c.absolute);
        } catch (const std::exception& e) {
            c.failure = e.what();
        }
    });

    std::optional<std::regex> patient_re;
    if (!options.patient_pattern.empty()) {
        try {
            patient_re.emplace(options.patient_pattern);
        } catch (const std::regex_error& e) {
            throw ArgumentError("invalid patient pattern: " + std::string(e.what()));
        }
    }

    std::unordered_map<std::string, std::size_t> first_by_digest;
    std::vector<const Candidate*> kept;
    std::optional<fs::file_time_type> newest;
    for (const Candidate& c : candidates) {
        if (!c.failure.empty()) {
            result.warnings.push_back("unreadable " + c.relative + ": " + c.failure + "; skipped");
            continue;
        }
        if (!newest || c.mtime > *newest) {
            newest = c.mtime;
        }
        auto [it, inserted] = first_by_digest.emplace(c.digest, kept.size());
        if (!inserted) {
            ++result.duplicates;
            const Candidate& original = *kept[it->second];
            std::string msg = "duplicate content " + c.relative + " == " + original.relative;
            if (original.label != c.label) {
                msg += " (conflicting labels; keeping " + std::to_string(original.label) + ")";
            }
            result.warnings.push_back(msg);
            continue;
        }
        kept.push_back(&c);
    }
    if (kept.empty()) {
        throw IngestError("no images found in " + root.string());
    }

    Manifest& m = result.manifest;
    m.root = root.generic_string();
    m.hash_algorithm = std::string(kDigestAlgorithm);
    m.created_at = iso8601_utc(*newest);
    for (const Candidate* c : kept) {
        ManifestRecord r;
        r.path = c->relative;
        r.label = c->label;
        r.digest = c->digest;
        if (patient_re) {
            std::smatch match;
            const std::string name = fs::path(c->relative).filename().string();
            if (std::regex_search(name, match, *patient_re) && match.size() > 1) {
                r.patient_id = match[1].str();
            }
        }
        m.records.push_back(std::move(r));
    }
    std::sort(m.records.begin(), m.records.end(),
              [](const ManifestRecord& a, const ManifestRecord& b) { return a.digest < b.digest; });

    // Shortest digest prefix (>= 16 hex chars) that keeps every id unique.
    std::size_t width = 16;
    for (std::size_t i = 1; i < m.records.size(); ++i) {
        const auto& a = m.records[i - 1].digest;
        const auto& b = m.records[i].digest;
        std::size_t common = 0;
        while (common < a.size() && a[common] == b[common]) {
            ++common;
        }
        width = std::max(width, common + 1);
    }
    for (auto& r : m.records) {
        r.id = "c" + r.digest.substr(0, width);
    }
    return result;
}

std::string serialize_manifest(const Manifest& manifest) {
    std::ostringstream out;
    ordered_json header;
    header["schema"] = "leukex.manifest";
    header["version"] = kManifestSchemaVersion;
    header["hash"] = manifest.hash_algorithm;
    header["root"] = manifest.root;
    header["created_at"] = manifest.created_at;
    header["count"] = manifest.records.size();
    if (!manifest.meta.is_null()) {
        header["meta"] = manifest.meta;
    }
    out << header.dump() << '\n';
    for (const auto& r : manifest.records) {
        ordered_json line;
        line["id"] = r.id;
        line["path"] = r.path;
        line["label"] = r.label;
        line["digest"] = r.digest;
        line["patient_id"] = r.patient_id ? ordered_json(*r.patient_id) : ordered_json(nullptr);
        out << line.dump() << '\n';
    }
    return out.str();
}

Manifest parse_manifest(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw IngestError("manifest is empty");
    }
    Manifest m;
    try {
        const auto header = nlohmann::json::parse(line);
        if (header.value("schema", "") != "leukex.manifest") {
            throw IngestError("manifest header has unknown schema");
        }
        if (header.value("version", 0) != kManifestSchemaVersion) {
            throw IngestError("unsupported manifest version");
        }
        m.hash_algorithm = header.at("hash").get<std::string>();
        m.root = header.at("root").get<std::string>();
        m.created_at = header.value("created_at", "");
        if (header.contains("meta")) {
            m.meta = header["meta"];
        }
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) {
                continue;
            }
            const auto j = nlohmann::json::parse(line);
            ManifestRecord r;
            r.id = j.at("id").get<std::string>();
            r.path = j.at("path").get<std::string>();
            r.label = j.at("label").get<int>();
            r.digest = j.at("digest").get<std::string>();
            if (j.contains("patient_id") && !j["patient_id"].is_null()) {
                r.patient_id = j["patient_id"].get<std::string>();
            }
            if (r.label != kLabelNormal && r.label != kLabelAll) {
                throw IngestError("manifest line " + std::to_string(line_no) + ": label must be 0 or 1");
            }
            m.records.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IngestError(std::string("malformed manifest: ") + e.what());
    }
    return m;
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
    write_text_file(path, serialize_manifest(manifest));
}

Manifest read_manifest(const fs::path& path) {
    const auto bytes = read_file_bytes(path);
    return parse_manifest(std::string(bytes.begin(), bytes.end()));
}

CellImage load_cell_image(const Manifest& manifest, const ManifestRecord& record) {
    const fs::path path = manifest.resolve(record);
    const auto bytes = read_file_bytes(path);
    if (sha256_hex(bytes) != record.digest) {
        throw IngestError("digest mismatch for " + path.string() + "; the corpus changed since ingest");
    }
    CellImage img;
    img.pixels = normalize_resize(decode_bmp(bytes));
    img.label = record.label;
    img.id = record.id;
    img.source_path = path.string();
    img.digest = record.digest;
    return img;
}

}  // namespace leukex::imagestore
