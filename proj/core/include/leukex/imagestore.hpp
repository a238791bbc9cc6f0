#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "leukex/bmp.hpp"
#include "leukex/image_tensor.hpp"

namespace leukex::imagestore {

inline constexpr int kLabelNormal = 0;
inline constexpr int kLabelAll = 1;
inline constexpr int kManifestSchemaVersion = 1;

/// A normalized classifier input with its provenance.
struct CellImage {
    ImageTensor pixels;  // 299 x 299 x 3 in [0, 1]
    int label = 0;       // 0 = normal, 1 = ALL
    std::string id;
    std::string source_path;
    std::string digest;
};

struct ManifestRecord {
    std::string id;
    std::string path;  // relative to Manifest::root, generic separators
    int label = 0;
    std::string digest;
    std::optional<std::string> patient_id;

    friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

struct Manifest {
    std::string root;
    std::string hash_algorithm = "sha256";
    std::string created_at;  // ISO-8601 UTC
    std::vector<ManifestRecord> records;
    nlohmann::json meta;  // optional provenance block written into the header

    std::vector<int> labels() const;
    std::filesystem::path resolve(const ManifestRecord& record) const;

    friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// Maps a directory name (case-insensitive) to a class label. A file takes the
/// label of its nearest ancestor directory that appears in the rule.
using LabelRule = std::map<std::string, int>;

/// Default rule for the C-NMC layout: "all" -> 1, "hem" and "normal" -> 0.
LabelRule default_label_rule();

struct IngestOptions {
    /// ECMAScript regex applied to the file name; capture group 1 becomes the
    /// record's patient_id. Empty disables patient extraction.
    std::string patient_pattern;
    unsigned workers = 1;
};

struct IngestResult {
    Manifest manifest;
    std::size_t duplicates = 0;
    std::vector<std::string> warnings;
};

/// Bilinear resample to 299 x 299, then divide by 255.
ImageTensor normalize_resize(const RawImage& raw);

/// Walks root_dir for *.bmp files, deduplicates by content digest, and orders
/// records by digest. The manifest timestamp is the newest modification time
/// among ingested files so repeated ingests are byte-identical.
IngestResult ingest(const std::filesystem::path& root_dir, const LabelRule& label_rule,
                    const IngestOptions& options = {});

std::string serialize_manifest(const Manifest& manifest);
Manifest parse_manifest(const std::string& text);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

/// Reads, verifies the digest of, decodes and normalizes one record.
CellImage load_cell_image(const Manifest& manifest, const ManifestRecord& record);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace leukex::imagestore
