#pragma once

#include "craft/linalg.hpp"

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace craft {

/// Malformed on-disk input. The message names the file and, where
/// applicable, the offending line or byte counts.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SampleRecord {
    std::size_t index = 0;  // column in the payload
    PersonId person = 0;
    int camera = 0;
    std::string path;
};

/// d x n column-major float payload plus one record per column.
/// records[k].index == k always holds for a validated table.
struct FeatureTable {
    MatrixF data;
    std::vector<SampleRecord> records;

    std::size_t dim() const { return static_cast<std::size_t>(data.rows()); }
    std::size_t size() const { return static_cast<std::size_t>(data.cols()); }
    std::size_t camera_count() const;
};

/// Samples of a single camera, in double precision, as consumed by the
/// learning code.
struct ViewSamples {
    Matrix features;  // d x n
    std::vector<PersonId> persons;

    std::size_t size() const { return static_cast<std::size_t>(features.cols()); }
};

// Training tables must cover cameras 0..J-1 without gaps. Probe and
// gallery tables may hold any subset of a trained model's cameras.
enum class CameraIds { contiguous, any };

// Throws std::invalid_argument when the payload and records disagree, when a
// record index is off, or (for CameraIds::contiguous) when camera ids are
// not contiguous 0..J-1.
void validate(const FeatureTable& table, CameraIds cameras = CameraIds::contiguous);

// One ViewSamples per camera id, in ascending camera order, preserving
// sample order within each camera.
std::vector<ViewSamples> split_views(const FeatureTable& table);

// Columns of `table` whose record satisfies `keep`, re-indexed 0..k-1.
template <typename Pred>
FeatureTable select_samples(const FeatureTable& table, Pred keep)
{
    std::vector<Eigen::Index> cols;
    for (const auto& rec : table.records) {
        if (keep(rec)) cols.push_back(static_cast<Eigen::Index>(rec.index));
    }
    FeatureTable out;
    out.data.resize(table.data.rows(), static_cast<Eigen::Index>(cols.size()));
    out.records.reserve(cols.size());
    for (std::size_t k = 0; k < cols.size(); ++k) {
        out.data.col(static_cast<Eigen::Index>(k)) = table.data.col(cols[k]);
        SampleRecord rec = table.records[static_cast<std::size_t>(cols[k])];
        rec.index = k;
        out.records.push_back(std::move(rec));
    }
    return out;
}

// FTB1: "FTB1", u32 d, u32 n, d*n float32, all little-endian, column-major.
std::string encode_ftb1(const MatrixF& data);
MatrixF decode_ftb1(std::string_view bytes, const std::string& source_name);

// Manifest CSV with header `index,person,camera,path`.
std::string encode_manifest(std::span<const SampleRecord> records);
std::vector<SampleRecord> decode_manifest(std::string_view text, const std::string& source_name);

void save_feature_table(const FeatureTable& table,
                        const std::filesystem::path& table_path,
                        const std::filesystem::path& manifest_path,
                        CameraIds cameras = CameraIds::contiguous);
FeatureTable load_feature_table(const std::filesystem::path& table_path,
                                const std::filesystem::path& manifest_path,
                                CameraIds cameras = CameraIds::contiguous);

// Directory convention used by the CLI: <dir>/features.ftb + <dir>/manifest.csv.
void save_feature_dir(const FeatureTable& table, const std::filesystem::path& dir,
                      CameraIds cameras = CameraIds::contiguous);
FeatureTable load_feature_dir(const std::filesystem::path& dir, CameraIds cameras = CameraIds::contiguous);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`, so a
// reader never observes a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace craft
