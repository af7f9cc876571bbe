#include "craft/feature_table.hpp"

#include "binary_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unistd.h>

namespace craft {

using detail::get_u32;
using detail::put_u32;

namespace {

constexpr std::string_view kFtbMagic = "FTB1";
constexpr std::string_view kManifestHeader = "index,person,camera,path";

template <typename Int>
bool parse_int(std::string_view field, Int& out)
{
    if (field.empty()) return false;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

}  // namespace

std::size_t FeatureTable::camera_count() const
{
    int top = -1;
    for (const auto& r : records) top = std::max(top, r.camera);
    return static_cast<std::size_t>(top + 1);
}

void validate(const FeatureTable& table, CameraIds camera_rule)
{
    if (table.records.size() != table.size()) {
        throw std::invalid_argument("feature table: " + std::to_string(table.records.size()) +
                                    " records for " + std::to_string(table.size()) + " samples");
    }
    std::set<int> cameras;
    for (std::size_t k = 0; k < table.records.size(); ++k) {
        const auto& rec = table.records[k];
        if (rec.index != k) {
            throw std::invalid_argument("feature table: record " + std::to_string(k) + " has index " +
                                        std::to_string(rec.index));
        }
        if (rec.camera < 0) {
            throw std::invalid_argument("feature table: negative camera id at sample " + std::to_string(k));
        }
        cameras.insert(rec.camera);
    }
    int expected = 0;
    for (int c : cameras) {
        if (camera_rule == CameraIds::any) break;
        if (c != expected) {
            throw std::invalid_argument("feature table: camera ids are not contiguous from 0 (missing " +
                                        std::to_string(expected) + ")");
        }
        ++expected;
    }
    if (!table.data.allFinite()) throw std::invalid_argument("feature table: non-finite feature value");
}

std::vector<ViewSamples> split_views(const FeatureTable& table)
{
    validate(table);
    const std::size_t views = table.camera_count();
    std::vector<std::vector<Eigen::Index>> columns(views);
    for (const auto& rec : table.records) {
        columns[static_cast<std::size_t>(rec.camera)].push_back(static_cast<Eigen::Index>(rec.index));
    }
    std::vector<ViewSamples> out(views);
    for (std::size_t v = 0; v < views; ++v) {
        out[v].features.resize(table.data.rows(), static_cast<Eigen::Index>(columns[v].size()));
        for (std::size_t k = 0; k < columns[v].size(); ++k) {
            out[v].features.col(static_cast<Eigen::Index>(k)) = table.data.col(columns[v][k]).cast<double>();
            out[v].persons.push_back(table.records[static_cast<std::size_t>(columns[v][k])].person);
        }
    }
    return out;
}

std::string encode_ftb1(const MatrixF& data)
{
    std::string out;
    out.reserve(12 + 4 * static_cast<std::size_t>(data.size()));
    out.append(kFtbMagic);
    put_u32(out, static_cast<std::uint32_t>(data.rows()));
    put_u32(out, static_cast<std::uint32_t>(data.cols()));
    const float* p = data.data();
    for (Eigen::Index i = 0; i < data.size(); ++i) put_u32(out, std::bit_cast<std::uint32_t>(p[i]));
    return out;
}

MatrixF decode_ftb1(std::string_view bytes, const std::string& source_name)
{
    if (bytes.size() < 12) {
        throw ParseError(source_name + ": truncated header (" + std::to_string(bytes.size()) + " bytes)");
    }
    if (bytes.substr(0, 4) != kFtbMagic) throw ParseError(source_name + ": bad magic, expected FTB1");
    const std::uint64_t d = get_u32(bytes, 4);
    const std::uint64_t n = get_u32(bytes, 8);
    const std::uint64_t expected = 12 + 4 * d * n;
    if (bytes.size() != expected) {
        throw ParseError(source_name + ": length mismatch, expected " + std::to_string(expected) +
                         " bytes, found " + std::to_string(bytes.size()));
    }
    MatrixF data(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
    float* p = data.data();
    for (std::uint64_t i = 0; i < d * n; ++i) p[i] = std::bit_cast<float>(get_u32(bytes, 12 + 4 * i));
    return data;
}

std::string encode_manifest(std::span<const SampleRecord> records)
{
    std::ostringstream out;
    out << kManifestHeader << '\n';
    for (const auto& r : records) {
        if (r.path.find('\n') != std::string::npos || r.path.find('\r') != std::string::npos) {
            throw std::invalid_argument("manifest: path of sample " + std::to_string(r.index) +
                                        " contains a line break");
        }
        out << r.index << ',' << r.person << ',' << r.camera << ',' << r.path << '\n';
    }
    return out.str();
}

std::vector<SampleRecord> decode_manifest(std::string_view text, const std::string& source_name)
{
    std::vector<SampleRecord> records;
    std::vector<std::string> errors;
    std::map<std::size_t, std::size_t> seen;  // index -> line
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool header_seen = false;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!header_seen) {
            if (line != kManifestHeader) {
                throw ParseError(source_name + ":1: expected header '" + std::string(kManifestHeader) + "'");
            }
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;

        std::string_view fields[3];
        std::string_view rest = line;
        bool ok = true;
        for (auto& f : fields) {
            const auto comma = rest.find(',');
            if (comma == std::string_view::npos) {
                ok = false;
                break;
            }
            f = rest.substr(0, comma);
            rest.remove_prefix(comma + 1);
        }
        SampleRecord rec;
        if (ok) ok = parse_int(fields[0], rec.index) && parse_int(fields[1], rec.person) &&
                     parse_int(fields[2], rec.camera) && rec.camera >= 0;
        if (!ok) {
            errors.push_back("line " + std::to_string(line_no) + ": malformed row");
            continue;
        }
        rec.path = std::string(rest);
        if (auto [it, inserted] = seen.emplace(rec.index, line_no); !inserted) {
            errors.push_back("line " + std::to_string(line_no) + ": duplicate sample index " +
                             std::to_string(rec.index) + " (first at line " + std::to_string(it->second) + ")");
            continue;
        }
        records.push_back(std::move(rec));
    }
    if (!header_seen) throw ParseError(source_name + ": empty manifest");
    if (!errors.empty()) {
        std::string msg = source_name + ": " + std::to_string(errors.size()) + " malformed manifest row(s)";
        for (const auto& e : errors) msg += "\n  " + e;
        throw ParseError(msg);
    }
    std::sort(records.begin(), records.end(),
              [](const SampleRecord& a, const SampleRecord& b) { return a.index < b.index; });
    return records;
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes)
{
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw std::runtime_error("write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

void save_feature_table(const FeatureTable& table,
                        const std::filesystem::path& table_path,
                        const std::filesystem::path& manifest_path,
                        CameraIds cameras)
{
    validate(table, cameras);
    write_file_atomic(table_path, encode_ftb1(table.data));
    write_file_atomic(manifest_path, encode_manifest(table.records));
}

FeatureTable load_feature_table(const std::filesystem::path& table_path,
                                const std::filesystem::path& manifest_path,
                                CameraIds cameras)
{
    FeatureTable table;
    table.data = decode_ftb1(read_file(table_path), table_path.string());
    table.records = decode_manifest(read_file(manifest_path), manifest_path.string());
    if (table.records.size() != table.size()) {
        throw ParseError(manifest_path.string() + ": " + std::to_string(table.records.size()) +
                         " rows for " + std::to_string(table.size()) + " samples in " + table_path.string());
    }
    for (std::size_t k = 0; k < table.records.size(); ++k) {
        if (table.records[k].index != k) {
            throw ParseError(manifest_path.string() + ": sample index " +
                             std::to_string(table.records[k].index) + " out of range");
        }
    }
    try {
        validate(table, cameras);
    } catch (const std::invalid_argument& e) {
        throw ParseError(manifest_path.string() + ": " + e.what());
    }
    return table;
}

void save_feature_dir(const FeatureTable& table, const std::filesystem::path& dir, CameraIds cameras)
{
    std::filesystem::create_directories(dir);
    save_feature_table(table, dir / "features.ftb", dir / "manifest.csv", cameras);
}

FeatureTable load_feature_dir(const std::filesystem::path& dir, CameraIds cameras)
{
    return load_feature_table(dir / "features.ftb", dir / "manifest.csv", cameras);
}

}  // namespace craft
