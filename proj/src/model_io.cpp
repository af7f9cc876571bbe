#include "craft/model_io.hpp"

#include "binary_io.hpp"
#include "craft/feature_table.hpp"

#include <bit>
#include <json.hpp>

namespace craft {

namespace {

using nlohmann::json;

struct Blob {
    std::string name;
    const Matrix* data;
};

void append_blob(std::string& payload, json& list, const Blob& blob)
{
    const std::size_t offset = payload.size();
    const Matrix& m = *blob.data;
    const Eigen::MatrixXf f = m.cast<float>();
    for (Eigen::Index i = 0; i < f.size(); ++i) detail::put_u32(payload, std::bit_cast<std::uint32_t>(f.data()[i]));
    list.push_back({{"name", blob.name},
                    {"rows", m.rows()},
                    {"cols", m.cols()},
                    {"offset", offset},
                    {"length", payload.size() - offset}});
}

json matrix_to_json(const Matrix& m)
{
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::string encode_model(const CraftModel& model)
{
    const TrainConfig& c = model.config;
    json header;
    header["format_version"] = kModelFormatVersion;
    header["learner"] = to_string(c.learner);
    header["baseline"] = to_string(c.baseline);
    header["kernel"] = c.kernel ? to_string(*c.kernel) : "none";
    header["rbf_gamma"] = c.rbf_gamma;
    header["views"] = model.view_count;
    header["input_dim"] = model.input_dim;
    header["block_dim"] = model.block_dim;
    header["m"] = model.subspace_dim();
    header["omega"] = matrix_to_json(model.omega);
    header["eta_ridge"] = c.eta_ridge;
    header["lambda"] = c.lambda;
    header["r"] = c.r;
    header["dim"] = c.dim ? json(*c.dim) : json(nullptr);
    header["k1"] = c.k1;
    header["k2"] = c.k2;
    header["pairing"] = to_string(c.pairing);
    header["penalty_shift"] = model.penalty_shift;
    header["eigenvalues"] = std::vector<double>(model.eigenvalues.data(),
                                                model.eigenvalues.data() + model.eigenvalues.size());
    if (model.kernel) header["kernel_view_sizes"] = model.kernel->view_sizes();

    std::string payload;
    json blobs = json::array();
    append_blob(payload, blobs, {"W", &model.projection});
    append_blob(payload, blobs, {"H", &model.whitened_projection});
    if (model.kernel) append_blob(payload, blobs, {"kernel_references", &model.kernel->references()});
    header["blobs"] = std::move(blobs);

    return header.dump() + "\n" + payload;
}

namespace {

Matrix read_blob(std::string_view payload, const json& entry, const std::string& source)
{
    const auto rows = entry.at("rows").get<std::int64_t>();
    const auto cols = entry.at("cols").get<std::int64_t>();
    const auto offset = entry.at("offset").get<std::uint64_t>();
    const auto length = entry.at("length").get<std::uint64_t>();
    if (rows < 0 || cols < 0 || length != 4 * static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols)) {
        throw ParseError(source + ": blob " + entry.at("name").get<std::string>() + " has inconsistent shape");
    }
    if (offset > payload.size() || length > payload.size() - offset) {
        throw ParseError(source + ": blob " + entry.at("name").get<std::string>() + " extends past end of file");
    }
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = static_cast<double>(std::bit_cast<float>(detail::get_u32(payload, offset + 4 * static_cast<std::size_t>(i))));
    }
    return m;
}

template <typename T, typename Parse>
T parse_tag(const json& header, const char* key, Parse parse, const std::string& source)
{
    const auto text = header.at(key).get<std::string>();
    const auto v = parse(text);
    if (!v) throw ParseError(source + ": unknown " + key + " '" + text + "'");
    return *v;
}

}  // namespace

CraftModel decode_model(std::string_view bytes, const std::string& source)
{
    const auto newline = bytes.find('\n');
    if (newline == std::string_view::npos) throw ParseError(source + ": missing model header line");
    json header;
    try {
        header = json::parse(bytes.substr(0, newline));
    } catch (const json::exception& e) {
        throw ParseError(source + ": header is not valid JSON (" + e.what() + ")");
    }
    const std::string_view payload = bytes.substr(newline + 1);

    try {
        if (header.at("format_version").get<int>() != kModelFormatVersion) {
            throw ParseError(source + ": unsupported model format version " + header.at("format_version").dump());
        }
        CraftModel model;
        TrainConfig& c = model.config;
        c.learner = parse_tag<LearnerKind>(header, "learner", parse_learner_kind, source);
        c.baseline = parse_tag<Baseline>(header, "baseline", parse_baseline, source);
        c.pairing = parse_tag<PenaltyPairing>(header, "pairing", parse_penalty_pairing, source);
        if (const auto k = header.at("kernel").get<std::string>(); k != "none") {
            c.kernel = parse_kernel_kind(k);
            if (!c.kernel) throw ParseError(source + ": unknown kernel '" + k + "'");
        }
        c.rbf_gamma = header.at("rbf_gamma").get<double>();
        c.eta_ridge = header.at("eta_ridge").get<double>();
        c.lambda = header.at("lambda").get<double>();
        c.r = header.at("r").get<std::size_t>();
        if (!header.at("dim").is_null()) c.dim = header.at("dim").get<std::size_t>();
        c.k1 = header.at("k1").get<std::size_t>();
        c.k2 = header.at("k2").get<std::size_t>();

        model.view_count = header.at("views").get<std::size_t>();
        model.input_dim = header.at("input_dim").get<std::size_t>();
        model.block_dim = header.at("block_dim").get<std::size_t>();
        model.penalty_shift = header.at("penalty_shift").get<double>();
        const auto eig = header.at("eigenvalues").get<std::vector<double>>();
        model.eigenvalues = Eigen::Map<const Vector>(eig.data(), static_cast<Eigen::Index>(eig.size()));

        const auto J = static_cast<Eigen::Index>(model.view_count);
        const auto& omega = header.at("omega");
        if (J < 2 || omega.size() != model.view_count) throw ParseError(source + ": omega does not match view count");
        model.omega.resize(J, J);
        for (Eigen::Index i = 0; i < J; ++i) {
            const auto& row = omega.at(static_cast<std::size_t>(i));
            if (row.size() != model.view_count) throw ParseError(source + ": omega is not square");
            for (Eigen::Index j = 0; j < J; ++j) model.omega(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
        }

        std::optional<Matrix> refs;
        for (const auto& entry : header.at("blobs")) {
            const auto name = entry.at("name").get<std::string>();
            if (name == "W") {
                model.projection = read_blob(payload, entry, source);
            } else if (name == "H") {
                model.whitened_projection = read_blob(payload, entry, source);
            } else if (name == "kernel_references") {
                refs = read_blob(payload, entry, source);
            } else {
                throw ParseError(source + ": unknown blob '" + name + "'");
            }
        }

        if (c.kernel) {
            if (!refs) throw ParseError(source + ": kernel model without reference features");
            model.kernel = KernelSpec(*c.kernel, std::move(*refs),
                                      header.at("kernel_view_sizes").get<std::vector<std::size_t>>(), c.rbf_gamma);
        }
        if (c.baseline == Baseline::craft || c.baseline == Baseline::zeropad) {
            model.plan = model.view_count == 2 ? build_pairwise_plan(model.omega(0, 1), model.block_dim)
                                               : build_multiview_plan(model.omega, model.block_dim);
            model.cvd = build_cvd(c.eta_ridge, model.view_count, model.block_dim);
        }

        std::size_t expected_rows = model.block_dim;
        if (model.cvd) expected_rows = model.cvd->dim();
        if (c.baseline == Baseline::daume) expected_rows = (model.view_count + 1) * model.block_dim;
        if (model.learner_dim() != expected_rows || model.whitened_projection.rows() != model.projection.rows() ||
            model.whitened_projection.cols() != model.projection.cols() ||
            header.at("m").get<std::size_t>() != model.subspace_dim() || model.subspace_dim() == 0) {
            throw ParseError(source + ": projection shape does not match the header");
        }
        if (model.kernel && (model.kernel->reference_count() != model.block_dim ||
                             model.kernel->input_dim() != model.input_dim)) {
            throw ParseError(source + ": kernel references do not match the header");
        }
        return model;
    } catch (const json::exception& e) {
        throw ParseError(source + ": malformed model header (" + e.what() + ")");
    } catch (const std::invalid_argument& e) {
        throw ParseError(source + ": inconsistent model (" + e.what() + ")");
    }
}

void save_model(const CraftModel& model, const std::filesystem::path& path)
{
    write_file_atomic(path, encode_model(model));
}

CraftModel load_model(const std::filesystem::path& path)
{
    return decode_model(read_file(path), path.string());
}

}  // namespace craft
