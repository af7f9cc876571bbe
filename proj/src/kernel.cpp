#include "craft/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace craft {

namespace {

// Column-wise sqrt of the L1-normalised histogram. All-zero columns stay zero.
Matrix bhattacharyya_prepare(const Matrix& samples)
{
    if ((samples.array() < 0.0).any()) {
        throw std::invalid_argument("bhattacharyya kernel: inputs must be elementwise nonnegative");
    }
    Matrix out(samples.rows(), samples.cols());
    for (Eigen::Index c = 0; c < samples.cols(); ++c) {
        const double mass = samples.col(c).sum();
        if (mass > 0.0) {
            out.col(c) = (samples.col(c) / mass).cwiseSqrt();
        } else {
            out.col(c).setZero();
        }
    }
    return out;
}

}  // namespace

std::string to_string(KernelKind kind)
{
    switch (kind) {
    case KernelKind::linear: return "linear";
    case KernelKind::bhattacharyya: return "bhattacharyya";
    case KernelKind::rbf: return "rbf";
    }
    return "unknown";
}

std::optional<KernelKind> parse_kernel_kind(std::string_view name)
{
    if (name == "linear") return KernelKind::linear;
    if (name == "bhattacharyya") return KernelKind::bhattacharyya;
    if (name == "rbf") return KernelKind::rbf;
    return std::nullopt;
}

KernelSpec::KernelSpec(KernelKind kind, Matrix references, std::vector<std::size_t> view_sizes, double rbf_gamma)
    : kind_(kind), rbf_gamma_(rbf_gamma), references_(std::move(references)), view_sizes_(std::move(view_sizes))
{
    if (references_.cols() == 0) throw std::invalid_argument("KernelSpec: empty reference set");
    if (kind_ == KernelKind::rbf && !(rbf_gamma_ > 0.0)) {
        throw std::invalid_argument("KernelSpec: rbf gamma must be positive");
    }
    if (view_sizes_.empty()) view_sizes_.push_back(static_cast<std::size_t>(references_.cols()));
    std::size_t total = 0;
    for (auto s : view_sizes_) total += s;
    if (total != static_cast<std::size_t>(references_.cols())) {
        throw std::invalid_argument("KernelSpec: view sizes do not add up to the reference count");
    }
    switch (kind_) {
    case KernelKind::linear: prepared_ = references_; break;
    case KernelKind::bhattacharyya: prepared_ = bhattacharyya_prepare(references_); break;
    case KernelKind::rbf:
        prepared_ = references_;
        ref_sq_norms_ = references_.colwise().squaredNorm().transpose();
        break;
    }
}

Matrix KernelSpec::kernel_columns(const Matrix& samples) const
{
    if (references_.cols() == 0) throw std::invalid_argument("kernel: empty reference set");
    if (samples.rows() != references_.rows()) {
        throw std::invalid_argument("kernel: sample dimension " + std::to_string(samples.rows()) +
                                    " does not match reference dimension " + std::to_string(references_.rows()));
    }
    switch (kind_) {
    case KernelKind::linear: return prepared_.transpose() * samples;
    case KernelKind::bhattacharyya: return prepared_.transpose() * bhattacharyya_prepare(samples);
    case KernelKind::rbf: {
        const Vector sample_sq = samples.colwise().squaredNorm().transpose();
        Matrix dist = -2.0 * (prepared_.transpose() * samples);
        dist.colwise() += ref_sq_norms_;
        dist.rowwise() += sample_sq.transpose();
        return (-rbf_gamma_ * dist.cwiseMax(0.0)).array().exp().matrix();
    }
    }
    throw std::logic_error("kernel: unknown kind");
}

double kernel_value(const Vector& x, const Vector& y, KernelKind kind, double rbf_gamma)
{
    if (x.size() != y.size()) throw std::invalid_argument("kernel_value: dimension mismatch");
    switch (kind) {
    case KernelKind::linear: return x.dot(y);
    case KernelKind::bhattacharyya: {
        return bhattacharyya_prepare(x).col(0).dot(bhattacharyya_prepare(y).col(0));
    }
    case KernelKind::rbf: return std::exp(-rbf_gamma * (x - y).squaredNorm());
    }
    throw std::logic_error("kernel_value: unknown kind");
}

double kernel_value(const Vector& x, const Vector& y, const KernelSpec& spec)
{
    return kernel_value(x, y, spec.kind(), spec.rbf_gamma());
}

Vector kernel_vector(const Vector& x, const KernelSpec& spec)
{
    return spec.kernel_columns(x).col(0);
}

KernelSpec make_kernel_spec(KernelKind kind, std::span<const ViewSamples> views, double rbf_gamma)
{
    if (views.empty()) throw std::invalid_argument("make_kernel_spec: no views");
    Eigen::Index total = 0;
    std::vector<std::size_t> sizes;
    for (const auto& v : views) {
        total += v.features.cols();
        sizes.push_back(v.size());
    }
    Matrix refs(views.front().features.rows(), total);
    Eigen::Index at = 0;
    for (const auto& v : views) {
        if (v.features.rows() != refs.rows()) throw std::invalid_argument("make_kernel_spec: views differ in dimension");
        refs.middleCols(at, v.features.cols()) = v.features;
        at += v.features.cols();
    }
    return KernelSpec(kind, std::move(refs), std::move(sizes), rbf_gamma);
}

std::vector<ViewSamples> kernelize_tables(std::span<const ViewSamples> views, const KernelSpec& spec)
{
    std::vector<ViewSamples> out;
    out.reserve(views.size());
    for (const auto& v : views) out.push_back({spec.kernel_columns(v.features), v.persons});
    return out;
}

}  // namespace craft
