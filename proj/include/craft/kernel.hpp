#pragma once

#include "craft/feature_table.hpp"
#include "craft/linalg.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace craft {

enum class KernelKind { linear, bhattacharyya, rbf };

std::string to_string(KernelKind kind);
std::optional<KernelKind> parse_kernel_kind(std::string_view name);

/// A kernel plus the training samples (all views, view order) that define
/// the kernel similarity vector k(x) = [k(x_1, x), ..., k(x_n, x)].
///
/// Bhattacharyya: sum_i sqrt(x_i y_i) after L1-normalising both inputs,
/// which requires nonnegative components. rbf: exp(-gamma ||x - y||^2).
class KernelSpec {
public:
    KernelSpec() = default;
    KernelSpec(KernelKind kind, Matrix references, std::vector<std::size_t> view_sizes = {},
               double rbf_gamma = 1.0);

    KernelKind kind() const { return kind_; }
    double rbf_gamma() const { return rbf_gamma_; }
    const Matrix& references() const { return references_; }
    const std::vector<std::size_t>& view_sizes() const { return view_sizes_; }
    std::size_t reference_count() const { return static_cast<std::size_t>(references_.cols()); }
    std::size_t input_dim() const { return static_cast<std::size_t>(references_.rows()); }

    // n x m matrix of kernel vectors for the m columns of `samples`.
    Matrix kernel_columns(const Matrix& samples) const;

private:
    KernelKind kind_ = KernelKind::linear;
    double rbf_gamma_ = 1.0;
    Matrix references_;
    std::vector<std::size_t> view_sizes_;
    Matrix prepared_;  // per-kind preprocessed references, d x n
    Vector ref_sq_norms_;
};

double kernel_value(const Vector& x, const Vector& y, KernelKind kind, double rbf_gamma = 1.0);
double kernel_value(const Vector& x, const Vector& y, const KernelSpec& spec);
Vector kernel_vector(const Vector& x, const KernelSpec& spec);

// Builds a spec whose references are the concatenation of the views.
KernelSpec make_kernel_spec(KernelKind kind, std::span<const ViewSamples> views, double rbf_gamma = 1.0);

// Replaces every sample by its kernel vector against spec's references.
std::vector<ViewSamples> kernelize_tables(std::span<const ViewSamples> views, const KernelSpec& spec);

}  // namespace craft
