#include "craft/augmentation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace craft {

namespace {

void require_dim(const Eigen::Index got, std::size_t want, const char* what)
{
    if (static_cast<std::size_t>(got) != want) {
        throw std::invalid_argument(std::string(what) + ": expected dimension " + std::to_string(want) +
                                    ", got " + std::to_string(got));
    }
}

void require_view(std::size_t view, std::size_t view_count, const char* what)
{
    if (view >= view_count) {
        throw std::invalid_argument(std::string(what) + ": view " + std::to_string(view) + " out of range for " +
                                    std::to_string(view_count) + " views");
    }
}

}  // namespace

AugmentationPlan build_pairwise_plan(double omega, std::size_t dim)
{
    if (!(omega >= 0.0 && omega <= 1.0)) {
        throw std::invalid_argument("build_pairwise_plan: omega must lie in [0, 1]");
    }
    const double specific = 2.0 - omega;
    const double norm = std::sqrt(specific * specific + omega * omega);

    AugmentationPlan plan;
    plan.dim_ = dim;
    plan.coefficients_.resize(2, 2);
    plan.coefficients_ << specific / norm, omega / norm,
                          omega / norm, specific / norm;
    plan.normalizers_ = Vector::Constant(2, norm);
    return plan;
}

AugmentationPlan build_multiview_plan(const Matrix& omega, std::size_t dim)
{
    const Eigen::Index J = omega.rows();
    if (J < 2 || omega.cols() != J) {
        throw std::invalid_argument("build_multiview_plan: need a square correlation matrix with J >= 2");
    }
    for (Eigen::Index i = 0; i < J; ++i) {
        for (Eigen::Index j = 0; j < J; ++j) {
            if (i == j) continue;
            const double w = omega(i, j);
            if (!(w >= 0.0 && w <= 1.0)) {
                throw std::invalid_argument("build_multiview_plan: correlation out of [0, 1] at (" +
                                            std::to_string(i) + ", " + std::to_string(j) + ")");
            }
            if (std::abs(w - omega(j, i)) > 1e-12) {
                throw std::invalid_argument("build_multiview_plan: correlation matrix is not symmetric");
            }
        }
    }

    AugmentationPlan plan;
    plan.dim_ = dim;
    plan.coefficients_.resize(J, J);
    plan.normalizers_.resize(J);
    for (Eigen::Index i = 0; i < J; ++i) {
        double sum = 0.0;
        double sum_sq = 0.0;
        for (Eigen::Index j = 0; j < J; ++j) {
            if (j == i) continue;
            sum += omega(i, j);
            sum_sq += omega(i, j) * omega(i, j);
        }
        const double specific = 2.0 - sum / static_cast<double>(J - 1);
        const double norm = std::sqrt(specific * specific + sum_sq);
        for (Eigen::Index j = 0; j < J; ++j) {
            plan.coefficients_(i, j) = (j == i) ? specific / norm : omega(i, j) / norm;
        }
        plan.normalizers_(i) = norm;
    }
    return plan;
}

Vector augment(const Vector& x, std::size_t view, const AugmentationPlan& plan)
{
    require_dim(x.size(), plan.dim(), "augment");
    require_view(view, plan.view_count(), "augment");
    const auto d = static_cast<Eigen::Index>(plan.dim());
    Vector out(static_cast<Eigen::Index>(plan.augmented_dim()));
    for (std::size_t j = 0; j < plan.view_count(); ++j) {
        auto block = out.segment(static_cast<Eigen::Index>(j) * d, d);
        const double c = plan.coefficient(view, j);
        if (c == 0.0) {
            block.setZero();  // avoid -0.0 from 0 * negative
        } else {
            block = c * x;
        }
    }
    return out;
}

Matrix augment_columns(const Matrix& samples, std::size_t view, const AugmentationPlan& plan)
{
    require_dim(samples.rows(), plan.dim(), "augment_columns");
    require_view(view, plan.view_count(), "augment_columns");
    const auto d = static_cast<Eigen::Index>(plan.dim());
    Matrix out(static_cast<Eigen::Index>(plan.augmented_dim()), samples.cols());
    for (std::size_t j = 0; j < plan.view_count(); ++j) {
        auto block = out.middleRows(static_cast<Eigen::Index>(j) * d, d);
        const double c = plan.coefficient(view, j);
        if (c == 0.0) {
            block.setZero();
        } else {
            block = c * samples;
        }
    }
    return out;
}

Vector zero_pad(const Vector& x, std::size_t view, std::size_t view_count)
{
    require_view(view, view_count, "zero_pad");
    Vector out = Vector::Zero(x.size() * static_cast<Eigen::Index>(view_count));
    out.segment(static_cast<Eigen::Index>(view) * x.size(), x.size()) = x;
    return out;
}

Vector daume_augment(const Vector& x, DaumeDomain domain)
{
    return daume_augment(x, domain == DaumeDomain::source ? 0 : 1, 2);
}

Vector daume_augment(const Vector& x, std::size_t view, std::size_t view_count)
{
    require_view(view, view_count, "daume_augment");
    const Eigen::Index d = x.size();
    Vector out = Vector::Zero(d * static_cast<Eigen::Index>(view_count + 1));
    out.head(d) = x;
    out.segment(static_cast<Eigen::Index>(view + 1) * d, d) = x;
    return out;
}

Matrix daume_augment_columns(const Matrix& samples, std::size_t view, std::size_t view_count)
{
    require_view(view, view_count, "daume_augment_columns");
    const Eigen::Index d = samples.rows();
    Matrix out = Matrix::Zero(d * static_cast<Eigen::Index>(view_count + 1), samples.cols());
    out.topRows(d) = samples;
    out.middleRows(static_cast<Eigen::Index>(view + 1) * d, d) = samples;
    return out;
}

}  // namespace craft
