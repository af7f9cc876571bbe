#pragma once

#include "craft/linalg.hpp"

namespace craft {

/// Correlation-aware augmentation for J camera views.
///
/// Every block of the augmentation is a scalar multiple of the identity, so
/// the plan stores only a J x J coefficient table: row i lists the weights
/// that place a view-i feature into each of the J output blocks. The
/// diagonal weight is the view-specific part, the off-diagonal weights the
/// part shared with other views. Each row has unit Euclidean norm, which
/// makes augmentation norm-preserving.
class AugmentationPlan {
public:
    std::size_t view_count() const { return static_cast<std::size_t>(coefficients_.rows()); }
    std::size_t dim() const { return dim_; }
    std::size_t augmented_dim() const { return view_count() * dim_; }

    // coefficient(i, j): weight of block j for a sample from view i.
    double coefficient(std::size_t view, std::size_t block) const
    {
        return coefficients_(static_cast<Eigen::Index>(view), static_cast<Eigen::Index>(block));
    }
    const Matrix& coefficients() const { return coefficients_; }
    const Vector& normalizers() const { return normalizers_; }

    friend AugmentationPlan build_pairwise_plan(double omega, std::size_t dim);
    friend AugmentationPlan build_multiview_plan(const Matrix& omega, std::size_t dim);

private:
    Matrix coefficients_;
    Vector normalizers_;
    std::size_t dim_ = 0;
};

AugmentationPlan build_pairwise_plan(double omega, std::size_t dim);
AugmentationPlan build_multiview_plan(const Matrix& omega, std::size_t dim);

Vector augment(const Vector& x, std::size_t view, const AugmentationPlan& plan);
// Column-wise augmentation of a d x n block of samples from one view.
Matrix augment_columns(const Matrix& samples, std::size_t view, const AugmentationPlan& plan);

Vector zero_pad(const Vector& x, std::size_t view, std::size_t view_count);

enum class DaumeDomain { source, target };

// [x; x; 0] for the source domain, [x; 0; x] for the target domain.
Vector daume_augment(const Vector& x, DaumeDomain domain);
// J-view generalisation: a shared block followed by one block per view.
Vector daume_augment(const Vector& x, std::size_t view, std::size_t view_count);
Matrix daume_augment_columns(const Matrix& samples, std::size_t view, std::size_t view_count);

}  // namespace craft
