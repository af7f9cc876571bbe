#include "craft/correlation.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace craft {

SubspaceBasis compute_subspace_basis(const Matrix& features, std::size_t r, int source_view)
{
    const auto d = static_cast<std::size_t>(features.rows());
    const auto n = static_cast<std::size_t>(features.cols());
    if (d == 0 || n == 0) throw std::invalid_argument("compute_subspace_basis: empty input");
    if (r == 0) throw std::invalid_argument("compute_subspace_basis: r must be >= 1");

    SubspaceBasis out;
    out.source_view = source_view;
    out.requested = std::min({r, d, n});

    const Matrix centred = features.colwise() - features.rowwise().mean();
    Eigen::BDCSVD<Matrix> svd(centred, Eigen::ComputeThinU);
    const Vector& sv = svd.singularValues();
    // Directions carrying less than 1e-10 of the leading spread are noise.
    const double tol = 1e-10 * (sv.size() > 0 ? sv(0) : 0.0);
    std::size_t rank = 0;
    while (rank < static_cast<std::size_t>(sv.size()) && sv(static_cast<Eigen::Index>(rank)) > tol) ++rank;
    out.rank = std::min(out.requested, rank);
    out.basis = svd.matrixU().leftCols(static_cast<Eigen::Index>(out.rank));
    return out;
}

PrincipalAngleResult principal_angles(const SubspaceBasis& a, const SubspaceBasis& b)
{
    if (a.basis.rows() != b.basis.rows()) {
        throw std::invalid_argument("principal_angles: ambient dimensions differ (" +
                                    std::to_string(a.basis.rows()) + " vs " + std::to_string(b.basis.rows()) + ")");
    }
    PrincipalAngleResult out;
    if (a.basis.cols() == 0 || b.basis.cols() == 0) {
        // JacobiSVD does not accept an empty matrix.
        out.left_vectors.resize(a.basis.rows(), 0);
        out.right_vectors.resize(b.basis.rows(), 0);
        return out;
    }
    const Matrix cross = a.basis.transpose() * b.basis;
    Eigen::JacobiSVD<Matrix> svd(cross, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.cosines = svd.singularValues().cwiseMax(0.0).cwiseMin(1.0);
    out.left_vectors = a.basis * svd.matrixU();
    out.right_vectors = b.basis * svd.matrixV();
    return out;
}

double estimate_correlation(const SubspaceBasis& a, const SubspaceBasis& b)
{
    const auto angles = principal_angles(a, b);
    if (angles.cosines.size() == 0) {
        throw std::invalid_argument("estimate_correlation: a view has no variance (rank 0)");
    }
    return angles.cosines.mean();
}

Matrix pairwise_correlations(std::span<const Matrix> views, std::size_t r)
{
    if (views.size() < 2) throw std::invalid_argument("pairwise_correlations: need at least 2 views");
    std::vector<SubspaceBasis> bases;
    bases.reserve(views.size());
    for (std::size_t v = 0; v < views.size(); ++v) {
        if (views[v].cols() == 0) {
            throw std::invalid_argument("pairwise_correlations: view " + std::to_string(v) + " is empty");
        }
        bases.push_back(compute_subspace_basis(views[v], r, static_cast<int>(v)));
    }
    const auto J = static_cast<Eigen::Index>(views.size());
    Matrix omega = Matrix::Identity(J, J);
    for (Eigen::Index i = 0; i < J; ++i) {
        for (Eigen::Index j = i + 1; j < J; ++j) {
            omega(i, j) = omega(j, i) = estimate_correlation(bases[static_cast<std::size_t>(i)],
                                                             bases[static_cast<std::size_t>(j)]);
        }
    }
    return omega;
}

}  // namespace craft
