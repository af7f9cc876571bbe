#include "craft/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace craft {

void canonicalize_column_signs(Matrix& columns)
{
    for (Eigen::Index c = 0; c < columns.cols(); ++c) {
        auto col = columns.col(c);
        const double scale = col.cwiseAbs().maxCoeff();
        if (scale == 0.0) continue;
        for (Eigen::Index r = 0; r < col.size(); ++r) {
            if (std::abs(col(r)) > 1e-12 * scale) {
                if (col(r) < 0.0) col = -col;
                break;
            }
        }
    }
}

namespace {

std::size_t count_above(const Vector& ascending, double relative_tolerance)
{
    if (ascending.size() == 0) return 0;
    const double top = std::max(ascending(ascending.size() - 1), 0.0);
    if (top == 0.0) return 0;
    const double threshold = relative_tolerance * top;
    std::size_t count = 0;
    for (Eigen::Index i = 0; i < ascending.size(); ++i) {
        if (ascending(i) > threshold) ++count;
    }
    return count;
}

}  // namespace

Matrix psd_range_basis(const Matrix& psd, double relative_tolerance)
{
    const Eigen::SelfAdjointEigenSolver<Matrix> solver(psd);
    const std::size_t rank = count_above(solver.eigenvalues(), relative_tolerance);
    const Eigen::Index n = psd.rows();
    Matrix basis(n, static_cast<Eigen::Index>(rank));
    for (std::size_t k = 0; k < rank; ++k) {
        basis.col(static_cast<Eigen::Index>(k)) = solver.eigenvectors().col(n - 1 - static_cast<Eigen::Index>(k));
    }
    canonicalize_column_signs(basis);
    return basis;
}

std::size_t psd_rank(const Matrix& psd, double relative_tolerance)
{
    if (psd.size() == 0) return 0;
    const Eigen::SelfAdjointEigenSolver<Matrix> solver(psd, Eigen::EigenvaluesOnly);
    return count_above(solver.eigenvalues(), relative_tolerance);
}

}  // namespace craft
