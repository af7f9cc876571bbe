#include "craft/regularization.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace craft {

namespace {

void require_rows(const Matrix& m, std::size_t want, const char* what)
{
    if (static_cast<std::size_t>(m.rows()) != want) {
        throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(want) + " rows, got " +
                                    std::to_string(m.rows()));
    }
}

}  // namespace

CvdOperator build_cvd(double eta_ridge, std::size_t view_count, std::size_t block_dim)
{
    if (!(eta_ridge > 0.0) || !std::isfinite(eta_ridge)) {
        throw std::invalid_argument("build_cvd: eta_ridge must be a positive finite number");
    }
    if (view_count < 2) throw std::invalid_argument("build_cvd: need at least 2 views");
    if (block_dim == 0) throw std::invalid_argument("build_cvd: block_dim must be >= 1");
    CvdOperator op;
    op.eta_ridge_ = eta_ridge;
    op.beta_ = 1.0 / (1.0 + eta_ridge);
    op.beta_prime_ = op.beta_ / static_cast<double>(view_count - 1);
    op.view_count_ = view_count;
    op.block_dim_ = block_dim;
    return op;
}

// Helmert basis, column k >= 1: 1/sqrt(k(k+1)) on blocks 0..k-1,
// -k/sqrt(k(k+1)) on block k, zero after.
Matrix CvdOperator::apply_basis_transpose(const Matrix& x) const
{
    require_rows(x, dim(), "apply_basis_transpose");
    const auto b = static_cast<Eigen::Index>(block_dim_);
    const auto J = static_cast<Eigen::Index>(view_count_);
    Matrix y(x.rows(), x.cols());
    Matrix prefix = x.topRows(b);
    for (Eigen::Index k = 1; k < J; ++k) {
        const double kk = static_cast<double>(k);
        y.middleRows(k * b, b) = (prefix - kk * x.middleRows(k * b, b)) / std::sqrt(kk * (kk + 1.0));
        prefix += x.middleRows(k * b, b);
    }
    y.topRows(b) = prefix / std::sqrt(static_cast<double>(J));
    return y;
}

Matrix CvdOperator::apply_basis(const Matrix& y) const
{
    require_rows(y, dim(), "apply_basis");
    const auto b = static_cast<Eigen::Index>(block_dim_);
    const auto J = static_cast<Eigen::Index>(view_count_);
    Matrix x(y.rows(), y.cols());
    Matrix suffix = Matrix::Zero(b, y.cols());  // sum_{k > i} y_k / sqrt(k(k+1))
    const Matrix shared = y.topRows(b) / std::sqrt(static_cast<double>(J));
    for (Eigen::Index i = J - 1; i >= 0; --i) {
        if (i == 0) {
            x.topRows(b) = shared + suffix;
        } else {
            const double ii = static_cast<double>(i);
            const double norm = std::sqrt(ii * (ii + 1.0));
            x.middleRows(i * b, b) = shared + suffix - (ii / norm) * y.middleRows(i * b, b);
            suffix += y.middleRows(i * b, b) / norm;
        }
    }
    return x;
}

Vector CvdOperator::eigenvalues() const
{
    Vector out = Vector::Constant(static_cast<Eigen::Index>(dim()), lambda_contrast());
    out.head(static_cast<Eigen::Index>(block_dim_)).setConstant(lambda_shared());
    return out;
}

void CvdOperator::scale_blocks(Matrix& y, double shared, double contrast) const
{
    const auto b = static_cast<Eigen::Index>(block_dim_);
    y.topRows(b) *= shared;
    y.bottomRows(y.rows() - b) *= contrast;
}

Vector whiten(const Vector& augmented, const CvdOperator& op)
{
    return whiten_columns(augmented, op).col(0);
}

Matrix whiten_columns(const Matrix& augmented, const CvdOperator& op)
{
    Matrix y = op.apply_basis_transpose(augmented);
    op.scale_blocks(y, 1.0 / std::sqrt(op.lambda_shared()), 1.0 / std::sqrt(op.lambda_contrast()));
    return y;
}

Matrix unwhiten_columns(const Matrix& whitened, const CvdOperator& op)
{
    require_rows(whitened, op.dim(), "unwhiten_columns");
    Matrix y = whitened;
    op.scale_blocks(y, std::sqrt(op.lambda_shared()), std::sqrt(op.lambda_contrast()));
    return op.apply_basis(y);
}

Matrix recover_projection(const Matrix& whitened_projection, const CvdOperator& op)
{
    require_rows(whitened_projection, op.dim(), "recover_projection");
    Matrix y = whitened_projection;
    op.scale_blocks(y, 1.0 / std::sqrt(op.lambda_shared()), 1.0 / std::sqrt(op.lambda_contrast()));
    return op.apply_basis(y);
}

double cvd_penalty(const Matrix& projection, std::size_t view_count)
{
    if (view_count == 0 || projection.rows() % static_cast<Eigen::Index>(view_count) != 0) {
        throw std::invalid_argument("cvd_penalty: row count is not a multiple of the view count");
    }
    const Eigen::Index b = projection.rows() / static_cast<Eigen::Index>(view_count);
    double total = 0.0;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(view_count); ++i) {
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(view_count); ++j) {
            if (i == j) continue;
            total += (projection.middleRows(i * b, b) - projection.middleRows(j * b, b)).squaredNorm();
        }
    }
    return total;
}

}  // namespace craft
