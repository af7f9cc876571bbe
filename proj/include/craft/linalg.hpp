#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>

namespace craft {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MatrixF = Eigen::MatrixXf;

using PersonId = std::int64_t;

// Flip each column so that its first non-negligible entry is positive.
// Eigen solvers return eigenvectors with arbitrary sign; fixing it makes
// trained models reproducible bit-for-bit.
void canonicalize_column_signs(Matrix& columns);

// Orthonormal basis of the numerical range of a symmetric PSD matrix,
// columns ordered by descending eigenvalue.
Matrix psd_range_basis(const Matrix& psd, double relative_tolerance = 1e-10);

// Numerical rank of a symmetric PSD matrix.
std::size_t psd_rank(const Matrix& psd, double relative_tolerance = 1e-10);

}  // namespace craft
