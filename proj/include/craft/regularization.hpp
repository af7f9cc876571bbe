#pragma once

#include "craft/linalg.hpp"

namespace craft {

/// View-discrepancy + ridge regulariser
///
///     C = [ I      -b'I  ...  -b'I ]
///         [ -b'I    I    ...  -b'I ]      b = 1 / (1 + eta_ridge)
///         [  ...                   ]      b' = b / (J - 1)
///         [ -b'I   -b'I  ...   I   ]
///
/// with J diagonal blocks of size block_dim. C = P Lambda P^T is known in
/// closed form: P = Q (x) I where Q is the J x J Helmert basis (first
/// column the normalised all-ones vector, the rest an orthonormal basis of
/// its complement), and Lambda carries 1 - b on the all-ones direction and
/// 1 + b' on the other J - 1 directions. Nothing of size (J d)^2 is ever
/// formed; every application is O(J d) per column.
///
/// The (1 + eta_ridge) prefactor of the combined penalty is folded into the
/// learner's lambda and is not part of C.
class CvdOperator {
public:
    double eta_ridge() const { return eta_ridge_; }
    double beta() const { return beta_; }
    double beta_prime() const { return beta_prime_; }
    std::size_t view_count() const { return view_count_; }
    std::size_t block_dim() const { return block_dim_; }
    std::size_t dim() const { return view_count_ * block_dim_; }

    // Eigenvalue on the all-ones (view-shared) direction: 1 - beta.
    double lambda_shared() const { return 1.0 - beta_; }
    // Eigenvalue on each view-contrast direction: 1 + beta'.
    double lambda_contrast() const { return 1.0 + beta_prime_; }

    // P^T x and P x, column-wise.
    Matrix apply_basis_transpose(const Matrix& x) const;
    Matrix apply_basis(const Matrix& y) const;
    // Diagonal of Lambda, length J * block_dim, in the order used by P.
    Vector eigenvalues() const;

    friend CvdOperator build_cvd(double eta_ridge, std::size_t view_count, std::size_t block_dim);

private:
    void scale_blocks(Matrix& y, double shared, double contrast) const;

    double eta_ridge_ = 1.0;
    double beta_ = 0.5;
    double beta_prime_ = 0.5;
    std::size_t view_count_ = 2;
    std::size_t block_dim_ = 0;

    friend Matrix whiten_columns(const Matrix&, const CvdOperator&);
    friend Matrix unwhiten_columns(const Matrix&, const CvdOperator&);
    friend Matrix recover_projection(const Matrix&, const CvdOperator&);
};

CvdOperator build_cvd(double eta_ridge, std::size_t view_count, std::size_t block_dim);

// Lambda^{-1/2} P^T x.
Vector whiten(const Vector& augmented, const CvdOperator& op);
Matrix whiten_columns(const Matrix& augmented, const CvdOperator& op);
// Inverse of whiten: P Lambda^{1/2} x.
Matrix unwhiten_columns(const Matrix& whitened, const CvdOperator& op);

// W = P Lambda^{-1/2} H, so that W^T C W = H^T H and W^T x = H^T whiten(x).
Matrix recover_projection(const Matrix& whitened_projection, const CvdOperator& op);

// Sum over ordered view pairs i != j of ||W^i - W^j||_F^2; each unordered
// pair contributes twice. W must have view_count equal row blocks.
double cvd_penalty(const Matrix& projection, std::size_t view_count);

}  // namespace craft
