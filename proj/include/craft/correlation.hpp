#pragma once

#include "craft/linalg.hpp"

#include <span>

namespace craft {

/// Top principal directions of one camera's mean-centred features.
struct SubspaceBasis {
    Matrix basis;                 // d x rank, orthonormal columns
    std::size_t requested = 0;    // r after clamping to min(d, n)
    std::size_t rank = 0;         // achievable rank (columns in `basis`)
    int source_view = -1;

    std::size_t ambient_dim() const { return static_cast<std::size_t>(basis.rows()); }
};

struct PrincipalAngleResult {
    Vector cosines;        // nonincreasing, each in [0, 1]
    Matrix left_vectors;   // principal vectors in span(a)
    Matrix right_vectors;  // principal vectors in span(b)
};

SubspaceBasis compute_subspace_basis(const Matrix& features, std::size_t r, int source_view = -1);

// Cosines are the singular values of a^T b. Bases of different rank are
// accepted; min(rank_a, rank_b) angles are returned.
PrincipalAngleResult principal_angles(const SubspaceBasis& a, const SubspaceBasis& b);

// Camera commonness: mean of the principal-angle cosines.
double estimate_correlation(const SubspaceBasis& a, const SubspaceBasis& b);

// J x J symmetric matrix of commonness values with unit diagonal.
Matrix pairwise_correlations(std::span<const Matrix> views, std::size_t r);

}  // namespace craft
