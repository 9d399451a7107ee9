#pragma once

#include "cmg/coefficients.hpp"
#include "cmg/mesh.hpp"
#include "cmg/sparse.hpp"

#include <span>
#include <vector>

namespace cmg {

/// Numbering of the unknowns: boundary vertices are Dirichlet (-1), the rest
/// get consecutive interior indices in vertex order.
struct DofMap {
    std::vector<int> interior_of_vertex; // -1 marks a Dirichlet vertex
    std::vector<int> vertex_of_interior;

    int interior_count() const { return static_cast<int>(vertex_of_interior.size()); }

    /// Homogeneous Dirichlet on the flagged boundary.
    static DofMap interior(const Triangulation& t);
    /// Every vertex is an unknown (no elimination); used for full-domain
    /// assembly such as the partition-of-unity checks.
    static DofMap all_vertices(const Triangulation& t);
};

/// Matrix of the form  integral( grad u . A grad v ) + integral( phi u v )
/// on the interior unknowns of `dofs`, Dirichlet rows/columns eliminated.
/// Quadrature: 3-point edge-midpoint rule per triangle (exact for
/// quadratics). Throws NumericError if the diffusion matrix fails the SPD
/// check at a quadrature point.
SparseMatrix assemble_stiffness(const Triangulation& t, const DofMap& dofs,
                                const CoefficientSet& c);

/// Matrix of  integral( rho u v ), consistent (never lumped).
SparseMatrix assemble_mass(const Triangulation& t, const DofMap& dofs,
                           const CoefficientSet& c);

/// Nodal interpolation from coarse interior unknowns to fine interior
/// unknowns: inherited vertices get a 1.0 row, edge midpoints two 0.5
/// entries (fewer when an endpoint is Dirichlet). Throws ConfigError if the
/// refinement map and DOF maps disagree.
SparseMatrix build_prolongation(const RefinementMap& map, const DofMap& coarse_dofs,
                                const DofMap& fine_dofs);

/// max of ||P^T A_f P - A_c||_F / ||A_c||_F and the mass analog.
double galerkin_check(const SparseMatrix& a_fine, const SparseMatrix& b_fine,
                      const SparseMatrix& p, const SparseMatrix& a_coarse,
                      const SparseMatrix& b_coarse);

/// sqrt(v^T M v); throws NumericError when the quadratic form is negative
/// beyond roundoff (non-PSD input), clamps tiny negatives to zero.
double a_norm(const SparseMatrix& a, std::span<const double> v);
double b_norm(const SparseMatrix& b, std::span<const double> v);

} // namespace cmg
