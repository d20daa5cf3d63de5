#pragma once

#include <vector>

#include "almlab/fe_space.hpp"
#include "almlab/linalg.hpp"

namespace almlab {

// Scalar space only.
SparseMatrix assemble_grad_grad(const FeSpace& space, const ScalarFn& coefficient = {});
// Componentwise grad-grad on a vector space (mu * grad u : grad v).
SparseMatrix assemble_vector_grad_grad(const FeSpace& space, double mu = 1.0);

SparseMatrix assemble_mass(const FeSpace& space);
SparseMatrix assemble_boundary_mass(const FeSpace& space, const std::vector<int>& tags);
// Row-sum lumped P1 mass as a vector (vertex weights |T|/3).
Vector lumped_mass(const FeSpace& space);

// D[q, v] = int q div v
SparseMatrix assemble_div_coupling(const FeSpace& velocity, const FeSpace& pressure);

// F[i, j] = int_Gamma c (grad phi_j . n) phi_i, using the owning cell's gradient.
SparseMatrix assemble_boundary_flux(const FeSpace& space, const std::vector<int>& tags,
                                    const ScalarFn& coefficient = {});

Vector assemble_load(const FeSpace& space, const ScalarFn& f);
Vector assemble_load(const FeSpace& space, const VectorFn& f);
Vector assemble_boundary_load(const FeSpace& space, const std::vector<int>& tags, const ScalarFn& g);

struct ErrorNorms {
  double l2 = 0.0;
  double h1_semi = 0.0;
};

ErrorNorms error_norms(const FeSpace& space, const Vector& coeffs, const ScalarFn& exact,
                       const VectorFn& exact_grad);
// vector space: exact[c], exact_grad[c] per component
ErrorNorms error_norms(const FeSpace& space, const Vector& coeffs, const std::array<ScalarFn, 2>& exact,
                       const std::array<VectorFn, 2>& exact_grad);

// Largest mu with x^T F x = mu x^T K x, by power iteration on (K + shift M)^-1 F.
// F and K must share a kernel (constants, rigid modes); the shift only
// regularises the solves.
double generalized_max_eigenvalue(const SparseMatrix& flux_gram, const SparseMatrix& stiffness,
                                  const SparseMatrix& mass, double tol = 1e-10,
                                  int max_iter = 20000);

// gamma_C with h ||d_n v||^2_Gamma <= gamma_C ||grad v||^2, h = mesh h_max.
double inverse_constant(const FeSpace& space, const std::vector<int>& tags);

bool has_tags(const Mesh& mesh, const std::vector<int>& tags);

}  // namespace almlab
