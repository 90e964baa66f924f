#pragma once

#include <vector>

#include <Eigen/Cholesky>

#include "sp2net/array_model.hpp"
#include "sp2net/spectrum.hpp"

namespace sp2net {

struct SparseConfig {
  double c_bound = 2.0;          // residual bound is c_bound * M * sigma_v^2
  int max_iterations = 5000;
  double primal_tol = 1e-6;      // relative
  double dual_tol = 1e-6;        // relative
  double penalty_rho = 1.0;      // initial ADMM penalty
  double sigma_floor = 1e-6;     // sigma_v below this is replaced by it
  bool record_trace = false;     // keep the l1 norm of feasible iterates

  void validate() const;
};

struct SparseSolution {
  ComplexVector coefficients;
  double residual_norm_sq = 0.0;  // ||x - A s||^2
  double bound_sq = 0.0;          // c_bound * M * sigma^2
  int iterations_used = 0;
  bool converged = false;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double final_rho = 0.0;
  std::vector<double> objective_trace;
};

double l1_norm(const ComplexVector& v);

/// Solves  min ||s||_1  s.t.  ||x - A s||_2^2 <= C M sigma^2  for complex s.
///
/// ADMM on the split  s = w,  A s = z,  z in Ball(x, sqrt(C M sigma^2)).
/// The s-update (I + A^H A)^{-1} is applied as I - A^H (I + A A^H)^{-1} A,
/// so only an M x M factorization is stored. Residual balancing doubles or
/// halves the penalty when primal and dual residuals differ by more than 10x.
/// The returned coefficients are the shrunk iterate w, nudged by a
/// minimum-norm correction onto the constraint ball when it lies slightly
/// outside.
class BpdnSolver {
 public:
  explicit BpdnSolver(ComplexMatrix manifold, SparseConfig cfg = {});

  SparseSolution solve(const ComplexVector& snapshot, double sigma_v) const;

  const ComplexMatrix& manifold() const { return manifold_; }
  const SparseConfig& config() const { return cfg_; }

 private:
  ComplexVector project_feasible(const ComplexVector& w, const ComplexVector& x, double radius) const;

  ComplexMatrix manifold_;
  SparseConfig cfg_;
  Eigen::LLT<ComplexMatrix> inner_;  // I + A A^H
  ComplexMatrix gram_pinv_;          // (A A^H)^+
};

SparseSolution solve_bpdn(const ComplexMatrix& manifold, const ComplexVector& snapshot,
                          double sigma_v, const SparseConfig& cfg = {});

/// Modulus of the recovered coefficients as a spectrum.
Spectrum sparse_spectrum(const SparseSolution& solution, const AngleGrid& grid);

}  // namespace sp2net
