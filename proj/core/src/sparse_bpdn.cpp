#include "sp2net/sparse_bpdn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace sp2net {

void SparseConfig::validate() const {
  if (!(c_bound > 0.0)) throw std::invalid_argument("SparseConfig: c_bound must be > 0");
  if (max_iterations < 1) throw std::invalid_argument("SparseConfig: max_iterations must be >= 1");
  if (!(primal_tol > 0.0) || !(dual_tol > 0.0)) {
    throw std::invalid_argument("SparseConfig: tolerances must be > 0");
  }
  if (!(penalty_rho > 0.0)) throw std::invalid_argument("SparseConfig: penalty_rho must be > 0");
  if (!(sigma_floor > 0.0)) throw std::invalid_argument("SparseConfig: sigma_floor must be > 0");
}

double l1_norm(const ComplexVector& v) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::abs(v[i]);
  return acc;
}

namespace {

// Complex soft-thresholding: shrink each modulus by tau, keep the phase.
void shrink(const ComplexVector& in, double tau, ComplexVector& out) {
  out.resize(in.size());
  for (Eigen::Index i = 0; i < in.size(); ++i) {
    const double mag = std::abs(in[i]);
    out[i] = mag > tau ? in[i] * ((mag - tau) / mag) : Complex(0.0, 0.0);
  }
}

// Projection of y onto {z : ||z - center|| <= radius}.
void project_ball(const ComplexVector& y, const ComplexVector& center, double radius,
                  ComplexVector& out) {
  out = y - center;
  const double n = out.norm();
  if (n > radius) out *= radius / n;
  out += center;
}

}  // namespace

BpdnSolver::BpdnSolver(ComplexMatrix manifold, SparseConfig cfg)
    : manifold_(std::move(manifold)), cfg_(cfg) {
  cfg_.validate();
  if (manifold_.rows() == 0 || manifold_.cols() == 0) {
    throw std::invalid_argument("BpdnSolver: empty manifold matrix");
  }
  const ComplexMatrix gram = manifold_ * manifold_.adjoint();
  const auto m = manifold_.rows();
  inner_.compute(ComplexMatrix::Identity(m, m) + gram);

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(gram);
  const Eigen::VectorXd& lam = eig.eigenvalues();
  const double cutoff = 1e-12 * std::max(1.0, lam.maxCoeff());
  Eigen::VectorXd inv = lam;
  for (Eigen::Index i = 0; i < inv.size(); ++i) inv[i] = lam[i] > cutoff ? 1.0 / lam[i] : 0.0;
  gram_pinv_ = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().adjoint();
}

ComplexVector BpdnSolver::project_feasible(const ComplexVector& w, const ComplexVector& x,
                                           double radius) const {
  const ComplexVector resid = x - manifold_ * w;
  const double n = resid.norm();
  if (n <= radius) return w;
  // Minimum-norm correction moving the residual onto the ball surface.
  const ComplexVector excess = resid * (1.0 - radius / n);
  return w + manifold_.adjoint() * (gram_pinv_ * excess);
}

SparseSolution BpdnSolver::solve(const ComplexVector& x, double sigma_v) const {
  const auto& A = manifold_;
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  if (x.size() != m) throw std::invalid_argument("solve_bpdn: snapshot length != manifold rows");
  if (!(sigma_v >= 0.0) || !std::isfinite(sigma_v)) {
    throw std::invalid_argument("solve_bpdn: sigma_v must be finite and >= 0");
  }
  const double sigma = std::max(sigma_v, cfg_.sigma_floor);
  const double bound_sq = cfg_.c_bound * static_cast<double>(m) * sigma * sigma;
  const double radius = std::sqrt(bound_sq);

  SparseSolution sol;
  sol.bound_sq = bound_sq;
  sol.final_rho = cfg_.penalty_rho;

  // s = 0 is feasible, hence optimal.
  if (x.squaredNorm() <= bound_sq) {
    sol.coefficients = ComplexVector::Zero(n);
    sol.residual_norm_sq = x.squaredNorm();
    sol.converged = true;
    return sol;
  }

  constexpr double kAbsTol = 1e-12;
  constexpr int kAdaptEvery = 20;
  double rho = cfg_.penalty_rho;

  ComplexVector coef = ComplexVector::Zero(n);   // s
  ComplexVector sparse = ComplexVector::Zero(n); // w, shrunk copy of s
  ComplexVector fit(m);                          // z, constrained copy of A s
  project_ball(ComplexVector::Zero(m), x, radius, fit);
  ComplexVector dual_sparse = ComplexVector::Zero(n);
  ComplexVector dual_fit = ComplexVector::Zero(m);

  ComplexVector rhs(n), a_coef(m), prev_sparse(n), prev_fit(m), tmp_n(n);
  const double sqrt_pri = std::sqrt(static_cast<double>(n + m));
  const double sqrt_dual = std::sqrt(static_cast<double>(n));

  int it = 0;
  for (it = 1; it <= cfg_.max_iterations; ++it) {
    // s-update: (I + A^H A) s = (w - u1) + A^H (z - u2)
    rhs = sparse - dual_sparse;
    rhs.noalias() += A.adjoint() * (fit - dual_fit);
    coef = rhs;
    coef.noalias() -= A.adjoint() * inner_.solve(A * rhs);
    a_coef.noalias() = A * coef;

    prev_sparse = sparse;
    prev_fit = fit;
    shrink(coef + dual_sparse, 1.0 / rho, sparse);
    project_ball(a_coef + dual_fit, x, radius, fit);

    dual_sparse += coef - sparse;
    dual_fit += a_coef - fit;

    const double primal = std::sqrt((coef - sparse).squaredNorm() + (a_coef - fit).squaredNorm());
    tmp_n = sparse - prev_sparse;
    tmp_n.noalias() += A.adjoint() * (fit - prev_fit);
    const double dual = rho * tmp_n.norm();

    const double eps_pri =
        sqrt_pri * kAbsTol +
        cfg_.primal_tol * std::max(std::sqrt(coef.squaredNorm() + a_coef.squaredNorm()),
                                   std::sqrt(sparse.squaredNorm() + fit.squaredNorm()));
    tmp_n = dual_sparse;
    tmp_n.noalias() += A.adjoint() * dual_fit;
    const double eps_dual = sqrt_dual * kAbsTol + cfg_.dual_tol * rho * tmp_n.norm();

    sol.primal_residual = primal;
    sol.dual_residual = dual;

    if (cfg_.record_trace) {
      sol.objective_trace.push_back(l1_norm(project_feasible(sparse, x, radius)));
    }

    if (primal <= eps_pri && dual <= eps_dual) {
      sol.converged = true;
      break;
    }

    if (it % kAdaptEvery != 0) continue;
    if (primal > 10.0 * dual) {
      rho *= 2.0;
      dual_sparse *= 0.5;
      dual_fit *= 0.5;
    } else if (dual > 10.0 * primal) {
      rho *= 0.5;
      dual_sparse *= 2.0;
      dual_fit *= 2.0;
    }
  }

  sol.iterations_used = std::min(it, cfg_.max_iterations);
  sol.final_rho = rho;
  sol.coefficients = project_feasible(sparse, x, radius);
  sol.residual_norm_sq = (x - A * sol.coefficients).squaredNorm();
  if (sol.converged && sol.residual_norm_sq > bound_sq * (1.0 + 1e-6)) {
    // Residual outside the range of A; the correction could not restore
    // feasibility.
    sol.converged = false;
  }
  return sol;
}

SparseSolution solve_bpdn(const ComplexMatrix& manifold, const ComplexVector& snapshot,
                          double sigma_v, const SparseConfig& cfg) {
  return BpdnSolver(manifold, cfg).solve(snapshot, sigma_v);
}

Spectrum sparse_spectrum(const SparseSolution& solution, const AngleGrid& grid) {
  if (static_cast<std::size_t>(solution.coefficients.size()) != grid.size()) {
    throw std::invalid_argument("sparse_spectrum: coefficient count != grid size");
  }
  Spectrum out{grid, std::vector<double>(grid.size()), "sparse"};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.scores[i] = std::abs(solution.coefficients[static_cast<Eigen::Index>(i)]);
  }
  return out;
}

}  // namespace sp2net
