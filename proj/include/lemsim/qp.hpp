#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace lemsim::qp {

/// minimise   1/2 x' diag(h) x + q' x
/// subject to A x = b,  lower <= x <= upper   (infinite bounds allowed)
struct BoxQp {
  Eigen::VectorXd hessian_diag;
  Eigen::VectorXd linear;
  Eigen::SparseMatrix<double> eq_matrix;
  Eigen::VectorXd eq_rhs;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int variables() const { return static_cast<int>(linear.size()); }
  int equalities() const { return static_cast<int>(eq_rhs.size()); }
};

struct IpmOptions {
  double tolerance = 1e-10;
  int max_iterations = 80;
};

struct IpmResult {
  Eigen::VectorXd x;
  Eigen::VectorXd eq_dual;  // d(optimal value)/d(eq_rhs)
  Eigen::VectorXd lower_dual;
  Eigen::VectorXd upper_dual;
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Mehrotra predictor-corrector interior-point method. The KKT sparsity
/// pattern is analysed once at construction; solve() may be called
/// repeatedly with problems that share the constraint matrix and bound
/// layout (only h, q, b and finite bound values may change).
class InteriorPointSolver {
 public:
  explicit InteriorPointSolver(const BoxQp& structure, IpmOptions options = {});
  ~InteriorPointSolver();
  InteriorPointSolver(InteriorPointSolver&&) noexcept;
  InteriorPointSolver& operator=(InteriorPointSolver&&) noexcept;

  IpmResult solve(const BoxQp& problem);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

inline IpmResult solve_box_qp(const BoxQp& problem, IpmOptions options = {}) {
  InteriorPointSolver solver(problem, options);
  return solver.solve(problem);
}

/// minimise 1/2 m' Q m + c' m  subject to m >= 0, with Q symmetric PSD.
/// Primal active-set (free/bound partition) method; every subproblem is a
/// dense solve on the free block, so multipliers come straight from the KKT
/// system at the final active set.
struct NonnegativeQpResult {
  Eigen::VectorXd solution;
  std::vector<int> free_set;
  bool degenerate = false;  // free-block matrix was rank deficient
  int iterations = 0;
  bool converged = false;
};

NonnegativeQpResult solve_nonnegative_qp(const Eigen::MatrixXd& q, const Eigen::VectorXd& c,
                                         double tolerance = 1e-11, int max_iterations = 500);

}  // namespace lemsim::qp
