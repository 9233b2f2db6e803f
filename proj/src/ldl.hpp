#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace lemsim::detail {

/// LDL' of a symmetric quasi-definite matrix (positive block first, negative
/// block after). Pivots with the wrong sign or too close to zero are replaced
/// by a small value of the expected sign, so the factorisation never breaks
/// down; callers recover accuracy with iterative refinement.
class QuasiDefiniteLdl {
 public:
  /// `lower` holds the lower triangle including every diagonal entry.
  /// `sign[i]` is +1 or -1, the expected sign of pivot i.
  void analyze(const Eigen::SparseMatrix<double>& lower, std::vector<int> sign);
  /// Numeric factorisation; values must follow the analysed pattern.
  void factorize(const Eigen::SparseMatrix<double>& lower);
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  int regularized_pivots() const { return bumped_; }

 private:
  int n_ = 0;
  std::vector<int> perm_;   // new index of original index
  std::vector<int> iperm_;  // original index of new index
  std::vector<int> sign_;   // by new index
  // Permuted upper triangle (CSC) and the slot each original value lands in.
  std::vector<int> ap_, ai_;
  std::vector<double> ax_;
  std::vector<int> slot_;
  std::vector<int> etree_, lp_, li_;
  std::vector<double> lx_, d_, dinv_;
  int bumped_ = 0;
};

}  // namespace lemsim::detail
