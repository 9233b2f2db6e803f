#include <algorithm>
#include <cmath>

#include "lemsim/qp.hpp"

namespace lemsim::qp {

namespace {

Eigen::MatrixXd sub_block(const Eigen::MatrixXd& q, const std::vector<int>& idx) {
  const int k = static_cast<int>(idx.size());
  Eigen::MatrixXd out(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) out(i, j) = q(idx[i], idx[j]);
  }
  return out;
}

bool rank_deficient(const Eigen::MatrixXd& block) {
  if (block.rows() == 0) return false;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(block);
  lu.setThreshold(1e-10);
  return lu.rank() < block.rows();
}

}  // namespace

NonnegativeQpResult solve_nonnegative_qp(const Eigen::MatrixXd& q, const Eigen::VectorXd& c, double tolerance,
                                         int max_iterations) {
  const int n = static_cast<int>(c.size());
  NonnegativeQpResult res;
  res.solution = Eigen::VectorXd::Zero(n);
  std::vector<char> in_free(n, 0);
  std::vector<int> free_set;
  Eigen::VectorXd& m = res.solution;

  // Gradient scale for the optimality test.
  const double scale = 1.0 + (n ? c.lpNorm<Eigen::Infinity>() : 0.0);

  for (int iter = 0; iter < max_iterations; ++iter) {
    res.iterations = iter + 1;
    const Eigen::VectorXd grad = q * m + c;
    int enter = -1;
    double most_negative = -tolerance * scale;
    for (int i = 0; i < n; ++i) {
      if (!in_free[i] && grad[i] < most_negative) {
        most_negative = grad[i];
        enter = i;
      }
    }
    if (enter < 0) {
      res.converged = true;
      break;
    }
    free_set.push_back(enter);
    in_free[enter] = 1;

    // Inner loop: solve on the free block, step back while any free variable
    // would turn negative.
    for (int inner = 0; inner < n + 1; ++inner) {
      const int k = static_cast<int>(free_set.size());
      Eigen::VectorXd rhs(k);
      for (int i = 0; i < k; ++i) rhs[i] = -c[free_set[i]];
      const Eigen::MatrixXd block = sub_block(q, free_set);
      Eigen::VectorXd trial;
      if (rank_deficient(block)) {
        res.degenerate = true;
        trial = block.completeOrthogonalDecomposition().solve(rhs);
      } else {
        trial = block.ldlt().solve(rhs);
      }
      bool all_positive = true;
      for (int i = 0; i < k; ++i) {
        if (trial[i] <= 0.0) all_positive = false;
      }
      if (all_positive) {
        for (int i = 0; i < k; ++i) m[free_set[i]] = trial[i];
        break;
      }
      double alpha = 1.0;
      for (int i = 0; i < k; ++i) {
        const double cur = m[free_set[i]];
        if (trial[i] <= 0.0 && cur - trial[i] > 0.0) alpha = std::min(alpha, cur / (cur - trial[i]));
      }
      for (int i = 0; i < k; ++i) m[free_set[i]] += alpha * (trial[i] - m[free_set[i]]);
      std::vector<int> kept;
      for (int i = 0; i < k; ++i) {
        const int v = free_set[i];
        if (m[v] <= 1e-14 * scale) {
          m[v] = 0.0;
          in_free[v] = 0;
        } else {
          kept.push_back(v);
        }
      }
      free_set.swap(kept);
      if (free_set.empty()) break;
    }
  }

  // Weakly active constraints whose rows are dependent on the free block admit
  // alternative multipliers.
  if (res.converged && !res.degenerate && !free_set.empty()) {
    const Eigen::VectorXd grad = q * m + c;
    for (int i = 0; i < n && !res.degenerate; ++i) {
      if (in_free[i] || std::abs(grad[i]) > 1e-9 * scale) continue;
      auto extended = free_set;
      extended.push_back(i);
      if (rank_deficient(sub_block(q, extended))) res.degenerate = true;
    }
  }
  res.free_set = free_set;
  std::sort(res.free_set.begin(), res.free_set.end());
  return res;
}

}  // namespace lemsim::qp
