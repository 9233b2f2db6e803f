#include "ldl.hpp"

#include <Eigen/OrderingMethods>

#include "lemsim/common.hpp"

namespace lemsim::detail {

namespace {

constexpr double kPivotFloor = 1e-13;
constexpr double kPivotBump = 1e-7;

}  // namespace

void QuasiDefiniteLdl::analyze(const Eigen::SparseMatrix<double>& lower, std::vector<int> sign) {
  n_ = static_cast<int>(lower.rows());
  if (static_cast<int>(sign.size()) != n_) throw Error(ErrorKind::InvalidArgument, "ldl: sign vector size");

  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> amd;
  Eigen::AMDOrdering<int> ordering;
  Eigen::SparseMatrix<double> sym = lower.selfadjointView<Eigen::Lower>();
  ordering(sym, amd);
  iperm_.assign(amd.indices().data(), amd.indices().data() + n_);
  perm_.assign(n_, 0);
  for (int k = 0; k < n_; ++k) perm_[iperm_[k]] = k;
  sign_.assign(n_, 1);
  for (int i = 0; i < n_; ++i) sign_[perm_[i]] = sign[i];

  // Permuted upper triangle.
  std::vector<int> count(n_ + 1, 0);
  for (int c = 0; c < lower.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(lower, c); it; ++it) {
      const int a = perm_[it.row()], b = perm_[it.col()];
      ++count[std::max(a, b) + 1];
    }
  }
  ap_.assign(n_ + 1, 0);
  for (int k = 0; k < n_; ++k) ap_[k + 1] = ap_[k] + count[k + 1];
  ai_.assign(ap_[n_], 0);
  ax_.assign(ap_[n_], 0.0);
  slot_.assign(lower.nonZeros(), 0);
  std::vector<int> next(ap_.begin(), ap_.end() - 1);
  int idx = 0;
  for (int c = 0; c < lower.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(lower, c); it; ++it, ++idx) {
      const int a = perm_[it.row()], b = perm_[it.col()];
      const int col = std::max(a, b);
      slot_[idx] = next[col];
      ai_[next[col]++] = std::min(a, b);
    }
  }

  // Elimination tree and column counts of L.
  etree_.assign(n_, -1);
  std::vector<int> lnz(n_, 0), work(n_, -1);
  for (int j = 0; j < n_; ++j) {
    work[j] = j;
    for (int p = ap_[j]; p < ap_[j + 1]; ++p) {
      int i = ai_[p];
      while (work[i] != j) {
        if (etree_[i] == -1) etree_[i] = j;
        ++lnz[i];
        work[i] = j;
        i = etree_[i];
      }
    }
  }
  lp_.assign(n_ + 1, 0);
  for (int i = 0; i < n_; ++i) lp_[i + 1] = lp_[i] + lnz[i];
  li_.assign(lp_[n_], 0);
  lx_.assign(lp_[n_], 0.0);
  d_.assign(n_, 0.0);
  dinv_.assign(n_, 0.0);
}

void QuasiDefiniteLdl::factorize(const Eigen::SparseMatrix<double>& lower) {
  const double* v = lower.valuePtr();
  for (std::size_t k = 0; k < slot_.size(); ++k) ax_[slot_[k]] = v[k];

  std::vector<double> y(n_, 0.0);
  std::vector<char> marked(n_, 0);
  std::vector<int> pattern, stack;
  pattern.reserve(n_);
  std::vector<int> fill(lp_.begin(), lp_.end() - 1);
  bumped_ = 0;
  for (int k = 0; k < n_; ++k) {
    pattern.clear();
    d_[k] = 0.0;
    for (int p = ap_[k]; p < ap_[k + 1]; ++p) {
      const int i = ai_[p];
      if (i == k) {
        d_[k] += ax_[p];
        continue;
      }
      y[i] += ax_[p];
      if (marked[i]) continue;
      stack.clear();
      for (int j = i; j != -1 && j < k && !marked[j]; j = etree_[j]) {
        marked[j] = 1;
        stack.push_back(j);
      }
      while (!stack.empty()) {
        pattern.push_back(stack.back());
        stack.pop_back();
      }
    }
    for (auto it = pattern.rbegin(); it != pattern.rend(); ++it) {
      const int c = *it;
      const double yc = y[c];
      for (int j = lp_[c]; j < fill[c]; ++j) y[li_[j]] -= lx_[j] * yc;
      const double lkc = yc * dinv_[c];
      li_[fill[c]] = k;
      lx_[fill[c]] = lkc;
      ++fill[c];
      d_[k] -= yc * lkc;
      y[c] = 0.0;
      marked[c] = 0;
    }
    if (sign_[k] * d_[k] < kPivotFloor) {
      d_[k] = sign_[k] * kPivotBump;
      ++bumped_;
    }
    dinv_[k] = 1.0 / d_[k];
  }
}

Eigen::VectorXd QuasiDefiniteLdl::solve(const Eigen::VectorXd& rhs) const {
  std::vector<double> x(n_);
  for (int i = 0; i < n_; ++i) x[perm_[i]] = rhs[i];
  for (int i = 0; i < n_; ++i) {
    for (int j = lp_[i]; j < lp_[i + 1]; ++j) x[li_[j]] -= lx_[j] * x[i];
  }
  for (int i = 0; i < n_; ++i) x[i] *= dinv_[i];
  for (int i = n_ - 1; i >= 0; --i) {
    for (int j = lp_[i]; j < lp_[i + 1]; ++j) x[i] -= lx_[j] * x[li_[j]];
  }
  Eigen::VectorXd out(n_);
  for (int i = 0; i < n_; ++i) out[i] = x[perm_[i]];
  return out;
}

}  // namespace lemsim::detail
