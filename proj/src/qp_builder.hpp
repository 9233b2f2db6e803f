#pragma once

#include <limits>
#include <vector>

#include <Eigen/Sparse>

#include "lemsim/qp.hpp"

namespace lemsim::detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Incremental assembly of a BoxQp.
class QpBuilder {
 public:
  int add_var(double hess, double lin, double lo, double up) {
    hess_.push_back(hess);
    lin_.push_back(lin);
    lo_.push_back(lo);
    up_.push_back(up);
    return static_cast<int>(lin_.size()) - 1;
  }
  int add_row(double rhs) {
    rhs_.push_back(rhs);
    return static_cast<int>(rhs_.size()) - 1;
  }
  void coef(int row, int var, double value) { trip_.emplace_back(row, var, value); }
  void set_linear(int var, double lin) { lin_[var] = lin; }
  void set_hessian(int var, double hess) { hess_[var] = hess; }
  void set_rhs(int row, double rhs) { rhs_[row] = rhs; }
  double linear(int var) const { return lin_[var]; }
  double rhs(int row) const { return rhs_[row]; }
  int vars() const { return static_cast<int>(lin_.size()); }
  int rows() const { return static_cast<int>(rhs_.size()); }

  qp::BoxQp build() const {
    qp::BoxQp p;
    const int n = vars();
    const int m = rows();
    p.hessian_diag = Eigen::Map<const Eigen::VectorXd>(hess_.data(), n);
    p.linear = Eigen::Map<const Eigen::VectorXd>(lin_.data(), n);
    p.lower = Eigen::Map<const Eigen::VectorXd>(lo_.data(), n);
    p.upper = Eigen::Map<const Eigen::VectorXd>(up_.data(), n);
    p.eq_rhs = Eigen::Map<const Eigen::VectorXd>(rhs_.data(), m);
    p.eq_matrix.resize(m, n);
    p.eq_matrix.setFromTriplets(trip_.begin(), trip_.end());
    p.eq_matrix.makeCompressed();
    return p;
  }

 private:
  std::vector<double> hess_, lin_, lo_, up_, rhs_;
  std::vector<Eigen::Triplet<double>> trip_;
};

}  // namespace lemsim::detail
