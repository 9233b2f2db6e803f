#include <algorithm>
#include <cmath>
#include <limits>

#include "ldl.hpp"
#include "lemsim/common.hpp"
#include "lemsim/qp.hpp"

namespace lemsim::qp {

namespace {

constexpr double kPrimalReg = 1e-8;
constexpr double kDualReg = 1e-8;
constexpr int kRefinePasses = 4;
constexpr double kStepFraction = 0.995;

double max_step(const Eigen::VectorXd& value, const Eigen::VectorXd& delta, const std::vector<int>& idx,
                double sign = 1.0) {
  double alpha = 1.0;
  for (int i : idx) {
    const double d = sign * delta[i];
    if (d < 0.0) alpha = std::min(alpha, -value[i] / d);
  }
  return alpha;
}

}  // namespace

struct InteriorPointSolver::Impl {
  using Kkt = Eigen::SparseMatrix<double, Eigen::ColMajor>;

  IpmOptions options;
  int n = 0;
  int m = 0;
  std::vector<int> fixed;       // variables with lower == upper, pinned by extra rows
  std::vector<int> has_lower;   // excludes fixed
  std::vector<int> has_upper;
  Kkt kkt;                      // lower triangle
  std::vector<int> diag_slot;   // valuePtr index of every diagonal entry
  detail::QuasiDefiniteLdl ldl;
  Eigen::SparseMatrix<double> a_t;

  explicit Impl(const BoxQp& s, IpmOptions opt) : options(opt) {
    n = s.variables();
    m = s.equalities();
    if (s.eq_matrix.rows() != m || s.eq_matrix.cols() != n || s.hessian_diag.size() != n || s.lower.size() != n ||
        s.upper.size() != n) {
      throw Error(ErrorKind::InvalidArgument, "inconsistent QP dimensions");
    }
    for (int i = 0; i < n; ++i) {
      const bool lo = std::isfinite(s.lower[i]);
      const bool up = std::isfinite(s.upper[i]);
      if (lo && up && s.upper[i] < s.lower[i]) throw Error(ErrorKind::Infeasible, "empty variable bound");
      if (lo && up && s.upper[i] - s.lower[i] <= 1e-12 * std::max(1.0, std::abs(s.lower[i]))) {
        fixed.push_back(i);
        continue;
      }
      if (lo) has_lower.push_back(i);
      if (up) has_upper.push_back(i);
    }
    const int dim = n + m + static_cast<int>(fixed.size());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(dim + s.eq_matrix.nonZeros() + fixed.size());
    for (int i = 0; i < dim; ++i) trip.emplace_back(i, i, 1.0);
    for (int k = 0; k < s.eq_matrix.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(s.eq_matrix, k); it; ++it) {
        trip.emplace_back(n + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
      }
    }
    for (std::size_t k = 0; k < fixed.size(); ++k) trip.emplace_back(n + m + static_cast<int>(k), fixed[k], 1.0);
    kkt.resize(dim, dim);
    kkt.setFromTriplets(trip.begin(), trip.end());
    kkt.makeCompressed();
    diag_slot.assign(dim, -1);
    for (int c = 0; c < dim; ++c) {
      for (int p = kkt.outerIndexPtr()[c]; p < kkt.outerIndexPtr()[c + 1]; ++p) {
        if (kkt.innerIndexPtr()[p] == c) diag_slot[c] = p;
      }
    }
    std::vector<int> sign(dim, -1);
    std::fill(sign.begin(), sign.begin() + n, 1);
    ldl.analyze(kkt, std::move(sign));
  }

  // K_true * [dx; w] where K_true has no regularisation.
  Eigen::VectorXd kkt_times(const Eigen::VectorXd& hdiag, const BoxQp& s, const Eigen::VectorXd& sol) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(sol.size());
    const auto dx = sol.head(n);
    const auto w = sol.segment(n, m);
    out.head(n) = hdiag.cwiseProduct(dx) + s.eq_matrix.transpose() * w;
    out.segment(n, m) = s.eq_matrix * dx;
    for (std::size_t k = 0; k < fixed.size(); ++k) {
      out[fixed[k]] += sol[n + m + k];
      out[n + m + k] = dx[fixed[k]];
    }
    return out;
  }

  Eigen::VectorXd solve_kkt(const Eigen::VectorXd& hdiag, const BoxQp& s, const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd sol = ldl.solve(rhs);
    const double target = 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>());
    for (int pass = 0; pass < kRefinePasses; ++pass) {
      const Eigen::VectorXd r = rhs - kkt_times(hdiag, s, sol);
      if (r.lpNorm<Eigen::Infinity>() <= target) break;
      sol += ldl.solve(r);
    }
    return sol;
  }

  IpmResult run(const BoxQp& s) {
    if (s.variables() != n || s.equalities() != m) throw Error(ErrorKind::InvalidArgument, "QP layout changed");
    const int nf = static_cast<int>(fixed.size());
    const int nbound = static_cast<int>(has_lower.size() + has_upper.size());

    Eigen::VectorXd x(n), y = Eigen::VectorXd::Zero(m), yf = Eigen::VectorXd::Zero(nf);
    Eigen::VectorXd zl = Eigen::VectorXd::Zero(n), zu = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sl = Eigen::VectorXd::Zero(n), su = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      const double lo = s.lower[i], up = s.upper[i];
      const bool fl = std::isfinite(lo), fu = std::isfinite(up);
      if (fl && fu) {
        const double w = up - lo;
        x[i] = std::clamp(0.0, lo + 0.1 * w, up - 0.1 * w);
        if (w <= 1e-12 * std::max(1.0, std::abs(lo))) x[i] = lo;
      } else if (fl) {
        x[i] = std::max(0.0, lo + 1.0);
      } else if (fu) {
        x[i] = std::min(0.0, up - 1.0);
      } else {
        x[i] = 0.0;
      }
    }
    for (int i : has_lower) zl[i] = 1.0;
    for (int i : has_upper) zu[i] = 1.0;

    const double b_norm = s.eq_rhs.size() ? s.eq_rhs.lpNorm<Eigen::Infinity>() : 0.0;
    const double q_norm = s.linear.size() ? s.linear.lpNorm<Eigen::Infinity>() : 0.0;

    IpmResult res;
    Eigen::VectorXd hdiag(n), rhs(n + m + nf), rd(n), rp(m), rf(nf);
    Eigen::VectorXd dx(n), dzl(n), dzu(n), rcl(n), rcu(n);
    for (int iter = 0; iter <= options.max_iterations; ++iter) {
      for (int i : has_lower) sl[i] = x[i] - s.lower[i];
      for (int i : has_upper) su[i] = s.upper[i] - x[i];

      rd = s.hessian_diag.cwiseProduct(x) + s.linear - s.eq_matrix.transpose() * y - zl + zu;
      for (int k = 0; k < nf; ++k) rd[fixed[k]] -= yf[k];
      rp = s.eq_matrix * x - s.eq_rhs;
      for (int k = 0; k < nf; ++k) rf[k] = x[fixed[k]] - s.lower[fixed[k]];

      double gap = 0.0;
      for (int i : has_lower) gap += sl[i] * zl[i];
      for (int i : has_upper) gap += su[i] * zu[i];
      const double mu = nbound ? gap / nbound : 0.0;
      const double objective = 0.5 * x.dot(s.hessian_diag.cwiseProduct(x)) + s.linear.dot(x);

      res.primal_residual = std::max(rp.size() ? rp.lpNorm<Eigen::Infinity>() : 0.0,
                                     rf.size() ? rf.lpNorm<Eigen::Infinity>() : 0.0);
      res.dual_residual = rd.size() ? rd.lpNorm<Eigen::Infinity>() : 0.0;
      res.gap = gap;
      res.objective = objective;
      res.iterations = iter;
      if (res.primal_residual <= options.tolerance * (1.0 + b_norm) &&
          res.dual_residual <= options.tolerance * (1.0 + q_norm) &&
          gap <= options.tolerance * (1.0 + std::abs(objective))) {
        res.converged = true;
        break;
      }
      if (iter == options.max_iterations) break;

      // Newton matrix.
      hdiag = s.hessian_diag;
      for (int i : has_lower) hdiag[i] += zl[i] / sl[i];
      for (int i : has_upper) hdiag[i] += zu[i] / su[i];
      double* val = kkt.valuePtr();
      for (int i = 0; i < n; ++i) val[diag_slot[i]] = hdiag[i] + kPrimalReg;
      for (int r = n; r < n + m + nf; ++r) val[diag_slot[r]] = -kDualReg;
      ldl.factorize(kkt);

      auto direction = [&](double sigma_mu, const Eigen::VectorXd* corr_dx, const Eigen::VectorXd* corr_dzl,
                           const Eigen::VectorXd* corr_dzu) {
        rcl.setZero();
        rcu.setZero();
        for (int i : has_lower) {
          rcl[i] = -sl[i] * zl[i] + sigma_mu;
          if (corr_dx) rcl[i] -= (*corr_dx)[i] * (*corr_dzl)[i];
        }
        for (int i : has_upper) {
          rcu[i] = -su[i] * zu[i] + sigma_mu;
          if (corr_dx) rcu[i] += (*corr_dx)[i] * (*corr_dzu)[i];
        }
        rhs.head(n) = -rd;
        for (int i : has_lower) rhs[i] += rcl[i] / sl[i];
        for (int i : has_upper) rhs[i] -= rcu[i] / su[i];
        rhs.segment(n, m) = -rp;
        rhs.tail(nf) = -rf;
        const Eigen::VectorXd sol = solve_kkt(hdiag, s, rhs);
        dx = sol.head(n);
        dzl.setZero();
        dzu.setZero();
        for (int i : has_lower) dzl[i] = (rcl[i] - zl[i] * dx[i]) / sl[i];
        for (int i : has_upper) dzu[i] = (rcu[i] + zu[i] * dx[i]) / su[i];
        return Eigen::VectorXd(-sol.tail(m + nf));
      };

      // Predictor.
      direction(0.0, nullptr, nullptr, nullptr);
      double alpha = std::min({max_step(sl, dx, has_lower), max_step(su, dx, has_upper, -1.0),
                               max_step(zl, dzl, has_lower), max_step(zu, dzu, has_upper)});
      double sigma = 0.0;
      if (nbound) {
        double gap_aff = 0.0;
        for (int i : has_lower) gap_aff += (sl[i] + alpha * dx[i]) * (zl[i] + alpha * dzl[i]);
        for (int i : has_upper) gap_aff += (su[i] - alpha * dx[i]) * (zu[i] + alpha * dzu[i]);
        sigma = std::pow(gap_aff / gap, 3);
      }
      const Eigen::VectorXd dx_aff = dx, dzl_aff = dzl, dzu_aff = dzu;

      // Corrector.
      const Eigen::VectorXd dy_all = direction(sigma * mu, &dx_aff, &dzl_aff, &dzu_aff);
      if (!dx.allFinite() || !dy_all.allFinite() || !dzl.allFinite() || !dzu.allFinite()) break;
      alpha = std::min({max_step(sl, dx, has_lower), max_step(su, dx, has_upper, -1.0), max_step(zl, dzl, has_lower),
                        max_step(zu, dzu, has_upper)});
      alpha = std::min(1.0, kStepFraction * alpha);

      x += alpha * dx;
      y += alpha * dy_all.head(m);
      yf += alpha * dy_all.tail(nf);
      zl += alpha * dzl;
      zu += alpha * dzu;
      for (int k = 0; k < nf; ++k) x[fixed[k]] = s.lower[fixed[k]];
    }
    res.x = std::move(x);
    res.eq_dual = std::move(y);
    res.lower_dual = std::move(zl);
    res.upper_dual = std::move(zu);
    return res;
  }
};

InteriorPointSolver::InteriorPointSolver(const BoxQp& structure, IpmOptions options)
    : impl_(std::make_unique<Impl>(structure, options)) {}
InteriorPointSolver::~InteriorPointSolver() = default;
InteriorPointSolver::InteriorPointSolver(InteriorPointSolver&&) noexcept = default;
InteriorPointSolver& InteriorPointSolver::operator=(InteriorPointSolver&&) noexcept = default;

IpmResult InteriorPointSolver::solve(const BoxQp& problem) { return impl_->run(problem); }

}  // namespace lemsim::qp
