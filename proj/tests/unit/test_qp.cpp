#include <doctest.h>

#include "lemsim/qp.hpp"

using namespace lemsim::qp;

namespace {

BoxQp small_problem(double rhs) {
  BoxQp p;
  p.hessian_diag = Eigen::Vector2d(2.0, 2.0);
  p.linear = Eigen::Vector2d(-6.0, 2.0);
  p.eq_matrix.resize(1, 2);
  p.eq_matrix.insert(0, 0) = 1.0;
  p.eq_matrix.insert(0, 1) = 1.0;
  p.eq_rhs = Eigen::VectorXd::Constant(1, rhs);
  p.lower = Eigen::Vector2d(0.0, 0.0);
  p.upper = Eigen::Vector2d(1.5, 1.5);
  return p;
}

}  // namespace

TEST_SUITE("qp") {
  // (x1-3)^2 + (x2+1)^2 on x1 + x2 = b, 0 <= x <= 1.5: x = (b, 0), value b^2 - 6b.
  TEST_CASE("interior point on a hand-solved problem") {
    const auto r = solve_box_qp(small_problem(1.0));
    REQUIRE(r.converged);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(r.x[1] == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(r.objective == doctest::Approx(-5.0).epsilon(1e-8));
    CHECK(r.eq_dual[0] == doctest::Approx(-4.0).epsilon(1e-7));
  }

  TEST_CASE("solver object is reusable across right-hand sides") {
    auto p = small_problem(1.0);
    InteriorPointSolver solver(p);
    const auto a = solver.solve(p);
    p.eq_rhs[0] = 0.5;
    const auto b = solver.solve(p);
    REQUIRE(b.converged);
    CHECK(b.x[0] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(b.eq_dual[0] == doctest::Approx(-5.0).epsilon(1e-7));
    p.eq_rhs[0] = 1.0;
    const auto c = solver.solve(p);
    CHECK(c.x[0] == doctest::Approx(a.x[0]).epsilon(1e-10));
  }

  TEST_CASE("infeasible bounds are not reported as converged") {
    auto p = small_problem(4.0);
    const auto r = solve_box_qp(p);
    CHECK_FALSE(r.converged);
  }

  TEST_CASE("non-negative QP picks the right active set") {
    Eigen::Matrix2d q;
    q << 2.0, 1.0, 1.0, 2.0;
    const auto r = solve_nonnegative_qp(q, Eigen::Vector2d(-1.0, 1.0));
    REQUIRE(r.converged);
    CHECK(r.solution[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.solution[1] == 0.0);
    CHECK(r.free_set == std::vector<int>{0});
    CHECK_FALSE(r.degenerate);
  }

  TEST_CASE("unconstrained optimum inside the orthant") {
    Eigen::Matrix2d q;
    q << 2.0, 1.0, 1.0, 2.0;
    const auto r = solve_nonnegative_qp(q, Eigen::Vector2d(-3.0, -3.0));
    REQUIRE(r.converged);
    CHECK(r.solution[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.solution[1] == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("rank-deficient Q still returns an optimal point") {
    Eigen::Matrix2d q;
    q << 1.0, 1.0, 1.0, 1.0;
    const auto r = solve_nonnegative_qp(q, Eigen::Vector2d(-1.0, -1.0));
    REQUIRE(r.converged);
    CHECK(r.solution.minCoeff() >= 0.0);
    CHECK(r.solution.sum() == doctest::Approx(1.0).epsilon(1e-10));
  }
}
