#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "hapto/mms.hpp"

using namespace hapto;

TEST(CosineMode, JetMatchesFiniteDifferences) {
  const CosineMode m{0.1, 0.4, 0.2, 2, 1, 0.7};
  const double x = 0.31, y = 0.57, t = 0.2, lx = 1.3, ly = 0.9, d = 1e-4;
  const auto j = m.eval(x, y, t, lx, ly);
  auto f = [&](double xx, double yy, double tt) { return m.value(xx, yy, tt, lx, ly); };
  EXPECT_NEAR(j.dt, (f(x, y, t + d) - f(x, y, t - d)) / (2 * d), 1e-7);
  EXPECT_NEAR(j.dx, (f(x + d, y, t) - f(x - d, y, t)) / (2 * d), 1e-7);
  EXPECT_NEAR(j.dy, (f(x, y + d, t) - f(x, y - d, t)) / (2 * d), 1e-7);
  const double lap = (f(x + d, y, t) + f(x - d, y, t) + f(x, y + d, t) + f(x, y - d, t) - 4 * f(x, y, t)) / (d * d);
  EXPECT_NEAR(j.laplacian, lap, 1e-4);
}

TEST(Sources, EquilibriumCaseIsUnforced) {
  const ManufacturedCase c = equilibrium_case();
  for (double x : {0.1, 0.5, 0.9}) {
    const Sources s = manufactured_sources(c, c.params, x, 0.3, 0.05);
    EXPECT_EQ(s.dcc, 0.0);
    EXPECT_EQ(s.csc, 0.0);
    EXPECT_EQ(s.ecm, 0.0);
    EXPECT_EQ(s.mmp, 0.0);
  }
}

TEST(Sources, CachedForcingEqualsPointwiseSources) {
  const ManufacturedCase c = full_case();
  const Grid2D g(9, 7, c.lx, c.ly);
  const Forcing f = manufactured_forcing(c, c.params, g);
  std::vector<Sources> out(g.cells());
  const double t = 0.037;
  f(t, out);
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const Sources s = manufactured_sources(c, c.params, g.x_center(i), g.y_center(j), t);
      const Sources& q = out[g.index(i, j)];
      EXPECT_NEAR(q.dcc, s.dcc, 1e-13);
      EXPECT_NEAR(q.csc, s.csc, 1e-13);
      EXPECT_NEAR(q.ecm, s.ecm, 1e-13);
      EXPECT_NEAR(q.mmp, s.mmp, 1e-13);
    }
  }
}

TEST(Sources, MmpResidualFromFiniteDifferences) {
  // m_t = Delta m + cd + cs - m; derivatives of the exact field taken numerically.
  const ManufacturedCase c = full_case();
  const double x = 0.2, y = 0.7, t = 0.05, d = 1e-4;
  auto m = [&](double xx, double yy, double tt) { return c.m.value(xx, yy, tt, c.lx, c.ly); };
  const double m_t = (m(x, y, t + d) - m(x, y, t - d)) / (2 * d);
  const double lap = (m(x + d, y, t) + m(x - d, y, t) + m(x, y + d, t) + m(x, y - d, t) - 4 * m(x, y, t)) / (d * d);
  const double expected = m_t - lap - c.cd.value(x, y, t, c.lx, c.ly) - c.cs.value(x, y, t, c.lx, c.ly) + m(x, y, t);
  EXPECT_NEAR(manufactured_sources(c, c.params, x, y, t).mmp, expected, 1e-4);
}

TEST(Order, FittedOrder) {
  EXPECT_DOUBLE_EQ(fitted_order(4.0, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(fitted_order(2.0, 1.0), 1.0);
  EXPECT_TRUE(std::isnan(fitted_order(0.0, 0.0)));
}

TEST(Convergence, RejectsBadRefinementLists) {
  const ManufacturedCase c = diffusion_case();
  EXPECT_THROW(run_convergence(c, {8, 16}, c.params), ModelError);
  EXPECT_THROW(run_convergence(c, {8, 16, 24}, c.params), ModelError);
  EXPECT_THROW(manufactured_case("nope"), ModelError);
}

TEST(Convergence, DiffusionCaseIsSecondOrderOnSmallGrids) {
  const ManufacturedCase c = diffusion_case();
  const ConvergenceTable t = run_convergence(c, {8, 16, 32}, c.params);
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_GT(t.min_combined_order(), 1.8);
  std::ostringstream os;
  write_convergence_csv(t, os);
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "h,dt,err_linf_cd,err_l1_cd,err_linf_cs,err_l1_cs,err_linf_v,err_l1_v,err_linf_m,err_l1_m,"
            "order_cd,order_cs,order_v,order_m");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}

TEST(Convergence, EquilibriumIsReproducedExactly) {
  const ManufacturedCase c = equilibrium_case();
  const ConvergenceTable t = run_convergence(c, {4, 8, 16}, c.params);
  for (const auto& r : t.rows) EXPECT_EQ(r.err_linf_max(), 0.0);
}
