#include <gtest/gtest.h>

#include <cmath>

#include "hapto/grid.hpp"
#include "hapto/model.hpp"
#include "hapto/transform.hpp"

using namespace hapto;

TEST(Grid, RejectsFewerThanThreeCells) {
  EXPECT_THROW(Grid2D(2, 8, 1.0, 1.0), StructuralError);
  EXPECT_THROW(Grid2D(8, 2, 1.0, 1.0), StructuralError);
  EXPECT_THROW(Grid2D(8, 8, 0.0, 1.0), StructuralError);
  EXPECT_NO_THROW(Grid2D(3, 3, 1.0, 1.0));
}

TEST(Grid, GeometryAndRowMajorIndex) {
  const Grid2D g(4, 5, 2.0, 1.0);
  EXPECT_DOUBLE_EQ(g.hx(), 0.5);
  EXPECT_DOUBLE_EQ(g.hy(), 0.2);
  EXPECT_DOUBLE_EQ(g.cell_area(), 0.1);
  EXPECT_DOUBLE_EQ(g.area(), 2.0);
  EXPECT_EQ(g.cells(), 20u);
  EXPECT_EQ(g.index(3, 2), 11u);
  EXPECT_DOUBLE_EQ(g.x_center(0), 0.25);
  EXPECT_DOUBLE_EQ(g.y_center(4), 0.9);
}

TEST(Field, SizeMismatchIsStructural) {
  const Grid2D g(3, 3, 1.0, 1.0);
  EXPECT_THROW(Field(g, std::vector<double>(8, 0.0)), StructuralError);
  const Field f = Field::sample(g, [](double x, double y) { return x - 2.0 * y; });
  EXPECT_DOUBLE_EQ(f(2, 0), 5.0 / 6.0 - 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(f.sup_norm(), std::abs(1.0 / 6.0 - 2.0 * 5.0 / 6.0));
}

TEST(Params, DefaultsSatisfyAllConstraints) { EXPECT_TRUE(validate_params(ModelParameters{}).empty()); }

TEST(Params, GrowthConditionViolationNamesTheInequality) {
  ModelParameters p;
  p.mu_d = 0.5;
  p.chi_d = 2.0;
  p.mu_v = 0.5;
  const auto v = validate_params(p);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].constraint, "mu_d >= chi_d*mu_v");
  EXPECT_TRUE(v[0].growth_condition);
  EXPECT_DOUBLE_EQ(v[0].lhs, 0.5);
  EXPECT_DOUBLE_EQ(v[0].rhs, 1.0);
  EXPECT_NE(v[0].message.find("0.5 < 1"), std::string::npos) << v[0].message;
}

TEST(Params, GrowthConditionEqualityIsAccepted) {
  ModelParameters p;
  p.chi_s = 2.0;
  p.mu_v = 0.25;
  p.mu_s = 0.5;  // exactly chi_s * mu_v
  EXPECT_TRUE(validate_params(p).empty());
}

TEST(Params, NegativeCoefficientIsASignViolation) {
  ModelParameters p;
  p.chi_d = -1.0;
  const auto v = validate_params(p);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v[0].constraint, "chi_d >= 0");
  EXPECT_FALSE(v[0].growth_condition);
}

TEST(Emt, ConstantRateMustNotExceedCap) {
  EXPECT_THROW(EmtRateSpec::constant(0.2, 0.1), ModelError);
  EXPECT_THROW(EmtRateSpec::constant(-0.1, 0.1), ModelError);
  EXPECT_THROW(EmtRateSpec::saturating(0.0), ModelError);
  const auto c = EmtRateSpec::constant(0.05, 0.1);
  EXPECT_DOUBLE_EQ(emt_rate(c, 0.7, 0.1, 0.2, 0.3, 0.1), 0.05);
}

TEST(Emt, SaturatingRateStaysBelowCap) {
  const auto s = EmtRateSpec::saturating(0.5);
  EXPECT_DOUBLE_EQ(emt_rate(s, 0.5, 0.0, 0.0, 0.0, 0.2), 0.1);
  EXPECT_DOUBLE_EQ(emt_rate(s, 0.0, 0.0, 0.0, 0.0, 0.2), 0.0);
  EXPECT_LT(emt_rate(s, 1e6, 0.0, 0.0, 0.0, 0.2), 0.2);
}

TEST(Reaction, HandEvaluatedRates) {
  ModelParameters p;
  p.mu_d = 1.0;
  p.mu_s = 2.0;
  p.mu_v = 0.5;
  p.mu_max = 0.2;
  p.emt = EmtRateSpec::constant(0.1, 0.2);
  // rho = 1 - 0.2 - 0.1 - 0.5 = 0.2
  const Reaction r = reaction_rhs(p, 0.2, 0.1, 0.5, 0.3);
  EXPECT_NEAR(r.dcc, -0.1 * 0.2 + 1.0 * 0.2 * 0.2, 1e-15);
  EXPECT_NEAR(r.csc, 0.1 * 0.2 + 2.0 * 0.1 * 0.2, 1e-15);
  EXPECT_NEAR(r.ecm, -0.3 * 0.5 + 0.5 * 0.5 * 0.2, 1e-15);
  EXPECT_NEAR(r.mmp, 0.2 + 0.1 - 0.3, 1e-15);
}

TEST(Reaction, HealthyTissueIsAnEquilibrium) {
  const Reaction r = reaction_rhs(ModelParameters{}, 0.0, 0.0, 1.0, 0.0);
  EXPECT_EQ(r.dcc, 0.0);
  EXPECT_EQ(r.csc, 0.0);
  EXPECT_EQ(r.ecm, 0.0);
  EXPECT_EQ(r.mmp, 0.0);
}

TEST(State, InvariantsFlagOutOfRangeValues) {
  const Grid2D g(3, 3, 1.0, 1.0);
  State s = State::uniform(g, 0.1, 0.1, 0.5, 0.0);
  EXPECT_TRUE(s.satisfies_invariants());
  s.ecm[4] = 1.0 + 1e-9;
  EXPECT_FALSE(s.satisfies_invariants());
  s.ecm[4] = 0.5;
  s.dcc[0] = -1e-9;
  EXPECT_FALSE(s.satisfies_invariants());
}

TEST(Transform, RoundTripIsNearIdentity) {
  const Grid2D g(8, 6, 1.0, 1.0);
  ModelParameters p;
  p.chi_d = 0.7;
  p.chi_s = 1.9;
  const State s(Formulation::Original, Field::sample(g, [](double x, double y) { return 0.3 + 0.2 * x * y; }),
                Field::sample(g, [](double x, double) { return 0.1 * x; }),
                Field::sample(g, [](double x, double y) { return 0.5 + 0.4 * std::sin(3 * x + y); }),
                Field(g, 0.2), 0.0);
  const State a = to_transformed(s, p);
  EXPECT_EQ(a.formulation, Formulation::Transformed);
  for (std::size_t k = 0; k < g.cells(); ++k) {
    EXPECT_DOUBLE_EQ(a.dcc[k], s.dcc[k] * std::exp(-0.7 * s.ecm[k]));
    EXPECT_DOUBLE_EQ(a.csc[k], s.csc[k] * std::exp(-1.9 * s.ecm[k]));
  }
  const State back = to_original(a, p);
  for (std::size_t k = 0; k < g.cells(); ++k) {
    EXPECT_NEAR(back.dcc[k], s.dcc[k], 1e-15);
    EXPECT_NEAR(back.csc[k], s.csc[k], 1e-15);
    EXPECT_EQ(back.ecm[k], s.ecm[k]);
    EXPECT_EQ(back.mmp[k], s.mmp[k]);
  }
}

TEST(Transform, ZeroSensitivityIsTheIdentity) {
  const Grid2D g(4, 4, 1.0, 1.0);
  ModelParameters p;
  p.chi_d = p.chi_s = 0.0;
  const State s = State::uniform(g, 0.3, 0.2, 0.4, 0.1);
  const State a = to_transformed(s, p);
  EXPECT_EQ(a.dcc, s.dcc);
  EXPECT_EQ(a.csc, s.csc);
}

TEST(Transform, FreeVolumeAgreesAcrossFormulations) {
  ModelParameters p;
  const double cd = 0.3, cs = 0.2, v = 0.4;
  const double ad = cd * std::exp(-p.chi_d * v);
  const double as = cs * std::exp(-p.chi_s * v);
  EXPECT_NEAR(rho_dev_a(ad, as, v, p), rho_dev_c(cd, cs, v), 1e-15);
  EXPECT_NEAR(rho_dev_c(cd, cs, v), 0.1, 1e-15);
}
