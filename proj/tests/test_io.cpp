#include <gtest/gtest.h>

#include <cmath>

#include "hapto/io.hpp"
#include "temp_dir.hpp"

using namespace hapto;

namespace {

std::string config_error(const std::string& text, const ConfigOverrides& ov = {}) {
  try {
    parse_config(text, ov);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST(Config, EmptyDocumentGivesDefaults) {
  const SimulationConfig c = parse_config("");
  EXPECT_EQ(c, SimulationConfig{});
  EXPECT_EQ(c.nx, 32);
  EXPECT_EQ(c.solver, Solver::Direct);
  EXPECT_TRUE(std::holds_alternative<TumourBumpPreset>(c.initial));
}

TEST(Config, ReadsEveryBlock) {
  const SimulationConfig c = parse_config(R"(
grid: {nx: 10, ny: 12, lx: 2.0, ly: 1.5}
params: {chi_d: 0.5, mu_d: 2.0, emt_kind: saturating, emt_value: 0.3}
initial: {preset: uniform, dcc: 0.1, ecm: 0.7}
run: {t_end: 0.5, solver: picard, monitor_every: 3}
picard: {window: 0.01, max_iter: 7}
output: {directory: results, formats: [pgm]}
)");
  EXPECT_EQ(c.nx, 10);
  EXPECT_EQ(c.ny, 12);
  EXPECT_DOUBLE_EQ(c.lx, 2.0);
  EXPECT_DOUBLE_EQ(c.params.chi_d, 0.5);
  EXPECT_EQ(c.params.emt.kind(), EmtKind::Saturating);
  EXPECT_EQ(std::get<UniformPreset>(c.initial), (UniformPreset{0.1, 0.0, 0.7, 0.0}));
  EXPECT_EQ(c.solver, Solver::Picard);
  EXPECT_EQ(c.run.formulation, Formulation::Transformed);
  EXPECT_EQ(c.run.monitor_every, 3u);
  EXPECT_EQ(c.picard.max_iter, 7u);
  EXPECT_EQ(c.output.directory, "results");
  EXPECT_FALSE(c.output.csv);
  EXPECT_TRUE(c.output.pgm);
}

TEST(Config, ErrorsCarryLineAndKey) {
  const std::string e = config_error("grid:\n  nx: 2\n");
  EXPECT_TRUE(contains(e, "line 2")) << e;
  EXPECT_TRUE(contains(e, "grid.nx")) << e;
  EXPECT_TRUE(contains(e, "nx ≥ 3 required (got 2)")) << e;
}

TEST(Config, AllErrorsAreReportedTogether) {
  const std::string e = config_error("grid:\n  nx: 2\n  lx: -1\nrun:\n  solver: magic\n  bogus: 1\n");
  EXPECT_TRUE(contains(e, "grid.nx")) << e;
  EXPECT_TRUE(contains(e, "grid.lx")) << e;
  EXPECT_TRUE(contains(e, "'magic' is not one of")) << e;
  EXPECT_TRUE(contains(e, "run.bogus")) << e;
}

TEST(Config, TypeAndSyntaxErrors) {
  EXPECT_TRUE(contains(config_error("grid: {lx: wide}"), "expected a number"));
  EXPECT_TRUE(contains(config_error("grid: [1, 2"), "syntax error"));
  EXPECT_TRUE(contains(config_error("- 1\n- 2\n"), "mapping"));
}

TEST(Config, DuplicateKeysAreRejected) {
  EXPECT_TRUE(contains(config_error("grid:\n  nx: 8\n  nx: 9\n"), "duplicate"));
}

TEST(Config, GrowthConditionNeedsOptIn) {
  const std::string text = "params: {mu_d: 0.125}\n";
  const std::string e = config_error(text);
  EXPECT_TRUE(contains(e, "mu_d >= chi_d*mu_v") || contains(e, "mu_d ≥ chi_d·mu_v")) << e;
  EXPECT_TRUE(contains(e, "--allow-unproven")) << e;
  ConfigOverrides ov;
  ov.allow_unproven = true;
  EXPECT_NO_THROW(parse_config(text, ov));
  EXPECT_NO_THROW(parse_config(text + "run: {allow_unproven: true}\n"));
}

TEST(Config, SignViolationIsAlwaysAnError) {
  ConfigOverrides ov;
  ov.allow_unproven = true;
  EXPECT_FALSE(config_error("params: {chi_d: -1}\n", ov).empty());
}

TEST(Config, OverridesWin) {
  ConfigOverrides ov;
  ov.solver = Solver::Picard;
  ov.strict_monitors = true;
  ov.output_directory = "elsewhere";
  ov.seed = 17;
  const SimulationConfig c = parse_config("run: {solver: direct}\ninitial: {seed: 3}\n", ov);
  EXPECT_EQ(c.solver, Solver::Picard);
  EXPECT_TRUE(c.run.strict_monitors);
  EXPECT_EQ(c.output.directory, "elsewhere");
  EXPECT_EQ(std::get<TumourBumpPreset>(c.initial).seed, 17u);
}

TEST(Config, SerializeRoundTripsExactly) {
  SimulationConfig c;
  c.nx = 17;
  c.lx = 0.1;
  c.params.chi_d = 1.0 / 3.0;
  c.params.mu_d = 1.0 + 1e-15;
  c.initial = TumourBumpPreset{0.7, 0.123456789012345, 0.2, 0.05, 99};
  c.run.t_end = 2.0 / 7.0;
  c.picard.tol = 3e-9;
  c.output.pgm = true;
  EXPECT_EQ(parse_config(serialize_config(c)), c);

  c.initial = FilePreset{"a.csv", "b.csv", "c.csv", "d.csv"};
  EXPECT_EQ(parse_config(serialize_config(c)), c);
  c.initial = UniformPreset{0.1, 0.2, 0.3, 0.4};
  c.params.emt = EmtRateSpec::saturating(0.25);
  EXPECT_EQ(parse_config(serialize_config(c)), c);
}

TEST(Config, LoadResolvesInitialFilesNextToTheConfig) {
  TempDir dir;
  const auto path =
      dir.write("sim.yaml", "initial: {preset: files, dcc: d.csv, csc: s.csv, ecm: v.csv, mmp: /abs/m.csv}\n");
  const SimulationConfig c = load_config(path);
  const auto& f = std::get<FilePreset>(c.initial);
  EXPECT_EQ(std::filesystem::path(f.dcc), dir.path() / "d.csv");
  EXPECT_EQ(f.mmp, "/abs/m.csv");
  EXPECT_THROW(load_config(dir / "missing.yaml"), IoError);
}

TEST(Snapshots, CsvRoundTripIsBitwise) {
  TempDir dir;
  const Grid2D g(7, 5, 1.0, 1.0);
  const Field f = Field::sample(g, [](double x, double y) { return std::exp(x) / 3.0 + 1e-300 * y; });
  write_field_csv(f, dir / "f.csv");
  EXPECT_EQ(read_field_csv(dir / "f.csv", g), f);
}

TEST(Snapshots, ZeroFieldOnThreeByThree) {
  TempDir dir;
  const Grid2D g(3, 3, 1.0, 1.0);
  write_field_csv(Field(g, 0.0), dir / "z.csv");
  const std::string text = read_text_file(dir / "z.csv");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "0.0000000000000000e+00,0.0000000000000000e+00,0.0000000000000000e+00");
}

TEST(Snapshots, RowZeroIsSouth) {
  TempDir dir;
  const Grid2D g(3, 4, 1.0, 1.0);
  const Field f = Field::sample(g, [](double, double y) { return y; });
  write_field_csv(f, dir / "f.csv");
  const std::string text = read_text_file(dir / "f.csv");
  EXPECT_EQ(std::stod(text.substr(0, text.find(','))), g.y_center(0));
}

TEST(Snapshots, ShapeMismatchAndGarbageAreStructural) {
  TempDir dir;
  const Grid2D g(3, 3, 1.0, 1.0);
  write_field_csv(Field(Grid2D(4, 3, 1.0, 1.0), 1.0), dir / "wide.csv");
  EXPECT_THROW(read_field_csv(dir / "wide.csv", g), StructuralError);
  write_field_csv(Field(Grid2D(3, 4, 1.0, 1.0), 1.0), dir / "tall.csv");
  EXPECT_THROW(read_field_csv(dir / "tall.csv", g), StructuralError);
  dir.write("bad.csv", "1,2,3\n1,x,3\n1,2,3\n");
  EXPECT_THROW(read_field_csv(dir / "bad.csv", g), StructuralError);
}

TEST(Snapshots, PgmIsNorthUpAndScaled) {
  TempDir dir;
  const Grid2D g(4, 3, 1.0, 1.0);
  Field f(g, 0.0);
  f(0, 2) = 2.0;  // north-west corner
  f(3, 0) = 1.0;  // south-east corner
  f(1, 1) = 5.0;  // saturates
  write_field_pgm(f, dir / "f.pgm", 2.0);
  const std::string text = read_text_file(dir / "f.pgm");
  const std::string header = "P5\n4 3\n255\n";
  ASSERT_EQ(text.size(), header.size() + 12);
  EXPECT_EQ(text.substr(0, header.size()), header);
  const auto* px = reinterpret_cast<const unsigned char*>(text.data() + header.size());
  EXPECT_EQ(px[0], 255);
  EXPECT_EQ(px[11], 128);
  EXPECT_EQ(px[5], 255);
  EXPECT_EQ(px[8], 0);
}

TEST(Snapshots, WriterNamesFilesByFieldAndStep) {
  TempDir dir;
  const Grid2D g(3, 3, 1.0, 1.0);
  State s = State::uniform(g, 0.1, 0.1, 0.5, 0.0);
  s.step = 42;
  const auto files = SnapshotWriter(dir.path(), true, true).write(s);
  ASSERT_EQ(files.size(), 8u);
  EXPECT_EQ(snapshot_name("cd", 42, "csv"), "cd_000042.csv");
  for (const auto& f : files) EXPECT_TRUE(std::filesystem::exists(f)) << f;
  EXPECT_TRUE(std::filesystem::exists(dir / "m_000042.pgm"));
}

TEST(Snapshots, MonitorCsvHasOneRowPerReport) {
  TempDir dir;
  {
    MonitorCsvWriter w(dir / "monitors.csv");
    MonitorReport r;
    r.time = 0.5;
    w.write(r);
    r.time = 1.0;
    w.write(r);
  }
  const std::string text = read_text_file(dir / "monitors.csv");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
  EXPECT_EQ(text.rfind("time,l1_cd,", 0), 0u);
  EXPECT_TRUE(contains(text, ",pass\n"));
}

TEST(Initial, BumpPeaksAtTheCentreCell) {
  const Grid2D g(33, 33, 1.0, 1.0);
  const InitialCondition ic = build_initial(TumourBumpPreset{}, g);
  EXPECT_DOUBLE_EQ(ic.state.dcc.max(), 0.8);
  EXPECT_DOUBLE_EQ(ic.state.dcc(16, 16), 0.8);
  EXPECT_DOUBLE_EQ(ic.state.csc(16, 16), 0.08);
  EXPECT_NEAR(ic.state.ecm(16, 16), 0.12, 1e-15);
  EXPECT_EQ(ic.clipped_cells, 0u);
  EXPECT_TRUE(ic.state.satisfies_invariants());
}

TEST(Initial, FullBumpIsRescaledIntoTheCell) {
  const Grid2D g(9, 9, 1.0, 1.0);
  const InitialCondition ic = build_initial(TumourBumpPreset{1.0, 0.2, 0.5, 0.0, 0}, g);
  EXPECT_GT(ic.clipped_cells, 0u);
  for (std::size_t k = 0; k < g.cells(); ++k) {
    EXPECT_LE(ic.state.dcc[k] + ic.state.csc[k], 1.0 + 1e-15);
    EXPECT_NEAR(ic.state.csc[k], 0.5 * ic.state.dcc[k], 1e-15);
  }
}

TEST(Initial, NoiseIsSeeded) {
  const Grid2D g(16, 16, 1.0, 1.0);
  const TumourBumpPreset a{0.8, 0.1, 0.1, 0.2, 5};
  TumourBumpPreset b = a;
  b.seed = 6;
  EXPECT_EQ(build_initial(a, g).state.dcc, build_initial(a, g).state.dcc);
  EXPECT_NE(build_initial(a, g).state.dcc, build_initial(b, g).state.dcc);
}

TEST(Initial, FilesAreValidated) {
  TempDir dir;
  const Grid2D g(3, 3, 1.0, 1.0);
  write_field_csv(Field(g, 0.1), dir / "ok.csv");
  write_field_csv(Field(g, 1.5), dir / "big.csv");
  Field neg(g, 0.1);
  neg[4] = -0.01;
  write_field_csv(neg, dir / "neg.csv");
  const std::string ok = (dir / "ok.csv").string();
  EXPECT_NO_THROW(build_initial(FilePreset{ok, ok, ok, ok}, g));
  EXPECT_THROW(build_initial(FilePreset{(dir / "neg.csv").string(), ok, ok, ok}, g), ModelError);
  EXPECT_THROW(build_initial(FilePreset{ok, ok, (dir / "big.csv").string(), ok}, g), ModelError);
  EXPECT_NO_THROW(build_initial(FilePreset{(dir / "big.csv").string(), ok, ok, ok}, g));
  EXPECT_THROW(build_initial(FilePreset{ok, ok, ok, (dir / "none.csv").string()}, g), IoError);
}
