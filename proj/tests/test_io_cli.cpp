#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "dkp/carleson.hpp"
#include "dkp/errors.hpp"
#include "dkp/field_io.hpp"
#include "dkp/fixtures.hpp"
#include "testutil.hpp"

using namespace dkp;
using namespace dkp::test;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("dkp_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::vector<std::string>& args, std::string* out_text = nullptr,
            std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int rc = cli::run(args, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return rc;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// strip the timestamp line so byte-comparisons see only the payload
std::string without_timestamp(std::string s) {
  const auto pos = s.find("\"generated_at\"");
  if (pos == std::string::npos) return s;
  const auto end = s.find('\n', pos);
  s.erase(pos, end - pos + 1);
  return s;
}

}  // namespace

TEST_CASE("field io: scalar, vector, matrix round trips are bit exact") {
  Rng rng(89);
  for (int n : {2, 3}) {
    GridPtr g = make_grid(n, 4, 0.5, 2, 4);
    std::vector<Field> fields;
    fields.push_back(random_scalar_field(g, rng));
    Field v = Field::vector(g, n - 1, "vec");
    Field m = Field::matrix(g, n, "mat");
    for (std::size_t node = 0; node < g->node_count(); ++node) {
      for (int c = 0; c < v.comps(); ++c) v.at(node, c) = rng.uniform(-2, 2);
      for (int c = 0; c < m.comps(); ++c) m.at(node, c) = rng.uniform(-2, 2);
    }
    fields.push_back(std::move(v));
    fields.push_back(std::move(m));
    for (const Field& f : fields) {
      const Field back = io::field_from_json(io::field_to_json(f));
      REQUIRE(back.comps() == f.comps());
      CHECK(back.grid().same_layout(f.grid()));
      for (std::size_t node = 0; node < g->node_count(); ++node)
        for (int c = 0; c < f.comps(); ++c) CHECK(back.at(node, c) == f.at(node, c));
    }
  }
}

TEST_CASE("field io: malformed inputs name the offending key") {
  GridPtr g = make_grid(2, 4, 0.5, 2, 4);
  io::json j = io::field_to_json(Field::scalar(g, "f"));

  {
    io::json bad = j;
    bad.erase("kind");
    CHECK_THROWS_WITH_AS(io::field_from_json(bad), doctest::Contains("kind"), ValidationError);
  }
  {
    io::json bad = j;
    bad["grid"].erase("x_count");
    CHECK_THROWS_WITH_AS(io::field_from_json(bad), doctest::Contains("grid.x_count"),
                         ValidationError);
  }
  {
    io::json bad = j;
    bad["values"][0][1] = "oops";
    CHECK_THROWS_WITH_AS(io::field_from_json(bad), doctest::Contains("values[0]"), ValidationError);
  }
}

TEST_CASE("solution and boundary data serialize to the shared container") {
  const SolverGrid grid(0.5, 1.0 / 16);
  DirichletSolution sol;
  sol.grid = grid;
  sol.u.assign(grid.node_count(), 0.0);
  for (int j = 0; j < grid.nt(); ++j)
    for (int i = 0; i < grid.nx(); ++i) sol.u[grid.node(i, j)] = grid.x(i) + grid.t(j);
  sol.max_principle_ok = true;
  const io::json j = io::solution_to_json(sol);
  CHECK(j.at("kind") == "scalar");
  CHECK(j.at("grid").at("delta").get<double>() == grid.delta);
  CHECK(j.at("values").size() == static_cast<std::size_t>(grid.nt()));
  CHECK(j.at("values")[0][3].get<double>() == doctest::Approx(3.0 / 16));

  const std::vector<double> g{1.0, 2.0, 3.0};
  const io::json jb = io::boundary_to_json(g, 0.25, "g");
  CHECK(jb.at("values").size() == 3);
}

TEST_CASE("map serialization carries fields and certificate, and round-trips") {
  GridPtr g = make_grid(2, 8, 0.5, 2, 6);
  Field h = Field::scalar(g, "h");
  for (std::size_t node = 0; node < g->node_count(); ++node) h.at(node) = 1.5;
  const ChangeOfVariable rho = ChangeOfVariable::build(Field::vector(g, 1, "v"), std::move(h));
  const io::json j = io::map_to_json(rho);
  CHECK(j.at("certificate").at("certified").get<bool>());
  CHECK(j.at("v").at("kind").get<std::string>() == "vector");
  CHECK(j.at("h").at("kind").get<std::string>() == "scalar");

  const ChangeOfVariable back = io::map_from_json(j);
  CHECK(back.certificate().certified);
  CHECK(back.certificate().eps == rho.certificate().eps);
  for (std::size_t node = 0; node < g->node_count(); ++node)
    CHECK(back.h().at(node) == rho.h().at(node));

  const io::json jc = io::composite_to_json(CompositeMap{});
  CHECK(jc.at("stages").is_array());
  const io::json jc2 =
      io::composite_to_json(compose(ChangeOfVariable::identity(g), back));
  const CompositeMap comp = io::composite_from_json(jc2);
  CHECK(comp.stages().size() == 2);
  CHECK(comp.stages()[0]->certificate().certified);
}

TEST_CASE("run config: JSON round trip") {
  cli::RunConfig c;
  c.command = "analyze";
  c.input = "diag-b";
  c.x_count = 48;
  c.T = 2.0;
  c.eps0 = 0.01;
  c.apertures = {2.0, 3.0};
  const cli::RunConfig back = cli::RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
}

TEST_CASE("cli: analyze fixture succeeds and reports deterministically") {
  const fs::path dir1 = fresh_dir("analyze1");
  const fs::path dir2 = fresh_dir("analyze2");
  const std::vector<std::string> base{"analyze", "dkp-generic", "--x-count", "16",
                                      "--T", "0.5", "--m", "2"};
  auto with_out = [&](const fs::path& d) {
    std::vector<std::string> args = base;
    args.push_back("--out");
    args.push_back(d.string());
    return args;
  };
  CHECK(run_cli(with_out(dir1)) == 0);
  CHECK(run_cli(with_out(dir2)) == 0);
  CHECK(fs::exists(dir1 / "analysis.json"));
  CHECK(fs::exists(dir1 / "analysis.csv"));
  CHECK(without_timestamp(slurp(dir1 / "analysis.json")) ==
        without_timestamp(slurp(dir2 / "analysis.json")));
  CHECK(slurp(dir1 / "analysis.csv") == slurp(dir2 / "analysis.csv"));
}

TEST_CASE("cli: analyze a scalar field file end to end") {
  const fs::path dir = fresh_dir("analyze_file");
  GridPtr g = make_grid(2, 16, 0.5, 2, 8);
  io::write_field(field_fixture("t-cos", g), (dir / "field.json").string());
  CHECK(run_cli({"analyze", (dir / "field.json").string(), "--out", dir.string()}) == 0);
  const io::json rep = io::read_json_file((dir / "analysis.json").string());
  CHECK(rep.at("measured_on").get<std::string>() == "field");
  CHECK(rep.at("cm").at("constant").get<double>() > 0);
}

TEST_CASE("cli: analyze malformed file exits 2 naming the key") {
  const fs::path dir = fresh_dir("analyze_bad");
  const fs::path bad = dir / "bad.json";
  {
    std::ofstream out(bad);
    out << R"({"grid": {"n": 2, "T": 0.5, "t_min": 0.125, "m": 2}, "kind": "scalar", "values": []})";
  }
  std::string err;
  const int rc = run_cli({"analyze", bad.string(), "--out", dir.string()}, nullptr, &err);
  CHECK(rc == 2);
  CHECK(err.find("grid.x_count") != std::string::npos);
}

TEST_CASE("cli: transform a non-elliptic file exits 3") {
  const fs::path dir = fresh_dir("transform_bad");
  GridPtr g = make_grid(2, 8, 2.0, 4, 8);
  Field A = constant_matrix_field(g, mat2(0, 0, 0, 1), "bad");
  const fs::path path = dir / "bad_field.json";
  io::write_field(A, path.string());
  std::string err;
  const int rc = run_cli({"transform", path.string(), "--out", dir.string()}, nullptr, &err);
  CHECK(rc == 3);
  CHECK(err.find("not uniformly elliptic") != std::string::npos);
}

TEST_CASE("cli: transform identity exits 0 with exact last row") {
  const fs::path dir = fresh_dir("transform_ok");
  std::string out;
  const int rc = run_cli({"transform", "identity", "--x-count", "16", "--T", "2", "--t-min",
                          "0.25", "--m", "4", "--out", dir.string()},
                         &out);
  CHECK(rc == 0);
  CHECK(out.find("last row exact") != std::string::npos);
  CHECK(fs::exists(dir / "pipeline.json"));
  CHECK(fs::exists(dir / "stages.csv"));
  CHECK(fs::exists(dir / "map.json"));
  CHECK(fs::exists(dir / "B_final.json"));
  const Field B = io::read_field((dir / "B_final.json").string());
  for (std::size_t node = 0; node < B.grid().node_count(); ++node) {
    CHECK(B.at(node, 2) == 0.0);
    CHECK(B.at(node, 3) == 1.0);
  }
}

TEST_CASE("cli: verify with delta too coarse exits 4") {
  const fs::path dir = fresh_dir("verify_coarse");
  std::string err;
  const int rc = run_cli({"verify", "--delta", "0.25", "--out", dir.string()}, nullptr, &err);
  CHECK(rc == 4);
  CHECK(err.find("insufficient resolution") != std::string::npos);
}

TEST_CASE("cli: fixtures list prints the registry") {
  std::string out;
  CHECK(run_cli({"fixtures", "list"}, &out) == 0);
  for (const auto& name : operator_fixture_names()) CHECK(out.find(name) != std::string::npos);
}

TEST_CASE("cli: fixtures export writes a loadable field") {
  const fs::path dir = fresh_dir("export");
  CHECK(run_cli({"fixtures", "export", "diag-b", "--x-count", "16", "--T", "0.5", "--m", "2",
                 "--out", dir.string()}) == 0);
  const Field f = io::read_field((dir / "diag-b.json").string());
  CHECK(f.kind() == FieldKind::Matrix);
  CHECK(f.grid().x_count() == 16);
  // scalar field fixtures export too
  CHECK(run_cli({"fixtures", "export", "t-cos", "--x-count", "16", "--T", "0.5", "--m", "2",
                 "--out", dir.string()}) == 0);
  CHECK(io::read_field((dir / "t-cos.json").string()).kind() == FieldKind::Scalar);
  // unknown names are validation errors
  CHECK(run_cli({"fixtures", "export", "nope", "--out", dir.string()}) == 2);
}

TEST_CASE("fixtures: every registered operator field is elliptic") {
  GridPtr g = make_grid(2, 16, 0.5, 2, 8);
  for (const auto& name : operator_fixture_names()) {
    const Field A = operator_fixture(name).sample_A(g);
    const EllipticityReport r = ellipticity_constants(A);
    CHECK(r.lambda > 0);
  }
  CHECK_THROWS_AS(operator_fixture("nope"), ValidationError);
  CHECK_THROWS_AS(field_fixture("nope", g), ValidationError);
}

TEST_CASE("fixtures: truncated constants stable under halving t_min") {
  // DKP-class fixtures vanish linearly in t near the boundary, so deepening
  // the ladder adds almost nothing to the constants
  for (const char* name : {"diag-b", "dkp-generic"}) {
    const OperatorFixture& fx = operator_fixture(name);
    GridPtr shallow = make_grid_t_min(2, 32, 0.5, 0.5 / 128, 4);
    GridPtr deep = make_grid_t_min(2, 32, 0.5, 0.5 / 256, 4);
    const double c1 = cmsup_constant(t_gradient(fx.sample_B(shallow))).constant;
    const double c2 = cmsup_constant(t_gradient(fx.sample_B(deep))).constant;
    INFO(name, " constants ", c1, " ", c2);
    CHECK(std::fabs(c2 / c1 - 1.0) <= 0.05);
  }
}

TEST_CASE("cli: analyze identity reports zero Carleson constants") {
  const fs::path dir = fresh_dir("analyze_identity");
  CHECK(run_cli({"analyze", "identity", "--x-count", "16", "--T", "0.5", "--m", "2", "--out",
                 dir.string()}) == 0);
  const io::json rep = io::read_json_file((dir / "analysis.json").string());
  CHECK(rep.at("cm").at("constant").get<double>() == 0.0);
  CHECK(rep.at("cm_sup").at("constant").get<double>() == 0.0);
}

TEST_CASE("cli: config file seeds parameters, flags override") {
  const fs::path dir = fresh_dir("config");
  cli::RunConfig c;
  c.x_count = 16;
  c.T = 0.5;
  c.m = 2;
  io::write_json_file(c.to_json(), (dir / "config.json").string());
  std::string out;
  const int rc = run_cli({"analyze", "dkp-generic", "--config", (dir / "config.json").string(),
                          "--out", dir.string()},
                         &out);
  CHECK(rc == 0);
  const io::json rep = io::read_json_file((dir / "analysis.json").string());
  CHECK(rep.at("grid").at("x_count").get<int>() == 16);
}
