#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "dkp/errors.hpp"
#include "dkp/field_io.hpp"
#include "dkp/fixtures.hpp"
#include "dkp/pipeline.hpp"

namespace dkp::cli {

using nlohmann::json;

json RunConfig::to_json() const {
  return json{{"command", command},
              {"input", input},
              {"fixture", fixture},
              {"grid", {{"n", n}, {"x_count", x_count}, {"T", T}, {"t_min", t_min}, {"m", m}}},
              {"pipeline",
               {{"eps0", eps0}, {"skip_mollify", skip_mollify}, {"diagonal", diagonal}, {"n_max", n_max}}},
              {"solver", {{"delta", delta}, {"Ts", Ts}, {"q", q}, {"apertures", apertures}}},
              {"out_dir", out_dir}};
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  auto get = [&](const json& o, const char* key, auto& slot) {
    if (o.contains(key)) slot = o.at(key).get<std::decay_t<decltype(slot)>>();
  };
  get(j, "command", c.command);
  get(j, "input", c.input);
  get(j, "fixture", c.fixture);
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    get(g, "n", c.n);
    get(g, "x_count", c.x_count);
    get(g, "T", c.T);
    get(g, "t_min", c.t_min);
    get(g, "m", c.m);
  }
  if (j.contains("pipeline")) {
    const json& p = j.at("pipeline");
    get(p, "eps0", c.eps0);
    get(p, "skip_mollify", c.skip_mollify);
    get(p, "diagonal", c.diagonal);
    get(p, "n_max", c.n_max);
  }
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    get(s, "delta", c.delta);
    get(s, "Ts", c.Ts);
    get(s, "q", c.q);
    get(s, "apertures", c.apertures);
  }
  get(j, "out_dir", c.out_dir);
  return c;
}

namespace {

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  return std::to_string(std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count());
}

GridPtr make_analysis_grid(const RunConfig& c) {
  const double t_min = c.t_min > 0 ? c.t_min : c.T / 64.0;
  return make_grid_t_min(c.n, c.x_count, c.T, t_min, c.m);
}

Field load_input(const RunConfig& c) {
  if (c.input.empty()) throw ValidationError("no input: give a fixture name or a field JSON path");
  if (c.input.find(".json") != std::string::npos || c.input.find('/') != std::string::npos)
    return io::read_field(c.input);
  return operator_fixture(c.input).sample_A(make_analysis_grid(c));
}

void write_csv(const std::string& path, const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

int cmd_fixtures_list(std::ostream& out) {
  out << "operator fixtures:\n";
  for (const auto& name : operator_fixture_names())
    out << "  " << name << "  -  " << operator_fixture(name).description << "\n";
  out << "field fixtures:\n ";
  for (const auto& name : field_fixture_names()) out << " " << name;
  out << "\n";
  return 0;
}

int cmd_fixtures_export(const RunConfig& cfg, std::ostream& out) {
  if (cfg.input.empty()) throw ValidationError("fixtures export: give a fixture name");
  std::filesystem::create_directories(cfg.out_dir);
  GridPtr grid = make_analysis_grid(cfg);
  const std::string path = cfg.out_dir + "/" + cfg.input + ".json";
  bool wrote = false;
  for (const auto& name : operator_fixture_names())
    if (name == cfg.input) {
      io::write_field(operator_fixture(name).sample_A(grid), path);
      wrote = true;
    }
  if (!wrote) io::write_field(field_fixture(cfg.input, grid), path);
  out << "wrote " << path << "\n";
  return 0;
}

int cmd_analyze(const RunConfig& cfg, std::ostream& out) {
  const Field f = load_input(cfg);
  std::filesystem::create_directories(cfg.out_dir);

  json rep;
  rep["generated_at"] = timestamp();
  rep["input"] = cfg.input;
  rep["grid"] = io::grid_to_json(f.grid());

  std::vector<std::vector<std::string>> csv{{"quantity", "value"}};

  if (f.kind() == FieldKind::Matrix) {
    const EllipticityReport ell = ellipticity_constants(f);
    rep["ellipticity"] = {{"lambda", ell.lambda}, {"Lambda", ell.Lambda}, {"C_A", ell.constant()}};
    csv.push_back({"lambda", fmt(ell.lambda)});
    csv.push_back({"Lambda", fmt(ell.Lambda)});
  }

  const Field tg = t_gradient(f);
  const double sup_tg = sup_norm(tg);
  rep["sup_tgrad"] = sup_tg;
  csv.push_back({"sup_tgrad", fmt(sup_tg)});

  // Coefficient matrices are diagnosed through t grad A (the quantity the
  // operator class is defined by); scalar/vector inputs through the field
  // itself.
  const Field& diagnosed = f.kind() == FieldKind::Matrix ? tg : f;
  rep["measured_on"] = f.kind() == FieldKind::Matrix ? "t_gradient" : "field";
  const CarlesonReport cm = carleson_constant(diagnosed, BoxFamily::Dyadic);
  const CarlesonReport cm_sup = cmsup_constant(diagnosed);
  rep["cm"] = io::carleson_report_to_json(cm);
  rep["cm_sup"] = io::carleson_report_to_json(cm_sup);
  csv.push_back({"cm", fmt(cm.constant)});
  csv.push_back({"cm_sup", fmt(cm_sup.constant)});

  io::write_json_file(rep, cfg.out_dir + "/analysis.json");
  write_csv(cfg.out_dir + "/analysis.csv", csv);
  out << "analyze " << cfg.input << ": cm=" << cm.constant << " cm_sup=" << cm_sup.constant
      << "\n";
  return 0;
}

json pipeline_report_to_json(const PipelineReport& rep) {
  json stages = json::array();
  for (const auto& s : rep.stages)
    stages.push_back(json{{"k", s.k},
                          {"certificate", io::certificate_to_json(s.map)},
                          {"cm_tgrad_B", s.cm_tgrad_B},
                          {"cm_C", s.cm_C},
                          {"cm_majorant", s.cm_majorant},
                          {"lambda", s.lambda},
                          {"Lambda", s.Lambda},
                          {"last_row_dev", s.last_row_dev},
                          {"sup_tgrad_h", s.sup_tgrad_h},
                          {"sup_tgrad_v", s.sup_tgrad_v}});
  json j{{"N", rep.N},
         {"stages", stages},
         {"last_row_exact", rep.last_row_exact},
         {"M_initial", rep.M_initial},
         {"M_final", rep.M_final},
         {"ratio", rep.ratio},
         {"lambda_initial", rep.lambda_initial},
         {"lambda_final", rep.lambda_final},
         {"ellipticity_chain", rep.ellipticity_chain}};
  if (rep.mollify_cert) {
    const auto& mc = *rep.mollify_cert;
    j["mollify"] = json{{"lambda_in", mc.input.lambda},
                        {"lambda_out", mc.output.lambda},
                        {"Lambda_out", mc.output.Lambda},
                        {"sup_tgrad", mc.sup_tgrad},
                        {"cm_tgrad", mc.cm_tgrad.constant},
                        {"cm_residual", mc.cm_residual.constant},
                        {"kernel_deriv_l1", mc.kernel_deriv_l1},
                        {"ellipticity_preserved", mc.ellipticity_preserved}};
  }
  return j;
}

int cmd_transform(const RunConfig& cfg, std::ostream& out) {
  const Field A = load_input(cfg);
  std::filesystem::create_directories(cfg.out_dir);

  PipelineOptions opts;
  if (cfg.eps0 > 0) opts.eps0 = cfg.eps0;
  opts.N_max = cfg.n_max;

  PipelineReport rep = [&] {
    if (cfg.diagonal) {
      const BlockDecomposition blocks = block_decompose(A);
      return run_diagonal_reduction(blocks.b, opts);
    }
    std::optional<std::pair<Field, Field>> split;
    if (cfg.skip_mollify) {
      const OperatorFixture& fx = operator_fixture(cfg.input);
      GridPtr grid = A.grid_ptr();
      split = std::make_pair(fx.sample_B(grid), fx.sample_C(grid));
    }
    return run_pipeline(A, std::move(split), opts);
  }();

  json j = pipeline_report_to_json(rep);
  j["generated_at"] = timestamp();
  j["input"] = cfg.input;
  io::write_json_file(j, cfg.out_dir + "/pipeline.json");
  io::write_json_file(io::composite_to_json(rep.map), cfg.out_dir + "/map.json");
  io::write_field(*rep.B_final, cfg.out_dir + "/B_final.json");
  io::write_field(*rep.C_final, cfg.out_dir + "/C_final.json");

  std::vector<std::vector<std::string>> csv{{"k", "eps", "eps0", "sup_tgrad_h", "sup_tgrad_v",
                                             "cm_C", "cm_tgrad_B", "lambda", "Lambda",
                                             "last_row_dev"}};
  for (const auto& s : rep.stages)
    csv.push_back({std::to_string(s.k), fmt(s.map.eps), fmt(s.map.eps0), fmt(s.sup_tgrad_h),
                   fmt(s.sup_tgrad_v), fmt(s.cm_C), fmt(s.cm_tgrad_B), fmt(s.lambda),
                   fmt(s.Lambda), fmt(s.last_row_dev)});
  write_csv(cfg.out_dir + "/stages.csv", csv);

  out << "transform " << cfg.input << ": N=" << rep.N << " stages=" << rep.stages.size()
      << " M'=" << rep.M_final << " M'/(M+1)=" << rep.ratio
      << (rep.last_row_exact ? " last row exact" : " LAST ROW NOT EXACT") << "\n";
  out << "  k   ||tgrad h||  ||tgrad v||  cm(C_k)      cm(tgrad B_k)  lambda_k   Lambda_k\n";
  for (const auto& s : rep.stages) {
    char line[180];
    std::snprintf(line, sizeof(line), "  %-3d %-12.4g %-12.4g %-12.4g %-14.4g %-10.4g %-10.4g\n",
                  s.k, s.sup_tgrad_h, s.sup_tgrad_v, s.cm_C, s.cm_tgrad_B, s.lambda, s.Lambda);
    out << line;
  }
  return rep.last_row_exact ? 0 : 1;
}

struct VerifyRow {
  std::string check, detail;
  double value, threshold;
  bool pass;
};

struct ProbeRow {
  std::string fixture;
  double q, K, ratio, level;
};

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  if (cfg.n != 2) throw ValidationError("verify runs n = 2 configurations only");
  std::filesystem::create_directories(cfg.out_dir);
  std::vector<VerifyRow> rows;
  std::vector<ProbeRow> probes;
  auto add = [&](std::string check, std::string detail, double value, double threshold, bool pass) {
    rows.push_back(VerifyRow{std::move(check), std::move(detail), value, threshold, pass});
  };

  bool all_max_principle = true;

  // 1. harmonic-pair conjugation checks (aligned scaling and shear pairs)
  {
    const std::vector<double> deltas{cfg.delta, cfg.delta / 2, cfg.delta / 4};
    struct Pair {
      const char* name;
      MatrixEval A;
      MapEval rho;
      ScalarEval u;
    };
    const MatN scale_mat = [] {
      MatN m(2);
      m(0, 0) = 2.0;
      m(1, 1) = 0.5;
      return m;
    }();
    const MatN shear_mat = [] {
      MatN m(2);
      m(0, 0) = 2.0;
      m(0, 1) = -1.0;
      m(1, 0) = -1.0;
      m(1, 1) = 1.0;
      return m;
    }();
    const std::vector<Pair> pairs{
        {"scaling,u=y", [&](double, double) { return scale_mat; },
         MapEval{[](double x, double t) { return std::make_pair(x, 2 * t); }},
         [](double x, double) { return x; }},
        {"scaling,u=yt", [&](double, double) { return scale_mat; },
         MapEval{[](double x, double t) { return std::make_pair(x, 2 * t); }},
         [](double x, double t) { return x * t; }},
        {"shear,u=y", [&](double, double) { return shear_mat; },
         MapEval{[](double x, double t) { return std::make_pair(x + t, t); }},
         [](double x, double) { return x; }},
        {"shear,u=yt", [&](double, double) { return shear_mat; },
         MapEval{[](double x, double t) { return std::make_pair(x + t, t); }},
         [](double x, double t) { return x * t; }},
    };
    for (const auto& p : pairs) {
      const OrderStudy study = conjugation_order(p.A, p.rho, p.u, cfg.Ts, deltas);
      for (std::size_t i = 0; i < deltas.size(); ++i)
        add("conjugation", std::string(p.name) + " residual d=" + fmt(deltas[i]), study.linf[i],
            deltas[i] * deltas[i], study.linf[i] <= deltas[i] * deltas[i]);
      const bool order_ok = study.at_floor || study.observed_order >= 1.5;
      add("conjugation", std::string(p.name) + " order", study.observed_order, 1.5, order_ok);
    }
  }

  // 2. solver sanity: A = I, g = sin(pi y), closed form on T_s = 1
  {
    const double pi = 3.14159265358979323846;
    const MatrixEval ident = [](double, double) { return MatN::identity(2); };
    double prev_err = 0;
    double order = 0;
    const std::vector<double> deltas{cfg.delta, cfg.delta / 2};
    for (std::size_t lev = 0; lev < deltas.size(); ++lev) {
      const SolverGrid grid(1.0, deltas[lev]);
      BoundaryData g = BoundaryData::bottom_only([pi](double x) { return std::sin(pi * x); });
      const DirichletSolution sol = solve_dirichlet(ident, g, grid);
      all_max_principle = all_max_principle && sol.max_principle_ok;
      double err = 0;
      for (int j = 0; j < grid.nt(); ++j)
        for (int i = 0; i < grid.nx(); ++i) {
          const double exact =
              std::sin(pi * grid.x(i)) * std::sinh(pi * (1.0 - grid.t(j))) / std::sinh(pi);
          err = std::max(err, std::fabs(sol.u[grid.node(i, j)] - exact));
        }
      add("solver", "max error d=" + fmt(deltas[lev]), err, deltas[lev] * deltas[lev],
          err <= deltas[lev] * deltas[lev]);
      if (lev) order = std::log2(prev_err / err);
      prev_err = err;
    }
    add("solver", "order", order, 1.8, order >= 1.8);
  }

  // 3. aperture equivalence on the sin(pi y) solution
  {
    for (double K : cfg.apertures) {
      double prev_ratio = 0;
      bool stable = true, in_range = true;
      const std::vector<double> deltas{cfg.delta, cfg.delta / 2};
      for (std::size_t lev = 0; lev < deltas.size(); ++lev) {
        const SolverGrid grid(1.0, deltas[lev]);
        const double pi = 3.14159265358979323846;
        BoundaryData g = BoundaryData::bottom_only([pi](double x) { return std::sin(pi * x); });
        const DirichletSolution sol = solve_dirichlet([](double, double) { return MatN::identity(2); }, g, grid);
        all_max_principle = all_max_principle && sol.max_principle_ok;
        const auto n1 = ntmax_avg(grid, sol.u, 1.0);
        const auto nk = ntmax_avg(grid, sol.u, K);
        const double ratio = boundary_q_norm(nk, grid.delta, cfg.q) / boundary_q_norm(n1, grid.delta, cfg.q);
        in_range = in_range && ratio >= 1.0 - 1e-9 && ratio <= 2.0 * std::sqrt(K);
        if (lev) stable = std::fabs(ratio / prev_ratio - 1.0) <= 0.2;
        prev_ratio = ratio;
        probes.push_back(ProbeRow{"sin-pi", cfg.q, K, ratio, deltas[lev]});
        add("aperture", "K=" + fmt(K) + " d=" + fmt(deltas[lev]), ratio, 2.0 * std::sqrt(K), in_range);
      }
      add("aperture", "K=" + fmt(K) + " stability", prev_ratio, 0.2, stable);
    }
  }

  // 4. regularity ratio before/after the diagonal reduction of the fixture
  {
    const OperatorFixture& fx = operator_fixture(cfg.fixture);
    GridPtr grid = make_analysis_grid(cfg);
    const Field A = fx.sample_A(grid);
    const BlockDecomposition blocks = block_decompose(A);
    PipelineOptions opts;
    PipelineReport rep = run_diagonal_reduction(blocks.b, opts);

    const SolverGrid sgrid(cfg.Ts, cfg.delta);
    std::vector<BoundaryData> family;
    for (int k = 1; k <= 4; ++k)
      family.push_back(BoundaryData::bottom_only(
          [k](double x) { return std::sin(2 * 3.14159265358979323846 * k * x); }));

    const MatrixEval before = fx.rectangle_eval(cfg.T);
    const Field A_final = *rep.B_final + *rep.C_final;
    const FieldInterpolator interp(A_final);
    const MatrixEval after = [&interp](double x, double t) {
      const double y[1] = {x};
      return interp.eval_matrix(std::span<const double>(y, 1), t);
    };

    const RegularityProbe p_before = regularity_ratio(before, family, cfg.q, 1.0, sgrid);
    const RegularityProbe p_after = regularity_ratio(after, family, cfg.q, 1.0, sgrid);
    probes.push_back(ProbeRow{cfg.fixture, cfg.q, 1.0, p_before.ratio, cfg.delta});
    probes.push_back(ProbeRow{cfg.fixture + "-transformed", cfg.q, 1.0, p_after.ratio, cfg.delta});
    const MapCertificate agg = rep.map.aggregate_certificate();
    const double c_rho = std::pow(agg.jac_sup * agg.jac_inv_sup, 2.0);
    const double change = std::max(p_after.ratio / p_before.ratio, p_before.ratio / p_after.ratio);
    add("regularity", cfg.fixture + " ratio before", p_before.ratio, 0, true);
    add("regularity", cfg.fixture + " ratio after", p_after.ratio, 0, true);
    add("regularity", cfg.fixture + " change vs C(rho)", change, c_rho, change <= c_rho);
  }

  add("max-principle", "all solves", all_max_principle ? 1.0 : 0.0, 1.0, all_max_principle);

  std::vector<std::vector<std::string>> csv{{"check", "detail", "value", "threshold", "pass"}};
  json jrows = json::array();
  bool all_pass = true;
  for (const auto& r : rows) {
    all_pass = all_pass && r.pass;
    csv.push_back({r.check, r.detail, fmt(r.value), fmt(r.threshold), r.pass ? "1" : "0"});
    jrows.push_back(json{{"check", r.check},
                         {"detail", r.detail},
                         {"value", r.value},
                         {"threshold", r.threshold},
                         {"pass", r.pass}});
    out << (r.pass ? "PASS " : "FAIL ") << r.check << " " << r.detail << " value=" << r.value
        << " threshold=" << r.threshold << "\n";
  }
  write_csv(cfg.out_dir + "/verify.csv", csv);
  std::vector<std::vector<std::string>> probe_csv{{"fixture", "q", "K", "ratio", "level"}};
  for (const auto& p : probes)
    probe_csv.push_back({p.fixture, fmt(p.q), fmt(p.K), fmt(p.ratio), fmt(p.level)});
  write_csv(cfg.out_dir + "/probes.csv", probe_csv);
  io::write_json_file(json{{"generated_at", timestamp()}, {"results", jrows}, {"all_pass", all_pass}},
                      cfg.out_dir + "/verify.json");
  return all_pass ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;

  // --config seeds defaults; explicit flags override
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == "--config") {
      try {
        cfg = RunConfig::from_json(io::read_json_file(args[i + 1]));
      } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
      }
    }

  CLI::App app{"Carleson-measure diagnostics and bi-Lipschitz coefficient transforms "
               "for divergence-form elliptic operators on the half-space strip"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (flags override it)");

  auto add_grid = [&](CLI::App* sub) {
    sub->add_option("--n", cfg.n, "ambient dimension")->capture_default_str();
    sub->add_option("--x-count", cfg.x_count, "tangential nodes per axis")->capture_default_str();
    sub->add_option("--T", cfg.T, "top of the vertical ladder")->capture_default_str();
    sub->add_option("--t-min", cfg.t_min, "bottom of the ladder (0: T/64)")->capture_default_str();
    sub->add_option("--m", cfg.m, "levels per octave")->capture_default_str();
  };

  CLI::App* analyze = app.add_subcommand("analyze", "ellipticity + Carleson diagnostics of a field");
  analyze->add_option("input", cfg.input, "fixture name or field JSON path");
  add_grid(analyze);
  analyze->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();

  CLI::App* transform = app.add_subcommand("transform", "run the iterated change-of-variable reduction");
  transform->add_option("input", cfg.input, "fixture name or field JSON path");
  add_grid(transform);
  transform->add_option("--eps0", cfg.eps0, "certification threshold (0: default)")->capture_default_str();
  transform->add_flag("--skip-mollify", cfg.skip_mollify, "use the fixture's declared split");
  transform->add_flag("--diagonal", cfg.diagonal, "diagonal variant on the b block");
  transform->add_option("--n-max", cfg.n_max, "stage-count cap")->capture_default_str();
  transform->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();

  CLI::App* verify = app.add_subcommand("verify", "PDE verification suites (n = 2)");
  verify->add_option("--fixture", cfg.fixture, "operator fixture for the regularity probe")
      ->capture_default_str();
  add_grid(verify);
  verify->add_option("--delta", cfg.delta, "solver spacing")->capture_default_str();
  verify->add_option("--Ts", cfg.Ts, "solver rectangle height")->capture_default_str();
  verify->add_option("--q", cfg.q, "boundary norm exponent")->capture_default_str();
  verify->add_option("--aperture", cfg.apertures, "cone apertures")->capture_default_str();
  verify->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();

  CLI::App* fixtures = app.add_subcommand("fixtures", "fixture registry");
  CLI::App* fixtures_list = fixtures->add_subcommand("list", "list built-in fixtures");
  CLI::App* fixtures_export = fixtures->add_subcommand("export", "sample a fixture to a field JSON file");
  fixtures_export->add_option("name", cfg.input, "fixture name");
  add_grid(fixtures_export);
  fixtures_export->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();

  std::vector<std::string> argv_flat = args;
  std::vector<const char*> argv;
  argv.push_back("dkp");
  for (const auto& a : argv_flat) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(cfg, out);
    if (transform->parsed()) return cmd_transform(cfg, out);
    if (verify->parsed()) return cmd_verify(cfg, out);
    if (fixtures->parsed()) {
      if (fixtures_export->parsed()) return cmd_fixtures_export(cfg, out);
      if (fixtures_list->parsed()) return cmd_fixtures_list(out);
      return cmd_fixtures_list(out);
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const ResolutionError& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << "error: no subcommand\n";
  return 2;
}

}  // namespace dkp::cli
