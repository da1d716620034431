#include "dkp/field_io.hpp"

#include <fstream>

#include "dkp/errors.hpp"

namespace dkp::io {

namespace {

const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key))
    throw ValidationError("missing or invalid key '" + path + key + "'");
  return j.at(key);
}

double require_number(const json& j, const char* key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_number()) throw ValidationError("missing or invalid key '" + path + key + "'");
  return v.get<double>();
}

int require_int(const json& j, const char* key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_number_integer()) throw ValidationError("missing or invalid key '" + path + key + "'");
  return v.get<int>();
}

}  // namespace

json grid_to_json(const Grid& g) {
  return json{{"n", g.n()},
              {"x_count", g.x_count()},
              {"T", g.T()},
              {"t_min", g.t_min()},
              {"m", g.m()}};
}

GridPtr grid_from_json(const json& j) {
  const int n = require_int(j, "n", "grid.");
  const int x_count = require_int(j, "x_count", "grid.");
  const double T = require_number(j, "T", "grid.");
  const double t_min = require_number(j, "t_min", "grid.");
  const int m = require_int(j, "m", "grid.");
  return make_grid_t_min(n, x_count, T, t_min, m);
}

namespace {

json node_to_json(const Field& f, std::size_t node) {
  switch (f.kind()) {
    case FieldKind::Scalar:
      return f.at(node);
    case FieldKind::Vector: {
      json arr = json::array();
      for (int c = 0; c < f.comps(); ++c) arr.push_back(f.at(node, c));
      return arr;
    }
    case FieldKind::Matrix: {
      json rows = json::array();
      for (int r = 0; r < f.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < f.cols(); ++c) row.push_back(f.at(node, r * f.cols() + c));
        rows.push_back(row);
      }
      return rows;
    }
  }
  return {};
}

// nested row-major tangential arrays, axis 0 outermost
json level_to_json(const Field& f, const Grid& g, int level, int axis, std::size_t base_flat,
                   std::size_t stride) {
  json arr = json::array();
  if (axis == g.tangential_axes() - 1) {
    for (int i = 0; i < g.x_count(); ++i)
      arr.push_back(node_to_json(f, g.node(base_flat + static_cast<std::size_t>(i) * stride, level)));
  } else {
    const std::size_t sub = stride / static_cast<std::size_t>(g.x_count());
    for (int i = 0; i < g.x_count(); ++i)
      arr.push_back(level_to_json(f, g, level, axis + 1, base_flat + static_cast<std::size_t>(i) * stride, sub));
  }
  return arr;
}

void node_from_json(Field& f, std::size_t node, const json& v, const std::string& where) {
  auto bad = [&] { return ValidationError("missing or invalid key '" + where + "'"); };
  switch (f.kind()) {
    case FieldKind::Scalar:
      if (!v.is_number()) throw bad();
      f.at(node) = v.get<double>();
      return;
    case FieldKind::Vector: {
      if (!v.is_array() || v.size() != static_cast<std::size_t>(f.comps())) throw bad();
      for (int c = 0; c < f.comps(); ++c) {
        if (!v[static_cast<std::size_t>(c)].is_number()) throw bad();
        f.at(node, c) = v[static_cast<std::size_t>(c)].get<double>();
      }
      return;
    }
    case FieldKind::Matrix: {
      if (!v.is_array() || v.size() != static_cast<std::size_t>(f.rows())) throw bad();
      for (int r = 0; r < f.rows(); ++r) {
        const json& row = v[static_cast<std::size_t>(r)];
        if (!row.is_array() || row.size() != static_cast<std::size_t>(f.cols())) throw bad();
        for (int c = 0; c < f.cols(); ++c) {
          if (!row[static_cast<std::size_t>(c)].is_number()) throw bad();
          f.at(node, r * f.cols() + c) = row[static_cast<std::size_t>(c)].get<double>();
        }
      }
      return;
    }
  }
}

void level_from_json(Field& f, const Grid& g, int level, int axis, std::size_t base_flat,
                     std::size_t stride, const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.size() != static_cast<std::size_t>(g.x_count()))
    throw ValidationError("missing or invalid key '" + where + "'");
  for (int i = 0; i < g.x_count(); ++i) {
    const std::size_t flat = base_flat + static_cast<std::size_t>(i) * stride;
    if (axis == g.tangential_axes() - 1)
      node_from_json(f, g.node(flat, level), arr[static_cast<std::size_t>(i)],
                     where + "[" + std::to_string(i) + "]");
    else
      level_from_json(f, g, level, axis + 1, flat, stride / static_cast<std::size_t>(g.x_count()),
                      arr[static_cast<std::size_t>(i)], where + "[" + std::to_string(i) + "]");
  }
}

}  // namespace

json field_to_json(const Field& f) {
  const Grid& g = f.grid();
  json j;
  j["grid"] = grid_to_json(g);
  j["name"] = f.name();
  j["kind"] = f.kind() == FieldKind::Scalar   ? "scalar"
              : f.kind() == FieldKind::Vector ? "vector"
                                              : "matrix";
  std::size_t stride = 1;
  for (int a = 0; a < g.tangential_axes() - 1; ++a) stride *= static_cast<std::size_t>(g.x_count());
  json levels = json::array();
  for (int lvl = 0; lvl < g.levels(); ++lvl) levels.push_back(level_to_json(f, g, lvl, 0, 0, stride));
  j["values"] = std::move(levels);
  return j;
}

Field field_from_json(const json& j) {
  GridPtr grid = grid_from_json(require(j, "grid", ""));
  const json& kind = require(j, "kind", "");
  if (!kind.is_string()) throw ValidationError("missing or invalid key 'kind'");
  const std::string kind_s = kind.get<std::string>();
  std::string name;
  if (j.contains("name") && j.at("name").is_string()) name = j.at("name").get<std::string>();

  const json& values = require(j, "values", "");
  if (!values.is_array() || values.size() != static_cast<std::size_t>(grid->levels()))
    throw ValidationError("missing or invalid key 'values'");

  // component count from the first node entry
  const json* probe = &values[0];
  for (int a = 0; a < grid->tangential_axes(); ++a) {
    if (!probe->is_array() || probe->empty()) throw ValidationError("missing or invalid key 'values'");
    probe = &(*probe)[0];
  }

  Field f = [&]() -> Field {
    if (kind_s == "scalar") return Field::scalar(grid, name);
    if (kind_s == "vector") {
      if (!probe->is_array()) throw ValidationError("missing or invalid key 'values'");
      return Field::vector(grid, static_cast<int>(probe->size()), name);
    }
    if (kind_s == "matrix") {
      if (!probe->is_array()) throw ValidationError("missing or invalid key 'values'");
      return Field::matrix(grid, static_cast<int>(probe->size()), name);
    }
    throw ValidationError("missing or invalid key 'kind'");
  }();

  std::size_t stride = 1;
  for (int a = 0; a < grid->tangential_axes() - 1; ++a) stride *= static_cast<std::size_t>(grid->x_count());
  for (int lvl = 0; lvl < grid->levels(); ++lvl)
    level_from_json(f, *grid, lvl, 0, 0, stride, values[static_cast<std::size_t>(lvl)],
                    "values[" + std::to_string(lvl) + "]");
  f.validate_finite();
  return f;
}

json solution_to_json(const DirichletSolution& sol, const std::string& name) {
  json rows = json::array();
  for (int j = 0; j < sol.grid.nt(); ++j) {
    json row = json::array();
    for (int i = 0; i < sol.grid.nx(); ++i) row.push_back(sol.u[sol.grid.node(i, j)]);
    rows.push_back(std::move(row));
  }
  return json{{"grid", json{{"Ts", sol.grid.Ts}, {"delta", sol.grid.delta}}},
              {"name", name},
              {"kind", "scalar"},
              {"values", rows},
              {"max_principle_ok", sol.max_principle_ok}};
}

json boundary_to_json(std::span<const double> values, double spacing, const std::string& name) {
  return json{{"grid", json{{"delta", spacing}}},
              {"name", name},
              {"kind", "scalar"},
              {"values", std::vector<double>(values.begin(), values.end())}};
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError("malformed JSON in '" + path + "': " + e.what());
  }
  return j;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

Field read_field(const std::string& path) { return field_from_json(read_json_file(path)); }

void write_field(const Field& f, const std::string& path) {
  write_json_file(field_to_json(f), path);
}

json carleson_report_to_json(const CarlesonReport& r) {
  json profile = json::array();
  for (const auto& [radius, value] : r.profile) profile.push_back(json{{"r", radius}, {"max", value}});
  return json{{"constant", r.constant},
              {"argmax", json{{"x", r.argmax_center}, {"r", r.argmax_radius}}},
              {"profile", profile},
              {"truncation", json{{"t_min", r.t_min}, {"T", r.T}}},
              {"family", r.family}};
}

json certificate_to_json(const MapCertificate& c) {
  return json{{"certified", c.certified},
              {"eps", c.eps},
              {"eps0", c.eps0},
              {"C0", c.C0},
              {"h_min", c.h_min},
              {"h_max", c.h_max},
              {"v_sup", c.v_sup},
              {"det_min", c.det_min},
              {"det_max", c.det_max},
              {"jac_sup", c.jac_sup},
              {"jac_inv_sup", c.jac_inv_sup},
              {"ellipticity_factor", c.ellipticity_factor},
              {"diagnostic", c.diagnostic}};
}

json map_to_json(const ChangeOfVariable& rho) {
  return json{{"v", field_to_json(rho.v())},
              {"h", field_to_json(rho.h())},
              {"certificate", certificate_to_json(rho.certificate())}};
}

json composite_to_json(const CompositeMap& map) {
  json stages = json::array();
  for (const auto& s : map.stages()) stages.push_back(map_to_json(*s));
  return json{{"order", "application"}, {"stages", stages}};
}

ChangeOfVariable map_from_json(const json& j) {
  Field v = field_from_json(require(j, "v", "map."));
  Field h = field_from_json(require(j, "h", "map."));
  std::optional<double> eps0;
  if (j.contains("certificate") && j.at("certificate").contains("eps0"))
    eps0 = j.at("certificate").at("eps0").get<double>();
  return ChangeOfVariable::build(std::move(v), std::move(h), eps0);
}

CompositeMap composite_from_json(const json& j) {
  const json& stages = require(j, "stages", "");
  if (!stages.is_array()) throw ValidationError("missing or invalid key 'stages'");
  std::vector<std::shared_ptr<const ChangeOfVariable>> out;
  for (const auto& s : stages)
    out.push_back(std::make_shared<ChangeOfVariable>(map_from_json(s)));
  return CompositeMap(std::move(out));
}

}  // namespace dkp::io
