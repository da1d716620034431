#ifndef DKP_FIELD_IO_HPP
#define DKP_FIELD_IO_HPP

#include <string>

#include <json.hpp>

#include "dkp/carleson.hpp"
#include "dkp/changevar.hpp"
#include "dkp/field.hpp"
#include "dkp/pdelab.hpp"

namespace dkp::io {

using nlohmann::json;

// Self-describing field container:
//   { "grid": {"n", "x_count", "T", "t_min", "m"},
//     "name": ..., "kind": "scalar"|"vector"|"matrix",
//     "values": [level][tangential, row-major]... }
// Scalars store numbers, vectors arrays, matrices arrays of row arrays.
json field_to_json(const Field& f);

// Validation failures throw ValidationError naming the offending key.
Field field_from_json(const json& j);

Field read_field(const std::string& path);
void write_field(const Field& f, const std::string& path);

json grid_to_json(const Grid& g);
GridPtr grid_from_json(const json& j);

json carleson_report_to_json(const CarlesonReport& r);
json certificate_to_json(const MapCertificate& c);
json map_to_json(const ChangeOfVariable& rho);       // {v, h, certificate}
json composite_to_json(const CompositeMap& map);     // {stages: [...]} in application order
ChangeOfVariable map_from_json(const json& j);       // rebuilds and re-certifies
CompositeMap composite_from_json(const json& j);

// Solver-rectangle data uses the same self-describing layout with its own
// grid block: {grid: {Ts, delta}, name, kind: "scalar", values: [row][col]}.
json solution_to_json(const DirichletSolution& sol, const std::string& name = "u");
json boundary_to_json(std::span<const double> values, double spacing, const std::string& name);

json read_json_file(const std::string& path);
void write_json_file(const json& j, const std::string& path);

}  // namespace dkp::io

#endif
