#ifndef DKP_CLI_HPP
#define DKP_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace dkp::cli {

// Exit codes: 0 success, 1 threshold failure, 2 input validation,
// 3 mathematical precondition, 4 resolution/convergence.
struct RunConfig {
  std::string command;
  std::string input;  // fixture name or JSON field path (analyze/transform)
  std::string fixture = "diag-b";

  // analysis grid
  int n = 2;
  int x_count = 64;
  double T = 0.5;
  double t_min = 0;  // 0 -> T / 64
  int m = 4;

  // pipeline
  double eps0 = 0;  // 0 -> certification default
  bool skip_mollify = false;
  bool diagonal = false;
  int n_max = 1 << 16;

  // solver
  double delta = 1.0 / 32;
  double Ts = 1.0;
  double q = 2.0;
  std::vector<double> apertures = {2.0, 4.0};

  std::string out_dir = ".";

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dkp::cli

#endif
