#ifndef DKP_CARLESON_HPP
#define DKP_CARLESON_HPP

#include <string>
#include <vector>

#include "dkp/field.hpp"

namespace dkp {

enum class BoxFamily { Dyadic, Dense };

// Truncated Carleson constant of |f|^2 dt/t dx over a family of boxes
// B(x,r) x (t_min, r]. Balls are per-axis (sup-norm) throughout; level j
// contributes weight log(2)/m (midpoint rule in log t).
struct CarlesonReport {
  double constant = 0;
  std::vector<double> argmax_center;  // tangential coordinates
  double argmax_radius = 0;
  // per-scale profile: for each scanned radius, the max box average
  std::vector<std::pair<double, double>> profile;
  double t_min = 0;
  double T = 0;
  std::string family;
};

// Nodewise sup of |f| over cells intersecting B(y,t) x [t/2, 2t]. Coverage is
// conservative (a cell is included when it merely touches the region), so the
// discrete f_sup dominates |f| at every node.
Field fsup_field(const Field& f);

CarlesonReport carleson_constant(const Field& f, BoxFamily family);

// carleson_constant(fsup_field(f), dyadic)
CarlesonReport cmsup_constant(const Field& f);

}  // namespace dkp

#endif
