#pragma once

#include "polynn/fitcore.hpp"

#include <iosfwd>
#include <string>

namespace polynn {

// Version line written first in every model file. Readers reject anything else.
inline constexpr const char* kModelVersion = "polynn-model v1";

// Line-oriented text container. Reals are written with 17 significant digits
// so a save/load cycle reproduces predictions bit for bit.
//
//     polynn-model v1
//     method <ols|ridge|logistic>
//     lambda <real>
//     schema <count>             followed by <count> schema sidecar lines
//     design <count>             followed by <count> design column names
//     classes <q>                followed by q class level lines
//     pca none | pca <m> <r> <retained>
//       means <m reals>
//       component <m reals>      r lines, one per retained component
//     termset v1 ... end         see write_termset
//     std_means <l reals>
//     std_scales <l reals>
//     intercepts <k reals>
//     coefficients <l> <k>       followed by l lines of k reals
//     end
void write_model(std::ostream& out, const PolyModel& model);
[[nodiscard]] PolyModel read_model(std::istream& in);

void save_model(const std::string& path, const PolyModel& model);
[[nodiscard]] PolyModel load_model(const std::string& path);

}  // namespace polynn
