#pragma once

#include <string>
#include <vector>

#include "ccgeom/geometry.hpp"

namespace ccgeom {

struct ExampleInfo {
  std::string name;       // catalog name, possibly parametric, e.g. "euclidean(n)"
  std::string summary;
};

std::vector<ExampleInfo> list_builtins();

// Catalog lookup. Parametric names take literal arguments:
//   euclidean(3), degree-line(1,1,0.4,0.4)
// Throws std::invalid_argument for unknown names.
GradedSystem builtin(const std::string& name);

}  // namespace ccgeom
