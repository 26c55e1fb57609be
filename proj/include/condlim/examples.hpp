#pragma once

#include <string>
#include <vector>

#include "condlim/model_io.hpp"

namespace condlim {

struct ExampleModel {
  std::string name;      // file stem
  std::string summary;
  ModelFile file;        // "psi" and the observable "f"
};

// (1) full 2-shift, ψ = log 2, f = ±1 on x_0 (simple random walk);
// (2) golden-mean shift with the Parry potential and a centred non-lattice depth-3 f;
// (3) a 3-symbol shift with a non-symmetric transition matrix, a generic depth-2
//     potential and a centred two-sided f of window [-1, 2).
std::vector<ExampleModel> shipped_examples();
ExampleModel shipped_example(const std::string& name);

// Writes <dir>/<name>.json for every example; returns the paths.
std::vector<std::string> ship_examples(const std::string& dir);

}  // namespace condlim
