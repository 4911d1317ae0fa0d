#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "pathflow/pathspace.hpp"

namespace pathflow {

// CSV: header "t,x0,x1,..." then one row per node. Paths carry a final row
// "terminal" when the terminal value differs from the left limit.
void write_csv(std::ostream& os, const WindowPath& path);
// CSV rows use tail times r in [-T, 0]; a last row labelled "head" carries x1.
void write_csv(std::ostream& os, const ProductState& x);

// JSON envelopes:
//   state: {"grid":{"T":..,"n_steps":..}, "head":[..], "tail":[[..],..]}
//   path:  {"grid":{..}, "t_index":k, "values":[[..],..], "terminal":[..]}
nlohmann::json to_json(const ProductState& x);
nlohmann::json to_json(const WindowPath& path);
ProductState state_from_json(const nlohmann::json& j);
WindowPath path_from_json(const nlohmann::json& j);

}  // namespace pathflow
