#pragma once

#include "kfp/fields.hpp"
#include "kfp/geometry.hpp"
#include "kfp/grid.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace kfp::io {

/// Operator description file: {"layer_dims":[...], "blocks":[[row-major]...]}.
/// Block j is the d_{j+1} x d_j matrix mapping layer j to layer j+1.
BlockStructure load_operator(const std::string& path);
BlockStructure operator_from_json(const nlohmann::json& j);
nlohmann::json operator_to_json(const BlockStructure& bs);

/// Test-function spec: {"family": "gaussian"|"polynomial"|"modulated"|
/// "bump"|"hom_norm_power", ...}. Optional "dilate" and "translate" entries
/// apply the group transforms after construction.
AnalyticField function_from_json(const Geometry& g, const nlohmann::json& j);
AnalyticField load_function_spec(const Geometry& g, const std::string& path);

/// Flat binary grid dump with a short text header.
void dump_grid(const GridFunction& u, const std::string& path);
GridFunction load_grid(const std::string& path);

/// CSV slice export: fix all axes except two, write (a, b, value) rows.
void export_slice_csv(const GridFunction& u, int axis_a, int axis_b,
                      const std::vector<int>& fixed_idx, const std::string& path);

/// Deterministic formatting used by every CSV writer (%.12g).
std::string format_double(double v);

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

nlohmann::json load_json(const std::string& path);
void save_json(const nlohmann::json& j, const std::string& path);

}  // namespace kfp::io
