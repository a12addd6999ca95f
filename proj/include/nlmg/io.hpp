#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "nlmg/field.hpp"

namespace nlmg {

using json = nlohmann::json;

/// Shortest decimal form that reads back to the same double.
std::string format_double(double v);
/// Comma/newline separated reals; throws ParseError naming `key` on bad tokens.
std::vector<double> parse_csv_reals(const std::string& text, const std::string& key);

json to_json(const ExteriorModel& m, int n);
ExteriorModel exterior_from_json(const json& j, int n);

/// {"n", "alpha", "window": {"lo", "hi"}, "spacing", "exterior", "values"}; values are a
/// row-major CSV string (one row per line in 2D). Reading also accepts a JSON array.
json to_json(const GraphField& u);
GraphField graph_from_json(const json& j);

/// {"n", "alpha", "box", "resolution", "occupancy", "exterior", "complement"}; occupancy is
/// a string of '0'/'1' characters in row-major voxel order.
json to_json(const VoxelSet& e);
VoxelSet voxels_from_json(const json& j);

/// Reads a file and parses JSON, mapping syntax errors to ParseError.
json read_json_file(const std::string& path);
/// Writes through a temporary file in the same directory and renames it into place.
void write_text_atomic(const std::string& path, const std::string& text);

GraphField read_graph_file(const std::string& path);
void write_graph_file(const GraphField& u, const std::string& path);
VoxelSet read_voxel_file(const std::string& path);
void write_voxel_file(const VoxelSet& e, const std::string& path);

}  // namespace nlmg
