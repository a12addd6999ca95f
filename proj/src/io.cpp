#include "nlmg/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "nlmg/errors.hpp"

namespace nlmg {
namespace {

const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ParseError("expected an object at '" + path + "'", path);
  auto it = j.find(key);
  if (it == j.end()) {
    const std::string full = path.empty() ? key : path + "." + key;
    throw ParseError("missing key '" + full + "'", full);
  }
  return *it;
}

double get_real(const json& j, const std::string& key, const std::string& path = "") {
  const json& v = require(j, key, path);
  const std::string full = path.empty() ? key : path + "." + key;
  if (!v.is_number()) throw ParseError("key '" + full + "' must be a number", full);
  return v.get<double>();
}

int get_int(const json& j, const std::string& key, const std::string& path = "") {
  const json& v = require(j, key, path);
  const std::string full = path.empty() ? key : path + "." + key;
  if (!v.is_number_integer()) throw ParseError("key '" + full + "' must be an integer", full);
  return v.get<int>();
}

Vec get_vec(const json& j, const std::string& key, int dim, const std::string& path = "") {
  const json& v = require(j, key, path);
  const std::string full = path.empty() ? key : path + "." + key;
  Vec out{};
  if (dim == 1 && v.is_number()) {
    out[0] = v.get<double>();
    return out;
  }
  if (!v.is_array() || static_cast<int>(v.size()) != dim) {
    throw ParseError("key '" + full + "' must be an array of " + std::to_string(dim) + " numbers", full);
  }
  for (int a = 0; a < dim; ++a) {
    if (!v[a].is_number()) throw ParseError("key '" + full + "' holds a non-number", full);
    out[a] = v[a].get<double>();
  }
  return out;
}

json vec_json(const Vec& v, int dim) {
  json a = json::array();
  for (int i = 0; i < dim; ++i) a.push_back(v[i]);
  return a;
}

FracParams params_from(const json& j) {
  const int n = get_int(j, "n");
  const double alpha = get_real(j, "alpha");
  try {
    return make_params(n, alpha);
  } catch (const ParameterError& e) {
    throw ParseError(std::string("invalid parameters: ") + e.what(), n == 1 || n == 2 ? "alpha" : "n");
  }
}

Box box_from(const json& j, const std::string& key, int dim) {
  const json& b = require(j, key, "");
  Box box;
  box.dim = dim;
  box.lo = get_vec(b, "lo", dim, key);
  box.hi = get_vec(b, "hi", dim, key);
  return box;
}

json box_json(const Box& b) { return {{"lo", vec_json(b.lo, b.dim)}, {"hi", vec_json(b.hi, b.dim)}}; }

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<double> parse_csv_reals(const std::string& text, const std::string& key) {
  std::vector<double> out;
  const char* p = text.data();
  const char* end = p + text.size();
  auto is_sep = [](char c) { return c == ',' || c == '\n' || c == '\r' || c == ' ' || c == '\t'; };
  while (p < end) {
    while (p < end && is_sep(*p)) ++p;
    if (p == end) break;
    const char* q = p;
    while (q < end && !is_sep(*q)) ++q;
    double v = 0.0;
    const char* start = (*p == '+') ? p + 1 : p;
    auto r = std::from_chars(start, q, v);
    if (r.ec != std::errc() || r.ptr != q) {
      throw ParseError("key '" + key + "': bad number '" + std::string(p, q) + "'", key);
    }
    out.push_back(v);
    p = q;
  }
  return out;
}

json to_json(const ExteriorModel& m, int n) {
  if (auto* a = std::get_if<AffineExterior>(&m)) {
    return {{"type", "affine"}, {"gradient", vec_json(a->gradient, n)}, {"offset", a->offset}};
  }
  if (auto* h = std::get_if<Homogeneous1Exterior>(&m)) {
    return {{"type", "homogeneous1"}, {"center", vec_json(h->center, n)}, {"apex_value", h->apex}};
  }
  return {{"type", "constant_beyond"}};
}

ExteriorModel exterior_from_json(const json& j, int n) {
  const json& t = require(j, "type", "exterior");
  if (!t.is_string()) throw ParseError("key 'exterior.type' must be a string", "exterior.type");
  const std::string type = t.get<std::string>();
  if (type == "affine") {
    AffineExterior a;
    a.gradient = get_vec(j, "gradient", n, "exterior");
    a.offset = get_real(j, "offset", "exterior");
    return a;
  }
  if (type == "constant_beyond") return ConstantBeyondExterior{};
  if (type == "homogeneous1") {
    Homogeneous1Exterior h;
    if (j.contains("center")) h.center = get_vec(j, "center", n, "exterior");
    if (j.contains("apex_value")) h.apex = get_real(j, "apex_value", "exterior");
    return h;
  }
  throw ParseError("unknown exterior type '" + type + "'", "exterior.type");
}

json to_json(const GraphField& u) {
  std::string csv;
  const int cols = u.dim() == 1 ? static_cast<int>(u.node_count()) : u.count(1);
  for (std::size_t k = 0; k < u.node_count(); ++k) {
    if (k > 0) csv += (k % cols == 0) ? '\n' : ',';
    csv += format_double(u.values()[k]);
  }
  json j;
  j["n"] = u.dim();
  j["alpha"] = u.params().alpha;
  j["window"] = box_json(u.window());
  j["spacing"] = u.spacing();
  j["exterior"] = to_json(u.exterior(), u.dim());
  j["values"] = csv;
  return j;
}

GraphField graph_from_json(const json& j) {
  const FracParams p = params_from(j);
  const Box window = box_from(j, "window", p.n);
  const double h = get_real(j, "spacing");
  const ExteriorModel ext = exterior_from_json(require(j, "exterior", ""), p.n);
  const json& vj = require(j, "values", "");
  std::vector<double> values;
  if (vj.is_string()) {
    values = parse_csv_reals(vj.get<std::string>(), "values");
  } else if (vj.is_array()) {
    for (const auto& e : vj) {
      if (e.is_array()) {
        for (const auto& x : e) {
          if (!x.is_number()) throw ParseError("key 'values' holds a non-number", "values");
          values.push_back(x.get<double>());
        }
      } else if (e.is_number()) {
        values.push_back(e.get<double>());
      } else {
        throw ParseError("key 'values' holds a non-number", "values");
      }
    }
  } else {
    throw ParseError("key 'values' must be a CSV string or an array", "values");
  }
  try {
    return GraphField(p, window, h, std::move(values), ext);
  } catch (const DomainError& e) {
    throw ParseError(std::string("inconsistent graph field: ") + e.what(), "values");
  }
}

json to_json(const VoxelSet& e) {
  std::string occ(e.occupancy().size(), '0');
  for (std::size_t k = 0; k < occ.size(); ++k) occ[k] = e.occupancy()[k] ? '1' : '0';
  json res = json::array();
  for (int a = 0; a < e.dim(); ++a) res.push_back(e.resolution()[a]);
  json ext;
  const int d = e.dim();
  if (auto* hs = std::get_if<HalfSpaceExterior>(&e.exterior())) {
    ext = {{"type", "halfspace"}, {"normal", vec_json(hs->normal, d)}, {"offset", hs->offset}};
  } else if (auto* sg = std::get_if<SubgraphExterior>(&e.exterior())) {
    ext = {{"type", "subgraph_of"}, {"graph", to_json(*sg->graph)}};
  } else if (auto* c = std::get_if<ConeExterior>(&e.exterior())) {
    ext = {{"type", "cone_from"}, {"apex", vec_json(c->apex, d)}};
  } else {
    ext = {{"type", "empty"}};
  }
  json j;
  j["n"] = e.params().n;
  j["alpha"] = e.params().alpha;
  j["box"] = box_json(e.box());
  j["resolution"] = res;
  j["occupancy"] = occ;
  j["exterior"] = ext;
  j["complement"] = e.complemented();
  return j;
}

VoxelSet voxels_from_json(const json& j) {
  const FracParams p = params_from(j);
  const int d = p.ambient_dim();
  const Box box = box_from(j, "box", d);
  const json& rj = require(j, "resolution", "");
  std::array<int, kMaxDim> res{1, 1, 1};
  if (!rj.is_array() || static_cast<int>(rj.size()) != d) {
    throw ParseError("key 'resolution' must be an array of " + std::to_string(d) + " integers", "resolution");
  }
  for (int a = 0; a < d; ++a) {
    if (!rj[a].is_number_integer()) throw ParseError("key 'resolution' holds a non-integer", "resolution");
    res[a] = rj[a].get<int>();
  }
  const json& oj = require(j, "occupancy", "");
  if (!oj.is_string()) throw ParseError("key 'occupancy' must be a string of 0/1", "occupancy");
  std::vector<std::uint8_t> occ;
  for (char c : oj.get<std::string>()) {
    if (c == '0' || c == '1') {
      occ.push_back(static_cast<std::uint8_t>(c - '0'));
    } else if (c != '\n' && c != ',' && c != ' ') {
      throw ParseError("key 'occupancy' holds a character other than 0/1", "occupancy");
    }
  }
  const json& ej = require(j, "exterior", "");
  const json& tj = require(ej, "type", "exterior");
  if (!tj.is_string()) throw ParseError("key 'exterior.type' must be a string", "exterior.type");
  const std::string type = tj.get<std::string>();
  SetExterior ext;
  if (type == "halfspace") {
    ext = HalfSpaceExterior{get_vec(ej, "normal", d, "exterior"), get_real(ej, "offset", "exterior")};
  } else if (type == "subgraph_of") {
    ext = SubgraphExterior{std::make_shared<const GraphField>(graph_from_json(require(ej, "graph", "exterior")))};
  } else if (type == "cone_from") {
    ext = ConeExterior{get_vec(ej, "apex", d, "exterior")};
  } else if (type == "empty") {
    ext = EmptyExterior{};
  } else {
    throw ParseError("unknown exterior type '" + type + "'", "exterior.type");
  }
  bool complement = false;
  if (j.contains("complement")) {
    if (!j["complement"].is_boolean()) throw ParseError("key 'complement' must be a boolean", "complement");
    complement = j["complement"].get<bool>();
  }
  try {
    return VoxelSet(p, box, res, std::move(occ), std::move(ext), complement);
  } catch (const DomainError& e) {
    throw ParseError(std::string("inconsistent voxel set: ") + e.what(), "occupancy");
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ParseError("malformed JSON in '" + path + "': " + e.what());
  }
}

void write_text_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot move output into place at '" + path + "': " + ec.message());
  }
}

GraphField read_graph_file(const std::string& path) { return graph_from_json(read_json_file(path)); }

void write_graph_file(const GraphField& u, const std::string& path) {
  write_text_atomic(path, to_json(u).dump(2) + "\n");
}

VoxelSet read_voxel_file(const std::string& path) { return voxels_from_json(read_json_file(path)); }

void write_voxel_file(const VoxelSet& e, const std::string& path) {
  write_text_atomic(path, to_json(e).dump(2) + "\n");
}

}  // namespace nlmg
