#pragma once

#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "seedrej/seed_value.hpp"

namespace seedrej {

// One evaluation record: a (primary input, candidate seed) pair with the
// matching gold-standard seed and the task losses measured under each seed.
// Gold-side fields are optional so that pure-inference records can be carried
// through the same pipeline; evaluation rejects records without them.
struct SeedSample {
  std::string sample_id;
  std::string group_id;  // defaults to sample_id when absent
  SeedValue candidate_seed;
  std::optional<SeedValue> gold_seed;
  double loss_candidate = 0.0;
  std::optional<double> loss_gold;
  std::map<std::string, std::vector<double>> features;

  bool has_gold_losses() const { return loss_gold.has_value(); }
};

struct Dataset {
  std::vector<SeedSample> samples;
  std::optional<SeedSchema> schema;  // absent only for an empty dataset

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

namespace detail {

inline SeedValue seed_from_json(const nlohmann::json& j, std::size_t line_no,
                                const char* field) {
  auto fail = [&](const std::string& why) -> SeedValue {
    throw std::runtime_error("line " + std::to_string(line_no) + ": field '" + field +
                             "': " + why);
  };
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    return fail("expected object with a 'kind' string");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "cat") {
    if (!j.contains("i") || !j["i"].is_number_integer() || j["i"].get<long long>() < 0)
      return fail("categorical seed needs nonnegative integer 'i'");
    return CategoricalSeed{static_cast<std::size_t>(j["i"].get<long long>())};
  }
  if (kind == "xy") {
    if (!j.contains("x") || !j.contains("y") || !j["x"].is_number() || !j["y"].is_number())
      return fail("planar seed needs numbers 'x' and 'y'");
    double x = j["x"].get<double>();
    double y = j["y"].get<double>();
    if (!std::isfinite(x) || !std::isfinite(y)) return fail("planar coordinates must be finite");
    return PlanarSeed{x, y};
  }
  if (kind == "grid") {
    if (!j.contains("r") || !j.contains("c") || !j["r"].is_number_integer() ||
        !j["c"].is_number_integer() || j["r"].get<long long>() < 0 ||
        j["c"].get<long long>() < 0)
      return fail("grid seed needs nonnegative integers 'r' and 'c'");
    return GridSeed{static_cast<std::size_t>(j["r"].get<long long>()),
                    static_cast<std::size_t>(j["c"].get<long long>())};
  }
  return fail("unknown seed kind '" + kind + "'");
}

inline nlohmann::json seed_to_json(const SeedValue& s) {
  nlohmann::json j;
  if (const auto* c = std::get_if<CategoricalSeed>(&s)) {
    j["kind"] = "cat";
    j["i"] = c->index;
  } else if (const auto* p = std::get_if<PlanarSeed>(&s)) {
    j["kind"] = "xy";
    j["x"] = p->x;
    j["y"] = p->y;
  } else {
    const auto& g = std::get<GridSeed>(s);
    j["kind"] = "grid";
    j["r"] = g.row;
    j["c"] = g.col;
  }
  return j;
}

inline double loss_from_json(const nlohmann::json& j, std::size_t line_no, const char* field) {
  if (!j.is_number())
    throw std::runtime_error("line " + std::to_string(line_no) + ": field '" + field +
                             "' must be a number");
  double v = j.get<double>();
  if (!std::isfinite(v))
    throw std::runtime_error("line " + std::to_string(line_no) + ": field '" + field +
                             "' must be finite");
  if (v < 0.0)
    throw std::runtime_error("line " + std::to_string(line_no) + ": negative loss in field '" +
                             field + "'");
  return v;
}

inline void widen_schema(SeedSchema& schema, const SeedValue& s, std::size_t line_no,
                         const char* field) {
  if (kind_of(s) != schema.kind)
    throw std::runtime_error("line " + std::to_string(line_no) + ": field '" + field +
                             "': seed kind " + kind_name(kind_of(s)) +
                             " does not match dataset schema " + kind_name(schema.kind));
  if (const auto* c = std::get_if<CategoricalSeed>(&s)) {
    schema.cardinality = std::max(schema.cardinality, c->index + 1);
  } else if (const auto* g = std::get_if<GridSeed>(&s)) {
    schema.grid_rows = std::max(schema.grid_rows, g->row + 1);
    schema.grid_cols = std::max(schema.grid_cols, g->col + 1);
  }
}

}  // namespace detail

// Parses the JSON-lines record stream: one object per line with fields
// `id`, `group` (optional), `seed_c`, `seed_gs` (optional), `loss_c`,
// `loss_gs` (optional), `features`. The seed schema is inferred from the
// first record and enforced on the rest; bounds widen to cover the data.
inline Dataset parse_records(std::istream& in) {
  Dataset ds;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": malformed record: " + e.what());
    }
    if (!j.is_object())
      throw std::runtime_error("line " + std::to_string(line_no) + ": record must be an object");
    if (!j.contains("id") || !j["id"].is_string())
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": field 'id' must be a string");

    SeedSample s;
    s.sample_id = j["id"].get<std::string>();
    if (!seen_ids.insert(s.sample_id).second)
      throw std::runtime_error("line " + std::to_string(line_no) + ": duplicate sample_id '" +
                               s.sample_id + "'");
    if (j.contains("group")) {
      if (!j["group"].is_string())
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": field 'group' must be a string");
      s.group_id = j["group"].get<std::string>();
    } else {
      s.group_id = s.sample_id;
    }

    if (!j.contains("seed_c"))
      throw std::runtime_error("line " + std::to_string(line_no) + ": missing field 'seed_c'");
    s.candidate_seed = detail::seed_from_json(j["seed_c"], line_no, "seed_c");
    if (j.contains("seed_gs"))
      s.gold_seed = detail::seed_from_json(j["seed_gs"], line_no, "seed_gs");

    if (!j.contains("loss_c"))
      throw std::runtime_error("line " + std::to_string(line_no) + ": missing field 'loss_c'");
    s.loss_candidate = detail::loss_from_json(j["loss_c"], line_no, "loss_c");
    if (j.contains("loss_gs")) s.loss_gold = detail::loss_from_json(j["loss_gs"], line_no, "loss_gs");

    if (j.contains("features")) {
      if (!j["features"].is_object())
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": field 'features' must be an object");
      for (const auto& [name, arr] : j["features"].items()) {
        if (!arr.is_array())
          throw std::runtime_error("line " + std::to_string(line_no) + ": feature '" + name +
                                   "' must be an array of numbers");
        std::vector<double> vals;
        vals.reserve(arr.size());
        for (const auto& v : arr) {
          if (!v.is_number())
            throw std::runtime_error("line " + std::to_string(line_no) + ": feature '" + name +
                                     "' must be an array of numbers");
          vals.push_back(v.get<double>());
        }
        s.features.emplace(name, std::move(vals));
      }
    }

    if (!ds.schema) {
      SeedSchema schema;
      schema.kind = kind_of(s.candidate_seed);
      ds.schema = schema;
    }
    detail::widen_schema(*ds.schema, s.candidate_seed, line_no, "seed_c");
    if (s.gold_seed) detail::widen_schema(*ds.schema, *s.gold_seed, line_no, "seed_gs");

    ds.samples.push_back(std::move(s));
  }
  return ds;
}

inline Dataset parse_records(const std::string& text) {
  std::istringstream in(text);
  return parse_records(in);
}

// Inverse of parse_records: one JSON object per line, LF endings, keys in
// lexicographic order, doubles emitted with round-trip precision.
inline void serialize_records(const Dataset& ds, std::ostream& out) {
  for (const auto& s : ds.samples) {
    nlohmann::json j;
    j["id"] = s.sample_id;
    if (s.group_id != s.sample_id) j["group"] = s.group_id;
    j["seed_c"] = detail::seed_to_json(s.candidate_seed);
    if (s.gold_seed) j["seed_gs"] = detail::seed_to_json(*s.gold_seed);
    j["loss_c"] = s.loss_candidate;
    if (s.loss_gold) j["loss_gs"] = *s.loss_gold;
    if (!s.features.empty()) {
      nlohmann::json f = nlohmann::json::object();
      for (const auto& [name, vals] : s.features) f[name] = vals;
      j["features"] = std::move(f);
    }
    out << j.dump() << "\n";
  }
}

inline std::string serialize_records(const Dataset& ds) {
  std::ostringstream out;
  serialize_records(ds, out);
  return out.str();
}

}  // namespace seedrej
