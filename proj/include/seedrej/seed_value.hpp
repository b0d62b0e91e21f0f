#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace seedrej {

// A seed is the secondary input handed to a task model alongside the primary
// input: a class label, a 2D click, or a cell in a hint grid.
struct CategoricalSeed {
  std::size_t index = 0;
  bool operator==(const CategoricalSeed&) const = default;
};

struct PlanarSeed {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const PlanarSeed&) const = default;
};

struct GridSeed {
  std::size_t row = 0;
  std::size_t col = 0;
  bool operator==(const GridSeed&) const = default;
};

using SeedValue = std::variant<CategoricalSeed, PlanarSeed, GridSeed>;

enum class SeedKind { categorical, planar, grid };

inline SeedKind kind_of(const SeedValue& s) {
  if (std::holds_alternative<CategoricalSeed>(s)) return SeedKind::categorical;
  if (std::holds_alternative<PlanarSeed>(s)) return SeedKind::planar;
  return SeedKind::grid;
}

inline const char* kind_name(SeedKind k) {
  switch (k) {
    case SeedKind::categorical: return "categorical";
    case SeedKind::planar: return "planar";
    case SeedKind::grid: return "grid";
  }
  return "?";
}

// Declared seed layout for a dataset: the variant plus its bounds.
struct SeedSchema {
  SeedKind kind = SeedKind::categorical;
  std::size_t cardinality = 0;  // categorical: valid indices are [0, cardinality)
  std::size_t grid_rows = 0;    // grid bounds
  std::size_t grid_cols = 0;

  bool operator==(const SeedSchema&) const = default;
};

inline void check_conforms(const SeedValue& s, const SeedSchema& schema,
                           const std::string& what) {
  if (kind_of(s) != schema.kind) {
    throw std::invalid_argument(what + ": seed kind " + kind_name(kind_of(s)) +
                                " does not match schema kind " + kind_name(schema.kind));
  }
  if (const auto* c = std::get_if<CategoricalSeed>(&s)) {
    if (schema.cardinality > 0 && c->index >= schema.cardinality)
      throw std::invalid_argument(what + ": categorical index out of bounds");
  } else if (const auto* g = std::get_if<GridSeed>(&s)) {
    if (schema.grid_rows > 0 && (g->row >= schema.grid_rows || g->col >= schema.grid_cols))
      throw std::invalid_argument(what + ": grid cell out of bounds");
  }
}

// Fixed-width numeric encoding used as model input: one-hot for categorical
// and grid seeds, raw coordinates for planar seeds.
inline std::size_t seed_encoding_width(const SeedSchema& schema) {
  switch (schema.kind) {
    case SeedKind::categorical: return schema.cardinality;
    case SeedKind::planar: return 2;
    case SeedKind::grid: return schema.grid_rows * schema.grid_cols;
  }
  return 0;
}

inline std::vector<double> encode_seed(const SeedValue& s, const SeedSchema& schema) {
  check_conforms(s, schema, "encode_seed");
  std::vector<double> enc(seed_encoding_width(schema), 0.0);
  if (const auto* c = std::get_if<CategoricalSeed>(&s)) {
    enc.at(c->index) = 1.0;
  } else if (const auto* p = std::get_if<PlanarSeed>(&s)) {
    enc[0] = p->x;
    enc[1] = p->y;
  } else {
    const auto& g = std::get<GridSeed>(s);
    enc.at(g.row * schema.grid_cols + g.col) = 1.0;
  }
  return enc;
}

}  // namespace seedrej
