// Shared test fixtures.
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "seedrej/records.hpp"
#include "seedrej/rng.hpp"

namespace helpers {

// Dataset whose sample AEs equal the given values (gold loss 0, candidate
// loss = AE). Ids are zero-padded so sample_id order matches input order.
inline seedrej::Dataset dataset_with_aes(const std::vector<double>& aes) {
  seedrej::Dataset ds;
  seedrej::SeedSchema schema;
  schema.kind = seedrej::SeedKind::categorical;
  schema.cardinality = 2;
  ds.schema = schema;
  char buf[16];
  for (std::size_t i = 0; i < aes.size(); ++i) {
    seedrej::SeedSample s;
    std::snprintf(buf, sizeof(buf), "%06zu", i);
    s.sample_id = buf;
    s.group_id = s.sample_id;
    s.candidate_seed = seedrej::CategoricalSeed{0};
    s.gold_seed = seedrej::CategoricalSeed{0};
    s.loss_candidate = aes[i];
    s.loss_gold = 0.0;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

// Random AE mix with ties and zeros, sizes drawn in [1, max_n].
inline std::vector<double> random_aes(seedrej::Rng& rng, std::size_t max_n) {
  std::size_t n = 1 + rng.uniform_index(max_n);
  std::vector<double> aes(n);
  for (double& ae : aes) {
    double r = rng.uniform();
    if (r < 0.4)
      ae = 0.0;
    else if (r < 0.6)
      ae = static_cast<double>(rng.uniform_index(4));  // integer ties
    else
      ae = rng.uniform(0.0, 10.0);
  }
  return aes;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("seedrej_test_" + tag + "_" + std::to_string(counter()++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  static std::size_t& counter() {
    static std::size_t n = 0;
    return n;
  }
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace helpers
