#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "seedrej/records.hpp"
#include "seedrej/rng.hpp"

namespace seedrej {

// Grouped k-fold assignment. All samples sharing a group_id land in the same
// fold, so correlated samples never straddle a train/test boundary.
struct FoldSplit {
  std::size_t k = 0;
  std::map<std::string, std::size_t> assignments;  // sample_id -> fold index

  std::size_t fold_of(const std::string& sample_id) const {
    auto it = assignments.find(sample_id);
    if (it == assignments.end())
      throw std::invalid_argument("fold_of: unknown sample_id '" + sample_id + "'");
    return it->second;
  }
};

// Shuffles the distinct group_ids with the seeded RNG and deals them
// round-robin onto folds. Deterministic for a fixed rng_seed.
inline FoldSplit split_folds(const Dataset& ds, std::size_t k, std::uint64_t rng_seed) {
  if (k < 2) throw std::invalid_argument("split_folds: k must be >= 2");

  std::vector<std::string> groups;  // first-appearance order
  std::unordered_map<std::string, std::size_t> group_index;
  for (const auto& s : ds.samples) {
    if (group_index.emplace(s.group_id, groups.size()).second) groups.push_back(s.group_id);
  }
  if (groups.size() < k)
    throw std::invalid_argument("split_folds: " + std::to_string(groups.size()) +
                                " distinct group_ids but k=" + std::to_string(k));

  Rng rng(rng_seed);
  rng.shuffle(groups);

  std::unordered_map<std::string, std::size_t> fold_of_group;
  for (std::size_t i = 0; i < groups.size(); ++i) fold_of_group[groups[i]] = i % k;

  FoldSplit split;
  split.k = k;
  for (const auto& s : ds.samples) split.assignments[s.sample_id] = fold_of_group[s.group_id];
  return split;
}

inline std::vector<std::size_t> fold_sample_indices(const Dataset& ds, const FoldSplit& split,
                                                    std::size_t fold) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < ds.samples.size(); ++i)
    if (split.fold_of(ds.samples[i].sample_id) == fold) idx.push_back(i);
  return idx;
}

}  // namespace seedrej
