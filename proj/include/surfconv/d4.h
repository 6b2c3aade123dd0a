#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace surfconv {

// Depth-axis partition into levels of equal summed importance z^gamma.
// Levels are indexed 0..n_levels-1 from near to far.
struct LevelPartition {
  double gamma = 1.0;
  // n_levels + 1 strictly increasing values; front/back are the fitted range.
  std::vector<double> boundaries;
  // One representative depth per level, inside that level's interval.
  std::vector<double> rep_depths;

  std::size_t n_levels() const { return rep_depths.size(); }

  // Throws kInvalidArgument if the invariants above do not hold.
  void Validate() const;

  bool operator==(const LevelPartition&) const = default;
};

double Importance(double z, double gamma);

// Weighted quantile split of the depth multiset under weights z^gamma.
// Each interior boundary sits at the split between adjacent distinct depths
// whose cumulative weight is closest to k*W/N; an exact tie takes the upper
// split. Boundaries land at the midpoint between the adjacent distinct
// depths, so equal depths always share a level.
LevelPartition FitPartition(std::span<const float> depths, double gamma,
                            std::size_t n_levels);
LevelPartition FitPartition(std::span<const double> depths, double gamma,
                            std::size_t n_levels);

// Level index for depth z. Intervals are half-open [b_k, b_k+1) except the
// last, which is closed; depths outside the fitted range clamp.
std::size_t AssignLevel(const LevelPartition& part, double z);

struct HistogramRange {
  double lo = 0.0;
  double hi = 1.0;
};

// Fixed-width bins over [lo, hi]; hi itself lands in the last bin and
// out-of-range depths are skipped.
std::vector<std::size_t> DepthHistogram(std::span<const float> depths,
                                        std::size_t n_bins,
                                        HistogramRange range);

// JSON record {"gamma", "boundaries", "rep_depths"}; doubles round-trip
// exactly.
std::string PartitionToJson(const LevelPartition& part);
LevelPartition PartitionFromJson(const std::string& text);
void SavePartition(const std::string& path, const LevelPartition& part);
LevelPartition LoadPartition(const std::string& path);

}  // namespace surfconv
