#include "surfconv/d4.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "surfconv/error.h"

namespace surfconv {

namespace {

void RequirePositiveDepth(double z) {
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw Error(ErrorCode::kNonPositiveDepth,
                "depth must be positive and finite");
  }
}

struct DepthGroup {
  double depth;
  double weight;  // summed importance of all samples at this depth
};

// Importance-weighted median of groups[first, last).
double WeightedMedian(const std::vector<DepthGroup>& groups, std::size_t first,
                      std::size_t last) {
  double total = 0.0;
  for (std::size_t g = first; g < last; ++g) total += groups[g].weight;
  double cum = 0.0;
  for (std::size_t g = first; g < last; ++g) {
    cum += groups[g].weight;
    if (cum >= 0.5 * total) return groups[g].depth;
  }
  return groups[last - 1].depth;
}

LevelPartition FitSorted(std::vector<double> depths, double gamma,
                         std::size_t n_levels) {
  if (depths.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no depths to fit");
  }
  if (n_levels < 1) {
    throw Error(ErrorCode::kInvalidArgument, "n_levels must be >= 1");
  }
  for (double z : depths) RequirePositiveDepth(z);
  std::sort(depths.begin(), depths.end());

  std::vector<DepthGroup> groups;
  for (double z : depths) {
    const double w = Importance(z, gamma);
    if (!groups.empty() && groups.back().depth == z) {
      groups.back().weight += w;
    } else {
      groups.push_back({z, w});
    }
  }
  const std::size_t n_groups = groups.size();
  if (n_groups < n_levels) {
    throw Error(ErrorCode::kTooFewDistinctDepths,
                "need at least " + std::to_string(n_levels) +
                    " distinct depths, got " + std::to_string(n_groups));
  }

  // cum[g] = summed weight of groups [0, g]; splitting after group g puts
  // groups [0, g] below the boundary.
  std::vector<double> cum(n_groups);
  double running = 0.0;
  for (std::size_t g = 0; g < n_groups; ++g) {
    running += groups[g].weight;
    cum[g] = running;
  }
  const double total = running;

  // split[k] = last group of level k, for k < n_levels - 1.
  std::vector<std::size_t> split(n_levels - 1);
  std::size_t lower = 0;  // smallest admissible split index for this k
  for (std::size_t k = 1; k < n_levels; ++k) {
    const double target = total * static_cast<double>(k) /
                          static_cast<double>(n_levels);
    const std::size_t upper = n_groups - 1 - (n_levels - k);
    // First split whose cumulative weight reaches the target.
    std::size_t hi = static_cast<std::size_t>(
        std::lower_bound(cum.begin(), cum.end(), target) - cum.begin());
    hi = std::min(hi, n_groups - 1);
    std::size_t best = hi;
    if (hi > 0 && target - cum[hi - 1] < cum[hi] - target) best = hi - 1;
    best = std::clamp(best, lower, upper);
    split[k - 1] = best;
    lower = best + 1;
  }

  LevelPartition part;
  part.gamma = gamma;
  part.boundaries.push_back(groups.front().depth);
  std::size_t first = 0;
  for (std::size_t k = 0; k < n_levels; ++k) {
    const std::size_t last = k + 1 < n_levels ? split[k] + 1 : n_groups;
    part.rep_depths.push_back(WeightedMedian(groups, first, last));
    if (k + 1 < n_levels) {
      part.boundaries.push_back(
          0.5 * (groups[last - 1].depth + groups[last].depth));
    }
    first = last;
  }
  part.boundaries.push_back(groups.back().depth);
  if (n_levels == 1 && part.boundaries[0] == part.boundaries[1]) {
    // A single distinct depth still needs a non-empty interval.
    part.boundaries[1] = std::nextafter(part.boundaries[1],
                                        std::numeric_limits<double>::max());
  }
  return part;
}

}  // namespace

void LevelPartition::Validate() const {
  if (rep_depths.empty() || boundaries.size() != rep_depths.size() + 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "partition needs n_levels >= 1 and n_levels + 1 boundaries");
  }
  for (std::size_t k = 0; k + 1 < boundaries.size(); ++k) {
    if (!(boundaries[k] < boundaries[k + 1])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "partition boundaries must be strictly increasing");
    }
  }
  for (std::size_t n = 0; n < rep_depths.size(); ++n) {
    if (!(rep_depths[n] > 0.0) || rep_depths[n] < boundaries[n] ||
        rep_depths[n] > boundaries[n + 1]) {
      throw Error(ErrorCode::kInvalidArgument,
                  "representative depth outside its level");
    }
  }
}

double Importance(double z, double gamma) {
  RequirePositiveDepth(z);
  if (gamma == 0.0) return 1.0;
  if (gamma == 1.0) return z;
  if (gamma == 2.0) return z * z;
  return std::pow(z, gamma);
}

LevelPartition FitPartition(std::span<const float> depths, double gamma,
                            std::size_t n_levels) {
  return FitSorted(std::vector<double>(depths.begin(), depths.end()), gamma,
                   n_levels);
}

LevelPartition FitPartition(std::span<const double> depths, double gamma,
                            std::size_t n_levels) {
  return FitSorted(std::vector<double>(depths.begin(), depths.end()), gamma,
                   n_levels);
}

std::size_t AssignLevel(const LevelPartition& part, double z) {
  RequirePositiveDepth(z);
  const auto interior_begin = part.boundaries.begin() + 1;
  const auto interior_end = part.boundaries.end() - 1;
  return static_cast<std::size_t>(
      std::upper_bound(interior_begin, interior_end, z) - interior_begin);
}

std::vector<std::size_t> DepthHistogram(std::span<const float> depths,
                                        std::size_t n_bins,
                                        HistogramRange range) {
  if (depths.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no depths to histogram");
  }
  if (n_bins < 1 || !(range.hi > range.lo)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid histogram bins/range");
  }
  std::vector<std::size_t> counts(n_bins, 0);
  const double width = (range.hi - range.lo) / static_cast<double>(n_bins);
  for (float zf : depths) {
    const double z = zf;
    if (!(z >= range.lo && z <= range.hi)) continue;
    auto bin = static_cast<std::size_t>((z - range.lo) / width);
    ++counts[std::min(bin, n_bins - 1)];
  }
  return counts;
}

std::string PartitionToJson(const LevelPartition& part) {
  nlohmann::json j;
  j["gamma"] = part.gamma;
  j["n_levels"] = part.n_levels();
  j["boundaries"] = part.boundaries;
  j["rep_depths"] = part.rep_depths;
  return j.dump(2) + "\n";
}

LevelPartition PartitionFromJson(const std::string& text) {
  LevelPartition part;
  try {
    const auto j = nlohmann::json::parse(text);
    part.gamma = j.at("gamma").get<double>();
    part.boundaries = j.at("boundaries").get<std::vector<double>>();
    part.rep_depths = j.at("rep_depths").get<std::vector<double>>();
    if (j.contains("n_levels") &&
        j.at("n_levels").get<std::size_t>() != part.rep_depths.size()) {
      throw Error(ErrorCode::kParse, "n_levels disagrees with rep_depths");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("partition: ") + e.what());
  }
  part.Validate();
  return part;
}

void SavePartition(const std::string& path, const LevelPartition& part) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << PartitionToJson(part);
}

LevelPartition LoadPartition(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return PartitionFromJson(ss.str());
}

}  // namespace surfconv
