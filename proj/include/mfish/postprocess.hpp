#pragma once

#include <map>

#include "mfish/bayes.hpp"
#include "mfish/features.hpp"
#include "mfish/watershed.hpp"

namespace mfish {

struct PostprocessConfig {
  /// Regions with strictly fewer pixels are reclassification candidates.
  long small_area_threshold = 50;

  void validate() const;
};

/// Region structure of one case together with its classification.
struct ClassifiedRegions {
  RegionTable regions;
  RegionAdjacencyGraph rag;
  std::map<RegionId, RegionFeatures> features;
  std::map<RegionId, int> classes;
  std::map<RegionId, Posterior> posteriors;
};

/// Collapses every RAG-connected group of equally classified regions into
/// the group's lowest region ID. Features are pooled, posteriors of merged
/// groups are dropped in favour of the shared class, and the RAG is
/// contracted.
void merge_same_class(ClassifiedRegions& state);

/// Single ascending-area pass: every region smaller than the threshold with
/// at least one neighbour takes the neighbour class it finds most probable
/// under its own features. Ends with merge_same_class. Returns the number of
/// regions whose class changed.
int reclassify_small(ClassifiedRegions& state, const ClassModel& model,
                     const PostprocessConfig& cfg, FeatureSet set = FeatureSet::MeanStd);

}  // namespace mfish
