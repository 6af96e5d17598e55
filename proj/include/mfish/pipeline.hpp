#pragma once

#include <array>
#include <atomic>
#include <functional>
#include <map>
#include <optional>
#include <thread>
#include <vector>

#include "mfish/bayes.hpp"
#include "mfish/config.hpp"
#include "mfish/features.hpp"
#include "mfish/image.hpp"
#include "mfish/postprocess.hpp"
#include "mfish/watershed.hpp"

namespace mfish {

/// Everything the segmentation stage produces for one case.
struct Segmentation {
  GrayImage blob_removed;
  BinaryMask mask;
  /// Quantised gradient after minima suppression; the flooded relief.
  GradientImage relief;
  LabelMap watershed;
  /// Basins before intersection with the mask.
  int basin_count = 0;
  RegionTable regions;
  RegionAdjacencyGraph rag;
  Connectivity connectivity = Connectivity::Eight;
};

/// Blob removal, Sobel gradient, minima suppression, watershed, Otsu mask
/// and mask intersection.
Segmentation segment(const MultichannelImage& img, const PipelineConfig& cfg);

/// Majority ground-truth class of each region, ignoring background and
/// overlap pixels; ties go to the lower class. Regions without any class
/// pixel are absent from the result.
std::map<RegionId, int> label_regions_by_truth(const RegionTable& regions, const LabelMap& truth);

struct CaseClassification {
  ClassifiedRegions state;
  LabelMap classmap;
  int reclassified = 0;
};

/// Classifies every region, merges same-class neighbours and, if
/// `postprocess`, reclassifies small regions.
CaseClassification classify_case(const Segmentation& seg, const MultichannelImage& img,
                                 const ClassModel& model, FeatureSet set, bool postprocess,
                                 const PostprocessConfig& post);

/// Paints region classes, then gives each remaining mask pixel (watershed
/// lines inside the foreground) the class of the nearest classified pixel
/// by breadth-first search.
LabelMap paint_classmap(const ClassifiedRegions& state, const BinaryMask& mask,
                        Connectivity connectivity);

struct TrainedModels {
  std::optional<ClassModel> meanstd;
  std::optional<ClassModel> mean;
  std::optional<ClassModel> pixel;
  /// Training regions per chromosome class (index 1..24).
  std::array<long, kChromosomeClasses + 1> region_counts{};
};

struct TrainingRequest {
  bool meanstd = true;
  bool mean = false;
  bool pixel = false;
};

/// Segments every case (which must have ground truth) and fits the requested
/// models. Throws TrainingError if a class is under-represented.
TrainedModels train_models(const std::vector<Case>& cases, const PipelineConfig& cfg,
                           TrainingRequest request, int jobs = 1);

/// Runs f(i) for i in [0, n) on up to `jobs` threads. The first exception
/// thrown by any call is rethrown after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& f);

}  // namespace mfish
