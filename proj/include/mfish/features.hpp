#pragma once

#include <map>
#include <span>

#include <Eigen/Core>

#include "mfish/image.hpp"
#include "mfish/watershed.hpp"

namespace mfish {

inline constexpr int kFeatureDim = 2 * kFluorChannels;

using FeatureVector = Eigen::Matrix<double, kFeatureDim, 1>;

/// Per-region fluor statistics. `x` interleaves mean and population standard
/// deviation per channel: (mean_aqua, std_aqua, mean_red, std_red, ...).
struct RegionFeatures {
  RegionId region_id = 0;
  FeatureVector x = FeatureVector::Zero();
  long area = 0;

  double mean(int channel) const { return x(2 * channel); }
  double stddev(int channel) const { return x(2 * channel + 1); }
};

/// Which components of RegionFeatures a classifier consumes.
enum class FeatureSet {
  MeanStd,  ///< all 10 values
  MeanOnly  ///< the 5 channel means
};

int feature_dimension(FeatureSet set);
Eigen::VectorXd select_features(const RegionFeatures& f, FeatureSet set);

/// Throws InvalidArgument on an empty pixel list or out-of-range pixel.
RegionFeatures extract_features(std::span<const PixelIndex> pixels, const MultichannelImage& img,
                                RegionId id = 0);

std::map<RegionId, RegionFeatures> extract_all_features(const RegionTable& regions,
                                                        const MultichannelImage& img);

/// Features of the union of two disjoint regions, pooled from their moments.
RegionFeatures merge_features(const RegionFeatures& a, const RegionFeatures& b);

/// Copy of `img` with each region's fluor pixels replaced by the region's
/// rounded channel mean. Visualisation only; DAPI is left untouched.
MultichannelImage flatten_regions(const RegionTable& regions,
                                  const std::map<RegionId, RegionFeatures>& features,
                                  const MultichannelImage& img);

}  // namespace mfish
