#include "mfish/features.hpp"

#include <algorithm>
#include <cmath>

#include "mfish/error.hpp"

namespace mfish {

int feature_dimension(FeatureSet set) {
  return set == FeatureSet::MeanStd ? kFeatureDim : kFluorChannels;
}

Eigen::VectorXd select_features(const RegionFeatures& f, FeatureSet set) {
  if (set == FeatureSet::MeanStd) return f.x;
  Eigen::VectorXd means(kFluorChannels);
  for (int c = 0; c < kFluorChannels; ++c) means(c) = f.mean(c);
  return means;
}

RegionFeatures extract_features(std::span<const PixelIndex> pixels, const MultichannelImage& img,
                                RegionId id) {
  if (pixels.empty()) throw InvalidArgument("cannot extract features of an empty region");
  const PixelIndex n_pixels = img.dapi.size();
  RegionFeatures f;
  f.region_id = id;
  f.area = static_cast<long>(pixels.size());
  const double n = static_cast<double>(pixels.size());
  for (int c = 0; c < kFluorChannels; ++c) {
    const std::uint8_t* data = img.channels[c].data();
    long long sum = 0;
    for (const PixelIndex p : pixels) {
      if (p < 0 || p >= n_pixels) throw InvalidArgument("region pixel outside the image");
      sum += data[p];
    }
    const double mean = static_cast<double>(sum) / n;
    double scatter = 0.0;
    for (const PixelIndex p : pixels) {
      const double d = data[p] - mean;
      scatter += d * d;
    }
    f.x(2 * c) = mean;
    f.x(2 * c + 1) = std::sqrt(scatter / n);
  }
  return f;
}

std::map<RegionId, RegionFeatures> extract_all_features(const RegionTable& regions,
                                                        const MultichannelImage& img) {
  std::map<RegionId, RegionFeatures> out;
  for (const auto& [id, r] : regions) out.emplace(id, extract_features(r.pixels, img, id));
  return out;
}

RegionFeatures merge_features(const RegionFeatures& a, const RegionFeatures& b) {
  RegionFeatures m;
  m.region_id = std::min(a.region_id, b.region_id);
  m.area = a.area + b.area;
  const double na = static_cast<double>(a.area);
  const double nb = static_cast<double>(b.area);
  const double n = na + nb;
  for (int c = 0; c < kFluorChannels; ++c) {
    const double mean = (na * a.mean(c) + nb * b.mean(c)) / n;
    const double da = a.mean(c) - mean;
    const double db = b.mean(c) - mean;
    const double var = (na * (a.stddev(c) * a.stddev(c) + da * da) +
                        nb * (b.stddev(c) * b.stddev(c) + db * db)) / n;
    m.x(2 * c) = mean;
    m.x(2 * c + 1) = std::sqrt(std::max(var, 0.0));
  }
  return m;
}

MultichannelImage flatten_regions(const RegionTable& regions,
                                  const std::map<RegionId, RegionFeatures>& features,
                                  const MultichannelImage& img) {
  MultichannelImage out = img;
  for (const auto& [id, r] : regions) {
    const auto it = features.find(id);
    if (it == features.end()) {
      throw InvalidArgument("no features for region " + std::to_string(id));
    }
    for (int c = 0; c < kFluorChannels; ++c) {
      const auto value = static_cast<std::uint8_t>(std::lround(std::clamp(it->second.mean(c), 0.0, 255.0)));
      for (const PixelIndex p : r.pixels) out.channels[c].data()[p] = value;
    }
  }
  return out;
}

}  // namespace mfish
