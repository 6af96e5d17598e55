#pragma once

#include <vector>

#include "mfish/image.hpp"

namespace mfish {

enum class Connectivity { Four = 4, Eight = 8 };

/// Throws InvalidArgument unless n is 4 or 8.
Connectivity connectivity_from_int(int n);

struct BlobFilterConfig {
  /// Components strictly larger than this are removal candidates.
  long max_area = 5000;
  /// Components at least this round are removal candidates.
  double min_circularity = 0.6;
  Connectivity connectivity = Connectivity::Eight;

  void validate() const;
};

/// Otsu threshold over the 256-bin histogram. Foreground is `value > t`.
/// Ties in between-class variance go to the smaller threshold; a constant
/// image yields its own value so that the foreground is empty.
int otsu_threshold(const GrayImage& img);

struct ComponentStats {
  long area = 0;
  /// Number of pixel edges separating the component from background or the
  /// image border.
  long edge_perimeter = 0;
  /// Length of the sub-pixel iso-contour through the component boundary
  /// (marching squares at half intensity). Used for circularity.
  double contour_length = 0.0;
};

struct Components {
  /// 0 = background, 1..count() = component ID in raster scan order.
  LabelMap labels;
  /// Indexed by ID; entry 0 is unused.
  std::vector<ComponentStats> stats;

  int count() const { return static_cast<int>(stats.size()) - 1; }
};

Components connected_components(const BinaryMask& mask, Connectivity connectivity);

/// 4*pi*area / contour_length^2, clamped to [0, 1].
double circularity(const ComponentStats& s);

/// Zeros every Otsu-foreground component that is both larger than
/// `cfg.max_area` and at least `cfg.min_circularity` round.
GrayImage remove_blobs(const GrayImage& dapi, const BlobFilterConfig& cfg);

/// Otsu foreground of the (blob-removed) DAPI channel.
BinaryMask make_binary_mask(const GrayImage& blob_removed_dapi);

}  // namespace mfish
