#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "mfish/image.hpp"
#include "mfish/preprocess.hpp"

namespace mfish {

using GradientImage = Raster<double>;
using RegionId = std::int32_t;

/// Label given to watershed-line pixels by watershed_transform.
inline constexpr RegionId kWatershedLine = 0;

struct SegmentationConfig {
  /// Minima-suppression depth in gradient intensity units.
  double h = 5.0;
  Connectivity connectivity = Connectivity::Eight;

  void validate() const;
};

/// sqrt(Gx^2 + Gy^2) with 3x3 Sobel kernels and replicate padding. Images
/// narrower or shorter than 3 pixels yield an all-zero gradient.
GradientImage sobel_gradient(const GrayImage& img);

/// Rounds every value to the nearest integer so flooding has discrete levels.
GradientImage quantize(const GradientImage& grad);

/// h-minima transform: reconstruction by erosion of (grad + h) over grad.
/// Regional minima shallower than h are filled; deeper ones survive.
GradientImage suppress_minima(const GradientImage& grad, double h,
                              Connectivity connectivity = Connectivity::Eight);

/// Immersion watershed. Values are rounded to integer levels before
/// flooding. Returns 0 for watershed-line pixels and 1..n for basins, one
/// per regional minimum, numbered in flooding order.
LabelMap watershed_transform(const GradientImage& grad, Connectivity connectivity);

struct BoundingBox {
  Eigen::Index x0 = 0;
  Eigen::Index y0 = 0;
  Eigen::Index x1 = 0;  // inclusive
  Eigen::Index y1 = 0;  // inclusive
};

struct Region {
  RegionId id = 0;
  /// Linear pixel indices, ascending.
  std::vector<PixelIndex> pixels;
  BoundingBox bbox;

  long area() const { return static_cast<long>(pixels.size()); }
};

using RegionTable = std::map<RegionId, Region>;

/// Rebuilds the bounding box of `r` from its pixel list.
void update_bbox(Region& r, Eigen::Index width);

/// Intersects every basin with the foreground mask. Basins with no
/// foreground pixels are dropped; region IDs are the basin IDs.
RegionTable extract_regions(const LabelMap& ws, const BinaryMask& mask);

class RegionAdjacencyGraph {
 public:
  void add_node(RegionId id) { adj_[id]; }
  void add_edge(RegionId a, RegionId b);
  void remove_node(RegionId id);

  bool has_node(RegionId id) const { return adj_.count(id) != 0; }
  bool has_edge(RegionId a, RegionId b) const;
  const std::set<RegionId>& neighbors(RegionId id) const;

  std::size_t node_count() const { return adj_.size(); }
  std::size_t edge_count() const;
  const std::map<RegionId, std::set<RegionId>>& adjacency() const { return adj_; }

  /// Merges `from` into `into`: edges of `from` are moved to `into` and
  /// `from` is removed. Self-loops are dropped.
  void contract(RegionId into, RegionId from);

  bool operator==(const RegionAdjacencyGraph&) const = default;

 private:
  std::map<RegionId, std::set<RegionId>> adj_;
};

/// Regions a and b are adjacent if a pixel of a lies within `connectivity`
/// of a pixel of b, or both touch a common watershed-line pixel.
RegionAdjacencyGraph build_rag(const RegionTable& regions, const LabelMap& ws,
                               Connectivity connectivity = Connectivity::Eight);

/// Raster of region IDs (0 where no region).
LabelMap region_owner_map(const RegionTable& regions, Eigen::Index width, Eigen::Index height);

}  // namespace mfish
