#include "mfish/watershed.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <queue>

#include "mfish/error.hpp"
#include "neighbors.hpp"

namespace mfish {

using detail::for_each_neighbor;

void SegmentationConfig::validate() const {
  if (!(h >= 0.0)) throw InvalidArgument("minima depth h must be >= 0");
}

GradientImage sobel_gradient(const GrayImage& img) {
  const Eigen::Index h = img.rows();
  const Eigen::Index w = img.cols();
  GradientImage out = GradientImage::Zero(h, w);
  if (h < 3 || w < 3) return out;

  auto at = [&](Eigen::Index y, Eigen::Index x) {
    y = std::clamp<Eigen::Index>(y, 0, h - 1);
    x = std::clamp<Eigen::Index>(x, 0, w - 1);
    return static_cast<double>(img(y, x));
  };
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      const double gx = (at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1));
      const double gy = (at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1));
      out(y, x) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

GradientImage quantize(const GradientImage& grad) { return grad.round(); }

GradientImage suppress_minima(const GradientImage& grad, double h, Connectivity connectivity) {
  if (!(h >= 0.0)) throw InvalidArgument("minima depth h must be >= 0");
  if (h == 0.0) return grad;

  // Reconstruction by erosion as a minimax path problem: each pixel ends at
  // the lowest level from which some marker (grad + h) can reach it without
  // passing above that level.
  const Eigen::Index width = grad.cols();
  const Eigen::Index height = grad.rows();
  GradientImage rec = grad + h;
  using Item = std::pair<double, PixelIndex>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  for (PixelIndex p = 0; p < rec.size(); ++p) queue.emplace(rec.data()[p], p);
  while (!queue.empty()) {
    const auto [level, p] = queue.top();
    queue.pop();
    if (level > rec.data()[p]) continue;
    for_each_neighbor(p, width, height, connectivity, [&](PixelIndex q) {
      const double candidate = std::max(level, grad.data()[q]);
      if (candidate < rec.data()[q]) {
        rec.data()[q] = candidate;
        queue.emplace(candidate, q);
      }
    });
  }
  return rec;
}

LabelMap watershed_transform(const GradientImage& grad, Connectivity connectivity) {
  constexpr std::int32_t kInit = -1;
  constexpr std::int32_t kMask = -2;
  constexpr PixelIndex kFictitious = -1;

  const Eigen::Index width = grad.cols();
  const Eigen::Index height = grad.rows();
  const PixelIndex n = grad.size();

  std::vector<long long> level(static_cast<std::size_t>(n));
  for (PixelIndex p = 0; p < n; ++p) level[p] = std::llround(grad.data()[p]);
  std::vector<PixelIndex> order(static_cast<std::size_t>(n));
  for (PixelIndex p = 0; p < n; ++p) order[p] = p;
  std::stable_sort(order.begin(), order.end(),
                   [&](PixelIndex a, PixelIndex b) { return level[a] < level[b]; });

  LabelMap lab = LabelMap::Constant(height, width, kInit);
  std::int32_t* labels = lab.data();
  std::vector<int> dist(static_cast<std::size_t>(n), 0);
  // Set when a pixel became a line pixel only because it touched another
  // line pixel; such a pixel may still be claimed by a basin.
  std::vector<bool> soft_line(static_cast<std::size_t>(n), false);
  std::deque<PixelIndex> fifo;
  std::int32_t current_label = 0;

  std::size_t begin = 0;
  while (begin < order.size()) {
    std::size_t end = begin;
    const long long current = level[order[begin]];
    while (end < order.size() && level[order[end]] == current) ++end;

    for (std::size_t i = begin; i < end; ++i) {
      const PixelIndex p = order[i];
      labels[p] = kMask;
      bool touches = false;
      for_each_neighbor(p, width, height, connectivity,
                        [&](PixelIndex q) { touches = touches || labels[q] >= 0; });
      if (touches) {
        dist[p] = 1;
        fifo.push_back(p);
      }
    }

    int current_dist = 1;
    fifo.push_back(kFictitious);
    while (true) {
      PixelIndex p = fifo.front();
      fifo.pop_front();
      if (p == kFictitious) {
        if (fifo.empty()) break;
        fifo.push_back(kFictitious);
        ++current_dist;
        p = fifo.front();
        fifo.pop_front();
      }
      for_each_neighbor(p, width, height, connectivity, [&](PixelIndex q) {
        if (dist[q] < current_dist && labels[q] >= 0) {
          if (labels[q] > 0) {
            if (labels[p] == kMask || (labels[p] == kWatershedLine && soft_line[p])) {
              labels[p] = labels[q];
              soft_line[p] = false;
            } else if (labels[p] > 0 && labels[p] != labels[q]) {
              labels[p] = kWatershedLine;
              soft_line[p] = false;
            }
          } else if (labels[p] == kMask) {
            labels[p] = kWatershedLine;
            soft_line[p] = true;
          }
        } else if (labels[q] == kMask && dist[q] == 0) {
          dist[q] = current_dist + 1;
          fifo.push_back(q);
        }
      });
    }

    // Pixels still masked belong to new regional minima.
    for (std::size_t i = begin; i < end; ++i) {
      const PixelIndex p = order[i];
      dist[p] = 0;
      if (labels[p] != kMask) continue;
      ++current_label;
      labels[p] = current_label;
      fifo.push_back(p);
      while (!fifo.empty()) {
        const PixelIndex q = fifo.front();
        fifo.pop_front();
        for_each_neighbor(q, width, height, connectivity, [&](PixelIndex r) {
          if (labels[r] == kMask) {
            labels[r] = current_label;
            fifo.push_back(r);
          }
        });
      }
    }
    begin = end;
  }
  return lab;
}

void update_bbox(Region& r, Eigen::Index width) {
  if (r.pixels.empty()) {
    r.bbox = {};
    return;
  }
  BoundingBox b{r.pixels.front() % width, r.pixels.front() / width, 0, 0};
  b.x1 = b.x0;
  b.y1 = b.y0;
  for (const PixelIndex p : r.pixels) {
    const Eigen::Index x = p % width;
    const Eigen::Index y = p / width;
    b.x0 = std::min(b.x0, x);
    b.x1 = std::max(b.x1, x);
    b.y0 = std::min(b.y0, y);
    b.y1 = std::max(b.y1, y);
  }
  r.bbox = b;
}

RegionTable extract_regions(const LabelMap& ws, const BinaryMask& mask) {
  if (ws.rows() != mask.rows() || ws.cols() != mask.cols()) {
    throw InvalidArgument("watershed and mask dimensions differ");
  }
  RegionTable regions;
  for (PixelIndex p = 0; p < ws.size(); ++p) {
    const RegionId id = ws.data()[p];
    if (id <= 0 || !mask.data()[p]) continue;
    Region& r = regions[id];
    r.id = id;
    r.pixels.push_back(p);
  }
  for (auto& [id, r] : regions) update_bbox(r, ws.cols());
  return regions;
}

void RegionAdjacencyGraph::add_edge(RegionId a, RegionId b) {
  if (a == b) return;
  adj_[a].insert(b);
  adj_[b].insert(a);
}

void RegionAdjacencyGraph::remove_node(RegionId id) {
  const auto it = adj_.find(id);
  if (it == adj_.end()) return;
  for (const RegionId n : it->second) adj_[n].erase(id);
  adj_.erase(it);
}

bool RegionAdjacencyGraph::has_edge(RegionId a, RegionId b) const {
  const auto it = adj_.find(a);
  return it != adj_.end() && it->second.count(b) != 0;
}

const std::set<RegionId>& RegionAdjacencyGraph::neighbors(RegionId id) const {
  static const std::set<RegionId> kEmpty;
  const auto it = adj_.find(id);
  return it == adj_.end() ? kEmpty : it->second;
}

std::size_t RegionAdjacencyGraph::edge_count() const {
  std::size_t twice = 0;
  for (const auto& [id, nbrs] : adj_) twice += nbrs.size();
  return twice / 2;
}

void RegionAdjacencyGraph::contract(RegionId into, RegionId from) {
  if (into == from) return;
  const std::set<RegionId> moved = neighbors(from);
  remove_node(from);
  add_node(into);
  for (const RegionId n : moved) add_edge(into, n);
}

LabelMap region_owner_map(const RegionTable& regions, Eigen::Index width, Eigen::Index height) {
  LabelMap owner = LabelMap::Zero(height, width);
  for (const auto& [id, r] : regions) {
    for (const PixelIndex p : r.pixels) owner.data()[p] = id;
  }
  return owner;
}

RegionAdjacencyGraph build_rag(const RegionTable& regions, const LabelMap& ws,
                               Connectivity connectivity) {
  const Eigen::Index width = ws.cols();
  const Eigen::Index height = ws.rows();
  const LabelMap owner = region_owner_map(regions, width, height);

  RegionAdjacencyGraph rag;
  for (const auto& [id, r] : regions) rag.add_node(id);

  std::vector<RegionId> around;
  for (PixelIndex p = 0; p < owner.size(); ++p) {
    const RegionId a = owner.data()[p];
    if (a > 0) {
      for_each_neighbor(p, width, height, connectivity, [&](PixelIndex q) {
        const RegionId b = owner.data()[q];
        if (b > 0 && b != a) rag.add_edge(a, b);
      });
    } else if (ws.data()[p] == kWatershedLine) {
      around.clear();
      for_each_neighbor(p, width, height, connectivity, [&](PixelIndex q) {
        if (owner.data()[q] > 0) around.push_back(owner.data()[q]);
      });
      for (std::size_t i = 0; i < around.size(); ++i) {
        for (std::size_t j = i + 1; j < around.size(); ++j) rag.add_edge(around[i], around[j]);
      }
    }
  }
  return rag;
}

}  // namespace mfish
