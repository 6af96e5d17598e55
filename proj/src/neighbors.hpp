#pragma once

#include "mfish/preprocess.hpp"

namespace mfish::detail {

// Calls f(q) for each in-bounds neighbour q of linear index p.
template <typename F>
inline void for_each_neighbor(PixelIndex p, Eigen::Index width, Eigen::Index height,
                              Connectivity conn, F&& f) {
  const Eigen::Index y = p / width;
  const Eigen::Index x = p % width;
  const bool eight = conn == Connectivity::Eight;
  for (int dy = -1; dy <= 1; ++dy) {
    const Eigen::Index ny = y + dy;
    if (ny < 0 || ny >= height) continue;
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      if (!eight && dx != 0 && dy != 0) continue;
      const Eigen::Index nx = x + dx;
      if (nx < 0 || nx >= width) continue;
      f(ny * width + nx);
    }
  }
}

}  // namespace mfish::detail
