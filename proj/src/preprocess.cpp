#include "mfish/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "mfish/error.hpp"

namespace mfish {

Connectivity connectivity_from_int(int n) {
  if (n == 4) return Connectivity::Four;
  if (n == 8) return Connectivity::Eight;
  throw InvalidArgument("connectivity must be 4 or 8, got " + std::to_string(n));
}

void BlobFilterConfig::validate() const {
  if (max_area < 1) throw InvalidArgument("blob max_area must be >= 1");
  if (!(min_circularity >= 0.0 && min_circularity <= 1.0)) {
    throw InvalidArgument("blob min_circularity must be in [0, 1]");
  }
}

int otsu_threshold(const GrayImage& img) {
  if (img.size() == 0) throw InvalidArgument("otsu threshold of an empty image");
  std::array<long long, 256> hist{};
  for (PixelIndex i = 0; i < img.size(); ++i) ++hist[img.data()[i]];

  long long total = 0;
  long long total_sum = 0;
  for (int v = 0; v < 256; ++v) {
    total += hist[v];
    total_sum += hist[v] * v;
  }

  // Between-class variance is proportional to (N*S0 - n0*S)^2 / (n0*n1).
  // Candidates are compared as exact fractions so ties are decided exactly.
  __extension__ typedef __int128 i128;
  __extension__ typedef unsigned __int128 u128;
  int best_t = -1;
  u128 best_num = 0;
  u128 best_den = 1;
  long long n0 = 0;
  long long s0 = 0;
  for (int t = 0; t < 256; ++t) {
    n0 += hist[t];
    s0 += hist[t] * t;
    const long long n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const i128 diff = static_cast<i128>(total) * s0 - static_cast<i128>(n0) * total_sum;
    const u128 num = static_cast<u128>(diff < 0 ? -diff : diff);
    const u128 sq = num * num;
    const u128 den = static_cast<u128>(n0) * static_cast<u128>(n1);
    if (best_t < 0) {
      best_t = t;
      best_num = sq;
      best_den = den;
      continue;
    }
    bool better = false;
    if (total <= 400000) {
      better = sq * best_den > best_num * den;
    } else {
      // Products could overflow 128 bits; fall back to long double.
      better = static_cast<long double>(sq) / static_cast<long double>(den) >
               static_cast<long double>(best_num) / static_cast<long double>(best_den);
    }
    if (better) {
      best_t = t;
      best_num = sq;
      best_den = den;
    }
  }
  if (best_t < 0 || best_num == 0) {
    // Single-valued histogram: put everything in the background class.
    return img.size() == 0 ? 0 : static_cast<int>(img.maxCoeff());
  }
  return best_t;
}

Components connected_components(const BinaryMask& mask, Connectivity connectivity) {
  const Eigen::Index h = mask.rows();
  const Eigen::Index w = mask.cols();
  Components out;
  out.labels = LabelMap::Zero(h, w);
  out.stats.emplace_back();

  const bool eight = connectivity == Connectivity::Eight;
  std::vector<PixelIndex> stack;
  for (Eigen::Index y0 = 0; y0 < h; ++y0) {
    for (Eigen::Index x0 = 0; x0 < w; ++x0) {
      if (!mask(y0, x0) || out.labels(y0, x0) != 0) continue;
      const auto id = static_cast<std::int32_t>(out.stats.size());
      ComponentStats s;
      out.labels(y0, x0) = id;
      stack.assign(1, y0 * w + x0);
      while (!stack.empty()) {
        const PixelIndex p = stack.back();
        stack.pop_back();
        const Eigen::Index y = p / w;
        const Eigen::Index x = p % w;
        ++s.area;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const bool diagonal = dx != 0 && dy != 0;
            const Eigen::Index ny = y + dy;
            const Eigen::Index nx = x + dx;
            const bool inside = ny >= 0 && ny < h && nx >= 0 && nx < w;
            if (!diagonal && (!inside || !mask(ny, nx))) ++s.edge_perimeter;
            if (diagonal && !eight) continue;
            if (inside && mask(ny, nx) && out.labels(ny, nx) == 0) {
              out.labels(ny, nx) = id;
              stack.push_back(ny * w + nx);
            }
          }
        }
      }
      out.stats.push_back(s);
    }
  }

  // Marching-squares contour length per component. Each 2x2 cell (with the
  // raster padded by background) contributes, for every component present
  // in it, a segment set determined by which corners belong to it.
  const double half_diag = std::numbers::sqrt2 / 2.0;
  auto label_at = [&](Eigen::Index y, Eigen::Index x) -> std::int32_t {
    return (y < 0 || y >= h || x < 0 || x >= w) ? 0 : out.labels(y, x);
  };
  for (Eigen::Index y = -1; y < h; ++y) {
    for (Eigen::Index x = -1; x < w; ++x) {
      const std::array<std::int32_t, 4> c = {label_at(y, x), label_at(y, x + 1),
                                             label_at(y + 1, x + 1), label_at(y + 1, x)};
      for (int k = 0; k < 4; ++k) {
        const std::int32_t id = c[k];
        if (id == 0) continue;
        bool seen = false;
        for (int j = 0; j < k; ++j) seen = seen || c[j] == id;
        if (seen) continue;
        std::array<bool, 4> in{};
        int n = 0;
        for (int j = 0; j < 4; ++j) {
          in[j] = c[j] == id;
          n += in[j];
        }
        double len = 0.0;
        if (n == 1 || n == 3) {
          len = half_diag;
        } else if (n == 2) {
          len = (in[0] == in[2]) ? 2.0 * half_diag : 1.0;
        }
        out.stats[id].contour_length += len;
      }
    }
  }
  return out;
}

double circularity(const ComponentStats& s) {
  if (s.contour_length <= 0.0) return 1.0;
  const double c = 4.0 * std::numbers::pi * static_cast<double>(s.area) /
                   (s.contour_length * s.contour_length);
  return std::clamp(c, 0.0, 1.0);
}

GrayImage remove_blobs(const GrayImage& dapi, const BlobFilterConfig& cfg) {
  cfg.validate();
  const int t = otsu_threshold(dapi);
  const BinaryMask fg = dapi.cast<int>() > t;
  const Components cc = connected_components(fg, cfg.connectivity);

  std::vector<bool> remove(cc.stats.size(), false);
  bool any = false;
  for (int id = 1; id <= cc.count(); ++id) {
    const ComponentStats& s = cc.stats[id];
    remove[id] = s.area > cfg.max_area && circularity(s) >= cfg.min_circularity;
    any = any || remove[id];
  }

  GrayImage out = dapi;
  if (!any) return out;
  for (PixelIndex i = 0; i < out.size(); ++i) {
    if (remove[cc.labels.data()[i]]) out.data()[i] = 0;
  }
  return out;
}

BinaryMask make_binary_mask(const GrayImage& blob_removed_dapi) {
  const int t = otsu_threshold(blob_removed_dapi);
  return blob_removed_dapi.cast<int>() > t;
}

}  // namespace mfish
