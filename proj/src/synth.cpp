#include "mfish/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mfish/error.hpp"

namespace mfish {

namespace {

struct Shape {
  std::vector<PixelIndex> pixels;
};

// Pixels within half_width of a circular-arc centreline.
std::vector<PixelIndex> rasterize_bar(double cx, double cy, double angle, double length,
                                      double curvature, double half_width, int width, int height,
                                      bool& inside) {
  std::vector<std::pair<double, double>> centre;
  const int steps = std::max(2, static_cast<int>(std::ceil(length * 4.0)));
  // Walk the arc from its midpoint in both directions.
  for (int i = 0; i <= steps; ++i) {
    const double s = -length / 2.0 + length * i / steps;
    double x = 0.0;
    double y = 0.0;
    if (std::abs(curvature) < 1e-12) {
      x = s;
    } else {
      x = std::sin(curvature * s) / curvature;
      y = (1.0 - std::cos(curvature * s)) / curvature;
    }
    centre.emplace_back(cx + x * std::cos(angle) - y * std::sin(angle),
                        cy + x * std::sin(angle) + y * std::cos(angle));
  }
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& [x, y] : centre) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  const int px0 = static_cast<int>(std::floor(x0 - half_width));
  const int px1 = static_cast<int>(std::ceil(x1 + half_width));
  const int py0 = static_cast<int>(std::floor(y0 - half_width));
  const int py1 = static_cast<int>(std::ceil(y1 + half_width));
  inside = px0 >= 1 && py0 >= 1 && px1 < width - 1 && py1 < height - 1;
  std::vector<PixelIndex> out;
  if (!inside) return out;
  const double r2 = half_width * half_width;
  for (int y = py0; y <= py1; ++y) {
    for (int x = px0; x <= px1; ++x) {
      for (const auto& [sx, sy] : centre) {
        const double dx = x - sx;
        const double dy = y - sy;
        if (dx * dx + dy * dy <= r2) {
          out.push_back(static_cast<PixelIndex>(y) * width + x);
          break;
        }
      }
    }
  }
  return out;
}

std::vector<PixelIndex> rasterize_disk(double cx, double cy, double radius, int width, int height,
                                       bool& inside) {
  std::vector<PixelIndex> out;
  inside = cx - radius >= 1 && cy - radius >= 1 && cx + radius < width - 1 && cy + radius < height - 1;
  if (!inside) return out;
  const double r2 = radius * radius;
  for (int y = static_cast<int>(std::floor(cy - radius)); y <= static_cast<int>(std::ceil(cy + radius)); ++y) {
    for (int x = static_cast<int>(std::floor(cx - radius)); x <= static_cast<int>(std::ceil(cx + radius)); ++x) {
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r2) {
        out.push_back(static_cast<PixelIndex>(y) * width + x);
      }
    }
  }
  return out;
}

double class_length(int cls, const PhantomSpec& spec) {
  // Autosomes shrink linearly with class number; X sits near class 7 and Y
  // near class 21.
  int rank = cls;
  if (cls == 23) rank = 7;
  if (cls == 24) rank = 21;
  return spec.max_length - (spec.max_length - spec.min_length) * (rank - 1) / 21.0;
}

}  // namespace

const FluorTable& default_fluor_table() {
  static const FluorTable table = [] {
    constexpr std::array<const char*, kChromosomeClasses> rows = {
        "00001", "00010", "00100", "01000", "10000", "00011", "00101", "01001",
        "10001", "00110", "01010", "10010", "01100", "10100", "11000", "00111",
        "01011", "10011", "01101", "10101", "11001", "01110", "10110", "11010"};
    FluorTable t{};
    for (int c = 0; c < kChromosomeClasses; ++c) {
      for (int k = 0; k < kFluorChannels; ++k) t[c][k] = rows[c][k] == '1';
    }
    return t;
  }();
  return table;
}

std::vector<int> normal_karyotype(bool male) {
  std::vector<int> classes;
  for (int c = 1; c <= 22; ++c) {
    classes.push_back(c);
    classes.push_back(c);
  }
  classes.push_back(23);
  classes.push_back(male ? 24 : 23);
  return classes;
}

void PhantomSpec::validate() const {
  if (width < 8 || height < 8) throw InvalidArgument("phantom must be at least 8x8");
  for (const int c : classes) {
    if (c < 1 || c > kChromosomeClasses) throw InvalidArgument("phantom class out of range");
  }
  if (on_intensity < 0 || on_intensity > 255 || off_intensity < 0 || off_intensity > 255) {
    throw InvalidArgument("intensities must be in [0, 255]");
  }
  if (!(noise_sigma >= 0.0)) throw InvalidArgument("noise sigma must be >= 0");

  if (!(chromosome_width > 0.0) || !(min_length > 0.0) || max_length < min_length) {
    throw InvalidArgument("bad chromosome geometry");
  }
  if (margin < 0 || max_attempts < 1) throw InvalidArgument("bad placement parameters");
}

Case generate_phantom(const PhantomSpec& spec, const FluorTable& table) {
  spec.validate();
  const int w = spec.width;
  const int h = spec.height;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Pixels closer than `margin` to an already placed shape are forbidden.
  Raster<bool> forbidden = Raster<bool>::Constant(h, w, false);
  auto reserve = [&](const std::vector<PixelIndex>& pixels) {
    for (const PixelIndex p : pixels) {
      const int y = static_cast<int>(p / w);
      const int x = static_cast<int>(p % w);
      for (int dy = -spec.margin; dy <= spec.margin; ++dy) {
        for (int dx = -spec.margin; dx <= spec.margin; ++dx) {
          const int ny = y + dy;
          const int nx = x + dx;
          if (ny >= 0 && ny < h && nx >= 0 && nx < w) forbidden(ny, nx) = true;
        }
      }
    }
  };
  auto free_of_conflict = [&](const std::vector<PixelIndex>& pixels) {
    return std::none_of(pixels.begin(), pixels.end(),
                        [&](PixelIndex p) { return forbidden.data()[p]; });
  };

  std::vector<PixelIndex> nucleus;
  if (spec.nucleus) {
    for (int attempt = 0;; ++attempt) {
      if (attempt == spec.max_attempts) throw InvalidArgument("cannot place nucleus");
      bool inside = false;
      nucleus = rasterize_disk(unit(rng) * w, unit(rng) * h, spec.nucleus_radius, w, h, inside);
      if (inside) break;
    }
    reserve(nucleus);
  }

  // Place long chromosomes first; ties keep the listed order.
  std::vector<std::size_t> order(spec.classes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return class_length(spec.classes[a], spec) > class_length(spec.classes[b], spec);
  });

  std::vector<Shape> shapes(spec.classes.size());
  for (const std::size_t i : order) {
    const int cls = spec.classes[i];
    bool placed = false;
    for (int attempt = 0; attempt < spec.max_attempts && !placed; ++attempt) {
      const double cx = unit(rng) * w;
      const double cy = unit(rng) * h;
      const double angle = unit(rng) * std::numbers::pi;
      const double curvature = (2.0 * unit(rng) - 1.0) * spec.max_curvature;
      bool inside = false;
      std::vector<PixelIndex> pixels = rasterize_bar(cx, cy, angle, class_length(cls, spec), curvature,
                                                     spec.chromosome_width / 2.0, w, h, inside);
      if (!inside || pixels.empty() || !free_of_conflict(pixels)) continue;
      reserve(pixels);
      shapes[i].pixels = std::move(pixels);
      placed = true;
    }
    if (!placed) {
      throw InvalidArgument("cannot place chromosome of class " + std::to_string(cls) +
                            " without overlap");
    }
  }

  // Noise-free signal, then noise in a fixed channel order.
  std::array<Raster<double>, kFluorChannels + 1> signal;
  for (auto& s : signal) s = Raster<double>::Constant(h, w, spec.off_intensity);
  LabelMap truth = LabelMap::Zero(h, w);
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const int cls = spec.classes[i];
    for (const PixelIndex p : shapes[i].pixels) {
      truth.data()[p] = cls;
      for (int k = 0; k < kFluorChannels; ++k) {
        if (table[cls - 1][k]) signal[k].data()[p] = spec.on_intensity;
      }
      signal[kFluorChannels].data()[p] = spec.on_intensity;
    }
  }
  for (const PixelIndex p : nucleus) signal[kFluorChannels].data()[p] = spec.on_intensity;

  std::normal_distribution<double> noise(0.0, 1.0);
  Case out;
  for (int k = 0; k <= kFluorChannels; ++k) {
    GrayImage& dst = k < kFluorChannels ? out.image.channels[k] : out.image.dapi;
    dst.resize(h, w);
    for (PixelIndex p = 0; p < dst.size(); ++p) {
      double v = signal[k].data()[p];
      if (spec.noise_sigma > 0.0) v += spec.noise_sigma * noise(rng);
      dst.data()[p] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
    }
  }
  out.truth = std::move(truth);
  return out;
}

}  // namespace mfish
