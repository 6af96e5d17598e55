#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mfish/image.hpp"

namespace mfish {

/// Fluor combination per chromosome class: row c-1 holds the presence of
/// (aqua, red, far-red, green, gold) for class c.
using FluorTable = std::array<std::array<bool, kFluorChannels>, kChromosomeClasses>;

/// Fixed labelling table (24 distinct non-empty 5-bit combinations):
///
///   class  A R F G Au     class  A R F G Au     class  A R F G Au
///     1    0 0 0 0 1        9    1 0 0 0 1       17    0 1 0 1 1
///     2    0 0 0 1 0       10    0 0 1 1 0       18    1 0 0 1 1
///     3    0 0 1 0 0       11    0 1 0 1 0       19    0 1 1 0 1
///     4    0 1 0 0 0       12    1 0 0 1 0       20    1 0 1 0 1
///     5    1 0 0 0 0       13    0 1 1 0 0       21    1 1 0 0 1
///     6    0 0 0 1 1       14    1 0 1 0 0       22    0 1 1 1 0
///     7    0 0 1 0 1       15    1 1 0 0 0       23    1 0 1 1 0
///     8    0 1 0 0 1       16    0 0 1 1 1       24    1 1 0 1 0
const FluorTable& default_fluor_table();

/// Classes 1..22 twice, then X (23) twice or X and Y (24).
std::vector<int> normal_karyotype(bool male = true);

struct PhantomSpec {
  int width = 645;
  int height = 517;
  /// One entry per chromosome; each is a class 1..24.
  std::vector<int> classes = normal_karyotype();
  double on_intensity = 180.0;
  double off_intensity = 20.0;
  double noise_sigma = 8.0;
  /// Chromosome band width and the length range mapped from class 1
  /// (longest) to class 22 (shortest), in pixels.
  double chromosome_width = 7.0;
  double max_length = 60.0;
  double min_length = 22.0;
  /// Maximum centreline curvature (1 / radius).
  double max_curvature = 1.0 / 40.0;
  /// Minimum background gap kept between shapes.
  int margin = 4;
  bool nucleus = false;
  double nucleus_radius = 50.0;
  std::uint64_t seed = 1;
  /// Placement attempts per shape before giving up.
  int max_attempts = 5000;

  void validate() const;
};

/// Paints non-overlapping curved bars with the table's fluor signature,
/// adds clamped Gaussian noise and returns the case with its truth map.
/// Deterministic in `spec.seed`. Throws InvalidArgument when a shape cannot
/// be placed within the attempt budget.
Case generate_phantom(const PhantomSpec& spec, const FluorTable& table = default_fluor_table());

}  // namespace mfish
