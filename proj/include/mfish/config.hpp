#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mfish/bayes.hpp"
#include "mfish/postprocess.hpp"
#include "mfish/preprocess.hpp"
#include "mfish/watershed.hpp"

namespace mfish {

/// Classification methods compared in an evaluation report.
enum class Method {
  Pixel,    ///< per-pixel Bayes on (5 fluors, DAPI) with a background class
  Mean,     ///< region Bayes on the 5 channel means
  MeanStd,  ///< region Bayes on means and standard deviations
  Post      ///< MeanStd followed by small-region reclassification
};

std::string_view method_name(Method m);
/// Parses a comma-separated list such as "pixel,mean,meanstd,post".
std::vector<Method> parse_methods(std::string_view list);
std::vector<Method> all_methods();

struct PipelineConfig {
  BlobFilterConfig blob;
  SegmentationConfig segmentation;
  double epsilon = kDefaultEpsilon;
  PostprocessConfig post;
  bool postprocess = true;
  std::vector<Method> methods = all_methods();
  std::optional<std::filesystem::path> palette;

  void validate() const;

  /// Applies one `key = value` setting. Throws FormatError on an unknown key
  /// or unparsable value.
  void set(std::string_view key, std::string_view value);
};

/// Reads `key = value` lines ('#' starts a comment) on top of `base`.
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});
PipelineConfig parse_config(std::string_view text, PipelineConfig base = {});

}  // namespace mfish
