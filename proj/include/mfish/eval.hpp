#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mfish/bayes.hpp"
#include "mfish/config.hpp"
#include "mfish/image.hpp"

namespace mfish {

/// Pixel roles in a ground-truth map. The three counts sum to the raster size.
struct PixelAccounting {
  long chromosome = 0;  ///< truth 1..24
  long overlap = 0;     ///< truth 255, excluded from both metrics
  long background = 0;  ///< everything else
};

PixelAccounting account_pixels(const LabelMap& truth);

/// Fraction of chromosome pixels (truth 1..24) that are foreground in the
/// prediction. Throws InvalidArgument if the truth has no chromosome pixels.
double segmentation_accuracy(const BinaryMask& predicted, const LabelMap& truth);

/// Fraction of predicted foreground pixels that are chromosome pixels.
/// Overlap pixels are excluded; an empty prediction scores 0.
double segmentation_precision(const BinaryMask& predicted, const LabelMap& truth);

/// Fraction of chromosome pixels whose predicted class equals the truth.
double classification_accuracy(const LabelMap& classmap, const LabelMap& truth);

struct CaseReport {
  std::string name;
  double seg_accuracy = 0.0;
  double seg_precision = 0.0;
  std::map<Method, double> class_accuracy;
  PixelAccounting pixels;
};

struct EvalReport {
  std::vector<Method> methods;
  /// Sorted by the sort method's accuracy, descending.
  std::vector<CaseReport> cases;

  double average(Method m) const;
  double average_seg_accuracy() const;
  /// Post if present, otherwise the last requested method.
  Method sort_method() const;
};

/// Models consumed by the methods; only those needed must be present.
struct MethodModels {
  std::optional<ClassModel> meanstd;  ///< MeanStd and Post
  std::optional<ClassModel> mean;     ///< Mean
  std::optional<ClassModel> pixel;    ///< Pixel
};

struct NamedCase {
  std::string name;
  Case data;
};

/// Runs every method on every case and scores it. Throws InvalidArgument if
/// a case lacks ground truth or a method's model is absent or has the wrong
/// feature dimension.
EvalReport batch_evaluate(const std::vector<NamedCase>& cases, const MethodModels& models,
                          const PipelineConfig& cfg, int jobs = 1);

/// Rows sorted as in the report plus a final "Avg" row; accuracies as
/// fractions with six decimals.
std::string report_csv(const EvalReport& report);
/// Aligned, percentage-formatted table for terminals.
std::string report_text(const EvalReport& report);

}  // namespace mfish
