#include "mfish/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include "mfish/error.hpp"
#include "mfish/pipeline.hpp"

namespace mfish {

namespace {

bool is_chromosome(std::int32_t t) { return t >= 1 && t <= kChromosomeClasses; }

template <typename Pred>
void check_same_size(const Pred& a, const LabelMap& truth) {
  if (a.rows() != truth.rows() || a.cols() != truth.cols()) {
    throw InvalidArgument("prediction and truth dimensions differ");
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

PixelAccounting account_pixels(const LabelMap& truth) {
  PixelAccounting a;
  for (PixelIndex p = 0; p < truth.size(); ++p) {
    const std::int32_t t = truth.data()[p];
    if (is_chromosome(t)) {
      ++a.chromosome;
    } else if (t == kOverlapLabel) {
      ++a.overlap;
    } else {
      ++a.background;
    }
  }
  return a;
}

double segmentation_accuracy(const BinaryMask& predicted, const LabelMap& truth) {
  check_same_size(predicted, truth);
  long total = 0;
  long hit = 0;
  for (PixelIndex p = 0; p < truth.size(); ++p) {
    if (!is_chromosome(truth.data()[p])) continue;
    ++total;
    hit += predicted.data()[p];
  }
  if (total == 0) throw InvalidArgument("ground truth contains no chromosome pixels");
  return static_cast<double>(hit) / static_cast<double>(total);
}

double segmentation_precision(const BinaryMask& predicted, const LabelMap& truth) {
  check_same_size(predicted, truth);
  long predicted_count = 0;
  long hit = 0;
  for (PixelIndex p = 0; p < truth.size(); ++p) {
    const std::int32_t t = truth.data()[p];
    if (!predicted.data()[p] || t == kOverlapLabel) continue;
    ++predicted_count;
    hit += is_chromosome(t);
  }
  return predicted_count == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(predicted_count);
}

double classification_accuracy(const LabelMap& classmap, const LabelMap& truth) {
  check_same_size(classmap, truth);
  long total = 0;
  long hit = 0;
  for (PixelIndex p = 0; p < truth.size(); ++p) {
    const std::int32_t t = truth.data()[p];
    if (!is_chromosome(t)) continue;
    ++total;
    hit += classmap.data()[p] == t;
  }
  if (total == 0) throw InvalidArgument("ground truth contains no chromosome pixels");
  return static_cast<double>(hit) / static_cast<double>(total);
}

double EvalReport::average(Method m) const {
  if (cases.empty()) return 0.0;
  double sum = 0.0;
  for (const CaseReport& c : cases) sum += c.class_accuracy.at(m);
  return sum / static_cast<double>(cases.size());
}

double EvalReport::average_seg_accuracy() const {
  if (cases.empty()) return 0.0;
  double sum = 0.0;
  for (const CaseReport& c : cases) sum += c.seg_accuracy;
  return sum / static_cast<double>(cases.size());
}

Method EvalReport::sort_method() const {
  if (std::find(methods.begin(), methods.end(), Method::Post) != methods.end()) return Method::Post;
  return methods.back();
}

EvalReport batch_evaluate(const std::vector<NamedCase>& cases, const MethodModels& models,
                          const PipelineConfig& cfg, int jobs) {
  cfg.validate();
  auto require = [](const std::optional<ClassModel>& m, int dim, Method method) {
    if (!m) throw InvalidArgument("method '" + std::string(method_name(method)) + "' needs a model");
    if (m->dimension() != dim) {
      throw InvalidArgument("model for method '" + std::string(method_name(method)) + "' has " +
                            std::to_string(m->dimension()) + " features, expected " +
                            std::to_string(dim));
    }
  };
  for (const Method m : cfg.methods) {
    switch (m) {
      case Method::Pixel: require(models.pixel, kPixelFeatureDim, m); break;
      case Method::Mean: require(models.mean, kFluorChannels, m); break;
      case Method::MeanStd:
      case Method::Post: require(models.meanstd, kFeatureDim, m); break;
    }
  }
  for (const NamedCase& c : cases) {
    if (!c.data.truth) throw InvalidArgument("case '" + c.name + "' has no ground truth");
  }

  EvalReport report;
  report.methods = cfg.methods;
  report.cases.resize(cases.size());
  parallel_for(cases.size(), jobs, [&](std::size_t i) {
    const Case& c = cases[i].data;
    const LabelMap& truth = *c.truth;
    const Segmentation seg = segment(c.image, cfg);
    CaseReport& r = report.cases[i];
    r.name = cases[i].name;
    r.pixels = account_pixels(truth);
    r.seg_accuracy = segmentation_accuracy(seg.mask, truth);
    r.seg_precision = segmentation_precision(seg.mask, truth);
    for (const Method m : cfg.methods) {
      LabelMap classmap;
      switch (m) {
        case Method::Pixel:
          classmap = classify_pixelwise(c.image, seg.mask, *models.pixel);
          break;
        case Method::Mean:
          classmap = classify_case(seg, c.image, *models.mean, FeatureSet::MeanOnly, false, cfg.post).classmap;
          break;
        case Method::MeanStd:
          classmap = classify_case(seg, c.image, *models.meanstd, FeatureSet::MeanStd, false, cfg.post).classmap;
          break;
        case Method::Post:
          classmap = classify_case(seg, c.image, *models.meanstd, FeatureSet::MeanStd, true, cfg.post).classmap;
          break;
      }
      r.class_accuracy[m] = classification_accuracy(classmap, truth);
    }
  });

  const Method key = report.sort_method();
  std::stable_sort(report.cases.begin(), report.cases.end(),
                   [&](const CaseReport& a, const CaseReport& b) {
                     const double ka = a.class_accuracy.at(key);
                     const double kb = b.class_accuracy.at(key);
                     return ka != kb ? ka > kb : a.name < b.name;
                   });
  return report;
}

std::string report_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "case,seg_accuracy";
  for (const Method m : report.methods) os << ',' << method_name(m);
  os << ",chromosome_px,excluded_overlap_px\n";
  for (const CaseReport& c : report.cases) {
    os << csv_field(c.name) << ',' << fixed(c.seg_accuracy, 6);
    for (const Method m : report.methods) os << ',' << fixed(c.class_accuracy.at(m), 6);
    os << ',' << c.pixels.chromosome << ',' << c.pixels.overlap << '\n';
  }
  long chromosome = 0;
  long overlap = 0;
  for (const CaseReport& c : report.cases) {
    chromosome += c.pixels.chromosome;
    overlap += c.pixels.overlap;
  }
  os << "Avg," << fixed(report.average_seg_accuracy(), 6);
  for (const Method m : report.methods) os << ',' << fixed(report.average(m), 6);
  os << ',' << chromosome << ',' << overlap << '\n';
  return os.str();
}

std::string report_text(const EvalReport& report) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"No.", "Case", "Seg.Acc"};
  for (const Method m : report.methods) header.emplace_back(method_name(m));
  rows.push_back(header);
  int n = 0;
  for (const CaseReport& c : report.cases) {
    std::vector<std::string> row{std::to_string(++n), c.name, fixed(100.0 * c.seg_accuracy, 2)};
    for (const Method m : report.methods) row.push_back(fixed(100.0 * c.class_accuracy.at(m), 2));
    rows.push_back(row);
  }
  std::vector<std::string> avg{"Avg", "", fixed(100.0 * report.average_seg_accuracy(), 2)};
  for (const Method m : report.methods) avg.push_back(fixed(100.0 * report.average(m), 2));
  rows.push_back(avg);

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::ostringstream os;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i == 1) {
        os << std::left << std::setw(static_cast<int>(width[i])) << row[i];
      } else {
        os << std::right << std::setw(static_cast<int>(width[i])) << row[i];
      }
      os << (i + 1 == row.size() ? "\n" : "  ");
    }
  }
  return os.str();
}

}  // namespace mfish
