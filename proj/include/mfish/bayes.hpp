#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "mfish/features.hpp"

namespace mfish {

inline constexpr double kDefaultEpsilon = 1e-3;

/// Gaussian class-conditional statistics for one class.
struct ClassStats {
  int label = 0;
  double prior = 0.0;
  Eigen::VectorXd mean;
  /// Regularised covariance (scatter / n + epsilon * I).
  Eigen::MatrixXd covariance;
  long count = 0;
};

/// Multivariate Gaussian Bayes classifier: per-class prior, mean and full
/// covariance. Immutable once built; Cholesky factors are cached so
/// classification is const and thread-safe.
class ClassModel {
 public:
  /// Priors are normalised to sum to one. Throws NumericalError if a
  /// covariance is not positive definite and InvalidArgument on inconsistent
  /// dimensions, duplicate labels, or non-positive priors.
  ClassModel(std::vector<ClassStats> classes, double epsilon);

  int dimension() const { return static_cast<int>(classes_.front().mean.size()); }
  int class_count() const { return static_cast<int>(classes_.size()); }
  double epsilon() const { return epsilon_; }
  const std::vector<ClassStats>& classes() const { return classes_; }
  const ClassStats& stats(int index) const { return classes_[index]; }
  std::vector<int> labels() const;
  /// -1 if the label is not modelled.
  int index_of(int label) const;

  /// log p(x | class) for the class at `index`.
  double log_likelihood(int index, const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// log p(x | c) + log P(c) for every class, in class order.
  Eigen::VectorXd log_joint(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  std::vector<ClassStats> classes_;
  double epsilon_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> factors_;
  std::vector<double> log_norm_;  // -d/2 log(2 pi) - 1/2 log|Sigma| + log prior
};

struct Posterior {
  RegionId region_id = 0;
  /// P(c | x) for each class in model order; sums to one.
  Eigen::VectorXd probabilities;
  int decided_class = 0;
  double max_probability() const { return probabilities.maxCoeff(); }
};

struct LabeledSample {
  Eigen::VectorXd x;
  int label = 0;
};

/// Streaming trainer: per-class Welford accumulation of mean and scatter.
class ModelTrainer {
 public:
  /// `labels` lists every class the model must contain, in model order.
  ModelTrainer(int dimension, std::vector<int> labels);

  void add(const Eigen::Ref<const Eigen::VectorXd>& x, int label);
  long count(int label) const;

  /// Throws TrainingError naming the first class with fewer than two samples.
  ClassModel finish(double epsilon = kDefaultEpsilon) const;

 private:
  struct Accumulator {
    long n = 0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd scatter;
  };
  int dimension_;
  std::vector<int> labels_;
  std::map<int, int> index_;
  std::vector<Accumulator> acc_;
};

ClassModel train(std::span<const LabeledSample> samples, std::vector<int> labels,
                 double epsilon = kDefaultEpsilon);

/// Labels 1..24.
std::vector<int> chromosome_labels();

/// log of the multivariate normal density. Throws NumericalError if the
/// covariance is not positive definite.
double log_gaussian_density(const Eigen::Ref<const Eigen::VectorXd>& x,
                            const Eigen::Ref<const Eigen::VectorXd>& mean,
                            const Eigen::Ref<const Eigen::MatrixXd>& covariance);
double gaussian_density(const Eigen::Ref<const Eigen::VectorXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& mean,
                        const Eigen::Ref<const Eigen::MatrixXd>& covariance);

/// Posterior over all classes via log-sum-exp; ties go to the lowest class
/// index. Throws NumericalError if no class has a finite log-likelihood.
Posterior classify(const Eigen::Ref<const Eigen::VectorXd>& x, const ClassModel& model,
                   RegionId region_id = 0);

Posterior classify_region(const RegionFeatures& f, const ClassModel& model,
                          FeatureSet set = FeatureSet::MeanStd);

/// Most probable class among `candidates` (labels), scored by the full
/// posterior restricted to and renormalised over that set. Ties go to the
/// lowest label.
int classify_among(const Eigen::Ref<const Eigen::VectorXd>& x, const ClassModel& model,
                   std::span<const int> candidates);

/// Per-pixel baseline. The model's features are the five fluor values then
/// DAPI; it must contain label 0 (background). Pixels outside the mask, or
/// decided as background, are 0.
LabelMap classify_pixelwise(const MultichannelImage& img, const BinaryMask& mask,
                            const ClassModel& pixel_model);

/// Six-vector (five fluors, DAPI) at a pixel.
Eigen::VectorXd pixel_features(const MultichannelImage& img, PixelIndex p);
inline constexpr int kPixelFeatureDim = kFluorChannels + 1;

void save_model(const ClassModel& model, const std::filesystem::path& path);
ClassModel load_model(const std::filesystem::path& path);

}  // namespace mfish
