#include "mfish/bayes.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "mfish/error.hpp"

namespace mfish {

namespace {

constexpr const char* kModelMagic = "MFISH-BAYES-MODEL";
constexpr int kModelVersion = 1;

double half_log_two_pi() { return 0.5 * std::log(2.0 * std::numbers::pi); }

}  // namespace

std::vector<int> chromosome_labels() {
  std::vector<int> labels(kChromosomeClasses);
  for (int i = 0; i < kChromosomeClasses; ++i) labels[i] = i + 1;
  return labels;
}

ClassModel::ClassModel(std::vector<ClassStats> classes, double epsilon)
    : classes_(std::move(classes)), epsilon_(epsilon) {
  if (classes_.empty()) throw InvalidArgument("model needs at least one class");
  if (!(epsilon_ >= 0.0) || !std::isfinite(epsilon_)) {
    throw InvalidArgument("covariance epsilon must be finite and >= 0");
  }
  const Eigen::Index d = classes_.front().mean.size();
  if (d == 0) throw InvalidArgument("model dimension must be positive");

  double prior_sum = 0.0;
  std::set<int> seen;
  for (const ClassStats& c : classes_) {
    if (c.mean.size() != d || c.covariance.rows() != d || c.covariance.cols() != d) {
      throw InvalidArgument("class " + std::to_string(c.label) + " has inconsistent dimensions");
    }
    if (!seen.insert(c.label).second) {
      throw InvalidArgument("duplicate class label " + std::to_string(c.label));
    }
    if (!(c.prior > 0.0) || !std::isfinite(c.prior)) {
      throw InvalidArgument("class " + std::to_string(c.label) + " prior must be positive");
    }
    prior_sum += c.prior;
  }

  for (ClassStats& c : classes_) {
    c.prior /= prior_sum;
    Eigen::LLT<Eigen::MatrixXd> llt(c.covariance);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("covariance of class " + std::to_string(c.label) +
                           " is not positive definite");
    }
    const double half_log_det = llt.matrixLLT().diagonal().array().log().sum();
    log_norm_.push_back(-static_cast<double>(d) * half_log_two_pi() - half_log_det +
                        std::log(c.prior));
    factors_.push_back(std::move(llt));
  }
}

std::vector<int> ClassModel::labels() const {
  std::vector<int> out;
  for (const ClassStats& c : classes_) out.push_back(c.label);
  return out;
}

int ClassModel::index_of(int label) const {
  for (int i = 0; i < class_count(); ++i) {
    if (classes_[i].label == label) return i;
  }
  return -1;
}

double ClassModel::log_likelihood(int index, const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Eigen::VectorXd z = factors_[index].matrixL().solve(x - classes_[index].mean);
  return log_norm_[index] - std::log(classes_[index].prior) - 0.5 * z.squaredNorm();
}

Eigen::VectorXd ClassModel::log_joint(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dimension()) {
    throw InvalidArgument("feature vector has dimension " + std::to_string(x.size()) +
                          ", model expects " + std::to_string(dimension()));
  }
  Eigen::VectorXd out(class_count());
  for (int i = 0; i < class_count(); ++i) {
    const Eigen::VectorXd z = factors_[i].matrixL().solve(x - classes_[i].mean);
    out(i) = log_norm_[i] - 0.5 * z.squaredNorm();
  }
  return out;
}

ModelTrainer::ModelTrainer(int dimension, std::vector<int> labels)
    : dimension_(dimension), labels_(std::move(labels)) {
  if (dimension_ <= 0) throw InvalidArgument("feature dimension must be positive");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i], static_cast<int>(i)).second) {
      throw InvalidArgument("duplicate class label " + std::to_string(labels_[i]));
    }
    acc_.push_back({0, Eigen::VectorXd::Zero(dimension_),
                    Eigen::MatrixXd::Zero(dimension_, dimension_)});
  }
}

void ModelTrainer::add(const Eigen::Ref<const Eigen::VectorXd>& x, int label) {
  if (x.size() != dimension_) throw InvalidArgument("training vector has wrong dimension");
  if (!x.allFinite()) throw InvalidArgument("training vector contains non-finite values");
  const auto it = index_.find(label);
  if (it == index_.end()) throw InvalidArgument("unexpected class label " + std::to_string(label));
  Accumulator& a = acc_[it->second];
  ++a.n;
  const Eigen::VectorXd delta = x - a.mean;
  a.mean += delta / static_cast<double>(a.n);
  a.scatter.noalias() += delta * (x - a.mean).transpose();
}

long ModelTrainer::count(int label) const {
  const auto it = index_.find(label);
  return it == index_.end() ? 0 : acc_[it->second].n;
}

ClassModel ModelTrainer::finish(double epsilon) const {
  long total = 0;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (acc_[i].n < 2) {
      throw TrainingError("class " + std::to_string(labels_[i]) + " has " +
                          std::to_string(acc_[i].n) + " training samples; at least 2 required");
    }
    total += acc_[i].n;
  }
  std::vector<ClassStats> classes;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const Accumulator& a = acc_[i];
    ClassStats c;
    c.label = labels_[i];
    c.count = a.n;
    c.prior = static_cast<double>(a.n) / static_cast<double>(total);
    c.mean = a.mean;
    // Symmetrise away the rounding asymmetry of the rank-one updates.
    const Eigen::MatrixXd cov = a.scatter / static_cast<double>(a.n);
    c.covariance = 0.5 * (cov + cov.transpose());
    c.covariance.diagonal().array() += epsilon;
    classes.push_back(std::move(c));
  }
  return ClassModel(std::move(classes), epsilon);
}

ClassModel train(std::span<const LabeledSample> samples, std::vector<int> labels, double epsilon) {
  if (samples.empty()) throw TrainingError("no training samples");
  ModelTrainer trainer(static_cast<int>(samples.front().x.size()), std::move(labels));
  for (const LabeledSample& s : samples) trainer.add(s.x, s.label);
  return trainer.finish(epsilon);
}

double log_gaussian_density(const Eigen::Ref<const Eigen::VectorXd>& x,
                            const Eigen::Ref<const Eigen::VectorXd>& mean,
                            const Eigen::Ref<const Eigen::MatrixXd>& covariance) {
  const Eigen::Index d = mean.size();
  if (x.size() != d || covariance.rows() != d || covariance.cols() != d) {
    throw InvalidArgument("gaussian density: dimension mismatch");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("covariance is singular or not positive definite (missing regularisation?)");
  }
  const double half_log_det = llt.matrixLLT().diagonal().array().log().sum();
  const Eigen::VectorXd z = llt.matrixL().solve(x - mean);
  return -static_cast<double>(d) * half_log_two_pi() - half_log_det - 0.5 * z.squaredNorm();
}

double gaussian_density(const Eigen::Ref<const Eigen::VectorXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& mean,
                        const Eigen::Ref<const Eigen::MatrixXd>& covariance) {
  return std::exp(log_gaussian_density(x, mean, covariance));
}

Posterior classify(const Eigen::Ref<const Eigen::VectorXd>& x, const ClassModel& model,
                   RegionId region_id) {
  const Eigen::VectorXd lj = model.log_joint(x);
  int best = -1;
  for (int i = 0; i < lj.size(); ++i) {
    if (std::isnan(lj(i)) || lj(i) == -std::numeric_limits<double>::infinity()) continue;
    if (best < 0 || lj(i) > lj(best)) best = i;
  }
  if (best < 0) throw NumericalError("unclassifiable feature vector: every likelihood vanishes");

  Posterior post;
  post.region_id = region_id;
  post.probabilities = (lj.array() - lj(best)).exp().matrix();
  for (int i = 0; i < lj.size(); ++i) {
    if (std::isnan(post.probabilities(i))) post.probabilities(i) = 0.0;
  }
  post.probabilities /= post.probabilities.sum();
  post.decided_class = model.stats(best).label;
  return post;
}

Posterior classify_region(const RegionFeatures& f, const ClassModel& model, FeatureSet set) {
  return classify(select_features(f, set), model, f.region_id);
}

int classify_among(const Eigen::Ref<const Eigen::VectorXd>& x, const ClassModel& model,
                   std::span<const int> candidates) {
  if (candidates.empty()) throw InvalidArgument("classify_among needs at least one candidate");
  const Eigen::VectorXd lj = model.log_joint(x);
  int best_label = 0;
  double best = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (const int label : candidates) {
    const int i = model.index_of(label);
    if (i < 0) throw InvalidArgument("candidate class " + std::to_string(label) + " not in model");
    const double v = std::isnan(lj(i)) ? -std::numeric_limits<double>::infinity() : lj(i);
    if (!found || v > best || (v == best && label < best_label)) {
      best = v;
      best_label = label;
      found = true;
    }
  }
  return best_label;
}

Eigen::VectorXd pixel_features(const MultichannelImage& img, PixelIndex p) {
  Eigen::VectorXd x(kPixelFeatureDim);
  for (int c = 0; c < kFluorChannels; ++c) x(c) = img.channels[c].data()[p];
  x(kFluorChannels) = img.dapi.data()[p];
  return x;
}

LabelMap classify_pixelwise(const MultichannelImage& img, const BinaryMask& mask,
                            const ClassModel& pixel_model) {
  img.validate();
  if (mask.rows() != img.height() || mask.cols() != img.width()) {
    throw InvalidArgument("mask dimensions differ from image");
  }
  if (pixel_model.dimension() != kPixelFeatureDim) {
    throw InvalidArgument("pixel model must have 6 features (5 fluors + DAPI)");
  }
  if (pixel_model.index_of(0) < 0) throw InvalidArgument("pixel model lacks a background class");

  LabelMap out = LabelMap::Zero(img.height(), img.width());
  // Identical pixel vectors always get identical labels; cache them.
  std::map<std::array<std::uint8_t, kPixelFeatureDim>, int> cache;
  for (PixelIndex p = 0; p < mask.size(); ++p) {
    if (!mask.data()[p]) continue;
    std::array<std::uint8_t, kPixelFeatureDim> key{};
    for (int c = 0; c < kFluorChannels; ++c) key[c] = img.channels[c].data()[p];
    key[kFluorChannels] = img.dapi.data()[p];
    auto it = cache.find(key);
    if (it == cache.end()) {
      it = cache.emplace(key, classify(pixel_features(img, p), pixel_model).decided_class).first;
    }
    out.data()[p] = it->second;
  }
  return out;
}

void save_model(const ClassModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << std::setprecision(17);
  out << kModelMagic << '\n'
      << "version " << kModelVersion << '\n'
      << "dimension " << model.dimension() << '\n'
      << "classes " << model.class_count() << '\n'
      << "epsilon " << model.epsilon() << '\n';
  const int d = model.dimension();
  for (const ClassStats& c : model.classes()) {
    out << "class " << c.label << '\n' << "prior " << c.prior << '\n' << "mean";
    for (int i = 0; i < d; ++i) out << ' ' << c.mean(i);
    out << "\ncovariance";
    for (int i = 0; i < d; ++i) {
      for (int j = i; j < d; ++j) out << ' ' << c.covariance(i, j);
    }
    out << "\ncount " << c.count << '\n';
  }
  out << "end\n";
  if (!out) throw IoError("write failed: " + path.string());
}

namespace {

class ModelReader {
 public:
  ModelReader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) fail("unexpected end of file");
    return w;
  }
  void expect(const std::string& key) {
    const std::string w = word();
    if (w != key) fail("expected '" + key + "', found '" + w + "'");
  }
  template <typename T>
  T value() {
    T v{};
    if (!(in_ >> v)) fail("expected a number");
    return v;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError(name_ + ": " + what);
  }

 private:
  std::istream& in_;
  std::string name_;
};

}  // namespace

ClassModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model: " + path.string());
  ModelReader r(in, path.string());
  if (r.word() != kModelMagic) r.fail("not a model file (bad magic)");
  r.expect("version");
  if (const int v = r.value<int>(); v != kModelVersion) {
    r.fail("unsupported model version " + std::to_string(v));
  }
  r.expect("dimension");
  const int d = r.value<int>();
  r.expect("classes");
  const int n_classes = r.value<int>();
  r.expect("epsilon");
  const double epsilon = r.value<double>();
  if (d <= 0 || d > 64 || n_classes <= 0 || n_classes > 256) r.fail("implausible model header");

  std::vector<ClassStats> classes;
  for (int k = 0; k < n_classes; ++k) {
    ClassStats c;
    r.expect("class");
    c.label = r.value<int>();
    r.expect("prior");
    c.prior = r.value<double>();
    r.expect("mean");
    c.mean.resize(d);
    for (int i = 0; i < d; ++i) c.mean(i) = r.value<double>();
    r.expect("covariance");
    c.covariance.resize(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = i; j < d; ++j) {
        c.covariance(i, j) = r.value<double>();
        c.covariance(j, i) = c.covariance(i, j);
      }
    }
    r.expect("count");
    c.count = r.value<long>();
    classes.push_back(std::move(c));
  }
  r.expect("end");
  try {
    return ClassModel(std::move(classes), epsilon);
  } catch (const NumericalError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace mfish
