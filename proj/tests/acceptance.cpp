// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "mfish/bayes.hpp"
#include "mfish/error.hpp"
#include "mfish/eval.hpp"
#include "mfish/pipeline.hpp"
#include "mfish/preprocess.hpp"
#include "mfish/synth.hpp"
#include "mfish/watershed.hpp"
#include "oracles.hpp"

using namespace mfish;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

GradientImage random_relief(std::mt19937_64& rng, int h, int w, int levels) {
  std::uniform_int_distribution<int> d(0, levels - 1);
  GradientImage g(h, w);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = d(rng);
  return g;
}

Case phantom(std::uint64_t seed, double sigma) {
  PhantomSpec spec;
  spec.seed = seed;
  spec.noise_sigma = sigma;
  return generate_phantom(spec);
}

std::vector<Case> phantoms(std::uint64_t first_seed, int count, double sigma) {
  std::vector<Case> out(static_cast<std::size_t>(count));
  parallel_for(out.size(), jobs(), [&](std::size_t i) { out[i] = phantom(first_seed + i, sigma); });
  return out;
}

// 1
Outcome otsu_equivalence() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> d(0, 255);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    GrayImage img(32, 32);
    for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = static_cast<std::uint8_t>(d(rng));
    if (otsu_threshold(img) != oracle::otsu(img)) ++mismatches;
  }
  const double t = seconds_since(t0);
  o.detail << "1000 images, " << mismatches << " mismatches, " << std::fixed << std::setprecision(2) << t << " s";
  o.require(mismatches == 0, "exact equality");
  o.require(t < 5.0, "runtime < 5 s");
  return o;
}

// 2
Outcome watershed_equivalence() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(777);
  int count_mismatch = 0;
  int disconnected = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const GradientImage g = random_relief(rng, 12, 12, trial % 2 ? 6 : 64);
    const LabelMap ws = watershed_transform(g, Connectivity::Eight);
    if (ws.maxCoeff() != oracle::count_regional_minima(g, 8)) ++count_mismatch;
    if (!oracle::labels_connected(ws, 8)) ++disconnected;
  }
  int ridge_mismatch = 0;
  for (unsigned i = 0; i < 20; ++i) {
    const auto f = oracle::ridge_raster(i);
    const LabelMap ws = watershed_transform(f, Connectivity::Eight);
    if (ws.maxCoeff() != oracle::count_regional_minima(f, 8) ||
        !oracle::matches_descent(ws, oracle::descent_targets(f, 8))) {
      ++ridge_mismatch;
    }
  }
  const double t = seconds_since(t0);
  o.detail << "200 random: " << count_mismatch << " count mismatches, " << disconnected
           << " disconnected; 20 ridge rasters: " << ridge_mismatch << " mismatches; " << std::fixed
           << std::setprecision(2) << t << " s";
  o.require(count_mismatch == 0 && disconnected == 0 && ridge_mismatch == 0, "oracle agreement");
  o.require(t < 10.0, "runtime < 10 s");
  return o;
}

// 3
Outcome minima_monotonicity() {
  Outcome o;
  std::mt19937_64 rng(4242);
  const std::vector<double> hs{0, 1, 2, 5, 10, 20};
  int violations = 0;
  int identity_failures = 0;
  long first = 0, last = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const GradientImage g = random_relief(rng, 16, 16, 40);
    int previous = 1 << 30;
    for (double h : hs) {
      const GradientImage r = suppress_minima(g, h, Connectivity::Eight);
      if (h == 0.0 && !(r == g).all()) ++identity_failures;
      const int regions = watershed_transform(r, Connectivity::Eight).maxCoeff();
      if (regions > previous) ++violations;
      previous = regions;
      if (h == hs.front()) first += regions;
      if (h == hs.back()) last += regions;
    }
  }
  o.detail << "50 rasters, mean regions " << first / 50.0 << " at h=0 -> " << last / 50.0
           << " at h=20, " << violations << " increases";
  o.require(violations == 0, "non-increasing region count");
  o.require(identity_failures == 0, "h = 0 identity");
  return o;
}

// 4
Outcome classifier_correctness() {
  Outcome o;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n(0.0, 1.0);
  const auto vec = [&](int d, double s) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v(i) = s * n(rng);
    return v;
  };
  const auto spd = [&](int d) {
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j <= i; ++j) l(i, j) = n(rng);
      l(i, i) = std::abs(l(i, i)) + 0.5;
    }
    return Eigen::MatrixXd(l * l.transpose());
  };

  std::vector<LabeledSample> samples;
  for (int k = 1; k <= 24; ++k) {
    const Eigen::VectorXd centre = vec(10, 40.0);
    const Eigen::MatrixXd shape = spd(10).llt().matrixL();
    for (int i = 0; i < 12; ++i) samples.push_back({centre + shape * vec(10, 1.0), k});
  }
  const ClassModel model = train(samples, chromosome_labels());

  double worst_sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Posterior p = classify(vec(10, i % 2 ? 40.0 : 400.0), model);
    worst_sum = std::max(worst_sum, std::abs(p.probabilities.sum() - 1.0));
  }
  double worst_rel = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int d = 1 + i % 10;
    const Eigen::MatrixXd sigma = spd(d);
    const Eigen::VectorXd mu = vec(d, 3.0);
    const Eigen::VectorXd x = mu + vec(d, 1.0);
    const double expected = oracle::gaussian_density(x, mu, sigma);
    worst_rel = std::max(worst_rel, std::abs(gaussian_density(x, mu, sigma) - expected) / expected);
  }
  std::vector<ClassStats> scaled = model.classes();
  for (auto& c : scaled) c.prior *= 123.0;
  const ClassModel scaled_model(scaled, model.epsilon());
  int scaling_changes = 0;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::VectorXd x = vec(10, 40.0);
    if (classify(x, model).decided_class != classify(x, scaled_model).decided_class) ++scaling_changes;
  }
  oracle::TempDir tmp("accept_model");
  save_model(model, tmp.path() / "m.txt");
  const ClassModel loaded = load_model(tmp.path() / "m.txt");
  int roundtrip_changes = 0;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::VectorXd x = vec(10, 40.0);
    if (classify(x, model).decided_class != classify(x, loaded).decided_class) ++roundtrip_changes;
  }
  o.detail << std::scientific << std::setprecision(2) << "max |sum-1| " << worst_sum << ", max density rel err "
           << worst_rel << ", prior-scaling changes " << scaling_changes << ", round-trip changes "
           << roundtrip_changes;
  o.require(worst_sum <= 1e-9, "posterior normalisation");
  o.require(worst_rel <= 1e-8, "density oracle");
  o.require(scaling_changes == 0, "prior scaling invariance");
  o.require(roundtrip_changes == 0, "save/load fidelity");
  return o;
}

// 5
Outcome synthetic_end_to_end() {
  Outcome o;
  const auto t0 = Clock::now();
  const PipelineConfig cfg;
  const TrainedModels models = train_models(phantoms(1000, 10, 8.0), cfg, {}, jobs());

  const Case clean = phantom(5000, 0.0);
  const Segmentation clean_seg = segment(clean.image, cfg);
  const double clean_acc = classification_accuracy(
      classify_case(clean_seg, clean.image, *models.meanstd, FeatureSet::MeanStd, true, cfg.post).classmap,
      *clean.truth);

  const std::vector<Case> noisy = phantoms(6000, 20, 8.0);
  std::vector<double> acc(noisy.size()), seg_acc(noisy.size());
  parallel_for(noisy.size(), jobs(), [&](std::size_t i) {
    const Segmentation seg = segment(noisy[i].image, cfg);
    seg_acc[i] = segmentation_accuracy(seg.mask, *noisy[i].truth);
    acc[i] = classification_accuracy(
        classify_case(seg, noisy[i].image, *models.meanstd, FeatureSet::MeanStd, true, cfg.post).classmap,
        *noisy[i].truth);
  });
  double mean_acc = 0.0, min_seg = 1.0;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    mean_acc += acc[i] / static_cast<double>(acc.size());
    min_seg = std::min(min_seg, seg_acc[i]);
  }
  const double t = seconds_since(t0);
  o.detail << std::fixed << std::setprecision(4) << "noiseless accuracy " << clean_acc
           << ", sigma 8 mean accuracy over 20 seeds " << mean_acc << ", min segmentation accuracy "
           << min_seg << ", " << std::setprecision(1) << t << " s";
  o.require(clean_acc == 1.0, "noiseless accuracy = 1.000");
  o.require(mean_acc >= 0.95, "mean accuracy >= 0.95");
  o.require(min_seg >= 0.99, "segmentation accuracy >= 0.99");
  o.require(t < 120.0, "runtime < 2 min");
  return o;
}

// 6
Outcome method_ordering(EvalReport& report_out) {
  Outcome o;
  constexpr double kSigma = 50.0;
  const PipelineConfig cfg;
  const TrainedModels m = train_models(phantoms(3000, 10, kSigma), cfg, {true, true, true}, jobs());
  const MethodModels models{m.meanstd, m.mean, m.pixel};
  const std::vector<Case> test = phantoms(7000, 20, kSigma);
  std::vector<NamedCase> named;
  for (std::size_t i = 0; i < test.size(); ++i) named.push_back({"seed" + std::to_string(7000 + i), test[i]});
  const EvalReport r = batch_evaluate(named, models, cfg, jobs());
  const double pixel = r.average(Method::Pixel);
  const double mean = r.average(Method::Mean);
  const double meanstd = r.average(Method::MeanStd);
  const double post = r.average(Method::Post);
  o.detail << std::fixed << std::setprecision(2) << "sigma " << kSigma << ", 20 seeds: pixel " << 100 * pixel
           << "%, mean " << 100 * mean << "%, meanstd " << 100 * meanstd << "%, post " << 100 * post << "%";
  o.require(pixel <= mean, "pixel <= mean");
  o.require(mean <= meanstd, "mean <= meanstd");
  o.require(meanstd <= post, "meanstd <= post");
  o.require(post - meanstd <= 0.02, "post within 2 pp of meanstd");
  report_out = r;
  return o;
}

std::vector<fs::path> case_dirs(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory() && fs::exists(e.path() / kDapiFile)) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// 7
Outcome dataset_report(const EvalReport& synthetic) {
  Outcome o;
  constexpr double kReference = 0.8421;
  const char* env = std::getenv("MFISH_DATASET_DIR");
  EvalReport report;
  std::string source;
  if (env && *env) {
    const fs::path root(env);
    const bool split = fs::is_directory(root / "train") && fs::is_directory(root / "test");
    const auto train_dirs = case_dirs(split ? root / "train" : root);
    auto test_dirs = case_dirs(split ? root / "test" : root);
    if (test_dirs.size() > 40) test_dirs.resize(40);
    std::vector<Case> train;
    for (const auto& d : train_dirs) train.push_back(load_case(d));
    const PipelineConfig cfg;
    const TrainedModels m = train_models(train, cfg, {true, true, true}, jobs());
    std::vector<NamedCase> test;
    for (const auto& d : test_dirs) test.push_back({d.filename().string(), load_case(d)});
    report = batch_evaluate(test, {m.meanstd, m.mean, m.pixel}, cfg, jobs());
    source = std::string(env) + (split ? " (train/test split)" : " (same cases for training and testing)");
  } else {
    report = synthetic;
    source = "no MFISH_DATASET_DIR; synthetic sigma 50 cases";
  }
  o.detail << std::fixed << std::setprecision(2) << "informational, " << source << ": " << report.cases.size()
           << " case(s), post average " << 100 * report.average(Method::Post) << "% vs reference "
           << 100 * kReference << "%";
  o.require(!report.cases.empty(), "per-case rows");
  for (const auto& c : report.cases) o.require(c.class_accuracy.count(Method::Post) == 1, "post column");
  return o;
}

// 8
Outcome metric_fixtures() {
  Outcome o;
  const auto row = [](std::initializer_list<int> v) {
    LabelMap m(1, static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (int x : v) m(0, i++) = x;
    return m;
  };
  const LabelMap ten = row({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 0, 0});
  BinaryMask all = BinaryMask::Constant(1, 12, true);
  BinaryMask none = BinaryMask::Constant(1, 12, false);
  BinaryMask eight = all;
  eight(0, 2) = eight(0, 6) = false;
  o.require(segmentation_accuracy(all, ten) == 1.0, "seg full");
  o.require(segmentation_accuracy(none, ten) == 0.0, "seg none");
  o.require(segmentation_accuracy(eight, ten) == 0.8, "seg 8/10");

  o.require(classification_accuracy(ten, ten) == 1.0, "class equal");
  LabelMap wrong = ten;
  for (Eigen::Index i = 0; i < 10; ++i) wrong(0, i) = ten(0, i) + 1;
  o.require(classification_accuracy(wrong, ten) == 0.0, "class all wrong");
  LabelMap six = ten;
  six(0, 0) = six(0, 3) = six(0, 5) = six(0, 9) = 0;
  o.require(classification_accuracy(six, ten) == 0.6, "class 6/10");

  const LabelMap truth = row({0, 7, 7, 255, 7, 0, 255, 7});
  const PixelAccounting a = account_pixels(truth);
  o.require(a.chromosome == 4 && a.overlap == 2 && a.background == 2, "pixel accounting");
  LabelMap cm = row({0, 7, 7, 0, 3, 0, 7, 7});
  const double base = classification_accuracy(cm, truth);
  cm(0, 3) = 7;
  cm(0, 6) = 3;
  cm(0, 0) = 7;
  o.require(base == 0.75 && classification_accuracy(cm, truth) == 0.75, "overlap exclusion (class)");
  BinaryMask fg = truth == 7;
  fg(0, 4) = false;
  const double seg_base = segmentation_accuracy(fg, truth);
  fg(0, 3) = fg(0, 6) = true;
  o.require(seg_base == 0.75 && segmentation_accuracy(fg, truth) == 0.75, "overlap exclusion (seg)");
  o.detail << "recall, accuracy and {0, 7, 255} exclusion fixtures";
  return o;
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](int n, const std::string& name, const std::function<Outcome()>& run) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << " (" << name << "): " << o.detail.str()
              << std::endl;
  };

  EvalReport ordering;
  report(1, "otsu oracle equivalence", otsu_equivalence);
  report(2, "watershed oracle equivalence", watershed_equivalence);
  report(3, "minima monotonicity", minima_monotonicity);
  report(4, "classifier correctness", classifier_correctness);
  report(5, "synthetic end-to-end", synthetic_end_to_end);
  report(6, "method ordering", [&] { return method_ordering(ordering); });
  report(7, "dataset report", [&] { return dataset_report(ordering); });
  report(8, "metric fixtures", metric_fixtures);
  std::cout << failures << " of 8 criteria failed" << std::endl;
  return failures == 0 ? 0 : 1;
}
