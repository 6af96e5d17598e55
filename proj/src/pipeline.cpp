#include "mfish/pipeline.hpp"

#include <deque>
#include <exception>
#include <mutex>

#include "mfish/error.hpp"
#include "mfish/preprocess.hpp"
#include "neighbors.hpp"

namespace mfish {

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& f) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          const std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

Segmentation segment(const MultichannelImage& img, const PipelineConfig& cfg) {
  img.validate();
  cfg.validate();
  Segmentation seg;
  seg.blob_removed = remove_blobs(img.dapi, cfg.blob);
  const GradientImage grad = quantize(sobel_gradient(seg.blob_removed));
  seg.relief = suppress_minima(grad, cfg.segmentation.h, cfg.segmentation.connectivity);
  seg.watershed = watershed_transform(seg.relief, cfg.segmentation.connectivity);
  seg.basin_count = seg.watershed.size() == 0 ? 0 : seg.watershed.maxCoeff();
  seg.mask = make_binary_mask(seg.blob_removed);
  seg.regions = extract_regions(seg.watershed, seg.mask);
  seg.rag = build_rag(seg.regions, seg.watershed, cfg.segmentation.connectivity);
  seg.connectivity = cfg.segmentation.connectivity;
  return seg;
}

std::map<RegionId, int> label_regions_by_truth(const RegionTable& regions, const LabelMap& truth) {
  std::map<RegionId, int> out;
  std::array<long, kChromosomeClasses + 1> votes{};
  for (const auto& [id, r] : regions) {
    votes.fill(0);
    for (const PixelIndex p : r.pixels) {
      const std::int32_t t = truth.data()[p];
      if (t >= 1 && t <= kChromosomeClasses) ++votes[t];
    }
    int best = 0;
    for (int c = 1; c <= kChromosomeClasses; ++c) {
      if (votes[c] > votes[best]) best = c;
    }
    if (best != 0) out[id] = best;
  }
  return out;
}

LabelMap paint_classmap(const ClassifiedRegions& state, const BinaryMask& mask,
                        Connectivity connectivity) {
  const Eigen::Index width = mask.cols();
  const Eigen::Index height = mask.rows();
  LabelMap classmap = LabelMap::Zero(height, width);
  std::deque<PixelIndex> frontier;
  for (const auto& [id, r] : state.regions) {
    const int c = state.classes.at(id);
    for (const PixelIndex p : r.pixels) {
      classmap.data()[p] = c;
      frontier.push_back(p);
    }
  }
  std::sort(frontier.begin(), frontier.end());
  while (!frontier.empty()) {
    const PixelIndex p = frontier.front();
    frontier.pop_front();
    detail::for_each_neighbor(p, width, height, connectivity, [&](PixelIndex q) {
      if (mask.data()[q] && classmap.data()[q] == 0) {
        classmap.data()[q] = classmap.data()[p];
        frontier.push_back(q);
      }
    });
  }
  return classmap;
}

CaseClassification classify_case(const Segmentation& seg, const MultichannelImage& img,
                                 const ClassModel& model, FeatureSet set, bool postprocess,
                                 const PostprocessConfig& post) {
  if (model.dimension() != feature_dimension(set)) {
    throw InvalidArgument("model has " + std::to_string(model.dimension()) +
                          " features but the method uses " +
                          std::to_string(feature_dimension(set)));
  }
  CaseClassification out;
  ClassifiedRegions& state = out.state;
  state.regions = seg.regions;
  state.rag = seg.rag;
  state.features = extract_all_features(seg.regions, img);
  for (const auto& [id, f] : state.features) {
    Posterior p = classify_region(f, model, set);
    state.classes[id] = p.decided_class;
    state.posteriors.emplace(id, std::move(p));
  }
  merge_same_class(state);
  if (postprocess) out.reclassified = reclassify_small(state, model, post, set);
  out.classmap = paint_classmap(state, seg.mask, seg.connectivity);
  return out;
}

TrainedModels train_models(const std::vector<Case>& cases, const PipelineConfig& cfg,
                           TrainingRequest request, int jobs) {
  if (cases.empty()) throw TrainingError("no training cases");
  for (const Case& c : cases) {
    if (!c.truth) throw TrainingError("training case without ground truth");
  }

  struct PerCase {
    std::vector<std::pair<RegionFeatures, int>> regions;
  };
  std::vector<PerCase> per_case(cases.size());
  parallel_for(cases.size(), jobs, [&](std::size_t i) {
    const Segmentation seg = segment(cases[i].image, cfg);
    const auto labels = label_regions_by_truth(seg.regions, *cases[i].truth);
    for (const auto& [id, label] : labels) {
      per_case[i].regions.emplace_back(
          extract_features(seg.regions.at(id).pixels, cases[i].image, id), label);
    }
  });

  TrainedModels out;
  ModelTrainer meanstd(feature_dimension(FeatureSet::MeanStd), chromosome_labels());
  ModelTrainer mean(feature_dimension(FeatureSet::MeanOnly), chromosome_labels());
  for (const PerCase& pc : per_case) {
    for (const auto& [f, label] : pc.regions) {
      ++out.region_counts[label];
      if (request.meanstd) meanstd.add(select_features(f, FeatureSet::MeanStd), label);
      if (request.mean) mean.add(select_features(f, FeatureSet::MeanOnly), label);
    }
  }
  for (int c = 1; c <= kChromosomeClasses; ++c) {
    if ((request.meanstd || request.mean) && out.region_counts[c] < 2) {
      throw TrainingError("training corpus has " + std::to_string(out.region_counts[c]) +
                          " regions of class " + std::to_string(c) + "; at least 2 required");
    }
  }
  if (request.meanstd) out.meanstd = meanstd.finish(cfg.epsilon);
  if (request.mean) out.mean = mean.finish(cfg.epsilon);

  if (request.pixel) {
    std::vector<int> labels{0};
    for (const int l : chromosome_labels()) labels.push_back(l);
    ModelTrainer pixel(kPixelFeatureDim, labels);
    for (const Case& c : cases) {
      for (PixelIndex p = 0; p < c.truth->size(); ++p) {
        const std::int32_t t = c.truth->data()[p];
        if (t < 0 || t > kChromosomeClasses) continue;
        pixel.add(pixel_features(c.image, p), t);
      }
    }
    out.pixel = pixel.finish(cfg.epsilon);
  }
  return out;
}

}  // namespace mfish
