#include "mfish/postprocess.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "mfish/error.hpp"

namespace mfish {

void PostprocessConfig::validate() const {
  if (small_area_threshold < 0) throw InvalidArgument("small_area_threshold must be >= 0");
}

void merge_same_class(ClassifiedRegions& state) {
  // Union-find over same-class edges, rooted at the smallest ID.
  std::map<RegionId, RegionId> parent;
  for (const auto& [id, r] : state.regions) parent[id] = id;
  std::function<RegionId(RegionId)> find = [&](RegionId a) {
    RegionId root = a;
    while (parent[root] != root) root = parent[root];
    while (parent[a] != root) {
      const RegionId next = parent[a];
      parent[a] = root;
      a = next;
    }
    return root;
  };
  for (const auto& [a, nbrs] : state.rag.adjacency()) {
    for (const RegionId b : nbrs) {
      if (b < a || state.classes.at(a) != state.classes.at(b)) continue;
      const RegionId ra = find(a);
      const RegionId rb = find(b);
      if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }
  }

  for (auto& [id, root] : parent) root = find(id);
  for (const auto& [id, root] : parent) {
    if (id == root) continue;
    Region& into = state.regions.at(root);
    Region& from = state.regions.at(id);
    into.pixels.insert(into.pixels.end(), from.pixels.begin(), from.pixels.end());
    into.bbox.x0 = std::min(into.bbox.x0, from.bbox.x0);
    into.bbox.y0 = std::min(into.bbox.y0, from.bbox.y0);
    into.bbox.x1 = std::max(into.bbox.x1, from.bbox.x1);
    into.bbox.y1 = std::max(into.bbox.y1, from.bbox.y1);
    state.regions.erase(id);

    auto fi = state.features.find(id);
    auto ft = state.features.find(root);
    if (fi != state.features.end() && ft != state.features.end()) {
      ft->second = merge_features(ft->second, fi->second);
      ft->second.region_id = root;
    }
    state.features.erase(id);
    state.classes.erase(id);
    state.posteriors.erase(id);
    state.posteriors.erase(root);
    state.rag.contract(root, id);
  }
  for (auto& [id, r] : state.regions) std::sort(r.pixels.begin(), r.pixels.end());
}

int reclassify_small(ClassifiedRegions& state, const ClassModel& model,
                     const PostprocessConfig& cfg, FeatureSet set) {
  cfg.validate();
  std::vector<RegionId> order;
  for (const auto& [id, r] : state.regions) {
    if (r.area() < cfg.small_area_threshold && !state.rag.neighbors(id).empty()) {
      order.push_back(id);
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](RegionId a, RegionId b) {
    return state.regions.at(a).area() < state.regions.at(b).area();
  });

  int changed = 0;
  for (const RegionId id : order) {
    std::set<int> candidate_set;
    for (const RegionId n : state.rag.neighbors(id)) candidate_set.insert(state.classes.at(n));
    const std::vector<int> candidates(candidate_set.begin(), candidate_set.end());
    const int decided = classify_among(select_features(state.features.at(id), set), model, candidates);
    if (decided != state.classes.at(id)) {
      state.classes[id] = decided;
      state.posteriors.erase(id);
      ++changed;
    }
  }
  merge_same_class(state);
  return changed;
}

}  // namespace mfish
