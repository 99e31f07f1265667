#pragma once

#include <initializer_list>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "openem/corpus.hpp"
#include "openem/pairs.hpp"
#include "openem/synth.hpp"

namespace fixtures {

inline openem::EntityRecord record(std::string id, std::string cluster, std::string title,
                                   std::string category = "shoes") {
  openem::EntityRecord r;
  r.record_id = std::move(id);
  r.cluster_id = std::move(cluster);
  r.category = std::move(category);
  r.attrs["title"] = std::move(title);
  return r;
}

inline openem::EntityRecord with_image(openem::EntityRecord r, std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x[i++] = d;
  r.image_vec = x;
  return r;
}

/// `n_clusters` clusters of `size` records each, titled "tok<c> item".
inline openem::Corpus grid(int n_clusters, int size, const std::string& category = "shoes") {
  std::vector<openem::EntityRecord> recs;
  for (int c = 0; c < n_clusters; ++c) {
    for (int j = 0; j < size; ++j) {
      recs.push_back(record("r" + std::to_string(c) + "_" + std::to_string(j), "c" + std::to_string(c),
                            "tok" + std::to_string(c) + " item", category));
    }
  }
  return openem::Corpus::from_records(std::move(recs));
}

/// Small synthetic corpus for fast end-to-end tests.
inline openem::Corpus small_synth(std::uint64_t seed = 7, int clusters = 40) {
  openem::SynthConfig cfg;
  cfg.seed = seed;
  cfg.n_clusters = clusters;
  cfg.records_per_cluster = {5, 8};
  return openem::generate(cfg);
}

inline openem::PairSet pairs(std::initializer_list<std::tuple<const char*, const char*, bool>> items) {
  openem::PairSet s;
  for (const auto& [a, b, m] : items) {
    s.add(openem::LabeledPair::make(a, b, m ? openem::Label::kMatched : openem::Label::kMismatched));
  }
  return s;
}

}  // namespace fixtures
