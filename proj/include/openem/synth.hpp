#pragma once

#include <cstdint>
#include <string>

#include "openem/corpus.hpp"

namespace openem {

struct IntRange {
  int lo = 0;
  int hi = 0;
  bool operator==(const IntRange&) const = default;
};

struct PerturbConfig {
  double token_drop_p = 0.40;
  double token_swap_p = 0.10;
  double typo_p = 0.10;
  double attr_drop_p = 0.50;
  bool operator==(const PerturbConfig&) const = default;
};

/// Parameters of the synthetic product corpus. Every record is an
/// independently perturbed copy of its cluster's canonical attribute set;
/// clusters are grouped into families sharing brand, style and category
/// tokens so that cross-cluster pairs inside a family are hard negatives.
struct SynthConfig {
  std::uint64_t seed = 0;
  int n_clusters = 350;
  IntRange records_per_cluster{10, 20};
  int n_categories = 3;
  int vocab_size = 3000;
  /// Number of cluster-specific title tokens.
  IntRange title_len{1, 1};
  /// Title tokens shared by every cluster of a family (a "model line").
  int family_title_tokens = 2;
  PerturbConfig perturb;
  int image_dim = 16;
  double image_noise_sigma = 0.5;
  int hard_negative_family_size = 5;

  bool operator==(const SynthConfig&) const = default;
};

/// Throws ConfigError on out-of-range probabilities, empty ranges or
/// non-positive sizes.
void validate(const SynthConfig& config);

Corpus generate(const SynthConfig& config);

/// Provenance block stored under Corpus::meta()["generator"]: every config
/// field plus the toolkit version.
Json describe(const SynthConfig& config);

/// Inverse of describe(). Fields other than "seed" fall back to defaults;
/// a missing seed is a ConfigError.
SynthConfig synth_config_from_json(const Json& j);

std::string category_name(int index);

}  // namespace openem
