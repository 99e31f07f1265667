#include "openem/pairs.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "openem/common.hpp"

namespace openem {

std::string_view to_string(Label label) {
  return label == Label::kMatched ? "matched" : "mismatched";
}

Label label_from_string(std::string_view s) {
  if (s == "matched") return Label::kMatched;
  if (s == "mismatched") return Label::kMismatched;
  throw ValidationError("unknown label \"" + std::string(s) + "\"");
}

LabeledPair LabeledPair::make(std::string a, std::string b, Label label) {
  if (a == b) throw ValidationError("pair joins record " + a + " with itself");
  if (b < a) std::swap(a, b);
  return {std::move(a), std::move(b), label};
}

std::uint64_t PairSet::hash_ids(const std::string& a, const std::string& b) {
  return splitmix64(fnv1a64(a) * 31 + fnv1a64(b));
}

void PairSet::rebuild_index() {
  index_.clear();
  index_.reserve(pairs_.size());
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    index_.emplace(hash_ids(pairs_[i].left_id, pairs_[i].right_id), i);
  }
}

bool PairSet::contains(const std::string& a, const std::string& b) const {
  const auto& lo = a < b ? a : b;
  const auto& hi = a < b ? b : a;
  auto [first, last] = index_.equal_range(hash_ids(lo, hi));
  for (auto it = first; it != last; ++it) {
    const auto& p = pairs_[it->second];
    if (p.left_id == lo && p.right_id == hi) return true;
  }
  return false;
}

void PairSet::add(LabeledPair pair) {
  if (pair.left_id == pair.right_id) {
    throw ValidationError("pair joins record " + pair.left_id + " with itself");
  }
  if (pair.right_id < pair.left_id) std::swap(pair.left_id, pair.right_id);
  if (contains(pair.left_id, pair.right_id)) {
    throw ValidationError("duplicate pair (" + pair.left_id + ", " + pair.right_id + ")");
  }
  index_.emplace(hash_ids(pair.left_id, pair.right_id), pairs_.size());
  n_matched_ += pair.label == Label::kMatched;
  pairs_.push_back(std::move(pair));
}

void PairSet::append(const PairSet& other) {
  pairs_.reserve(pairs_.size() + other.size());
  for (const auto& p : other.pairs()) add(p);
}

std::string pairs_to_jsonl(const PairSet& pairs) {
  std::string out;
  for (const auto& p : pairs.pairs()) {
    Json j;
    j["left_id"] = p.left_id;
    j["right_id"] = p.right_id;
    j["label"] = to_string(p.label);
    out += j.dump();
    out += '\n';
  }
  return out;
}

PairSet pairs_from_jsonl(std::string_view text, std::string_view source) {
  PairSet out;
  std::size_t line_no = 0;
  for (const auto& j : parse_jsonl(text, source)) {
    ++line_no;
    auto where = std::string(source) + ": pair " + std::to_string(line_no) + ": ";
    if (!j.contains("left_id") || !j["left_id"].is_string() || !j.contains("right_id") ||
        !j["right_id"].is_string() || !j.contains("label") || !j["label"].is_string()) {
      throw ValidationError(where + "expected string fields left_id, right_id, label");
    }
    try {
      out.add(LabeledPair::make(j["left_id"].get<std::string>(), j["right_id"].get<std::string>(),
                                label_from_string(j["label"].get<std::string>())));
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
  }
  return out;
}

void validate(const SplitRatio& r) {
  if (!(r.train > 0.0) || !(r.val >= 0.0) || !(r.test >= 0.0)) {
    throw ConfigError("split ratio parts must be non-negative and train positive");
  }
  if (std::abs(r.train + r.val + r.test - 1.0) > 1e-9) {
    throw ConfigError("split ratio must sum to 1");
  }
}

PairKeySet pair_keys(const PairSet& pairs, const Corpus& corpus) {
  PairKeySet keys;
  keys.reserve(pairs.size());
  for (const auto& p : pairs.pairs()) {
    auto a = corpus.find(p.left_id);
    auto b = corpus.find(p.right_id);
    if (!a || !b) continue;
    keys.insert(pair_key(*a, *b));
  }
  return keys;
}

namespace {

std::vector<std::size_t> all_ordinals(const Corpus& corpus) {
  std::vector<std::size_t> pool(corpus.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  return pool;
}

std::string family_of(const EntityRecord& r) {
  if (auto it = r.extra.find("family"); it != r.extra.end() && it->is_string()) {
    return it->get<std::string>();
  }
  return r.category;
}

LabeledPair to_pair(const Corpus& corpus, std::uint64_t key, Label label) {
  const auto lo = static_cast<std::size_t>(key >> 32);
  const auto hi = static_cast<std::size_t>(key & 0xffffffffULL);
  return LabeledPair::make(corpus.records()[lo].record_id, corpus.records()[hi].record_id, label);
}

}  // namespace

PairSet matched_pairs(const Corpus& corpus, std::optional<std::size_t> cap, std::uint64_t seed) {
  return matched_pairs(corpus, all_ordinals(corpus), cap, seed);
}

PairSet matched_pairs(const Corpus& corpus, const std::vector<std::size_t>& pool,
                      std::optional<std::size_t> cap, std::uint64_t seed) {
  std::vector<std::size_t> sorted = pool;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  PairSet out(corpus.content_hash());
  std::size_t begin = 0;
  while (begin < sorted.size()) {
    std::size_t end = begin;
    const auto cluster = corpus.cluster_index(sorted[begin]);
    while (end < sorted.size() && corpus.cluster_index(sorted[end]) == cluster) ++end;

    std::vector<std::uint64_t> keys;
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = i + 1; j < end; ++j) keys.push_back(pair_key(sorted[i], sorted[j]));
    }
    if (cap && keys.size() > *cap) {
      Rng rng(derive_seed(seed, corpus.records()[sorted[begin]].cluster_id));
      std::shuffle(keys.begin(), keys.end(), rng);
      keys.resize(*cap);
      std::sort(keys.begin(), keys.end());
    }
    for (auto k : keys) out.add(to_pair(corpus, k, Label::kMatched));
    begin = end;
  }
  return out;
}

std::uint64_t count_cross_pairs(const Corpus& corpus, const std::vector<std::size_t>& pool,
                                bool within_category) {
  // Cross pairs = all pairs in a group minus within-cluster pairs in it.
  std::map<std::string, std::map<std::size_t, std::uint64_t>> groups;
  for (auto o : pool) {
    const auto& cat = within_category ? corpus.records()[o].category : std::string();
    ++groups[cat][corpus.cluster_index(o)];
  }
  std::uint64_t total = 0;
  for (const auto& [cat, clusters] : groups) {
    std::uint64_t n = 0, within = 0;
    for (const auto& [c, m] : clusters) {
      n += m;
      within += m * (m - 1) / 2;
    }
    total += n * (n - 1) / 2 - within;
  }
  return total;
}

SampleResult sample_mismatched(const Corpus& corpus, std::size_t n, std::uint64_t seed,
                               bool within_category, double family_bias) {
  return sample_mismatched(corpus, all_ordinals(corpus), n, seed, within_category, family_bias,
                           PairKeySet{});
}

SampleResult sample_mismatched(const Corpus& corpus, const std::vector<std::size_t>& pool_in,
                               std::size_t n, std::uint64_t seed, bool within_category,
                               double family_bias, const PairKeySet& exclude) {
  std::vector<std::size_t> pool = pool_in;
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

  {
    std::vector<std::size_t> cl;
    for (auto o : pool) cl.push_back(corpus.cluster_index(o));
    std::sort(cl.begin(), cl.end());
    if (std::unique(cl.begin(), cl.end()) - cl.begin() < 2) {
      throw ValidationError("mismatched sampling needs at least 2 clusters");
    }
  }

  const auto& recs = corpus.records();
  auto admissible = [&](std::size_t a, std::size_t b) {
    return a != b && corpus.cluster_index(a) != corpus.cluster_index(b) &&
           (!within_category || recs[a].category == recs[b].category);
  };

  std::vector<char> in_pool(corpus.size(), 0);
  for (auto o : pool) in_pool[o] = 1;
  std::uint64_t excluded_in_universe = 0;
  for (auto key : exclude) {
    const auto lo = static_cast<std::size_t>(key >> 32);
    const auto hi = static_cast<std::size_t>(key & 0xffffffffULL);
    if (lo < in_pool.size() && hi < in_pool.size() && in_pool[lo] && in_pool[hi] &&
        admissible(lo, hi)) {
      ++excluded_in_universe;
    }
  }
  const std::uint64_t available = count_cross_pairs(corpus, pool, within_category) - excluded_in_universe;

  Rng rng(seed);
  SampleResult result;
  result.pairs = PairSet(corpus.content_hash());
  if (n == 0) return result;

  // Dense requests: enumerate the remaining universe and take a random prefix.
  if (static_cast<std::uint64_t>(n) * 2 > available) {
    std::vector<std::uint64_t> universe;
    universe.reserve(available);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      for (std::size_t j = i + 1; j < pool.size(); ++j) {
        if (!admissible(pool[i], pool[j])) continue;
        const auto key = pair_key(pool[i], pool[j]);
        if (!exclude.count(key)) universe.push_back(key);
      }
    }
    std::shuffle(universe.begin(), universe.end(), rng);
    const std::size_t take = std::min<std::size_t>(n, universe.size());
    result.shortfall = n - take;
    for (std::size_t i = 0; i < take; ++i) {
      result.pairs.add(to_pair(corpus, universe[i], Label::kMismatched));
    }
    return result;
  }

  std::map<std::string, std::vector<std::size_t>> families;
  std::vector<const std::vector<std::size_t>*> family_of_pos(pool.size());
  for (auto o : pool) families[family_of(recs[o])].push_back(o);
  for (std::size_t i = 0; i < pool.size(); ++i) family_of_pos[i] = &families[family_of(recs[pool[i]])];

  std::uniform_int_distribution<std::size_t> pick_pos(0, pool.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PairKeySet chosen;
  chosen.reserve(n * 2);
  bool family_branch = family_bias > 0.0;
  std::size_t family_failures = 0;
  while (chosen.size() < n) {
    const std::size_t ia = pick_pos(rng);
    const std::size_t a = pool[ia];
    std::size_t b;
    const bool from_family = family_branch && unit(rng) < family_bias;
    if (from_family) {
      const auto& fam = *family_of_pos[ia];
      b = fam[std::uniform_int_distribution<std::size_t>(0, fam.size() - 1)(rng)];
    } else {
      b = pool[pick_pos(rng)];
    }
    const auto key = pair_key(a, b);
    if (!admissible(a, b) || exclude.count(key) || chosen.count(key)) {
      // A family universe can run dry long before the global one does.
      if (from_family && ++family_failures > 1000) family_branch = false;
      continue;
    }
    if (from_family) family_failures = 0;
    chosen.insert(key);
    result.pairs.add(to_pair(corpus, key, Label::kMismatched));
  }
  return result;
}

VanillaSplit build_vanilla_split(const Corpus& corpus, const std::vector<std::size_t>& pool,
                                 const GenConfig& cfg, std::optional<double> k_test) {
  validate(cfg.split);
  if (!(cfg.k >= 0.0)) throw ConfigError("mismatched:matched ratio k must be >= 0");
  const double kt = k_test.value_or(cfg.k);
  if (!(kt >= 0.0)) throw ConfigError("test ratio k must be >= 0");

  VanillaSplit out;
  const auto hash = corpus.content_hash();
  out.train = PairSet(hash);
  out.val = PairSet(hash);
  out.test = PairSet(hash);

  PairSet matched = matched_pairs(corpus, pool, cfg.max_matched_per_cluster,
                                  derive_seed(cfg.seed, "matched-cap"));
  Rng rng(derive_seed(cfg.seed, "split"));
  matched.shuffle(rng);

  const std::size_t m = matched.size();
  const std::size_t m_train = std::min(m, round_half_up(cfg.split.train * static_cast<double>(m)));
  const std::size_t m_val =
      std::min(m - m_train, round_half_up(cfg.split.val * static_cast<double>(m)));
  for (std::size_t i = 0; i < m; ++i) {
    const auto& p = matched.pairs()[i];
    (i < m_train ? out.train : i < m_train + m_val ? out.val : out.test).add(p);
  }

  PairKeySet used = pair_keys(matched, corpus);
  auto fill = [&](PairSet& part, double k, std::uint64_t seed, const char* name) {
    const std::size_t want = round_half_up(k * static_cast<double>(part.n_matched()));
    if (want == 0) return;
    auto sampled = sample_mismatched(corpus, pool, want, seed, cfg.within_category,
                                     cfg.family_bias, used);
    if (sampled.shortfall) {
      out.warnings.push_back(std::string(name) + ": mismatched shortfall of " +
                             std::to_string(sampled.shortfall) + " pairs");
    }
    for (const auto& p : sampled.pairs.pairs()) {
      used.insert(pair_key(*corpus.find(p.left_id), *corpus.find(p.right_id)));
    }
    part.append(sampled.pairs);
  };
  fill(out.train, cfg.k, derive_seed(cfg.seed, "mismatched/train", cfg.k), "train");
  fill(out.val, cfg.k, derive_seed(cfg.seed, "mismatched/val", cfg.k), "val");
  fill(out.test, kt, derive_seed(cfg.seed, "mismatched/test", kt), "test");
  return out;
}

}  // namespace openem
