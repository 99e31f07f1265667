#include "openem/builder.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "openem/audit.hpp"
#include "openem/common.hpp"

namespace openem {

std::string_view to_string(Paradigm p) {
  switch (p) {
    case Paradigm::kVanilla:
      return "vanilla";
    case Paradigm::kRecordLinking:
      return "rl";
    case Paradigm::kClusterFocused:
      return "cfm";
    case Paradigm::kOpenMatching:
      return "om";
  }
  return "?";
}

Paradigm paradigm_from_string(std::string_view s) {
  for (auto p : kAllParadigms) {
    if (to_string(p) == s) return p;
  }
  throw ConfigError("unknown paradigm \"" + std::string(s) + "\"");
}

void validate(const SplitPlan& plan) {
  if (plan.n_train_clusters <= 0) throw ConfigError("n_train_clusters must be positive");
  if (plan.n_holdout_clusters < 0) throw ConfigError("n_holdout_clusters must be >= 0");
  if (!(plan.holdout_record_fraction > 0.0 && plan.holdout_record_fraction < 1.0)) {
    throw ConfigError("holdout_record_fraction must lie in (0,1)");
  }
  if (!(plan.k_train >= 0.0) || !(plan.k_test >= 0.0)) throw ConfigError("ratios must be >= 0");
  if (!(plan.family_bias >= 0.0 && plan.family_bias <= 1.0)) {
    throw ConfigError("family_bias must lie in [0,1]");
  }
  validate(plan.split);
}

Json to_json(const SplitPlan& p) {
  Json j;
  j["seed"] = p.seed;
  j["n_train_clusters"] = p.n_train_clusters;
  j["n_holdout_clusters"] = p.n_holdout_clusters;
  j["holdout_record_fraction"] = p.holdout_record_fraction;
  j["k_train"] = p.k_train;
  j["k_test"] = p.k_test;
  j["split_ratio"] = {p.split.train, p.split.val, p.split.test};
  j["family_bias"] = p.family_bias;
  j["max_matched_per_cluster"] =
      p.max_matched_per_cluster ? Json(*p.max_matched_per_cluster) : Json(nullptr);
  return j;
}

SplitPlan split_plan_from_json(const Json& j) {
  SplitPlan p;
  try {
    if (j.contains("seed")) p.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("n_train_clusters")) p.n_train_clusters = j["n_train_clusters"].get<int>();
    if (j.contains("n_holdout_clusters")) p.n_holdout_clusters = j["n_holdout_clusters"].get<int>();
    if (j.contains("holdout_record_fraction")) {
      p.holdout_record_fraction = j["holdout_record_fraction"].get<double>();
    }
    if (j.contains("k_train")) p.k_train = j["k_train"].get<double>();
    if (j.contains("k_test")) p.k_test = j["k_test"].get<double>();
    if (j.contains("split_ratio")) {
      const auto& s = j["split_ratio"];
      if (!s.is_array() || s.size() != 3) throw ConfigError("split_ratio must have 3 parts");
      p.split = {s[0].get<double>(), s[1].get<double>(), s[2].get<double>()};
    }
    if (j.contains("family_bias")) p.family_bias = j["family_bias"].get<double>();
    if (j.contains("max_matched_per_cluster") && !j["max_matched_per_cluster"].is_null()) {
      p.max_matched_per_cluster = j["max_matched_per_cluster"].get<std::size_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad split plan: ") + e.what());
  }
  validate(p);
  return p;
}

std::string Partition::hash(const Corpus& corpus) const {
  Json j;
  j["corpus"] = corpus.content_hash();
  j["train_clusters"] = train_clusters;
  j["holdout_clusters"] = holdout_clusters;
  std::vector<std::string> held;
  for (auto o : holdout_records) held.push_back(corpus.records()[o].record_id);
  j["holdout_records"] = held;
  return sha256_hex(j.dump());
}

Partition partition_corpus(const Corpus& corpus, const SplitPlan& plan) {
  validate(plan);
  const std::size_t wanted =
      static_cast<std::size_t>(plan.n_train_clusters) + static_cast<std::size_t>(plan.n_holdout_clusters);
  if (wanted > corpus.clusters().size()) {
    throw ValidationError("plan requests " + std::to_string(wanted) + " clusters but the corpus has " +
                          std::to_string(corpus.clusters().size()));
  }
  Rng rng(derive_seed(plan.seed, "partition"));
  std::vector<std::string> ids;
  for (const auto& [cid, members] : corpus.clusters()) ids.push_back(cid);
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(wanted);

  Partition part;
  part.train_clusters.assign(ids.begin(), ids.begin() + plan.n_train_clusters);
  part.holdout_clusters.assign(ids.begin() + plan.n_train_clusters, ids.end());
  std::sort(part.train_clusters.begin(), part.train_clusters.end());
  std::sort(part.holdout_clusters.begin(), part.holdout_clusters.end());

  for (const auto& cid : part.train_clusters) {
    std::vector<std::size_t> members = corpus.clusters().at(cid);
    const std::size_t m = members.size();
    std::size_t h = static_cast<std::size_t>(std::ceil(plan.holdout_record_fraction * static_cast<double>(m)));
    if (m >= 2) {
      h = std::clamp<std::size_t>(h, 1, m - 1);
    } else {
      h = 0;
      part.warnings.push_back("training cluster " + cid +
                              " has a single record; nothing held out");
    }
    std::shuffle(members.begin(), members.end(), rng);
    part.holdout_records.insert(part.holdout_records.end(), members.begin(), members.begin() + h);
    part.train_records.insert(part.train_records.end(), members.begin() + h, members.end());
  }
  for (const auto& cid : part.holdout_clusters) {
    const auto& members = corpus.clusters().at(cid);
    part.holdout_cluster_records.insert(part.holdout_cluster_records.end(), members.begin(),
                                        members.end());
  }
  std::sort(part.train_records.begin(), part.train_records.end());
  std::sort(part.holdout_records.begin(), part.holdout_records.end());
  std::sort(part.holdout_cluster_records.begin(), part.holdout_cluster_records.end());
  return part;
}

namespace {

std::uint64_t shared_seed(const SplitPlan& plan) { return derive_seed(plan.seed, "shared"); }

std::uint64_t test_seed(const SplitPlan& plan, Paradigm p) {
  return derive_seed(plan.seed, "test/" + std::string(to_string(p)), plan.k_test);
}

GenConfig shared_gen_config(const SplitPlan& plan) {
  GenConfig cfg;
  cfg.k = plan.k_train;
  cfg.split = plan.split;
  cfg.seed = shared_seed(plan);
  cfg.max_matched_per_cluster = plan.max_matched_per_cluster;
  cfg.family_bias = plan.family_bias;
  return cfg;
}

/// Records occurring in any pair of `sets`.
std::unordered_set<std::string> referenced(std::initializer_list<const PairSet*> sets) {
  std::unordered_set<std::string> ids;
  for (const auto* s : sets) {
    for (const auto& p : s->pairs()) {
      ids.insert(p.left_id);
      ids.insert(p.right_id);
    }
  }
  return ids;
}

void add_shortfall_warning(std::vector<std::string>& warnings, const char* what,
                           std::size_t shortfall) {
  if (shortfall) {
    warnings.push_back(std::string(what) + ": mismatched shortfall of " +
                       std::to_string(shortfall) + " pairs");
  }
}

}  // namespace

SharedSplit build_shared_train_val(const Corpus& corpus, const Partition& part,
                                   const SplitPlan& plan) {
  auto v = build_vanilla_split(corpus, part.train_records, shared_gen_config(plan), plan.k_test);
  SharedSplit s;
  s.train = std::move(v.train);
  s.val = std::move(v.val);
  s.vanilla_test = std::move(v.test);
  s.warnings = std::move(v.warnings);
  return s;
}

TestBuild build_om_test(const Corpus& corpus, const Partition& part, const SplitPlan& plan) {
  TestBuild out;
  out.seed = test_seed(plan, Paradigm::kOpenMatching);
  out.pairs = matched_pairs(corpus, part.holdout_cluster_records, plan.max_matched_per_cluster,
                            derive_seed(out.seed, "matched-cap"));
  const std::size_t want = round_half_up(plan.k_test * static_cast<double>(out.pairs.n_matched()));
  if (want > 0) {
    auto s = sample_mismatched(corpus, part.holdout_cluster_records, want,
                               derive_seed(out.seed, "mismatched"), false, plan.family_bias, {});
    add_shortfall_warning(out.warnings, "om test", s.shortfall);
    out.pairs.append(s.pairs);
  }
  return out;
}

TestBuild build_cfm_test(const Corpus& corpus, const Partition& part, const SplitPlan& plan,
                         const SharedSplit& shared) {
  TestBuild out;
  out.seed = test_seed(plan, Paradigm::kClusterFocused);

  // Only clusters that the shared splits actually expose count as seen.
  std::unordered_set<std::string> seen_clusters;
  for (const auto& id : referenced({&shared.train, &shared.val})) {
    seen_clusters.insert(corpus.at(id).cluster_id);
  }
  std::vector<std::size_t> pool;
  std::map<std::string, std::size_t> held_per_cluster;
  for (auto o : part.holdout_records) {
    const auto& cid = corpus.records()[o].cluster_id;
    if (!seen_clusters.count(cid)) {
      out.warnings.push_back("held-out record " + corpus.records()[o].record_id +
                             " dropped: its cluster is absent from train/val");
      continue;
    }
    pool.push_back(o);
    ++held_per_cluster[cid];
  }
  for (const auto& [cid, n] : held_per_cluster) {
    if (n < 2) {
      out.warnings.push_back("cluster " + cid + " has fewer than 2 held-out records; no matched pair");
    }
  }
  out.pairs = matched_pairs(corpus, pool, plan.max_matched_per_cluster,
                            derive_seed(out.seed, "matched-cap"));
  const std::size_t want = round_half_up(plan.k_test * static_cast<double>(out.pairs.n_matched()));
  if (want > 0) {
    auto s = sample_mismatched(corpus, pool, want, derive_seed(out.seed, "mismatched"), false,
                               plan.family_bias, {});
    add_shortfall_warning(out.warnings, "cfm test", s.shortfall);
    out.pairs.append(s.pairs);
  }
  return out;
}

TestBuild build_rl_test(const Corpus& corpus, const Partition& part, const SplitPlan& plan,
                        const SharedSplit& shared) {
  TestBuild out;
  out.seed = test_seed(plan, Paradigm::kRecordLinking);
  out.pairs = PairSet(corpus.content_hash());
  const auto& recs = corpus.records();

  // Partners must be seen records: training records present in train/val.
  const auto seen = referenced({&shared.train, &shared.val});
  std::map<std::size_t, std::vector<std::size_t>> partners_by_cluster;
  std::map<std::string, std::vector<std::size_t>> partners_by_family;
  std::vector<std::size_t> partners;
  auto family_of = [&](std::size_t o) {
    const auto& r = recs[o];
    if (auto it = r.extra.find("family"); it != r.extra.end() && it->is_string()) {
      return it->get<std::string>();
    }
    return r.category;
  };
  for (auto o : part.train_records) {
    if (!seen.count(recs[o].record_id)) continue;
    partners.push_back(o);
    partners_by_cluster[corpus.cluster_index(o)].push_back(o);
    partners_by_family[family_of(o)].push_back(o);
  }

  std::vector<std::size_t> anchors;
  std::vector<std::size_t> matchable;
  for (auto o : part.holdout_records) {
    anchors.push_back(o);
    if (partners_by_cluster.count(corpus.cluster_index(o))) {
      matchable.push_back(o);
    } else {
      out.warnings.push_back("held-out record " + recs[o].record_id +
                             " has no seen same-cluster partner; cannot anchor a matched pair");
    }
  }
  if (anchors.empty() || partners.empty()) {
    out.warnings.push_back("rl test: no anchors or no seen partners");
    return out;
  }

  // One matched pair per matchable anchor on average; labels are a shuffled
  // deck so the ratio is exact.
  const std::size_t n_matched = matchable.size();
  const std::size_t n_mismatched = round_half_up(plan.k_test * static_cast<double>(n_matched));
  std::vector<Label> deck(n_matched, Label::kMatched);
  deck.insert(deck.end(), n_mismatched, Label::kMismatched);
  Rng rng(derive_seed(out.seed, "pairs"));
  std::shuffle(deck.begin(), deck.end(), rng);

  auto uniform = [&](const std::vector<std::size_t>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PairKeySet used;
  std::size_t short_matched = 0, short_mismatched = 0;
  const std::size_t max_attempts = 1000;
  for (Label label : deck) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < max_attempts && !placed; ++attempt) {
      std::size_t a, b;
      if (label == Label::kMatched) {
        a = uniform(matchable);
        b = uniform(partners_by_cluster.at(corpus.cluster_index(a)));
      } else {
        a = uniform(anchors);
        const auto& fam = partners_by_family[family_of(a)];
        b = (!fam.empty() && unit(rng) < plan.family_bias) ? uniform(fam) : uniform(partners);
        if (corpus.cluster_index(a) == corpus.cluster_index(b)) continue;
      }
      const auto key = pair_key(a, b);
      if (!used.insert(key).second) continue;
      out.pairs.add(LabeledPair::make(recs[a].record_id, recs[b].record_id, label));
      placed = true;
    }
    if (!placed) ++(label == Label::kMatched ? short_matched : short_mismatched);
  }
  if (short_matched) {
    out.warnings.push_back("rl test: matched shortfall of " + std::to_string(short_matched) + " pairs");
  }
  add_shortfall_warning(out.warnings, "rl test", short_mismatched);
  return out;
}

TestBuild build_test(Paradigm paradigm, const Corpus& corpus, const Partition& part,
                     const SplitPlan& plan, const SharedSplit& shared) {
  switch (paradigm) {
    case Paradigm::kVanilla: {
      TestBuild t;
      t.pairs = shared.vanilla_test;
      t.seed = derive_seed(shared_seed(plan), "mismatched/test", plan.k_test);
      t.warnings = shared.warnings;
      return t;
    }
    case Paradigm::kRecordLinking:
      return build_rl_test(corpus, part, plan, shared);
    case Paradigm::kClusterFocused:
      return build_cfm_test(corpus, part, plan, shared);
    case Paradigm::kOpenMatching:
      return build_om_test(corpus, part, plan);
  }
  throw std::logic_error("unreachable");
}

Corpus close_over(const Corpus& corpus, std::initializer_list<const PairSet*> sets) {
  std::vector<std::size_t> ordinals;
  for (const auto& id : referenced(sets)) {
    auto o = corpus.find(id);
    if (!o) throw ValidationError("pair references unknown record " + id);
    ordinals.push_back(*o);
  }
  Corpus c = corpus.subset(ordinals);
  c.meta() = Json::object();
  return c;
}

BenchmarkBundle assemble_bundle(Paradigm paradigm, const Corpus& corpus, const Partition& part,
                                const SplitPlan& plan, const SharedSplit& shared,
                                const TestBuild& test) {
  BenchmarkBundle b;
  b.paradigm = paradigm;
  b.train = shared.train;
  b.val = shared.val;
  b.test = test.pairs;
  b.records = close_over(corpus, {&b.train, &b.val, &b.test});

  std::vector<std::string> warnings = part.warnings;
  warnings.insert(warnings.end(), shared.warnings.begin(), shared.warnings.end());
  if (paradigm != Paradigm::kVanilla) {
    warnings.insert(warnings.end(), test.warnings.begin(), test.warnings.end());
  }
  std::sort(warnings.begin(), warnings.end());
  warnings.erase(std::unique(warnings.begin(), warnings.end()), warnings.end());

  Json m;
  m["paradigm"] = std::string(to_string(paradigm));
  m["toolkit_version"] = std::string(kToolkitVersion);
  m["corpus_hash"] = corpus.content_hash();
  m["partition_hash"] = part.hash(corpus);
  m["plan"] = to_json(plan);
  m["seeds"] = {{"root", plan.seed}, {"shared", shared_seed(plan)}, {"test", test.seed}};
  m["counts"] = {{"train", {{"n_matched", b.train.n_matched()}, {"n_mismatched", b.train.n_mismatched()}}},
                 {"val", {{"n_matched", b.val.n_matched()}, {"n_mismatched", b.val.n_mismatched()}}},
                 {"test", {{"n_matched", b.test.n_matched()}, {"n_mismatched", b.test.n_mismatched()}}}};
  m["n_records"] = b.records.size();
  m["files"] = {{"train.jsonl", sha256_hex(pairs_to_jsonl(b.train))},
                {"val.jsonl", sha256_hex(pairs_to_jsonl(b.val))},
                {"test.jsonl", sha256_hex(pairs_to_jsonl(b.test))},
                {"records.jsonl", b.records.content_hash()}};
  m["warnings"] = warnings;
  b.manifest = std::move(m);
  b.manifest["audit"] = to_json(audit(b));
  return b;
}

std::map<Paradigm, BenchmarkBundle> build_all(const Corpus& corpus, const SplitPlan& plan) {
  const Partition part = partition_corpus(corpus, plan);
  const SharedSplit shared = build_shared_train_val(corpus, part, plan);
  std::map<Paradigm, BenchmarkBundle> out;
  for (auto p : kAllParadigms) {
    out.emplace(p, assemble_bundle(p, corpus, part, plan, shared,
                                   build_test(p, corpus, part, plan, shared)));
  }
  return out;
}

SplitPlan plan_for_subcorpus(const SplitPlan& plan, std::size_t n_corpus_clusters,
                             std::size_t n_sub_clusters) {
  const auto wanted = static_cast<std::size_t>(plan.n_train_clusters + plan.n_holdout_clusters);
  if (wanted <= n_sub_clusters || n_corpus_clusters == 0) return plan;
  SplitPlan scaled = plan;
  const double share = static_cast<double>(n_sub_clusters) / static_cast<double>(n_corpus_clusters);
  scaled.n_train_clusters = std::max(1, static_cast<int>(std::floor(plan.n_train_clusters * share)));
  scaled.n_holdout_clusters = static_cast<int>(std::floor(plan.n_holdout_clusters * share));
  return scaled;
}

BenchmarkBundle build_vanilla(const Corpus& corpus, const GenConfig& cfg) {
  std::vector<std::size_t> pool(corpus.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  auto v = build_vanilla_split(corpus, pool, cfg);

  BenchmarkBundle b;
  b.paradigm = Paradigm::kVanilla;
  b.train = std::move(v.train);
  b.val = std::move(v.val);
  b.test = std::move(v.test);
  b.records = close_over(corpus, {&b.train, &b.val, &b.test});
  Json m;
  m["paradigm"] = "vanilla";
  m["toolkit_version"] = std::string(kToolkitVersion);
  m["corpus_hash"] = corpus.content_hash();
  m["gen_config"] = {{"k", cfg.k},
                     {"split_ratio", {cfg.split.train, cfg.split.val, cfg.split.test}},
                     {"seed", cfg.seed},
                     {"family_bias", cfg.family_bias},
                     {"within_category", cfg.within_category},
                     {"max_matched_per_cluster", cfg.max_matched_per_cluster
                                                     ? Json(*cfg.max_matched_per_cluster)
                                                     : Json(nullptr)}};
  m["counts"] = {{"train", {{"n_matched", b.train.n_matched()}, {"n_mismatched", b.train.n_mismatched()}}},
                 {"val", {{"n_matched", b.val.n_matched()}, {"n_mismatched", b.val.n_mismatched()}}},
                 {"test", {{"n_matched", b.test.n_matched()}, {"n_mismatched", b.test.n_mismatched()}}}};
  m["warnings"] = v.warnings;
  b.manifest = std::move(m);
  b.manifest["audit"] = to_json(audit(b));
  return b;
}

void write_bundle(const BenchmarkBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "train.jsonl", pairs_to_jsonl(bundle.train));
  write_file_atomic(dir / "val.jsonl", pairs_to_jsonl(bundle.val));
  write_file_atomic(dir / "test.jsonl", pairs_to_jsonl(bundle.test));
  write_file_atomic(dir / "records.jsonl", corpus_to_jsonl(bundle.records));
  write_file_atomic(dir / "manifest.json", dump_pretty(bundle.manifest));
}

BenchmarkBundle read_bundle(const std::filesystem::path& dir) {
  BenchmarkBundle b;
  Json manifest = Json::parse(read_file(dir / "manifest.json"), nullptr, false);
  if (manifest.is_discarded() || !manifest.is_object()) {
    throw ValidationError((dir / "manifest.json").string() + ": malformed manifest");
  }
  b.manifest = std::move(manifest);
  b.paradigm = paradigm_from_string(b.manifest.value("paradigm", std::string("vanilla")));
  b.train = pairs_from_jsonl(read_file(dir / "train.jsonl"), (dir / "train.jsonl").string());
  b.val = pairs_from_jsonl(read_file(dir / "val.jsonl"), (dir / "val.jsonl").string());
  b.test = pairs_from_jsonl(read_file(dir / "test.jsonl"), (dir / "test.jsonl").string());
  b.records = load_corpus(dir / "records.jsonl");
  const std::string corpus_hash = b.manifest.value("corpus_hash", std::string());
  for (PairSet* s : {&b.train, &b.val, &b.test}) s->set_source_corpus_hash(corpus_hash);
  return b;
}

}  // namespace openem
