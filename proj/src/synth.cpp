#include "openem/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "openem/common.hpp"

namespace openem {

namespace {

constexpr std::array<const char*, 16> kSyllables = {"ka", "lo", "mi", "ren", "tas", "vo",
                                                    "zu", "pel", "dri", "nok", "sa", "bel",
                                                    "gri", "hu", "fen", "xo"};
constexpr std::array<const char*, 12> kColors = {"black", "white", "red",   "navy",
                                                 "grey",  "beige", "green", "brown",
                                                 "pink",  "khaki", "olive", "purple"};
constexpr std::array<const char*, 8> kMaterials = {"cotton", "leather", "denim", "wool",
                                                   "silk",   "canvas",  "suede", "nylon"};
constexpr std::string_view kTypoAlphabet = "abcdefghijklmnopqrstuvwxyz";

std::size_t pick(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

bool coin(Rng& rng, double p) {
  if (p <= 0.0) return false;
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

std::vector<std::string> make_vocab(Rng& rng, int size) {
  std::set<std::string> seen;
  std::vector<std::string> words;
  words.reserve(static_cast<std::size_t>(size));
  while (static_cast<int>(words.size()) < size) {
    const std::size_t n_syll = 2 + pick(rng, 3);
    std::string w;
    for (std::size_t i = 0; i < n_syll; ++i) w += kSyllables[pick(rng, kSyllables.size())];
    if (seen.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

std::string typo(Rng& rng, const std::string& token) {
  if (token.empty()) return token;
  std::string out = token;
  const std::size_t pos = pick(rng, out.size());
  char c;
  do {
    c = kTypoAlphabet[pick(rng, kTypoAlphabet.size())];
  } while (c == out[pos]);
  out[pos] = c;
  return out;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string join_ws(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::string perturb_text(Rng& rng, const std::string& text, const PerturbConfig& p) {
  auto tokens = split_ws(text);
  std::vector<std::string> kept;
  for (auto& t : tokens) {
    if (coin(rng, p.token_drop_p)) continue;
    kept.push_back(coin(rng, p.typo_p) ? typo(rng, t) : t);
  }
  if (kept.empty() && !tokens.empty()) kept.push_back(tokens[pick(rng, tokens.size())]);
  for (std::size_t i = 0; i + 1 < kept.size(); ++i) {
    if (coin(rng, p.token_swap_p)) std::swap(kept[i], kept[i + 1]);
  }
  return join_ws(kept);
}

std::string numbered(char prefix, int n, int width) {
  char id_buf[32];
  std::snprintf(id_buf, sizeof(id_buf), "%c%0*d", prefix, width, n);
  return id_buf;
}

void check_prob(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ConfigError(std::string(name) + " must lie in [0,1]");
  }
}

void check_range(const IntRange& r, int min_lo, const char* name) {
  if (r.lo < min_lo || r.hi < r.lo) {
    throw ConfigError(std::string(name) + " must be a non-empty range with lower bound >= " +
                      std::to_string(min_lo));
  }
}

}  // namespace

std::string category_name(int index) {
  static constexpr std::array<const char*, 3> kNames = {"clothing", "shoes", "accessories"};
  if (index >= 0 && index < static_cast<int>(kNames.size())) return kNames[index];
  return "category_" + std::to_string(index);
}

void validate(const SynthConfig& c) {
  if (c.n_clusters <= 0) throw ConfigError("n_clusters must be positive");
  if (c.n_categories <= 0) throw ConfigError("n_categories must be positive");
  if (c.vocab_size <= 0) throw ConfigError("vocab_size must be positive");
  if (c.image_dim <= 0) throw ConfigError("image_dim must be positive");
  if (c.hard_negative_family_size <= 0) {
    throw ConfigError("hard_negative_family_size must be positive");
  }
  if (!(c.image_noise_sigma >= 0.0)) throw ConfigError("image_noise_sigma must be >= 0");
  check_range(c.records_per_cluster, 1, "records_per_cluster");
  check_range(c.title_len, 1, "title_len");
  check_prob(c.perturb.token_drop_p, "token_drop_p");
  check_prob(c.perturb.token_swap_p, "token_swap_p");
  check_prob(c.perturb.typo_p, "typo_p");
  check_prob(c.perturb.attr_drop_p, "attr_drop_p");
  // Brands and family tokens are drawn without replacement.
  const int n_families =
      (c.n_clusters + c.hard_negative_family_size - 1) / c.hard_negative_family_size;
  if (c.family_title_tokens < 0) throw ConfigError("family_title_tokens must be >= 0");
  if (c.vocab_size < (2 + c.family_title_tokens) * n_families + c.title_len.hi) {
    throw ConfigError("vocab_size too small for the requested number of families");
  }
}

Corpus generate(const SynthConfig& config) {
  validate(config);
  Rng rng(derive_seed(config.seed, "synth"));
  const auto vocab = make_vocab(rng, config.vocab_size);

  // Brand and style tokens are reserved per family; the rest of the vocabulary
  // feeds cluster-specific title tokens.
  std::vector<std::size_t> order(vocab.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);

  const int family_size = config.hard_negative_family_size;
  const int n_families = (config.n_clusters + family_size - 1) / family_size;
  std::vector<std::string> brand(static_cast<std::size_t>(n_families));
  std::vector<std::string> style(static_cast<std::size_t>(n_families));
  std::vector<std::vector<std::string>> line(static_cast<std::size_t>(n_families));
  std::size_t next = 0;
  for (int f = 0; f < n_families; ++f) {
    brand[static_cast<std::size_t>(f)] = vocab[order[next++]];
    style[static_cast<std::size_t>(f)] = vocab[order[next++]];
    for (int t = 0; t < config.family_title_tokens; ++t) {
      line[static_cast<std::size_t>(f)].push_back(vocab[order[next++]]);
    }
  }
  const std::size_t free_begin = next;
  const std::size_t n_free = vocab.size() - free_begin;

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<EntityRecord> records;
  int record_counter = 0;
  for (int c = 0; c < config.n_clusters; ++c) {
    const int f = c / family_size;
    const std::string cluster_id = numbered('c', c, 5);
    const std::string family_id = numbered('f', f, 4);
    const std::string category = category_name(f % config.n_categories);

    const int n_title = config.title_len.lo +
                        static_cast<int>(pick(rng, static_cast<std::size_t>(
                                                       config.title_len.hi - config.title_len.lo + 1)));
    std::vector<std::string> title = {brand[static_cast<std::size_t>(f)]};
    const auto& shared = line[static_cast<std::size_t>(f)];
    title.insert(title.end(), shared.begin(), shared.end());
    for (int t = 0; t < n_title; ++t) title.push_back(vocab[order[free_begin + pick(rng, n_free)]]);
    title.push_back(category);

    std::map<std::string, std::string> canonical = {
        {"title", join_ws(title)},
        {"color", kColors[pick(rng, kColors.size())]},
        {"material", kMaterials[pick(rng, kMaterials.size())]},
        {"style", style[static_cast<std::size_t>(f)]},
    };

    Eigen::VectorXd centroid(config.image_dim);
    for (auto& x : centroid) x = gauss(rng);

    const int m = config.records_per_cluster.lo +
                  static_cast<int>(pick(rng, static_cast<std::size_t>(config.records_per_cluster.hi -
                                                                      config.records_per_cluster.lo + 1)));
    for (int j = 0; j < m; ++j) {
      EntityRecord r;
      r.record_id = numbered('r', record_counter++, 7);
      r.cluster_id = cluster_id;
      r.category = category;
      r.extra["family"] = family_id;
      for (const auto& [key, value] : canonical) {
        if (key != "title" && coin(rng, config.perturb.attr_drop_p)) continue;
        r.attrs[key] = perturb_text(rng, value, config.perturb);
      }
      Eigen::VectorXd img = centroid;
      if (config.image_noise_sigma > 0.0) {
        for (auto& x : img) x += config.image_noise_sigma * gauss(rng);
      }
      r.image_vec = std::move(img);
      records.push_back(std::move(r));
    }
  }

  Json meta = Json::object();
  meta["generator"] = describe(config);
  return Corpus::from_records(std::move(records), std::move(meta));
}

Json describe(const SynthConfig& c) {
  Json j;
  j["toolkit_version"] = std::string(kToolkitVersion);
  j["seed"] = c.seed;
  j["n_clusters"] = c.n_clusters;
  j["records_per_cluster"] = {c.records_per_cluster.lo, c.records_per_cluster.hi};
  j["n_categories"] = c.n_categories;
  j["vocab_size"] = c.vocab_size;
  j["title_len"] = {c.title_len.lo, c.title_len.hi};
  j["perturb"] = {{"token_drop_p", c.perturb.token_drop_p},
                  {"token_swap_p", c.perturb.token_swap_p},
                  {"typo_p", c.perturb.typo_p},
                  {"attr_drop_p", c.perturb.attr_drop_p}};
  j["image_dim"] = c.image_dim;
  j["image_noise_sigma"] = c.image_noise_sigma;
  j["hard_negative_family_size"] = c.hard_negative_family_size;
  j["family_title_tokens"] = c.family_title_tokens;
  return j;
}

SynthConfig synth_config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("synthetic corpus config must be a JSON object");
  if (!j.contains("seed") || !j["seed"].is_number_integer()) {
    throw ConfigError("synthetic corpus config requires an integer \"seed\"");
  }
  SynthConfig c;
  try {
    c.seed = j["seed"].get<std::uint64_t>();
    auto range = [&](const char* key, IntRange& dst) {
      if (!j.contains(key)) return;
      const auto& a = j[key];
      if (!a.is_array() || a.size() != 2) throw ConfigError(std::string(key) + " must be [lo, hi]");
      dst = {a[0].get<int>(), a[1].get<int>()};
    };
    auto scalar = [&](const char* key, auto& dst) {
      if (j.contains(key)) dst = j[key].get<std::decay_t<decltype(dst)>>();
    };
    scalar("n_clusters", c.n_clusters);
    range("records_per_cluster", c.records_per_cluster);
    scalar("n_categories", c.n_categories);
    scalar("vocab_size", c.vocab_size);
    range("title_len", c.title_len);
    scalar("image_dim", c.image_dim);
    scalar("image_noise_sigma", c.image_noise_sigma);
    scalar("hard_negative_family_size", c.hard_negative_family_size);
    scalar("family_title_tokens", c.family_title_tokens);
    if (j.contains("perturb")) {
      const auto& p = j["perturb"];
      if (p.contains("token_drop_p")) c.perturb.token_drop_p = p["token_drop_p"].get<double>();
      if (p.contains("token_swap_p")) c.perturb.token_swap_p = p["token_swap_p"].get<double>();
      if (p.contains("typo_p")) c.perturb.typo_p = p["typo_p"].get<double>();
      if (p.contains("attr_drop_p")) c.perturb.attr_drop_p = p["attr_drop_p"].get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad synthetic corpus config: ") + e.what());
  }
  validate(c);
  return c;
}

}  // namespace openem
