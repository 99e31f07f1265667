#include "openem/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "openem/common.hpp"

namespace openem {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

namespace {

std::size_t intersection_size(const std::vector<std::uint32_t>& a,
                              const std::vector<std::uint32_t>& b) {
  std::size_t i = 0, j = 0, n = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

void sort_unique(std::vector<std::uint32_t>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

std::vector<std::string> doc_tokens(const EntityRecord& r) { return tokenize(flat_text(r)); }

}  // namespace

double jaccard(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  if (a.empty() && b.empty()) return 0.0;
  const std::size_t inter = intersection_size(a, b);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

double dice(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  if (a.empty() && b.empty()) return 0.0;
  return 2.0 * static_cast<double>(intersection_size(a, b)) /
         static_cast<double>(a.size() + b.size());
}

std::vector<std::uint32_t> char_trigrams(std::string_view text) {
  std::string norm = " ";
  for (const auto& t : tokenize(text)) {
    norm += t;
    norm += ' ';
  }
  std::vector<std::uint32_t> out;
  if (norm.size() < 3 || norm == " ") return out;
  for (std::size_t i = 0; i + 3 <= norm.size(); ++i) {
    out.push_back((static_cast<std::uint32_t>(static_cast<unsigned char>(norm[i])) << 16) |
                  (static_cast<std::uint32_t>(static_cast<unsigned char>(norm[i + 1])) << 8) |
                  static_cast<std::uint32_t>(static_cast<unsigned char>(norm[i + 2])));
  }
  sort_unique(out);
  return out;
}

double IdfTable::idf(const std::string& token) const {
  auto it = df.find(token);
  const double d = it == df.end() ? 0.0 : static_cast<double>(it->second);
  return std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + d)) + 1.0;
}

IdfTable IdfTable::fit(const std::vector<const EntityRecord*>& docs) {
  IdfTable t;
  t.n_docs = docs.size();
  for (const auto* r : docs) {
    auto toks = doc_tokens(*r);
    std::sort(toks.begin(), toks.end());
    toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
    for (auto& tok : toks) ++t.df[tok];
  }
  return t;
}

namespace {

/// Normalised TF-IDF keyed by token string.
std::map<std::string, double> tfidf_by_token(const EntityRecord& r, const IdfTable& idf) {
  std::map<std::string, double> v;
  for (const auto& tok : doc_tokens(r)) v[tok] += 1.0;
  double norm = 0.0;
  for (auto& [tok, w] : v) {
    w *= idf.idf(tok);
    norm += w * w;
  }
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (auto& [tok, w] : v) w /= norm;
  }
  return v;
}

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

std::vector<std::size_t> train_record_ordinals(const PairSet& train, const Corpus& records) {
  std::vector<std::size_t> ords;
  for (const auto& p : train.pairs()) {
    for (const auto* id : {&p.left_id, &p.right_id}) {
      auto o = records.find(*id);
      if (!o) throw ValidationError("training pair references unknown record " + *id);
      ords.push_back(*o);
    }
  }
  std::sort(ords.begin(), ords.end());
  ords.erase(std::unique(ords.begin(), ords.end()), ords.end());
  return ords;
}

}  // namespace

EntityMemory EntityMemory::fit(const PairSet& train, const Corpus& records, const IdfTable& idf) {
  DisjointSets sets(records.size());
  for (const auto& p : train.pairs()) {
    if (p.label != Label::kMatched) continue;
    sets.unite(*records.find(p.left_id), *records.find(p.right_id));
  }
  EntityMemory mem;
  std::map<std::size_t, std::size_t> entity_of_root;
  for (auto o : train_record_ordinals(train, records)) {
    const auto root = sets.find(o);
    auto [it, inserted] = entity_of_root.emplace(root, mem.profiles.size());
    if (inserted) mem.profiles.emplace_back();
    auto& profile = mem.profiles[it->second];
    for (const auto& [tok, w] : tfidf_by_token(records.records()[o], idf)) profile[tok] += w;
  }
  for (auto& profile : mem.profiles) {
    double norm = 0.0;
    for (const auto& [tok, w] : profile) norm += w * w;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (auto& [tok, w] : profile) w /= norm;
    }
  }
  return mem;
}

FeatureModel FeatureModel::fit(const PairSet& train, const Corpus& records) {
  FeatureModel m;
  std::vector<const EntityRecord*> docs;
  for (auto o : train_record_ordinals(train, records)) docs.push_back(&records.records()[o]);
  m.idf = IdfTable::fit(docs);
  m.memory = EntityMemory::fit(train, records, m.idf);
  return m;
}

Json to_json(const FeatureModel& m) {
  Json j;
  j["idf"] = {{"n_docs", m.idf.n_docs}, {"df", m.idf.df}};
  j["entity_profiles"] = m.memory.profiles;
  return j;
}

FeatureModel feature_model_from_json(const Json& j) {
  FeatureModel m;
  m.idf.n_docs = j.at("idf").at("n_docs").get<std::size_t>();
  m.idf.df = j.at("idf").at("df").get<std::map<std::string, std::size_t>>();
  m.memory.profiles = j.at("entity_profiles").get<std::vector<std::map<std::string, double>>>();
  return m;
}

double sparse_dot(const SparseVec& a, const SparseVec& b) {
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].first < b[j].first) {
      ++i;
    } else if (b[j].first < a[i].first) {
      ++j;
    } else {
      s += a[i].second * b[j].second;
      ++i;
      ++j;
    }
  }
  return s;
}

const std::vector<std::string>& text_feature_names() {
  static const std::vector<std::string> kNames = {
      "title_jaccard",   "attr_jaccard", "tfidf_cosine",          "title_trigram_dice",
      "length_ratio",    "same_entity",  "same_entity_similarity"};
  return kNames;
}

const std::vector<std::string>& visual_feature_names() {
  static const std::vector<std::string> kNames = {"image_cosine", "neg_euclidean", "absdiff_mean",
                                                  "absdiff_max", "absdiff_std"};
  return kNames;
}

FeatureSpace::FeatureSpace(const FeatureModel& model) : model_(&model) {
  unknown_idf_ = std::log(1.0 + static_cast<double>(model.idf.n_docs)) + 1.0;
  for (const auto& [tok, df] : model.idf.df) token_id(tok);
  for (std::size_t e = 0; e < model.memory.profiles.size(); ++e) {
    for (const auto& [tok, w] : model.memory.profiles[e]) {
      entity_index_[token_id(tok)].emplace_back(static_cast<int>(e), w);
    }
  }
}

std::uint32_t FeatureSpace::token_id(const std::string& token) {
  auto [it, inserted] = vocab_.emplace(token, static_cast<std::uint32_t>(vocab_.size()));
  if (inserted) idf_by_id_.push_back(model_->idf.idf(token));
  return it->second;
}

PreparedRecord FeatureSpace::prepare(const EntityRecord& r) {
  PreparedRecord p;
  const std::string flat = flat_text(r);
  for (const auto& t : tokenize(title_text(r))) p.title_tokens.push_back(token_id(t));
  std::vector<std::uint32_t> doc;
  for (const auto& t : tokenize(flat)) doc.push_back(token_id(t));
  p.attr_tokens = doc;
  sort_unique(p.title_tokens);
  sort_unique(p.attr_tokens);
  p.title_trigrams = char_trigrams(title_text(r));
  p.text_length = flat.size();

  std::sort(doc.begin(), doc.end());
  double norm = 0.0;
  for (std::size_t i = 0; i < doc.size();) {
    std::size_t j = i;
    while (j < doc.size() && doc[j] == doc[i]) ++j;
    const double w = static_cast<double>(j - i) * idf_by_id_[doc[i]];
    p.tfidf.emplace_back(doc[i], w);
    norm += w * w;
    i = j;
  }
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (auto& [id, w] : p.tfidf) w /= norm;
  }

  if (!model_->memory.profiles.empty()) {
    std::vector<double> score(model_->memory.profiles.size(), 0.0);
    for (const auto& [id, w] : p.tfidf) {
      auto it = entity_index_.find(id);
      if (it == entity_index_.end()) continue;
      for (const auto& [e, ew] : it->second) score[static_cast<std::size_t>(e)] += w * ew;
    }
    auto best = std::max_element(score.begin(), score.end());
    if (*best > 0.0) {
      p.entity = static_cast<int>(best - score.begin());
      p.entity_similarity = *best;
    }
  }
  if (r.image_vec) p.image = &*r.image_vec;
  return p;
}

std::vector<PreparedRecord> FeatureSpace::prepare_all(const Corpus& corpus) {
  std::vector<PreparedRecord> out;
  out.reserve(corpus.size());
  for (const auto& r : corpus.records()) out.push_back(prepare(r));
  return out;
}

PairFeatures featurize(const PreparedRecord& a, const PreparedRecord& b) {
  PairFeatures f;
  f.text = Eigen::VectorXd::Zero(kTextFeatureCount);
  if (a.text_length == 0 && b.text_length == 0) {
    f.text_empty = true;
  } else {
    f.text[0] = jaccard(a.title_tokens, b.title_tokens);
    f.text[1] = jaccard(a.attr_tokens, b.attr_tokens);
    f.text[2] = sparse_dot(a.tfidf, b.tfidf);
    f.text[3] = dice(a.title_trigrams, b.title_trigrams);
    f.text[4] = static_cast<double>(std::min(a.text_length, b.text_length)) /
                static_cast<double>(std::max(a.text_length, b.text_length));
    const bool same = a.entity >= 0 && a.entity == b.entity;
    f.text[5] = same ? 1.0 : 0.0;
    f.text[6] = same ? std::min(a.entity_similarity, b.entity_similarity) : 0.0;
  }
  if (a.image && b.image) {
    const Eigen::VectorXd& x = *a.image;
    const Eigen::VectorXd& y = *b.image;
    const Eigen::ArrayXd d = (x - y).array().abs();
    const double nx = x.norm(), ny = y.norm();
    Eigen::VectorXd v(kVisualFeatureCount);
    v[0] = (nx > 0.0 && ny > 0.0) ? x.dot(y) / (nx * ny) : 0.0;
    v[1] = -(x - y).norm();
    v[2] = d.mean();
    v[3] = d.maxCoeff();
    v[4] = std::sqrt((d - d.mean()).square().mean());
    f.vis = std::move(v);
  }
  return f;
}

PairFeatures featurize(const EntityRecord& left, const EntityRecord& right,
                       const FeatureModel& model) {
  FeatureSpace space(model);
  const auto a = space.prepare(left);
  const auto b = space.prepare(right);
  return featurize(a, b);
}

}  // namespace openem
