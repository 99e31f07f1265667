#include "openem/corpus.hpp"

#include <algorithm>
#include <set>

#include "openem/common.hpp"

namespace openem {

namespace {

const std::set<std::string> kSchemaKeys = {"record_id", "cluster_id", "category", "attrs",
                                           "image_vec"};

bool has_text(const EntityRecord& r) {
  return std::any_of(r.attrs.begin(), r.attrs.end(),
                     [](const auto& kv) { return !kv.second.empty(); });
}

}  // namespace

bool EntityRecord::operator==(const EntityRecord& other) const {
  if (record_id != other.record_id || cluster_id != other.cluster_id ||
      category != other.category || attrs != other.attrs || extra != other.extra) {
    return false;
  }
  if (image_vec.has_value() != other.image_vec.has_value()) return false;
  return !image_vec || (image_vec->size() == other.image_vec->size() &&
                        *image_vec == *other.image_vec);
}

Corpus Corpus::from_records(std::vector<EntityRecord> records, Json meta) {
  Corpus c;
  c.meta_ = std::move(meta);

  std::map<std::string, std::vector<EntityRecord>> grouped;
  std::unordered_map<std::string, std::string> seen;
  for (auto& r : records) {
    if (r.record_id.empty()) throw ValidationError("record with empty record_id");
    if (r.cluster_id.empty()) {
      throw ValidationError("record " + r.record_id + " has empty cluster_id");
    }
    if (!has_text(r)) {
      throw ValidationError("record " + r.record_id + " has no non-empty attribute");
    }
    auto [it, inserted] = seen.emplace(r.record_id, r.cluster_id);
    if (!inserted) throw ValidationError("duplicate record_id " + r.record_id);
    if (r.image_vec) {
      const int dim = static_cast<int>(r.image_vec->size());
      if (dim == 0) throw ValidationError("record " + r.record_id + " has empty image_vec");
      if (!c.image_dim_) {
        c.image_dim_ = dim;
      } else if (*c.image_dim_ != dim) {
        throw ValidationError("record " + r.record_id + " image_vec length " +
                              std::to_string(dim) + " != corpus dimension " +
                              std::to_string(*c.image_dim_));
      }
    }
    grouped[r.cluster_id].push_back(std::move(r));
  }

  c.records_.reserve(seen.size());
  std::size_t cluster_idx = 0;
  for (auto& [cid, members] : grouped) {
    auto& ordinals = c.clusters_[cid];
    for (auto& r : members) {
      ordinals.push_back(c.records_.size());
      c.by_id_.emplace(r.record_id, c.records_.size());
      c.cluster_of_.push_back(cluster_idx);
      c.records_.push_back(std::move(r));
    }
    ++cluster_idx;
  }
  c.hash_ = sha256_hex(corpus_to_jsonl(c));
  return c;
}

std::optional<std::size_t> Corpus::find(const std::string& record_id) const {
  auto it = by_id_.find(record_id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

const EntityRecord& Corpus::at(const std::string& record_id) const {
  auto idx = find(record_id);
  if (!idx) throw ValidationError("unknown record_id " + record_id);
  return records_[*idx];
}

std::vector<std::string> Corpus::categories() const {
  std::set<std::string> cats;
  for (const auto& r : records_) cats.insert(r.category);
  return {cats.begin(), cats.end()};
}

Corpus Corpus::subset(const std::vector<std::size_t>& ordinals) const {
  std::vector<std::size_t> sorted = ordinals;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<EntityRecord> picked;
  picked.reserve(sorted.size());
  for (auto o : sorted) picked.push_back(records_.at(o));
  Corpus out = from_records(std::move(picked), meta_);
  if (!out.image_dim_) out.image_dim_ = image_dim_;
  return out;
}


Json record_to_json(const EntityRecord& r) {
  Json j = r.extra.is_object() ? r.extra : Json::object();
  j["record_id"] = r.record_id;
  j["cluster_id"] = r.cluster_id;
  j["category"] = r.category;
  j["attrs"] = r.attrs;
  if (r.image_vec) {
    j["image_vec"] = std::vector<double>(r.image_vec->data(),
                                         r.image_vec->data() + r.image_vec->size());
  }
  return j;
}

EntityRecord record_from_json(const Json& j) {
  auto need_string = [&](const char* key) -> std::string {
    if (!j.contains(key) || !j[key].is_string()) {
      throw ValidationError(std::string("missing or non-string \"") + key + "\"");
    }
    return j[key].get<std::string>();
  };
  EntityRecord r;
  r.record_id = need_string("record_id");
  r.cluster_id = need_string("cluster_id");
  r.category = need_string("category");
  if (!j.contains("attrs") || !j["attrs"].is_object()) {
    throw ValidationError("record " + r.record_id + ": missing \"attrs\" object");
  }
  for (const auto& [k, v] : j["attrs"].items()) {
    if (!v.is_string()) {
      throw ValidationError("record " + r.record_id + ": attribute \"" + k +
                            "\" is not a string");
    }
    r.attrs.emplace(k, v.get<std::string>());
  }
  if (j.contains("image_vec") && !j["image_vec"].is_null()) {
    const auto& arr = j["image_vec"];
    if (!arr.is_array()) throw ValidationError("record " + r.record_id + ": image_vec not an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_number()) {
        throw ValidationError("record " + r.record_id + ": non-numeric image_vec entry");
      }
      v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    }
    r.image_vec = std::move(v);
  }
  for (const auto& [k, v] : j.items()) {
    if (!kSchemaKeys.count(k)) r.extra[k] = v;
  }
  return r;
}

std::string corpus_to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& r : corpus.records()) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

Corpus corpus_from_jsonl(std::string_view text, std::string_view source) {
  std::vector<EntityRecord> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    auto where = std::string(source) + ":" + std::to_string(line_no) + ": ";
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ValidationError(where + "malformed JSON object");
    try {
      records.push_back(record_from_json(j));
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
  }
  return Corpus::from_records(std::move(records));
}

Corpus load_corpus(const std::filesystem::path& path) {
  Corpus c = corpus_from_jsonl(read_file(path), path.string());
  auto sidecar = path;
  sidecar += ".meta.json";
  if (std::filesystem::exists(sidecar)) {
    Json meta = Json::parse(read_file(sidecar), nullptr, false);
    if (!meta.is_discarded()) c.meta() = std::move(meta);
  }
  return c;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  write_file_atomic(path, corpus_to_jsonl(corpus));
  if (!corpus.meta().empty()) {
    auto sidecar = path;
    sidecar += ".meta.json";
    write_file_atomic(sidecar, dump_pretty(corpus.meta()));
  }
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats s;
  s.n_clusters = corpus.clusters().size();
  s.n_records = corpus.size();
  if (s.n_clusters > 0) {
    std::size_t lo = SIZE_MAX, hi = 0;
    for (const auto& [cid, members] : corpus.clusters()) {
      lo = std::min(lo, members.size());
      hi = std::max(hi, members.size());
    }
    s.min_cluster_size = lo;
    s.max_cluster_size = hi;
    s.mean_cluster_size = static_cast<double>(s.n_records) / static_cast<double>(s.n_clusters);
  }
  std::size_t with_image = 0;
  for (const auto& r : corpus.records()) {
    ++s.records_per_category[r.category];
    if (r.image_vec) ++with_image;
  }
  s.image_coverage =
      s.n_records ? static_cast<double>(with_image) / static_cast<double>(s.n_records) : 0.0;
  return s;
}

CategoryFilterResult filter_by_category(const Corpus& corpus, const std::string& category) {
  CategoryFilterResult out;
  std::vector<std::size_t> keep;
  bool any = false;
  for (const auto& [cid, members] : corpus.clusters()) {
    std::size_t hits = 0;
    for (auto o : members) hits += corpus.records()[o].category == category;
    if (hits == 0) continue;
    any = true;
    if (hits != members.size()) {
      ++out.excluded_mixed_clusters;
      continue;
    }
    keep.insert(keep.end(), members.begin(), members.end());
  }
  out.unknown_category = !any;
  out.corpus = corpus.subset(keep);
  return out;
}

const std::string& title_text(const EntityRecord& r) {
  static const std::string kEmpty;
  if (auto it = r.attrs.find("title"); it != r.attrs.end() && !it->second.empty()) {
    return it->second;
  }
  for (const auto& [k, v] : r.attrs) {
    if (!v.empty()) return v;
  }
  return kEmpty;
}

std::string flat_text(const EntityRecord& r) {
  std::string out;
  for (const auto& [k, v] : r.attrs) {
    if (v.empty()) continue;
    if (!out.empty()) out += ' ';
    out += v;
  }
  return out;
}

}  // namespace openem
