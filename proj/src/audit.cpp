#include "openem/audit.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <set>
#include <unordered_set>

#include "openem/common.hpp"

namespace openem {

std::optional<double> SplitCounts::ratio() const {
  if (n_matched == 0) return std::nullopt;
  return static_cast<double>(n_mismatched) / static_cast<double>(n_matched);
}

namespace {

SplitCounts counts_of(const PairSet& s) { return {s.n_matched(), s.n_mismatched()}; }

double frac(std::size_t num, std::size_t den) {
  return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

Json counts_json(const SplitCounts& c) {
  Json j;
  j["n_matched"] = c.n_matched;
  j["n_mismatched"] = c.n_mismatched;
  j["ratio"] = c.ratio() ? Json(*c.ratio()) : Json(nullptr);
  return j;
}

SplitCounts counts_from_json(const Json& j) {
  return {j.at("n_matched").get<std::size_t>(), j.at("n_mismatched").get<std::size_t>()};
}

}  // namespace

AuditReport audit_pairsets(const PairSet& train, const PairSet& val, const PairSet& test,
                           const Corpus& records, std::optional<Paradigm> paradigm) {
  auto cluster_of = [&](const std::string& id) -> const std::string& {
    auto o = records.find(id);
    if (!o) throw ValidationError("pair references unknown record " + id);
    return records.records()[*o].cluster_id;
  };

  std::unordered_set<std::string> seen_records;
  std::unordered_set<std::string> seen_clusters;
  for (const PairSet* s : {&train, &val}) {
    for (const auto& p : s->pairs()) {
      for (const auto* id : {&p.left_id, &p.right_id}) {
        seen_records.insert(*id);
        seen_clusters.insert(cluster_of(*id));
      }
    }
  }

  AuditReport r;
  r.paradigm = paradigm;
  std::set<std::string> test_records, test_clusters;
  std::size_t exactly_one = 0, both = 0, any = 0, both_clusters = 0;
  for (const auto& p : test.pairs()) {
    const auto& cl = cluster_of(p.left_id);
    const auto& cr = cluster_of(p.right_id);
    test_records.insert(p.left_id);
    test_records.insert(p.right_id);
    test_clusters.insert(cl);
    test_clusters.insert(cr);
    const int n_seen = static_cast<int>(seen_records.count(p.left_id)) +
                       static_cast<int>(seen_records.count(p.right_id));
    exactly_one += n_seen == 1;
    both += n_seen == 2;
    any += n_seen >= 1;
    both_clusters += seen_clusters.count(cl) && seen_clusters.count(cr);
    if (train.contains(p.left_id, p.right_id) || val.contains(p.left_id, p.right_id)) {
      ++r.test_pairs_in_train_or_val;
    }
  }
  r.n_test_records = test_records.size();
  r.n_test_clusters = test_clusters.size();
  for (const auto& id : test_records) r.n_seen_test_records += seen_records.count(id);
  for (const auto& c : test_clusters) r.n_seen_test_clusters += seen_clusters.count(c);
  r.seen_record_ratio = frac(r.n_seen_test_records, r.n_test_records);
  r.seen_cluster_ratio = frac(r.n_seen_test_clusters, r.n_test_clusters);
  r.exactly_one_seen_pair_fraction = frac(exactly_one, test.size());
  r.both_seen_pair_fraction = frac(both, test.size());
  r.any_seen_pair_fraction = frac(any, test.size());
  r.both_clusters_seen_pair_fraction = frac(both_clusters, test.size());
  r.train = counts_of(train);
  r.val = counts_of(val);
  r.test = counts_of(test);
  check_contract(r);
  return r;
}

void check_contract(AuditReport& r) {
  r.contract_failures.clear();
  r.contract_checked = r.paradigm.has_value();
  if (!r.paradigm) {
    r.contract_passed = true;
    return;
  }
  auto fail = [&](std::string msg) { r.contract_failures.push_back(std::move(msg)); };
  if (r.test_pairs_in_train_or_val > 0) {
    fail(std::to_string(r.test_pairs_in_train_or_val) + " test pairs also occur in train/val");
  }
  switch (*r.paradigm) {
    case Paradigm::kVanilla:
      break;
    case Paradigm::kOpenMatching:
      if (r.n_seen_test_clusters != 0) fail("open matching test contains seen clusters");
      break;
    case Paradigm::kClusterFocused:
      if (r.n_test_clusters == 0 || r.n_seen_test_clusters != r.n_test_clusters) {
        fail("cluster-focused test contains unseen clusters");
      }
      if (r.n_seen_test_records != 0) fail("cluster-focused test contains seen records");
      break;
    case Paradigm::kRecordLinking:
      if (r.test.n_matched + r.test.n_mismatched == 0 || r.exactly_one_seen_pair_fraction != 1.0) {
        fail("record-linking test has pairs without exactly one seen record");
      }
      break;
  }
  r.contract_passed = r.contract_failures.empty();
}

AuditReport audit(const BenchmarkBundle& bundle) {
  AuditReport r = audit_pairsets(bundle.train, bundle.val, bundle.test, bundle.records,
                                 bundle.paradigm);
  r.name = std::string(to_string(bundle.paradigm));
  return r;
}

AuditReport audit_external(const std::filesystem::path& train, const std::filesystem::path& val,
                           const std::filesystem::path& test, const std::filesystem::path& records,
                           std::optional<Paradigm> paradigm) {
  const Corpus corpus = load_corpus(records);
  const PairSet tr = pairs_from_jsonl(read_file(train), train.string());
  const PairSet va = pairs_from_jsonl(read_file(val), val.string());
  const PairSet te = pairs_from_jsonl(read_file(test), test.string());
  AuditReport r = audit_pairsets(tr, va, te, corpus, paradigm);
  r.name = test.parent_path().filename().string();
  if (r.name.empty()) r.name = test.stem().string();
  return r;
}

Json to_json(const AuditReport& r) {
  Json j;
  j["name"] = r.name;
  j["paradigm"] = r.paradigm ? Json(std::string(to_string(*r.paradigm))) : Json(nullptr);
  j["n_test_records"] = r.n_test_records;
  j["n_test_clusters"] = r.n_test_clusters;
  j["n_seen_test_records"] = r.n_seen_test_records;
  j["n_seen_test_clusters"] = r.n_seen_test_clusters;
  j["seen_cluster_ratio"] = r.seen_cluster_ratio;
  j["seen_record_ratio"] = r.seen_record_ratio;
  j["pair_level"] = {{"exactly_one_seen", r.exactly_one_seen_pair_fraction},
                     {"both_seen", r.both_seen_pair_fraction},
                     {"any_seen", r.any_seen_pair_fraction},
                     {"both_clusters_seen", r.both_clusters_seen_pair_fraction}};
  j["exactly_one_seen_pair_fraction"] = r.exactly_one_seen_pair_fraction;
  j["test_pairs_in_train_or_val"] = r.test_pairs_in_train_or_val;
  j["splits"] = {{"train", counts_json(r.train)},
                 {"val", counts_json(r.val)},
                 {"test", counts_json(r.test)}};
  j["contract"] = {{"checked", r.contract_checked},
                   {"passed", r.contract_passed},
                   {"failures", r.contract_failures}};
  return j;
}

AuditReport audit_from_json(const Json& j) {
  AuditReport r;
  r.name = j.at("name").get<std::string>();
  if (!j.at("paradigm").is_null()) r.paradigm = paradigm_from_string(j["paradigm"].get<std::string>());
  r.n_test_records = j.at("n_test_records").get<std::size_t>();
  r.n_test_clusters = j.at("n_test_clusters").get<std::size_t>();
  r.n_seen_test_records = j.at("n_seen_test_records").get<std::size_t>();
  r.n_seen_test_clusters = j.at("n_seen_test_clusters").get<std::size_t>();
  r.seen_cluster_ratio = j.at("seen_cluster_ratio").get<double>();
  r.seen_record_ratio = j.at("seen_record_ratio").get<double>();
  const auto& pl = j.at("pair_level");
  r.exactly_one_seen_pair_fraction = pl.at("exactly_one_seen").get<double>();
  r.both_seen_pair_fraction = pl.at("both_seen").get<double>();
  r.any_seen_pair_fraction = pl.at("any_seen").get<double>();
  r.both_clusters_seen_pair_fraction = pl.at("both_clusters_seen").get<double>();
  r.test_pairs_in_train_or_val = j.at("test_pairs_in_train_or_val").get<std::size_t>();
  r.train = counts_from_json(j.at("splits").at("train"));
  r.val = counts_from_json(j.at("splits").at("val"));
  r.test = counts_from_json(j.at("splits").at("test"));
  r.contract_checked = j.at("contract").at("checked").get<bool>();
  r.contract_passed = j.at("contract").at("passed").get<bool>();
  r.contract_failures = j.at("contract").at("failures").get<std::vector<std::string>>();
  return r;
}

std::string render_audit_table(const std::vector<AuditReport>& reports) {
  std::vector<std::array<std::string, 5>> rows;
  rows.push_back({"Benchmark", "Matched:Mismatched", "Seen Clusters", "Seen Records", "Contract"});
  char buf[64];
  for (const auto& r : reports) {
    std::array<std::string, 5> row;
    row[0] = r.name;
    if (auto k = r.test.ratio()) {
      std::snprintf(buf, sizeof(buf), "~1:%.4g", *k);
      row[1] = buf;
    } else {
      row[1] = "n/a";
    }
    std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * r.seen_cluster_ratio);
    row[2] = buf;
    std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * r.seen_record_ratio);
    row[3] = buf;
    row[4] = !r.contract_checked ? "-" : r.contract_passed ? "pass" : "FAIL";
    rows.push_back(std::move(row));
  }
  std::array<std::size_t, 5> width{};
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      const auto& cell = rows[i][c];
      if (c == 0) {
        out += cell + std::string(width[c] - cell.size(), ' ');
      } else {
        out += " | " + std::string(width[c] - cell.size(), ' ') + cell;
      }
    }
    out += '\n';
    if (i == 0) {
      std::size_t total = width[0];
      for (std::size_t c = 1; c < width.size(); ++c) total += width[c] + 3;
      out += std::string(total, '-') + '\n';
    }
  }
  return out;
}

}  // namespace openem
