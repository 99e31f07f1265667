// Command-line entry point: gen-corpus, build, audit, train, eval, sweep,
// findings, report. Exit codes: 0 success, 1 validation/contract failure,
// 2 usage or configuration error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "openem/audit.hpp"
#include "openem/builder.hpp"
#include "openem/common.hpp"
#include "openem/corpus.hpp"
#include "openem/evaluation.hpp"
#include "openem/io.hpp"
#include "openem/matcher.hpp"
#include "openem/synth.hpp"

namespace fs = std::filesystem;
using namespace openem;

namespace {

const std::vector<std::string> kCommands = {"gen-corpus", "build", "audit", "train",
                                            "eval",       "sweep", "findings", "report"};

bool verbose = false;

void log(const std::string& msg) {
  if (verbose) std::cerr << "[openem] " << msg << '\n';
}

// ---------------------------------------------------------------------------
// --config: a JSON object whose keys are long flag names (with '-' or '_').
// Values fill in flags that are absent from the command line. A nested object
// under the subcommand's name takes precedence over top-level keys.

bool flag_present(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

std::string scalar_text(const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

void append_config_args(const Json& obj, const std::vector<std::string>& user,
                        std::vector<std::string>& out) {
  for (const auto& [key, value] : obj.items()) {
    if (value.is_object()) continue;
    std::string name = key;
    for (auto& ch : name) {
      if (ch == '_') ch = '-';
    }
    const std::string flag = "--" + name;
    if (flag == "--config" || flag_present(user, flag)) continue;
    if (value.is_null()) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) out.push_back(flag);
      continue;
    }
    out.push_back(flag);
    if (value.is_array()) {
      for (const auto& v : value) out.push_back(scalar_text(v));
    } else {
      out.push_back(scalar_text(value));
    }
  }
}

/// Rewrites argv with the values of --config spliced in after the subcommand.
std::vector<std::string> expand_config(const std::vector<std::string>& argv) {
  std::optional<std::string> config_path;
  std::vector<std::string> rest;
  for (std::size_t i = 1; i < argv.size(); ++i) {
    const std::string& a = argv[i];
    if (a == "--config") {
      if (i + 1 >= argv.size()) throw ConfigError("--config needs a path");
      config_path = argv[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      config_path = a.substr(9);
    } else {
      rest.push_back(a);
    }
  }
  if (!config_path) return argv;
  Json cfg;
  try {
    cfg = Json::parse(read_file(*config_path));
  } catch (const Json::exception& e) {
    throw ConfigError(*config_path + ": invalid JSON config: " + e.what());
  } catch (const std::exception& e) {
    throw ConfigError(*config_path + ": " + e.what());
  }
  if (!cfg.is_object()) throw ConfigError(*config_path + ": config must be a JSON object");

  std::size_t sub_at = rest.size();
  for (std::size_t i = 0; i < rest.size(); ++i) {
    if (std::find(kCommands.begin(), kCommands.end(), rest[i]) != kCommands.end()) {
      sub_at = i;
      break;
    }
  }
  std::string command;
  if (sub_at == rest.size()) {
    if (!cfg.contains("command")) throw ConfigError("no subcommand given");
    command = cfg["command"].get<std::string>();
    rest.insert(rest.begin(), command);
    sub_at = 0;
  } else {
    command = rest[sub_at];
  }
  const std::vector<std::string> user(rest.begin() + static_cast<long>(sub_at) + 1, rest.end());
  std::vector<std::string> injected;
  if (cfg.contains(command) && cfg[command].is_object()) append_config_args(cfg[command], user, injected);
  Json top = cfg;
  top.erase("command");
  std::vector<std::string> seen = user;
  seen.insert(seen.end(), injected.begin(), injected.end());
  append_config_args(top, seen, injected);

  std::vector<std::string> out = {argv[0]};
  out.insert(out.end(), rest.begin(), rest.begin() + static_cast<long>(sub_at) + 1);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), user.begin(), user.end());
  return out;
}

// ---------------------------------------------------------------------------
// Shared option groups.

struct PlanOptions {
  SplitPlan plan;
  std::vector<double> split = {0.6, 0.2, 0.2};
  std::size_t max_matched = 0;
  CLI::Option* max_matched_opt = nullptr;

  void add(CLI::App* app) {
    app->add_option("--seed", plan.seed, "Root seed of the split plan")->capture_default_str();
    app->add_option("--train-clusters", plan.n_train_clusters, "Training clusters")->capture_default_str();
    app->add_option("--holdout-clusters", plan.n_holdout_clusters, "Unseen clusters")->capture_default_str();
    app->add_option("--holdout-fraction", plan.holdout_record_fraction,
                    "Share of each training cluster's records held out")
        ->capture_default_str();
    app->add_option("--k-train", plan.k_train, "Mismatched:matched ratio of train/val")->capture_default_str();
    app->add_option("--k-test", plan.k_test, "Mismatched:matched ratio of test")->capture_default_str();
    app->add_option("--split", split, "Train/val/test shares of matched training pairs")->expected(3);
    app->add_option("--family-bias", plan.family_bias,
                    "Probability a mismatched draw stays inside a hard-negative family")
        ->capture_default_str();
    max_matched_opt = app->add_option("--max-matched-per-cluster", max_matched,
                                      "Cap on matched pairs drawn per cluster");
  }

  SplitPlan resolve() {
    plan.split = {split[0], split[1], split[2]};
    if (max_matched_opt->count()) plan.max_matched_per_cluster = max_matched;
    validate(plan);
    return plan;
  }
};

struct HyperOptions {
  TrainHyper hyper;

  void add(CLI::App* app, bool with_seed) {
    app->add_option("--lr", hyper.lr, "Gradient-descent step size")->capture_default_str();
    app->add_option("--epochs", hyper.epochs, "Full-batch epochs")->capture_default_str();
    app->add_option("--l2", hyper.l2, "L2 penalty on weights")->capture_default_str();
    if (with_seed) app->add_option("--seed", hyper.seed, "Initialisation seed")->capture_default_str();
    app->add_flag("--class-weighting", hyper.class_weighting, "Inverse-frequency sample weights");
    app->add_flag("--tune-threshold", hyper.tune_threshold, "Pick the val-F1-maximising threshold");
    app->add_option("--eval-every", hyper.eval_every, "Epochs between val-F1 checks")->capture_default_str();
  }

  TrainHyper resolve() const { return train_hyper_from_json(to_json(hyper)); }
};

/// Writes `<output>.config.json` (or `<dir>/config.json`).
void write_resolved(const fs::path& where, const std::string& command, Json body) {
  body["command"] = command;
  body["toolkit_version"] = std::string(kToolkitVersion);
  write_file_atomic(where, dump_pretty(body));
}

fs::path config_path_for(const fs::path& output) { return fs::path(output.string() + ".config.json"); }

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

std::string file_digest(const fs::path& p) { return sha256_hex(read_file(p)); }

Json ratio_list_json(const std::vector<double>& ks) { return Json(ks); }

// ---------------------------------------------------------------------------
// Subcommands.

struct GenCorpusCmd {
  SynthConfig cfg;
  std::vector<int> records_per_cluster = {10, 20};
  std::vector<int> title_len;
  fs::path out;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("gen-corpus", "Generate a synthetic product corpus (JSONL)");
    c->add_option("--seed", cfg.seed, "Generator seed")->required();
    c->add_option("--clusters", cfg.n_clusters, "Number of entity clusters")->capture_default_str();
    c->add_option("--records-per-cluster", records_per_cluster, "Cluster size range: lo hi")->expected(2);
    c->add_option("--categories", cfg.n_categories, "Number of categories")->capture_default_str();
    c->add_option("--vocab-size", cfg.vocab_size, "Token vocabulary size")->capture_default_str();
    c->add_option("--title-len", title_len, "Cluster-specific title tokens: lo hi")->expected(2);
    c->add_option("--family-title-tokens", cfg.family_title_tokens, "Title tokens shared by a family")
        ->capture_default_str();
    c->add_option("--family-size", cfg.hard_negative_family_size, "Clusters per hard-negative family")
        ->capture_default_str();
    c->add_option("--token-drop-p", cfg.perturb.token_drop_p)->capture_default_str();
    c->add_option("--token-swap-p", cfg.perturb.token_swap_p)->capture_default_str();
    c->add_option("--typo-p", cfg.perturb.typo_p)->capture_default_str();
    c->add_option("--attr-drop-p", cfg.perturb.attr_drop_p)->capture_default_str();
    c->add_option("--image-dim", cfg.image_dim)->capture_default_str();
    c->add_option("--image-noise-sigma", cfg.image_noise_sigma)->capture_default_str();
    c->add_option("--out", out, "Output corpus path")->required();
    c->callback([this] { run(); });
  }

  void run() {
    cfg.records_per_cluster = {records_per_cluster[0], records_per_cluster[1]};
    if (!title_len.empty()) cfg.title_len = {title_len[0], title_len[1]};
    validate(cfg);
    log("generating " + std::to_string(cfg.n_clusters) + " clusters");
    const Corpus corpus = generate(cfg);
    ensure_parent(out);
    save_corpus(corpus, out);
    write_resolved(config_path_for(out), "gen-corpus",
                   {{"synth", describe(cfg)}, {"out", out.string()}, {"corpus_hash", corpus.content_hash()}});
    std::cout << "wrote " << out.string() << ": " << corpus.size() << " records, "
              << corpus.clusters().size() << " clusters, sha256 " << corpus.content_hash() << '\n';
  }
};

struct BuildCmd {
  fs::path corpus_path;
  fs::path out;
  bool per_category = false;
  PlanOptions plan;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("build", "Build the four paradigm bundles from a corpus");
    c->add_option("--corpus", corpus_path, "Corpus JSONL")->required()->check(CLI::ExistingFile);
    c->add_option("--out", out, "Output directory")->required();
    c->add_flag("--per-category", per_category, "Also build bundles for every category");
    plan.add(c);
    c->callback([this] { run(); });
  }

  void run() {
    const SplitPlan p = plan.resolve();
    const Corpus corpus = load_corpus(corpus_path);
    // Everything is built and checked before anything is written.
    std::vector<std::pair<fs::path, BenchmarkBundle>> staged;
    auto stage = [&](const Corpus& c, const SplitPlan& sp, const fs::path& dir) {
      for (auto& [paradigm, bundle] : build_all(c, sp)) {
        const AuditReport a = audit_from_json(bundle.manifest["audit"]);
        if (!a.contract_passed) {
          std::string why;
          for (const auto& f : a.contract_failures) why += "\n  " + f;
          throw ValidationError("bundle " + (dir / std::string(to_string(paradigm))).string() +
                                " violates its paradigm contract:" + why);
        }
        staged.emplace_back(dir / std::string(to_string(paradigm)), std::move(bundle));
      }
    };
    log("building overall bundles");
    stage(corpus, p, out);
    Json categories = Json::object();
    if (per_category) {
      for (const auto& cat : corpus.categories()) {
        const auto sub = filter_by_category(corpus, cat);
        const SplitPlan sp = plan_for_subcorpus(p, corpus.clusters().size(), sub.corpus.clusters().size());
        log("building bundles for category " + cat);
        stage(sub.corpus, sp, out / cat);
        categories[cat] = {{"plan", to_json(sp)},
                           {"excluded_mixed_clusters", sub.excluded_mixed_clusters},
                           {"corpus_hash", sub.corpus.content_hash()}};
      }
    }
    for (const auto& [dir, bundle] : staged) write_bundle(bundle, dir);
    write_resolved(out / "config.json", "build",
                   {{"corpus", corpus_path.string()},
                    {"corpus_hash", corpus.content_hash()},
                    {"plan", to_json(p)},
                    {"per_category", per_category},
                    {"categories", categories}});
    std::vector<AuditReport> reports;
    for (const auto& [dir, bundle] : staged) {
      AuditReport r = audit_from_json(bundle.manifest["audit"]);
      r.name = fs::relative(dir, out).string();
      reports.push_back(std::move(r));
    }
    std::cout << render_audit_table(reports);
    std::cout << "wrote " << staged.size() << " bundles under " << out.string() << '\n';
  }
};

struct AuditCmd {
  std::vector<fs::path> bundles;
  fs::path train, val, test, records;
  std::string paradigm;
  fs::path out;
  std::string format = "text";

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("audit", "Leakage audit of bundles or external split files");
    c->add_option("--bundle", bundles, "Bundle directories")->check(CLI::ExistingDirectory);
    c->add_option("--train", train, "External train pairs (JSONL)")->check(CLI::ExistingFile);
    c->add_option("--val", val, "External val pairs (JSONL)")->check(CLI::ExistingFile);
    c->add_option("--test", test, "External test pairs (JSONL)")->check(CLI::ExistingFile);
    c->add_option("--records", records, "External records (JSONL)")->check(CLI::ExistingFile);
    c->add_option("--paradigm", paradigm, "Contract to check for external files: vanilla, rl, cfm, om");
    c->add_option("--out", out, "Write the JSON report here");
    c->add_option("--format", format, "Stdout format: text or json")->capture_default_str();
    c->callback([this] { run(); });
  }

  void run() {
    const bool external = !train.empty() || !val.empty() || !test.empty() || !records.empty();
    if (external == !bundles.empty()) {
      throw ConfigError("give either --bundle or all of --train --val --test --records");
    }
    if (format != "text" && format != "json") throw ConfigError("--format must be text or json");
    std::vector<AuditReport> reports;
    Json inputs = Json::array();
    if (external) {
      if (train.empty() || val.empty() || test.empty() || records.empty()) {
        throw ConfigError("external mode needs --train, --val, --test and --records");
      }
      std::optional<Paradigm> p;
      if (!paradigm.empty()) p = paradigm_from_string(paradigm);
      AuditReport r = audit_external(train, val, test, records, p);
      r.name = test.stem().string();
      reports.push_back(std::move(r));
      for (const auto* f : {&train, &val, &test, &records}) {
        inputs.push_back({{"path", f->string()}, {"sha256", file_digest(*f)}});
      }
    } else {
      if (!paradigm.empty()) throw ConfigError("--paradigm applies to external files only");
      for (const auto& dir : bundles) {
        AuditReport r = audit(read_bundle(dir));
        r.name = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
        reports.push_back(std::move(r));
        inputs.push_back({{"path", dir.string()}, {"manifest_sha256", file_digest(dir / "manifest.json")}});
      }
    }
    Json report = {{"schema", "openem-audit"},
                   {"toolkit_version", std::string(kToolkitVersion)},
                   {"inputs", inputs},
                   {"reports", Json::array()}};
    for (const auto& r : reports) report["reports"].push_back(to_json(r));
    if (!out.empty()) {
      ensure_parent(out);
      write_file_atomic(out, dump_pretty(report));
      write_resolved(config_path_for(out), "audit",
                     {{"inputs", inputs}, {"paradigm", paradigm}, {"out", out.string()}});
    }
    std::cout << (format == "json" ? dump_pretty(report) : render_audit_table(reports));
    for (const auto& r : reports) {
      if (r.contract_checked && !r.contract_passed) {
        std::string why;
        for (const auto& f : r.contract_failures) why += "\n  " + f;
        throw ValidationError("contract failed for " + r.name + ":" + why);
      }
    }
  }
};

struct TrainCmd {
  fs::path bundle;
  std::string kind = "text";
  fs::path out;
  HyperOptions hyper;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("train", "Train a matcher on a bundle's train/val splits");
    c->add_option("--bundle", bundle, "Bundle directory")->required()->check(CLI::ExistingDirectory);
    c->add_option("--kind", kind, "text, visual or fused")->capture_default_str();
    c->add_option("--out", out, "Model JSON path")->required();
    hyper.add(c, true);
    c->callback([this] { run(); });
  }

  void run() {
    const MatcherKind k = matcher_kind_from_string(kind);
    const TrainHyper h = hyper.resolve();
    const BenchmarkBundle b = read_bundle(bundle);
    log("training " + kind + " matcher on " + std::to_string(b.train.size()) + " pairs");
    MatcherModel m = train(k, b.train, b.val, b.records, h);
    m.provenance["bundle"] = {{"paradigm", std::string(to_string(b.paradigm))},
                              {"manifest_sha256", file_digest(bundle / "manifest.json")},
                              {"files", b.manifest.value("files", Json::object())}};
    ensure_parent(out);
    write_file_atomic(out, dump_pretty(to_json(m)));
    write_resolved(config_path_for(out), "train",
                   {{"bundle", bundle.string()}, {"kind", kind}, {"hyper", to_json(h)}, {"out", out.string()}});
    std::cout << "wrote " << out.string() << ": " << kind << " matcher, best val F1 "
              << m.log.best_val_f1 << " at epoch " << m.log.best_epoch << '\n';
  }
};

struct EvalCmd {
  fs::path model_path;
  fs::path bundle;
  fs::path out;
  fs::path predictions;
  std::string format = "text";

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("eval", "Evaluate a trained matcher on a bundle's test split");
    c->add_option("--model", model_path, "Model JSON")->required()->check(CLI::ExistingFile);
    c->add_option("--bundle", bundle, "Bundle directory")->required()->check(CLI::ExistingDirectory);
    c->add_option("--out", out, "Report JSON path")->required();
    c->add_option("--predictions", predictions, "Also write per-pair predictions (JSONL)");
    c->add_option("--format", format, "Stdout format: text, csv or json")->capture_default_str();
    c->callback([this] { run(); });
  }

  void run() {
    const ReportFormat fmt = report_format_from_string(format);
    const std::string model_text = read_file(model_path);
    Json mj;
    try {
      mj = Json::parse(model_text);
    } catch (const Json::exception& e) {
      throw ValidationError(model_path.string() + ": " + e.what());
    }
    const MatcherModel m = matcher_from_json(mj);
    const BenchmarkBundle b = read_bundle(bundle);
    const std::string model_hash = m.provenance.value("corpus_hash", std::string());
    const std::string bundle_hash = b.manifest.value("corpus_hash", std::string());
    if (model_hash != bundle_hash) {
      throw ValidationError("model was trained on corpus " + model_hash + " but the bundle comes from " +
                            bundle_hash + "; refusing to evaluate");
    }
    EvalReport r = evaluate_bundle(m, b);
    r.config["model"]["path"] = model_path.string();
    r.config["model"]["sha256"] = sha256_hex(model_text);
    r.config["bundle"]["manifest_sha256"] = file_digest(bundle / "manifest.json");
    ensure_parent(out);
    write_file_atomic(out, render_report(r, ReportFormat::kJson));
    if (!predictions.empty()) {
      ensure_parent(predictions);
      write_file_atomic(predictions, predictions_to_jsonl(predict(m, b.test, b.records)));
    }
    write_resolved(config_path_for(out), "eval",
                   {{"model", model_path.string()},
                    {"bundle", bundle.string()},
                    {"out", out.string()},
                    {"predictions", predictions.string()}});
    std::cout << render_report(r, fmt);
  }
};

struct SweepCmd {
  fs::path corpus_path;
  fs::path out;
  std::string axis = "test";
  std::string kind = "text";
  std::vector<double> ks = {3, 10, 30, 100};
  std::vector<std::uint64_t> seeds = {7};
  std::string format = "text";
  PlanOptions plan;
  HyperOptions hyper;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("sweep", "F1 across mismatched:matched ratios for all paradigms");
    c->add_option("--corpus", corpus_path, "Corpus JSONL")->required()->check(CLI::ExistingFile);
    c->add_option("--out", out, "Sweep curve JSON path")->required();
    c->add_option("--axis", axis, "test or train_and_test")->capture_default_str();
    c->add_option("--kind", kind, "text, visual or fused")->capture_default_str();
    c->add_option("--ks", ks, "Ratios, strictly increasing");
    c->add_option("--seeds", seeds, "Root seeds to average over");
    c->add_option("--format", format, "Stdout format: text, csv or json")->capture_default_str();
    plan.add(c);
    hyper.add(c, false);
    c->callback([this] { run(); });
  }

  void run() {
    const ReportFormat fmt = report_format_from_string(format);
    const SweepAxis ax = sweep_axis_from_string(axis);
    const MatcherKind k = matcher_kind_from_string(kind);
    const SplitPlan p = plan.resolve();
    FindingsOptions opt;
    opt.hyper = hyper.resolve();
    opt.seeds = seeds;
    const Corpus corpus = load_corpus(corpus_path);
    log("sweeping " + std::to_string(ks.size()) + " ratios over " + std::to_string(seeds.size()) + " seeds");
    const SweepCurve curve = run_findings_2(corpus, p, opt, ks, ax, k);
    ensure_parent(out);
    write_file_atomic(out, render_report(curve, ReportFormat::kJson));
    write_resolved(config_path_for(out), "sweep",
                   {{"corpus", corpus_path.string()},
                    {"corpus_hash", corpus.content_hash()},
                    {"axis", std::string(to_string(ax))},
                    {"kind", kind},
                    {"ks", ratio_list_json(ks)},
                    {"seeds", seeds},
                    {"plan", to_json(p)},
                    {"hyper", to_json(opt.hyper)},
                    {"out", out.string()}});
    std::cout << render_report(curve, fmt);
  }
};

struct FindingsCmd {
  fs::path corpus_path;
  fs::path out;
  int which = 1;
  std::string kind = "text";
  std::vector<double> ks = {3, 100};
  std::vector<std::uint64_t> seeds = {7};
  bool no_per_category = false;
  std::string format = "text";
  PlanOptions plan;
  HyperOptions hyper;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand(
        "findings", "Paradigm comparison (1) or text/visual/fused comparison (3) report");
    c->add_option("--corpus", corpus_path, "Corpus JSONL")->required()->check(CLI::ExistingFile);
    c->add_option("--out", out, "Report JSON path")->required();
    c->add_option("--which", which, "1 or 3")->capture_default_str()->check(CLI::IsMember({1, 3}));
    c->add_option("--kind", kind, "Matcher for report 1")->capture_default_str();
    c->add_option("--ks", ks, "Ratios for report 3");
    c->add_option("--seeds", seeds, "Root seeds to average over");
    c->add_flag("--no-per-category", no_per_category, "Overall rows only (report 1)");
    c->add_option("--format", format, "Stdout format: text, csv or json")->capture_default_str();
    plan.add(c);
    hyper.add(c, false);
    c->callback([this] { run(); });
  }

  void run() {
    const ReportFormat fmt = report_format_from_string(format);
    const SplitPlan p = plan.resolve();
    FindingsOptions opt;
    opt.hyper = hyper.resolve();
    opt.seeds = seeds;
    opt.per_category = !no_per_category;
    const Corpus corpus = load_corpus(corpus_path);
    const EvalReport r = which == 1 ? run_findings_1(corpus, p, opt, matcher_kind_from_string(kind))
                                    : run_findings_3(corpus, p, opt, ks);
    ensure_parent(out);
    write_file_atomic(out, render_report(r, ReportFormat::kJson));
    write_resolved(config_path_for(out), "findings",
                   {{"corpus", corpus_path.string()},
                    {"corpus_hash", corpus.content_hash()},
                    {"which", which},
                    {"kind", kind},
                    {"ks", ratio_list_json(ks)},
                    {"seeds", seeds},
                    {"per_category", opt.per_category},
                    {"plan", to_json(p)},
                    {"hyper", to_json(opt.hyper)},
                    {"out", out.string()}});
    std::cout << render_report(r, fmt);
  }
};

struct ReportCmd {
  fs::path in;
  fs::path out;
  std::string format = "text";

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("report", "Render an evaluation report or sweep curve");
    c->add_option("--in", in, "Report or sweep JSON")->required()->check(CLI::ExistingFile);
    c->add_option("--format", format, "text, csv or json")->capture_default_str();
    c->add_option("--out", out, "Output path (stdout when absent)");
    c->callback([this] { run(); });
  }

  void run() {
    const ReportFormat fmt = report_format_from_string(format);
    Json j;
    try {
      j = Json::parse(read_file(in));
    } catch (const Json::exception& e) {
      throw ValidationError(in.string() + ": " + e.what());
    }
    const std::string schema = j.value("schema", std::string());
    std::string text;
    if (schema == "openem-sweep-curve") {
      text = render_report(sweep_curve_from_json(j), fmt);
    } else if (schema == "openem-eval-report") {
      text = render_report(eval_report_from_json(j), fmt);
    } else {
      throw ValidationError(in.string() + ": not an evaluation report or sweep curve");
    }
    if (out.empty()) {
      std::cout << text;
      return;
    }
    ensure_parent(out);
    write_file_atomic(out, text);
    write_resolved(config_path_for(out), "report",
                   {{"in", in.string()}, {"in_sha256", file_digest(in)}, {"format", format}, {"out", out.string()}});
  }
};

int run(int argc, char** argv) {
  CLI::App app{"openem: benchmark construction, leakage audit and evaluation for entity matching"};
  app.require_subcommand(1);
  app.add_flag("-v,--verbose", verbose, "Progress messages on stderr");
  app.add_option("--config", "JSON file of flag values (command line wins)");

  GenCorpusCmd gen;
  BuildCmd build;
  AuditCmd audit_cmd;
  TrainCmd train_cmd;
  EvalCmd eval_cmd;
  SweepCmd sweep;
  FindingsCmd findings;
  ReportCmd report;
  gen.add(app);
  build.add(app);
  audit_cmd.add(app);
  train_cmd.add(app);
  eval_cmd.add(app);
  sweep.add(app);
  findings.add(app);
  report.add(app);

  std::vector<std::string> args(argv, argv + argc);
  try {
    args = expand_config(args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  std::vector<char*> cargs;
  for (auto& a : args) cargs.push_back(a.data());

  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
