#pragma once

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "topoclasp/autodiff.hpp"
#include "topoclasp/common.hpp"
#include "topoclasp/graph.hpp"
#include "topoclasp/loss.hpp"
#include "topoclasp/model.hpp"
#include "topoclasp/rng.hpp"
#include "topoclasp/vectorize.hpp"

namespace topoclasp {

enum class Mode { topo, gnn, concat, tcl };

inline Mode parse_mode(const std::string& s) {
  if (s == "topo") return Mode::topo;
  if (s == "gnn") return Mode::gnn;
  if (s == "concat") return Mode::concat;
  if (s == "tcl") return Mode::tcl;
  throw ConfigError("unknown mode: " + s + " (valid: topo, gnn, concat, tcl)");
}

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::topo: return "topo";
    case Mode::gnn: return "gnn";
    case Mode::concat: return "concat";
    case Mode::tcl: return "tcl";
  }
  return "?";
}

struct ExperimentConfig {
  std::string dataset_dir;
  std::string dataset;
  std::string mode = "tcl";
  std::string filtration = "hks";
  std::string contrast_on = "zu";  // zu: loss over (z,u); proj: over projected views
  int hidden = 128;
  int layers = 3;
  double lr = 0.001;
  double alpha = 0.1;
  double tau = 0.5;
  int batch = 32;
  int epochs = 100;
  int folds = 10;
  std::uint64_t seed = 0;
  int thresholds = 10;
  int scales = 10;
  int proj_dim = 64;
  double t_min = 0.1;
  double t_max = 10.0;
  int jobs = 1;
  std::string out;

  void validate() const {
    parse_mode(mode);
    parse_filtration_source(filtration);
    if (contrast_on != "zu" && contrast_on != "proj")
      throw ConfigError("contrast_on must be zu or proj");
    if (hidden <= 0) throw ConfigError("hidden must be positive");
    if (layers <= 0) throw ConfigError("layers must be positive");
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    if (alpha < 0.0) throw ConfigError("alpha must be non-negative");
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
    if (batch <= 0) throw ConfigError("batch must be positive");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (folds < 2) throw ConfigError("folds must be >= 2");
    if (thresholds <= 0) throw ConfigError("thresholds must be positive");
    if (scales <= 0) throw ConfigError("scales must be positive");
    if (proj_dim <= 0) throw ConfigError("proj_dim must be positive");
    if (!(t_min > 0.0) || !(t_max >= t_min))
      throw ConfigError("require 0 < t_min <= t_max");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
  }

  VectorizeConfig vectorize_config() const {
    VectorizeConfig vc;
    vc.source = parse_filtration_source(filtration);
    vc.num_scales = scales;
    vc.t_min = t_min;
    vc.t_max = t_max;
    vc.num_thresholds = thresholds;
    return vc;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["dataset_dir"] = dataset_dir;
    j["dataset"] = dataset;
    j["mode"] = mode;
    j["filtration"] = filtration;
    j["contrast_on"] = contrast_on;
    j["hidden"] = hidden;
    j["layers"] = layers;
    j["lr"] = lr;
    j["alpha"] = alpha;
    j["tau"] = tau;
    j["batch"] = batch;
    j["epochs"] = epochs;
    j["folds"] = folds;
    j["seed"] = seed;
    j["thresholds"] = thresholds;
    j["scales"] = scales;
    j["proj_dim"] = proj_dim;
    j["t_min"] = t_min;
    j["t_max"] = t_max;
    j["jobs"] = jobs;
    j["out"] = out;
    return j;
  }

  // Flat-key JSON; unknown keys are rejected so config typos cannot silently
  // fall back to defaults.
  void apply_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
    try {
      for (const auto& [key, value] : j.items()) {
        if (key == "dataset_dir") dataset_dir = value.get<std::string>();
        else if (key == "dataset") dataset = value.get<std::string>();
        else if (key == "mode") mode = value.get<std::string>();
        else if (key == "filtration") filtration = value.get<std::string>();
        else if (key == "contrast_on") contrast_on = value.get<std::string>();
        else if (key == "hidden") hidden = value.get<int>();
        else if (key == "layers") layers = value.get<int>();
        else if (key == "lr") lr = value.get<double>();
        else if (key == "alpha") alpha = value.get<double>();
        else if (key == "tau") tau = value.get<double>();
        else if (key == "batch") batch = value.get<int>();
        else if (key == "epochs") epochs = value.get<int>();
        else if (key == "folds") folds = value.get<int>();
        else if (key == "seed") seed = value.get<std::uint64_t>();
        else if (key == "thresholds") thresholds = value.get<int>();
        else if (key == "scales") scales = value.get<int>();
        else if (key == "proj_dim") proj_dim = value.get<int>();
        else if (key == "t_min") t_min = value.get<double>();
        else if (key == "t_max") t_max = value.get<double>();
        else if (key == "jobs") jobs = value.get<int>();
        else if (key == "out") out = value.get<std::string>();
        else throw ConfigError("unknown config key: " + key);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config value has wrong type: ") + e.what());
    }
  }
};

// ---------------------------------------------------------------------------
// Cross-validation splits

// Returns k test-index sets partitioning 0..n-1. Per class, indices are
// shuffled and dealt round-robin with a rotating start so remainder samples
// spread across folds; per-fold class counts differ from exact proportion by
// at most one. Classes smaller than k degrade to a plain shuffled k-fold with
// a warning.
inline std::vector<std::vector<int>> stratified_kfold(
    const std::vector<int>& labels, int k, std::uint64_t seed) {
  int n = static_cast<int>(labels.size());
  if (k < 2) throw ConfigError("stratified_kfold: k must be >= 2");
  if (k > n) throw ConfigError("stratified_kfold: k exceeds dataset size");
  int classes = 0;
  for (int y : labels) {
    if (y < 0) throw ContractError("stratified_kfold: negative label");
    classes = std::max(classes, y + 1);
  }
  std::vector<std::vector<int>> groups(static_cast<std::size_t>(classes));
  for (int i = 0; i < n; ++i) groups[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])].push_back(i);
  Rng rng(seed);
  std::vector<std::vector<int>> folds(static_cast<std::size_t>(k));
  bool degenerate = false;
  for (const auto& g : groups)
    if (static_cast<int>(g.size()) < k) degenerate = true;
  if (degenerate) {
    std::fprintf(stderr,
                 "warning: a class has fewer than %d members; "
                 "falling back to plain shuffled k-fold\n", k);
    std::vector<int> all(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    rng.shuffle(all);
    for (int j = 0; j < n; ++j)
      folds[static_cast<std::size_t>(j % k)].push_back(all[static_cast<std::size_t>(j)]);
  } else {
    int rot = 0;
    for (auto& g : groups) {
      rng.shuffle(g);
      for (std::size_t j = 0; j < g.size(); ++j)
        folds[static_cast<std::size_t>((rot + static_cast<int>(j)) % k)].push_back(g[j]);
      rot = (rot + static_cast<int>(g.size() % static_cast<std::size_t>(k))) % k;
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

// ---------------------------------------------------------------------------
// Per-fold training

struct FoldResult {
  double accuracy = 0.0;
  std::vector<double> losses;  // mean train loss per epoch
  long steps = 0;
  Standardizer stdz;
};

namespace detail {

struct BatchOut {
  ad::Tape::Ref logits = -1;
  ad::Tape::Ref loss = -1;
};

// Mode wiring. topo and gnn feed a single view straight into the classifier;
// concat and tcl share the fusion path, and the contrastive term is attached
// only when alpha is non-zero, so concat is literally tcl at alpha = 0.
inline BatchOut forward_batch(ad::Tape& tape, const BoundParams& bp,
                              const ModelParams& params, const Batch& batch,
                              Mode mode, const ExperimentConfig& cfg,
                              bool with_loss) {
  BatchOut o;
  ad::Tape::Ref x = tape.input(batch.x);
  ad::Tape::Ref tp = tape.input(batch.topo);
  switch (mode) {
    case Mode::topo: {
      ad::Tape::Ref u = topo_forward(tape, bp, params, tp);
      o.logits = classify_single(tape, bp, params, u);
      if (with_loss) o.loss = cross_entropy(tape, o.logits, batch.labels);
      break;
    }
    case Mode::gnn: {
      ad::Tape::Ref z = gin_forward(tape, bp, params, batch, x);
      o.logits = classify_single(tape, bp, params, z);
      if (with_loss) o.loss = cross_entropy(tape, o.logits, batch.labels);
      break;
    }
    case Mode::concat:
    case Mode::tcl: {
      ad::Tape::Ref z = gin_forward(tape, bp, params, batch, x);
      ad::Tape::Ref u = topo_forward(tape, bp, params, tp);
      FusedOut fused = fuse_and_classify(tape, bp, params, z, u);
      o.logits = fused.logits;
      if (with_loss) {
        o.loss = cross_entropy(tape, o.logits, batch.labels);
        double alpha = mode == Mode::tcl ? cfg.alpha : 0.0;
        if (alpha != 0.0) {
          ad::Tape::Ref ca = z, cb = u;
          if (cfg.contrast_on == "proj") {
            ca = tape.matmul(z, bp.ref(params.proj_w), false, true);
            cb = tape.matmul(u, bp.ref(params.proj_w), false, true);
          }
          o.loss = joint_loss(tape, o.loss, info_nce(tape, ca, cb, cfg.tau), alpha);
        }
      }
      break;
    }
  }
  return o;
}

}  // namespace detail

inline FoldResult train_fold(const ExperimentConfig& cfg, const Dataset& ds,
                             const std::vector<std::vector<double>>& topo_raw,
                             const std::vector<int>& train_idx,
                             const std::vector<int>& test_idx,
                             std::uint64_t fold_seed, int fold_index) {
  if (train_idx.empty() || test_idx.empty())
    throw ContractError("train_fold: empty split");
  Mode mode = parse_mode(cfg.mode);
  FoldResult fr;
  fr.stdz = Standardizer::fit(topo_raw, train_idx);
  std::vector<std::vector<double>> topo_std(topo_raw.size());
  for (std::size_t i = 0; i < topo_raw.size(); ++i)
    topo_std[i] = fr.stdz.apply(topo_raw[i]);

  Rng rng(fold_seed);
  int d_topo = static_cast<int>(topo_raw[0].size());
  ModelParams params =
      ModelParams::init(ds.feature_dim, d_topo, cfg.hidden, ds.num_classes,
                        cfg.proj_dim, cfg.layers, rng);
  ad::Adam opt(cfg.lr);

  std::vector<int> order = train_idx;
  std::vector<int> chunk;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t s = 0; s < order.size(); s += static_cast<std::size_t>(cfg.batch)) {
      chunk.assign(order.begin() + static_cast<std::ptrdiff_t>(s),
                   order.begin() + static_cast<std::ptrdiff_t>(
                                       std::min(s + static_cast<std::size_t>(cfg.batch),
                                                order.size())));
      Batch batch = make_batch(ds, topo_std, chunk);
      ad::Tape tape;
      BoundParams bp = bind_params(tape, params);
      detail::BatchOut out = detail::forward_batch(tape, bp, params, batch, mode, cfg, true);
      double lv = tape.val(out.loss).v[0];
      if (!std::isfinite(lv))
        throw TrainingAbort("non-finite loss in fold " + std::to_string(fold_index) +
                            ", epoch " + std::to_string(epoch) + ", step " +
                            std::to_string(fr.steps));
      tape.backward(out.loss);
      std::vector<const ad::Tensor*> grads;
      grads.reserve(bp.refs.size());
      for (ad::Tape::Ref r : bp.refs) grads.push_back(&tape.gradient(r));
      opt.step(bp.tensors, grads);
      loss_sum += lv;
      ++batches;
      ++fr.steps;
    }
    fr.losses.push_back(loss_sum / batches);
  }

  // Final-epoch model on the held-out fold; argmax takes the first maximum.
  int correct = 0;
  for (std::size_t s = 0; s < test_idx.size(); s += static_cast<std::size_t>(cfg.batch)) {
    chunk.assign(test_idx.begin() + static_cast<std::ptrdiff_t>(s),
                 test_idx.begin() + static_cast<std::ptrdiff_t>(
                                        std::min(s + static_cast<std::size_t>(cfg.batch),
                                                 test_idx.size())));
    Batch batch = make_batch(ds, topo_std, chunk);
    ad::Tape tape;
    BoundParams bp = bind_params(tape, params);
    detail::BatchOut out = detail::forward_batch(tape, bp, params, batch, mode, cfg, false);
    const ad::Tensor& logits = tape.val(out.logits);
    for (int i = 0; i < logits.rows; ++i) {
      int pred = 0;
      for (int j = 1; j < logits.cols; ++j)
        if (logits.at(i, j) > logits.at(i, pred)) pred = j;
      if (pred == batch.labels[static_cast<std::size_t>(i)]) ++correct;
    }
  }
  fr.accuracy = static_cast<double>(correct) / static_cast<double>(test_idx.size());
  return fr;
}

// ---------------------------------------------------------------------------
// Experiments

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<int> fold_ids;        // folds that completed
  std::vector<FoldResult> folds;    // parallel to fold_ids
  double mean = 0.0;
  double stddev = 0.0;              // population std over completed folds
  double runtime_s = 0.0;
  bool partial = false;
  std::vector<std::string> errors;
};

inline nlohmann::ordered_json report_json(const ExperimentReport& r) {
  nlohmann::ordered_json j;
  j["config"] = r.config.to_json();
  j["folds"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.folds.size(); ++i) {
    nlohmann::ordered_json fj;
    fj["fold"] = r.fold_ids[i];
    fj["accuracy"] = r.folds[i].accuracy;
    fj["losses"] = r.folds[i].losses;
    j["folds"].push_back(fj);
  }
  j["mean"] = r.mean;
  j["std"] = r.stddev;
  if (r.partial) {
    j["partial"] = true;
    j["errors"] = r.errors;
  }
  j["runtime_s"] = r.runtime_s;
  return j;
}

inline std::string report_csv(const ExperimentReport& r) {
  std::string csv = "fold,accuracy\n";
  char buf[64];
  for (std::size_t i = 0; i < r.folds.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%d,%.9g\n", r.fold_ids[i], r.folds[i].accuracy);
    csv += buf;
  }
  return csv;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw FormatError("cannot open for writing: " + path);
  bool ok = std::fwrite(content.data(), 1, content.size(), f) == content.size();
  if (std::fclose(f) != 0 || !ok) throw FormatError("write failed: " + path);
}

// Runs every fold (optionally in parallel), aggregates mean +- population
// std over fold accuracies. Fold failures are recorded and mark the report
// partial instead of discarding the surviving folds.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg, const Dataset& ds,
                                       const std::vector<std::vector<double>>& features) {
  cfg.validate();
  auto t0 = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.config = cfg;

  std::vector<int> labels;
  labels.reserve(ds.graphs.size());
  for (const auto& g : ds.graphs) labels.push_back(g.label);
  auto test_folds = stratified_kfold(labels, cfg.folds, cfg.seed);

  std::vector<FoldResult> results(test_folds.size());
  std::vector<std::string> errors(test_folds.size());
  std::vector<char> failed(test_folds.size(), 0);
  parallel_for(test_folds.size(), cfg.jobs, [&](std::size_t f) {
    std::vector<char> in_test(ds.graphs.size(), 0);
    for (int i : test_folds[f]) in_test[static_cast<std::size_t>(i)] = 1;
    std::vector<int> train_idx;
    train_idx.reserve(ds.graphs.size() - test_folds[f].size());
    for (std::size_t i = 0; i < ds.graphs.size(); ++i)
      if (!in_test[i]) train_idx.push_back(static_cast<int>(i));
    try {
      results[f] = train_fold(cfg, ds, features, train_idx, test_folds[f],
                              cfg.seed + f, static_cast<int>(f));
    } catch (const TrainingAbort& e) {
      failed[f] = 1;
      errors[f] = e.what();
    }
  });

  for (std::size_t f = 0; f < results.size(); ++f) {
    if (failed[f]) {
      report.partial = true;
      report.errors.push_back(errors[f]);
    } else {
      report.fold_ids.push_back(static_cast<int>(f));
      report.folds.push_back(std::move(results[f]));
    }
  }
  if (!report.folds.empty()) {
    double sum = 0.0;
    for (const auto& fr : report.folds) sum += fr.accuracy;
    report.mean = sum / static_cast<double>(report.folds.size());
    double var = 0.0;
    for (const auto& fr : report.folds) {
      double d = fr.accuracy - report.mean;
      var += d * d;
    }
    report.stddev = std::sqrt(var / static_cast<double>(report.folds.size()));
  }
  report.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg, const Dataset& ds) {
  cfg.validate();
  auto features = vectorize_dataset(ds, cfg.vectorize_config(), cfg.jobs);
  return run_experiment(cfg, ds, features);
}

// ---------------------------------------------------------------------------
// Filtration robustness study

struct FiltrationStudy {
  ExperimentConfig base;
  std::vector<std::string> names;          // hks, degree, closeness
  std::vector<ExperimentReport> reports;   // parallel to names
  double runtime_s = 0.0;

  const ExperimentReport& report_for(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return reports[i];
    throw ContractError("no report for filtration " + name);
  }
};

// Same config and seed per filtration; only the node-value source changes.
inline FiltrationStudy run_filtration_study(const ExperimentConfig& cfg, const Dataset& ds) {
  auto t0 = std::chrono::steady_clock::now();
  FiltrationStudy study;
  study.base = cfg;
  for (const char* f : {"hks", "degree", "closeness"}) {
    ExperimentConfig c = cfg;
    c.filtration = f;
    study.names.emplace_back(f);
    study.reports.push_back(run_experiment(c, ds));
  }
  study.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return study;
}

inline nlohmann::ordered_json study_json(const FiltrationStudy& study) {
  nlohmann::ordered_json j;
  j["config"] = study.base.to_json();
  j["results"] = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < study.names.size(); ++i)
    j["results"][study.names[i]] = report_json(study.reports[i]);
  double hks_mean = study.report_for("hks").mean;
  j["relative_drop_vs_hks"] = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < study.names.size(); ++i) {
    if (study.names[i] == "hks") continue;
    double drop = hks_mean > 0.0 ? (hks_mean - study.reports[i].mean) / hks_mean : 0.0;
    j["relative_drop_vs_hks"][study.names[i]] = drop;
  }
  j["runtime_s"] = study.runtime_s;
  return j;
}

// ---------------------------------------------------------------------------
// Dataset preparation shared by CLI and tests

// Parses a TU-format dataset and substitutes one-hot degree features when the
// files carry no node labels. The degree width is a structural constant of
// the whole dataset so batches stay rectangular across folds. Accepts both
// <dir>/<name>_A.txt and the conventional <dir>/<name>/<name>_A.txt layout.
inline Dataset load_prepared_dataset(const std::string& dir, const std::string& name) {
  namespace fs = std::filesystem;
  fs::path root(dir);
  if (fs::exists(root / name / (name + "_A.txt"))) root /= name;
  Dataset ds = parse_tu_dataset(root, name);
  if (ds.feature_dim == 0) ds = degree_features(std::move(ds));
  return ds;
}

}  // namespace topoclasp
