#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "topoclasp/gradcheck.hpp"
#include "topoclasp/train.hpp"
#include "topoclasp/vectorize.hpp"

namespace tc = topoclasp;

namespace {

// One set of override slots shared by all subcommands; only flags the user
// actually passed are applied on top of defaults/config file.
struct Flags {
  std::string dataset_dir, dataset, mode, filtration, out, config_path;
  std::string diagrams_out;
  std::uint64_t seed = 0;
  int epochs = 0, batch = 0, hidden = 0, scales = 0, thresholds = 0, jobs = 0;
  double alpha = 0.0, tau = 0.0;
};

void add_common_options(CLI::App* cmd, Flags& f) {
  cmd->add_option("--dataset-dir", f.dataset_dir,
                  "directory holding TU-format files (falls back to $TOPOCLASP_DATA)");
  cmd->add_option("--dataset", f.dataset, "dataset name, e.g. MUTAG");
  cmd->add_option("--mode", f.mode, "topo | gnn | concat | tcl");
  cmd->add_option("--filtration", f.filtration, "hks | degree | closeness");
  cmd->add_option("--seed", f.seed, "base RNG seed");
  cmd->add_option("--epochs", f.epochs, "training epochs per fold");
  cmd->add_option("--batch", f.batch, "minibatch size");
  cmd->add_option("--alpha", f.alpha, "contrastive loss weight");
  cmd->add_option("--tau", f.tau, "InfoNCE temperature");
  cmd->add_option("--hidden", f.hidden, "hidden width");
  cmd->add_option("--scales", f.scales, "HKS scale count");
  cmd->add_option("--thresholds", f.thresholds, "quantile thresholds per scale");
  cmd->add_option("--jobs", f.jobs, "worker threads for features / folds");
  cmd->add_option("--out", f.out, "output path (reports get .json/.csv suffixes)");
  cmd->add_option("--config", f.config_path, "JSON config file (flags override it)");
}

// Precedence: defaults < config file < explicitly passed flags.
tc::ExperimentConfig resolve_config(const CLI::App* cmd, const Flags& f) {
  tc::ExperimentConfig cfg;
  if (cmd->count("--config") > 0) {
    std::FILE* file = std::fopen(f.config_path.c_str(), "rb");
    if (!file) throw tc::ConfigError("cannot open config file: " + f.config_path);
    std::string text;
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, file)) > 0) text.append(buf, got);
    std::fclose(file);
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded())
      throw tc::ConfigError("config file is not valid JSON: " + f.config_path);
    cfg.apply_json(j);
  }
  if (cmd->count("--dataset-dir")) cfg.dataset_dir = f.dataset_dir;
  if (cmd->count("--dataset")) cfg.dataset = f.dataset;
  if (cmd->count("--mode")) cfg.mode = f.mode;
  if (cmd->count("--filtration")) cfg.filtration = f.filtration;
  if (cmd->count("--seed")) cfg.seed = f.seed;
  if (cmd->count("--epochs")) cfg.epochs = f.epochs;
  if (cmd->count("--batch")) cfg.batch = f.batch;
  if (cmd->count("--alpha")) cfg.alpha = f.alpha;
  if (cmd->count("--tau")) cfg.tau = f.tau;
  if (cmd->count("--hidden")) cfg.hidden = f.hidden;
  if (cmd->count("--scales")) cfg.scales = f.scales;
  if (cmd->count("--thresholds")) cfg.thresholds = f.thresholds;
  if (cmd->count("--jobs")) cfg.jobs = f.jobs;
  if (cmd->count("--out")) cfg.out = f.out;
  if (cfg.dataset_dir.empty())
    if (const char* env = std::getenv("TOPOCLASP_DATA")) cfg.dataset_dir = env;
  cfg.validate();
  return cfg;
}

tc::Dataset load_dataset(const tc::ExperimentConfig& cfg) {
  if (cfg.dataset_dir.empty())
    throw tc::FormatError("no dataset directory: pass --dataset-dir or set TOPOCLASP_DATA");
  if (cfg.dataset.empty()) throw tc::FormatError("no dataset name: pass --dataset");
  return tc::load_prepared_dataset(cfg.dataset_dir, cfg.dataset);
}

int cmd_features(const tc::ExperimentConfig& cfg, const std::string& diagrams_out) {
  tc::Dataset ds = load_dataset(cfg);
  tc::VectorizeConfig vc = cfg.vectorize_config();
  auto rows = tc::vectorize_dataset(ds, vc, cfg.jobs);
  tc::VectorLayout layout = tc::layout_for(vc);

  std::string csv = "graph_index,label";
  for (const auto& name : layout.column_names(vc.source)) csv += "," + name;
  csv += "\n";
  char buf[64];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%d", i, ds.graphs[i].label);
    csv += buf;
    for (double x : rows[i]) {
      std::snprintf(buf, sizeof buf, ",%.9g", x);
      csv += buf;
    }
    csv += "\n";
  }
  if (cfg.out.empty())
    std::fputs(csv.c_str(), stdout);
  else
    tc::write_text_file(cfg.out, csv);

  if (!diagrams_out.empty()) {
    std::string dump;
    for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
      auto value_cols = tc::filtration_values(ds.graphs[i], vc);
      for (std::size_t s = 0; s < value_cols.size(); ++s) {
        auto thr = tc::quantile_thresholds(value_cols[s], vc.num_thresholds);
        auto filt = tc::sublevel_filtration(ds.graphs[i], value_cols[s], thr);
        tc::PersistenceDiagram dgm = tc::reduce_boundary(filt);
        std::snprintf(buf, sizeof buf, "# graph %zu scale %zu\n", i, s);
        dump += buf;
        dump += tc::format_diagram(dgm);
      }
    }
    tc::write_text_file(diagrams_out, dump);
  }
  std::fprintf(stderr, "features: %zu graphs, %d columns\n", rows.size(),
               layout.length() + 2);
  return 0;
}

void print_report(const tc::ExperimentReport& r) {
  std::printf("dataset=%s mode=%s filtration=%s folds=%d seed=%llu\n",
              r.config.dataset.c_str(), r.config.mode.c_str(),
              r.config.filtration.c_str(), r.config.folds,
              static_cast<unsigned long long>(r.config.seed));
  for (std::size_t i = 0; i < r.folds.size(); ++i)
    std::printf("fold %d accuracy %.9g\n", r.fold_ids[i], r.folds[i].accuracy);
  std::printf("mean %.9g std %.9g runtime_s %.3f\n", r.mean, r.stddev, r.runtime_s);
  for (const auto& e : r.errors) std::fprintf(stderr, "fold error: %s\n", e.c_str());
}

int cmd_train(const tc::ExperimentConfig& cfg) {
  tc::Dataset ds = load_dataset(cfg);
  tc::ExperimentReport report = tc::run_experiment(cfg, ds);
  print_report(report);
  if (!cfg.out.empty()) {
    tc::write_text_file(cfg.out + ".json", tc::report_json(report).dump(2) + "\n");
    tc::write_text_file(cfg.out + ".csv", tc::report_csv(report));
  }
  return report.partial ? 4 : 0;
}

int cmd_ablate(const tc::ExperimentConfig& cfg) {
  tc::Dataset ds = load_dataset(cfg);
  auto features = tc::vectorize_dataset(ds, cfg.vectorize_config(), cfg.jobs);
  const char* modes[4] = {"topo", "gnn", "concat", "tcl"};
  const char* display[4] = {"Topo", "GIN", "Topo-GIN", "GraphTCL"};
  nlohmann::ordered_json results = nlohmann::ordered_json::object();
  bool partial = false;
  std::printf("model mean std\n");
  for (int m = 0; m < 4; ++m) {
    tc::ExperimentConfig c = cfg;
    c.mode = modes[m];
    tc::ExperimentReport r = tc::run_experiment(c, ds, features);
    std::printf("%s %.9g %.9g\n", display[m], r.mean, r.stddev);
    std::fflush(stdout);
    results[modes[m]] = tc::report_json(r);
    partial = partial || r.partial;
    for (const auto& e : r.errors) std::fprintf(stderr, "fold error: %s\n", e.c_str());
  }
  if (!cfg.out.empty()) {
    nlohmann::ordered_json j;
    j["config"] = cfg.to_json();
    j["results"] = results;
    tc::write_text_file(cfg.out + ".json", j.dump(2) + "\n");
  }
  return partial ? 4 : 0;
}

int cmd_filtration_study(const tc::ExperimentConfig& cfg) {
  tc::Dataset ds = load_dataset(cfg);
  tc::FiltrationStudy study = tc::run_filtration_study(cfg, ds);
  double hks_mean = study.report_for("hks").mean;
  std::printf("filtration mean std rel_drop_vs_hks\n");
  bool partial = false;
  for (std::size_t i = 0; i < study.names.size(); ++i) {
    const auto& r = study.reports[i];
    double drop = study.names[i] == "hks"
                      ? 0.0
                      : (hks_mean > 0.0 ? (hks_mean - r.mean) / hks_mean : 0.0);
    std::printf("%s %.9g %.9g %.9g\n", study.names[i].c_str(), r.mean, r.stddev, drop);
    partial = partial || r.partial;
    for (const auto& e : r.errors) std::fprintf(stderr, "fold error: %s\n", e.c_str());
  }
  if (!cfg.out.empty())
    tc::write_text_file(cfg.out + ".json", tc::study_json(study).dump(2) + "\n");
  return partial ? 4 : 0;
}

int cmd_gradcheck(std::uint64_t seed) {
  bool pass = true;
  double worst = 0.0;
  for (const char* contrast : {"zu", "proj"}) {
    tc::ad::GradCheckReport rep = tc::full_model_gradcheck(seed, contrast);
    for (const auto& [group, err] : rep.group_max_rel_err)
      std::printf("group contrast=%s %s max_rel_err %.3g\n", contrast, group.c_str(), err);
    if (!rep.finite) std::printf("contrast=%s produced a non-finite loss\n", contrast);
    pass = pass && rep.pass;
    worst = std::max(worst, rep.max_rel_err);
  }
  std::printf("gradcheck %s max_rel_err %.3g\n", pass ? "PASS" : "FAIL", worst);
  return pass ? 0 : 5;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graph classification with persistent-homology features, a GIN "
               "encoder, and cross-view contrastive alignment"};
  app.require_subcommand(1);
  Flags f;

  CLI::App* features = app.add_subcommand("features", "dump topological feature vectors as CSV");
  add_common_options(features, f);
  features->add_option("--diagrams-out", f.diagrams_out,
                       "also dump persistence diagrams (dim birth death essential)");

  CLI::App* train = app.add_subcommand("train", "cross-validated training run");
  add_common_options(train, f);

  CLI::App* ablate = app.add_subcommand("ablate", "run all four model variants");
  add_common_options(ablate, f);

  CLI::App* study = app.add_subcommand("filtration-study",
                                       "compare hks/degree/closeness filtrations");
  add_common_options(study, f);

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient audit");
  gradcheck->add_option("--seed", f.seed, "base RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    if (app.got_subcommand(gradcheck)) return cmd_gradcheck(f.seed);
    const CLI::App* active = app.get_subcommands().front();
    tc::ExperimentConfig cfg = resolve_config(active, f);
    if (app.got_subcommand(features)) return cmd_features(cfg, f.diagrams_out);
    if (app.got_subcommand(train)) return cmd_train(cfg);
    if (app.got_subcommand(ablate)) return cmd_ablate(cfg);
    if (app.got_subcommand(study)) return cmd_filtration_study(cfg);
    std::fprintf(stderr, "no subcommand dispatched\n");
    return 3;
  } catch (const tc::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 3;
  } catch (const tc::FormatError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const tc::IntegrityError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const tc::TrainingAbort& e) {
    std::fprintf(stderr, "training aborted: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
}
