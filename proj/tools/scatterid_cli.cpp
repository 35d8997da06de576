// scatterid: simulate scenarios, build datasets, train and evaluate the
// detector, and run the profile-size, normalization and metric experiments.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "scatterid/io.hpp"
#include "scatterid/scatterid.hpp"

namespace {

using namespace scatterid;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out = "out";
  std::size_t k_folds = 10;
  double sigma = kDefaultSigma;
};

RunConfig load(const Globals& g) {
  RunConfig rc = g.config.empty() ? RunConfig{} : load_config(g.config);
  if (g.seed) {
    rc.scenario.seed = *g.seed;
    rc.experiment.seed = *g.seed;
  }
  rc.experiment.k_folds = g.k_folds;
  rc.experiment.sigma = g.sigma;
  return rc;
}

void note(const std::string& msg) { std::cerr << "scatterid: " << msg << '\n'; }

/// The explicit scenario, or every scenario of the corpus recipe.
std::vector<std::pair<ScenarioConfig, std::uint64_t>> scenarios_of(const RunConfig& rc) {
  std::vector<std::pair<ScenarioConfig, std::uint64_t>> out;
  if (rc.explicit_scenario) {
    out.emplace_back(rc.scenario, rc.scenario.seed);
  } else {
    const auto& cp = rc.experiment.corpus;
    for (auto s : corpus_seeds(cp, rc.experiment.seed)) out.emplace_back(make_scenario(cp, s), s);
  }
  return out;
}

std::vector<ScenarioSignatures> signatures_for(const RunConfig& rc,
                                               const std::vector<std::string>& trace_dirs) {
  std::vector<ScenarioSignatures> sigs;
  if (!trace_dirs.empty()) {
    for (const auto& d : trace_dirs)
      sigs.push_back(extract_signatures(read_traces(d), rc.experiment.segmentation));
  } else {
    for (const auto& [sc, seed] : scenarios_of(rc))
      sigs.push_back(extract_signatures(simulate_scenario(sc, seed), rc.experiment.segmentation));
  }
  return sigs;
}

void cmd_simulate(const Globals& g) {
  const RunConfig rc = load(g);
  for (const auto& [sc, seed] : scenarios_of(rc)) {
    const fs::path dir = fs::path(g.out) / sc.name;
    write_traces(dir, simulate_scenario(sc, seed));
    note("wrote " + dir.string());
  }
}

void cmd_dataset(const Globals& g, const std::vector<std::string>& trace_dirs,
                 std::optional<std::size_t> L) {
  RunConfig rc = load(g);
  if (L) rc.experiment.L = *L;
  const auto sigs = signatures_for(rc, trace_dirs);
  LabeledDataset ds = build_dataset(sigs, dataset_options(rc.experiment));
  if (trace_dirs.empty()) {
    Fnv1a h;
    for (const auto& [sc, seed] : scenarios_of(rc)) h.str(hash_config(sc));
    ds.provenance.config_hash = h.hex();
  }
  for (const auto& w : ds.warnings) note("warning: " + w);
  const fs::path out(g.out);
  write_dataset(out / "dataset.csv", ds);
  write_json(out / "dataset.json", dataset_summary(ds));
  for (const auto& s : sigs) write_signatures(out / "signatures" / (s.name + ".csv"), s);
  note("wrote " + std::to_string(ds.size()) + " samples to " + (out / "dataset.csv").string());
}

std::string dataset_path(const Globals& g, const std::string& given) {
  return given.empty() ? (fs::path(g.out) / "dataset.csv").string() : given;
}

void cmd_train(const Globals& g, const std::string& dataset) {
  const RunConfig rc = load(g);
  const LabeledDataset ds = read_dataset(dataset_path(g, dataset));
  const fs::path out = fs::path(g.out) / "model.json";
  write_model(out, train_on(ds, rc.experiment.training));
  note("wrote " + out.string());
}

void cmd_evaluate(const Globals& g, const std::string& dataset, const std::string& model) {
  const RunConfig rc = load(g);
  const auto& ex = rc.experiment;
  const LabeledDataset ds = read_dataset(dataset_path(g, dataset));
  MetricsReport r;
  if (model.empty()) {
    r = cross_validate(ds, ex.k_folds, ex.seed, ex.sigma, ex.training, ex.counting).report;
  } else {
    r = evaluate(read_model(model), ds, ex.sigma, ex.counting);
  }
  const fs::path out(g.out);
  write_json(out / "metrics.json", metrics_json(r));
  write_roc(out / "roc.csv", r);
  std::cout << metrics_json(r).dump() << '\n';
}

void cmd_detect(const Globals& g, const std::string& model_path,
                const std::vector<std::string>& trace_dirs) {
  const RunConfig rc = load(g);
  const LRModel model = read_model(model_path);
  const auto sigs = signatures_for(rc, trace_dirs);
  const fs::path out(g.out);
  json all = json::object();
  for (const auto& s : sigs) {
    const auto profiles = latest_profiles(s, model.dims());
    if (profiles.size() < 2) {
      note("warning: scenario '" + s.name + "' has fewer than two complete profiles");
      continue;
    }
    const DistanceMatrix D = distance_matrix(profiles);
    write_matrix(out / "matrices" / (s.name + ".csv"), D);
    all[s.name] = verdict_json(detect_sybil(similarity_matrix(model, D), rc.experiment.sigma));
  }
  write_json(out / "verdict.json", all);
  std::cout << all.dump() << '\n';
}

void cmd_sweep(const Globals& g) {
  const RunConfig rc = load(g);
  const SweepResult r = sweep_profile_size(rc.experiment, rc.sweep_K, rc.sweep_L);
  for (const auto& w : r.warnings) note("warning: missing cell " + w);
  auto f = open_out(fs::path(g.out) / "sweep.csv");
  f << "K,L,auroc\n";
  for (const auto& c : r.cells)
    f << c.K << ',' << c.L << ',' << (c.auroc ? format_double(*c.auroc) : "") << '\n';
  note("wrote " + (fs::path(g.out) / "sweep.csv").string());
}

void cmd_ablate(const Globals& g) {
  const RunConfig rc = load(g);
  auto f = open_out(fs::path(g.out) / "ablation.csv");
  f << "normalization,power_scaling,tpr,fpr,accuracy,auroc\n";
  for (const auto& a : ablation_normalization(rc.experiment))
    f << (a.normalized ? "on" : "off") << ',' << (a.power_scaling ? "on" : "off") << ','
      << format_double(a.report.tpr) << ',' << format_double(a.report.fpr) << ','
      << format_double(a.report.accuracy) << ',' << format_double(a.report.auroc) << '\n';
  note("wrote " + (fs::path(g.out) / "ablation.csv").string());
}

void cmd_compare(const Globals& g) {
  const RunConfig rc = load(g);
  auto f = open_out(fs::path(g.out) / "metrics.csv");
  f << "metric,tpr,fpr\n";
  for (const auto& m : compare_distance_metrics(rc.experiment))
    f << to_string(m.metric) << ',' << format_double(m.report.tpr) << ','
      << format_double(m.report.fpr) << '\n';
  note("wrote " + (fs::path(g.out) / "metrics.csv").string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sybil detection from backscatter multipath signatures"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Root seed (overrides the config)");
  app.add_option("--config", g.config, "YAML scenario or corpus config")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--k-folds", g.k_folds, "Cross-validation folds")->capture_default_str();
  app.add_option("--sigma", g.sigma, "Decision threshold")->capture_default_str();

  std::vector<std::string> traces;
  std::optional<std::size_t> L;
  std::string dataset, model;

  auto* sim = app.add_subcommand("simulate", "Write traces for every scenario in the config");
  auto* dsc = app.add_subcommand("dataset", "Build the labeled distance dataset");
  dsc->add_option("--traces", traces, "Trace directories from 'simulate' (default: simulate)");
  dsc->add_option("--L", L, "Profile length");
  auto* trn = app.add_subcommand("train", "Fit the similarity model on a dataset");
  trn->add_option("--dataset", dataset, "Dataset CSV (default: <out>/dataset.csv)");
  auto* evl = app.add_subcommand("evaluate", "Metrics for a model, or cross-validation");
  evl->add_option("--dataset", dataset, "Dataset CSV (default: <out>/dataset.csv)");
  evl->add_option("--model", model, "Model JSON; cross-validates when omitted");
  auto* det = app.add_subcommand("detect", "Sybil verdicts at the end of each scenario");
  det->add_option("--model", model, "Model JSON")->required();
  det->add_option("--traces", traces, "Trace directories (default: simulate)");
  auto* swp = app.add_subcommand("sweep", "AUROC over tag count K and profile length L");
  auto* abl = app.add_subcommand("ablate-norm", "Normalization x power-scaling ablation");
  auto* cmp = app.add_subcommand("compare-metrics", "TPR/FPR per distance metric");
  for (auto* s : {sim, dsc, trn, evl, det, swp, abl, cmp}) s->fallthrough();

  CLI11_PARSE(app, argc, argv);
  try {
    if (sim->parsed()) cmd_simulate(g);
    else if (dsc->parsed()) cmd_dataset(g, traces, L);
    else if (trn->parsed()) cmd_train(g, dataset);
    else if (evl->parsed()) cmd_evaluate(g, dataset, model);
    else if (det->parsed()) cmd_detect(g, model, traces);
    else if (swp->parsed()) cmd_sweep(g);
    else if (abl->parsed()) cmd_ablate(g);
    else if (cmp->parsed()) cmd_compare(g);
  } catch (const std::exception& e) {
    std::cerr << "scatterid: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
