// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.
//
//   acceptance --cli <path to scatterid> --work <scratch dir>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "scatterid/io.hpp"
#include "scatterid/scatterid.hpp"

namespace {

using namespace scatterid;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << std::fixed << v;
  return os.str();
}

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    details.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
};

int failures = 0;

void report(int n, const std::string& title, const Outcome& o) {
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << title << '\n';
  for (const auto& d : o.details) std::cout << "       " << d << '\n';
  std::cout.flush();
  failures += !o.pass;
}

// ---------------------------------------------------------------------------

struct DeskRun {
  std::vector<ScenarioSignatures> sigs;
  LabeledDataset ds;
  CrossValidationResult cv;
  double seconds = 0.0;
};

Outcome criterion_detection(const ExperimentConfig& cfg, DeskRun& run) {
  Outcome o;
  const auto t0 = Clock::now();
  run.sigs = corpus_signatures(cfg.corpus, cfg.seed, cfg.segmentation);
  run.ds = build_dataset(run.sigs, dataset_options(cfg));
  run.cv = cross_validate(run.ds, cfg.k_folds, cfg.seed, cfg.sigma, cfg.training, cfg.counting);
  run.seconds = seconds_since(t0);
  const auto& r = run.cv.report;
  o.details.push_back("samples " + std::to_string(run.ds.size()) + ", positive share " +
                      fmt(run.ds.positive_fraction(), 3) + ", robots " +
                      std::to_string(r.n_fake) + " fake / " + std::to_string(r.n_legit) +
                      " legit");
  o.details.push_back("tpr " + fmt(r.tpr) + ", fpr " + fmt(r.fpr) + ", accuracy " +
                      fmt(r.accuracy));
  o.check(r.auroc >= 0.95, "10-fold AUROC " + fmt(r.auroc) + " >= 0.95");
  o.check(run.seconds < 300.0, "runtime " + fmt(run.seconds, 1) + " s < 300 s");
  return o;
}

Outcome criterion_profile_size(const ExperimentConfig& cfg) {
  Outcome o;
  const std::vector<std::size_t> Ks{2, 3, 4}, Ls{2, 4, 6, 8, 10};
  const auto t0 = Clock::now();
  const SweepResult r = sweep_profile_size(cfg, Ks, Ls);
  for (const auto& w : r.warnings) o.details.push_back("warning: " + w);
  for (auto K : Ks) {
    std::string row = "K=" + std::to_string(K) + ":";
    for (auto L : Ls) {
      const auto a = r.at(K, L);
      row += " L" + std::to_string(L) + "=" + (a ? fmt(*a) : "n/a");
    }
    o.details.push_back(row);
  }
  const auto hi = r.at(4, 10), lo = r.at(2, 2);
  o.check(hi && lo && *hi - *lo >= 0.05,
          "AUROC(4,10) - AUROC(2,2) = " + (hi && lo ? fmt(*hi - *lo) : "n/a") + " >= 0.05");
  std::vector<double> avg;
  bool complete = true;
  for (auto L : Ls) {
    double s = 0.0;
    for (auto K : Ks) {
      const auto a = r.at(K, L);
      complete = complete && a.has_value();
      s += a.value_or(0.0);
    }
    avg.push_back(s / static_cast<double>(Ks.size()));
  }
  bool monotone = complete;
  std::string trend;
  for (std::size_t i = 0; i < avg.size(); ++i) {
    trend += (i ? " " : "") + fmt(avg[i]);
    if (i && avg[i] < avg[i - 1] - 0.02) monotone = false;
  }
  o.check(monotone, "mean AUROC over K by L [" + trend + "] nondecreasing within 0.02");
  o.details.push_back("sweep time " + fmt(seconds_since(t0), 1) + " s");
  return o;
}

Outcome criterion_power_scaling(const ExperimentConfig& cfg) {
  Outcome o;
  const auto arms = ablation_normalization(cfg);
  auto tpr = [&](bool normalized, bool scaling) {
    for (const auto& a : arms)
      if (a.normalized == normalized && a.power_scaling == scaling) return a.report.tpr;
    throw std::logic_error("missing ablation arm");
  };
  for (const auto& a : arms)
    o.details.push_back(std::string("normalization ") + (a.normalized ? "on " : "off") +
                        ", power scaling " + (a.power_scaling ? "on " : "off") + ": tpr " +
                        fmt(a.report.tpr) + ", fpr " + fmt(a.report.fpr) + ", auroc " +
                        fmt(a.report.auroc));
  const double gain = tpr(true, true) - tpr(false, true);
  const double gap = std::abs(tpr(true, false) - tpr(false, false));
  o.check(gain >= 0.10, "with scaling, normalization gains " + fmt(100 * gain, 1) +
                            " TPR points >= 10");
  o.check(gap < 0.05, "without scaling, normalized/raw TPR gap " + fmt(100 * gap, 1) +
                          " points < 5");

  // Noise-free: alpha-scaled traces give the same normalized signatures.
  CorpusParams cp = cfg.corpus;
  cp.base.noise.enabled = false;
  cp.base.timing.horizon_s = 12.0;
  double worst = 0.0;
  std::size_t compared = 0;
  for (auto seed : corpus_seeds(cp, cfg.seed)) {
    auto sc = make_scenario(cp, seed);
    auto flat = sc;
    for (auto& a : flat.agents) a.power_scale.clear();
    const auto s1 = simulate_scenario(sc, seed), s2 = simulate_scenario(flat, seed);
    for (std::size_t i = 0; i < s1.identities.size(); ++i)
      for (std::size_t t = 0; t < s1.identities[i].traces.size(); ++t) {
        const auto a = process_trace(s1.identities[i].traces[t], cfg.segmentation);
        const auto b = process_trace(s2.identities[i].traces[t], cfg.segmentation);
        if (!a || !b) continue;
        ++compared;
        for (std::size_t k = 0; k < a->normalized.size(); ++k)
          worst = std::max(worst, std::abs(a->normalized[k] - b->normalized[k]));
      }
  }
  o.check(compared > 0 && worst <= 1e-9, "noise-free alpha invariance: max deviation " +
                                             std::to_string(worst) + " over " +
                                             std::to_string(compared) + " traces <= 1e-9");
  return o;
}

Outcome criterion_metrics(const ExperimentConfig& cfg, const DeskRun& run) {
  Outcome o;
  std::map<DistanceMetric, MetricsReport> rep;
  rep[DistanceMetric::adjusted_cosine] = run.cv.report;
  for (auto m : {DistanceMetric::cosine, DistanceMetric::euclidean})
    rep[m] = cv_report(run.sigs, dataset_options(cfg, m), cfg);
  for (const auto& [m, r] : rep)
    o.details.push_back(std::string(to_string(m)) + ": tpr " + fmt(r.tpr) + ", fpr " +
                        fmt(r.fpr) + ", auroc " + fmt(r.auroc));
  const double adj = rep[DistanceMetric::adjusted_cosine].fpr;
  o.check(adj < rep[DistanceMetric::cosine].fpr, "adjusted cosine FPR below cosine");
  o.check(adj < rep[DistanceMetric::euclidean].fpr, "adjusted cosine FPR below euclidean");
  return o;
}

Outcome criterion_oracles(const ExperimentConfig& cfg, const DeskRun& run) {
  Outcome o;

  // Segmentation on noise-free traces.
  {
    CorpusParams cp = cfg.corpus;
    cp.base.noise.enabled = false;
    std::size_t total = 0, exact = 0;
    for (auto seed : corpus_seeds(cp, cfg.seed)) {
      const auto sim = simulate_scenario(make_scenario(cp, seed), seed);
      for (const auto& id : sim.identities)
        for (const auto& tr : id.traces) {
          ++total;
          try {
            exact += segment_backscatter(tr, cfg.segmentation).t_start == tr.true_start;
          } catch (const SegmentationError&) {
          }
        }
    }
    o.check(total > 0 && exact == total, "segmentation exact on " + std::to_string(exact) + " of " +
                                             std::to_string(total) + " noise-free traces");
  }

  // Extraction under noise. Samples are clamped at zero, and when sigma
  // exceeds the ambient level the clamp shifts both means, so the target is
  // the expected difference of clamped Gaussians E[max(mu + sigma Z, 0)].
  // Clamped variance is below sigma^2, so the bound stays conservative.
  {
    const CorpusParams& cp = cfg.corpus;
    const auto seeds = corpus_seeds(cp, cfg.seed);
    const auto clamped_mean = [](double mu, double s) {
      const double z = mu / s;
      return mu * 0.5 * std::erfc(-z / std::sqrt(2.0)) +
             s * std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    };
    std::size_t blocks = 0, inside = 0, naive = 0;
    for (std::size_t s = 0; s < 5 && s < seeds.size(); ++s) {
      const auto sc = make_scenario(cp, seeds[s]);
      const auto sim = simulate_scenario(sc, seeds[s]);
      for (const auto& id : sim.identities)
        for (const auto& tr : id.traces) {
          const double strongest =
              *std::max_element(tr.injected_power.begin(), tr.injected_power.end());
          const double sigma = strongest / std::pow(10.0, sc.noise.snr_db / 20.0);
          const auto mask = expand_code(tr.tag_code, tr.samples_per_bit);
          double n1 = 0;
          for (auto b : mask) n1 += b;
          const double n0 = static_cast<double>(mask.size()) - n1;
          const double bound = 3.0 * sigma * std::sqrt(1.0 / n1 + 1.0 / n0);
          std::optional<MultipathSignature> sig;
          try {
            sig = build_signature(tr, segment_backscatter(tr, cfg.segmentation));
          } catch (const Error&) {
          }
          for (std::size_t k = 0; k < tr.tag_count; ++k) {
            ++blocks;
            if (!sig) continue;
            const double target =
                std::max(0.0, clamped_mean(sc.ambient_w + tr.injected_power[k], sigma) -
                                  clamped_mean(sc.ambient_w, sigma));
            inside += std::abs(sig->raw[k] - target) <= bound;
            naive += std::abs(sig->raw[k] - tr.injected_power[k]) <= bound;
          }
        }
    }
    const double share = static_cast<double>(inside) / static_cast<double>(blocks);
    o.check(share >= 0.99, "extraction within 3 standard errors for " + fmt(100 * share, 2) +
                               " % of " + std::to_string(blocks) + " noisy tag blocks (>= 99 %)");
    o.details.push_back("against the unclamped injected power: " +
           fmt(100.0 * static_cast<double>(naive) / static_cast<double>(blocks), 2) + " %");
  }

  // MWLE gradient against central differences.
  {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<TrainingSample> samples(200);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      samples[i].distance.resize(10);
      for (double& d : samples[i].distance) d = u(rng);
      samples[i].label = static_cast<int>(i % 5 == 0);
      samples[i].weight = samples[i].label ? 2.5 : 0.625;
    }
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      LRModel m{Vector(10), n(rng)};
      for (double& w : m.weights) w = n(rng);
      const auto g = weighted_log_likelihood_gradient(m, samples);
      for (std::size_t k = 0; k <= 10; ++k) {
        const double h = 1e-6;
        LRModel up = m, down = m;
        (k < 10 ? up.weights[k] : up.bias) += h;
        (k < 10 ? down.weights[k] : down.bias) -= h;
        const double fd =
            (weighted_log_likelihood(up, samples) - weighted_log_likelihood(down, samples)) / (2 * h);
        const double an = k < 10 ? g.weights[k] : g.bias;
        worst = std::max(worst, std::abs(an - fd) / std::max(std::abs(fd), 1e-3));
      }
    }
    o.check(worst <= 1e-5, "gradient vs finite differences: max relative error " +
                               std::to_string(worst) + " <= 1e-5");
  }

  // Trapezoid AUROC against the Mann-Whitney statistic.
  {
    const auto wd = window_decisions(run.ds, run.cv.predictions, cfg.sigma);
    Vector s;
    std::vector<int> y;
    for (const auto& p : wd.pairs) {
      s.push_back(p.score);
      y.push_back(p.positive ? 1 : 0);
    }
    const double trap = trapezoid_auc(roc_curve(s, y)), mw = mann_whitney_auc(s, y);
    o.check(std::abs(trap - mw) <= 0.01, "desk CV pair scores: trapezoid " + fmt(trap) +
                                             " vs Mann-Whitney " + fmt(mw) + " within 0.01");
    std::mt19937_64 rng(cfg.seed + 1);
    std::normal_distribution<double> n(0.0, 1.0);
    Vector rs(5000);
    std::vector<int> ry(5000);
    for (std::size_t i = 0; i < rs.size(); ++i) {
      ry[i] = static_cast<int>(i % 5 == 0);
      rs[i] = sigmoid(n(rng) + 1.5 * ry[i]);
    }
    const double t2 = trapezoid_auc(roc_curve(rs, ry)), m2 = mann_whitney_auc(rs, ry);
    o.check(std::abs(t2 - m2) <= 0.01, "continuous synthetic scores: trapezoid " + fmt(t2) +
                                           " vs Mann-Whitney " + fmt(m2) + " within 0.01");
  }

  // Exact identity examples.
  {
    bool ok = true;
    const Vector e1{1.0, 0.0}, e2{0.0, 1.0};
    ok = ok && sigmoid(0.0) == 0.5;
    ok = ok && predict_similarity(LRModel{Vector(3, 0.0), 0.0}, Vector{0.2, 0.7, 1.3}) == 0.5;
    ok = ok && normalize_l2(Vector{3.0, 4.0}) == Vector{0.6, 0.8};
    ok = ok && cosine_distance(e1, e1) == 0.0;
    ok = ok && cosine_distance(e1, e2) == 1.0;
    ok = ok && adjusted_cosine_distance(e1, e2, Vector{0.5, 0.5}) == 2.0;
    ok = ok && baseline_distance(Vector{0, 0}, Vector{1, 1}, DistanceMetric::manhattan) == 2.0;
    ok = ok && baseline_distance(Vector{0, 0}, Vector{3, 4}, DistanceMetric::euclidean) == 5.0;
    ok = ok && baseline_distance(Vector{1, 5}, Vector{4, 1}, DistanceMetric::chebyshev) == 4.0;
    const auto w = compute_class_weights(std::vector<int>{0, 1, 0, 1});
    ok = ok && w.positive == 1.0 && w.negative == 1.0;
    SignalProfile F{"f", {{0.6, 0.8}, {0.8, 0.6}}, {0.7, 0.7}};
    for (double d : profile_distance_vector(F, F).values) ok = ok && d == 0.0;
    o.check(ok, "sigmoid, normalization, distance and weighting identities hold exactly");
  }
  return o;
}

// ---------------------------------------------------------------------------
// CLI determinism

bool files_equal(const fs::path& a, const fs::path& b) {
  auto fa = open_in(a), fb = open_in(b);
  return std::equal(std::istreambuf_iterator<char>(fa), {}, std::istreambuf_iterator<char>(fb), {});
}

Outcome criterion_cli(const std::string& cli, const fs::path& work) {
  Outcome o;
  fs::remove_all(work);
  fs::create_directories(work);
  const fs::path config = work / "tiny.yaml";
  {
    auto f = open_out(config);
    f << "seed: 7\n"
         "timing: {horizon_s: 12}\n"
         "corpus: {scenarios: 4}\n"
         "experiment: {L: 4, window_stride: 1, training: {max_iterations: 300}}\n"
         "sweep: {K: [2, 3], L: [2, 4]}\n";
  }
  const fs::path log = work / "cli.log";
  auto run = [&](const fs::path& out, const std::string& args) {
    const std::string cmd = "\"" + cli + "\" --config \"" + config.string() + "\" --out \"" +
                            out.string() + "\" --k-folds 3 " + args + " > \"" +
                            (out / "stdout.txt").string() + "\" 2>> \"" + log.string() + "\"";
    fs::create_directories(out);
    const int rc = std::system(cmd.c_str());
    if (rc != 0) o.check(false, "command failed (" + std::to_string(rc) + "): " + args);
  };

  for (const char* r : {"run1", "run2"}) {
    const fs::path base = work / r;
    run(base / "simulate", "simulate");
    // Directory iteration order is unspecified; sort for stable arguments.
    std::vector<std::string> dirs;
    for (const auto& e : fs::directory_iterator(base / "simulate"))
      if (e.is_directory()) dirs.push_back(e.path().string());
    std::sort(dirs.begin(), dirs.end());
    std::string traces;
    for (const auto& d : dirs) traces += " \"" + d + "\"";
    const fs::path ds = base / "dataset";
    run(ds, "dataset --traces" + traces);
    run(base / "dataset_sim", "dataset --L 3");
    run(base / "train", "train --dataset \"" + (ds / "dataset.csv").string() + "\"");
    const std::string model = (base / "train" / "model.json").string();
    run(base / "evaluate_cv", "evaluate --dataset \"" + (ds / "dataset.csv").string() + "\"");
    run(base / "evaluate_model", "evaluate --dataset \"" + (ds / "dataset.csv").string() +
                                     "\" --model \"" + model + "\"");
    run(base / "detect", "detect --model \"" + model + "\" --traces" + traces);
    run(base / "sweep", "sweep");
    run(base / "ablate", "ablate-norm");
    run(base / "compare", "compare-metrics");
  }

  std::size_t files = 0, same = 0;
  std::vector<std::string> differing;
  for (const auto& e : fs::recursive_directory_iterator(work / "run1")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), work / "run1");
    ++files;
    const fs::path other = work / "run2" / rel;
    if (fs::exists(other) && files_equal(e.path(), other)) {
      ++same;
    } else {
      differing.push_back(rel.string());
    }
  }
  std::size_t files2 = 0;
  for (const auto& e : fs::recursive_directory_iterator(work / "run2")) files2 += e.is_regular_file();
  for (const auto& d : differing) o.details.push_back("differs: " + d);
  o.check(files > 20 && same == files && files2 == files,
          std::to_string(same) + " of " + std::to_string(files) +
              " output files byte-identical across two runs of every subcommand");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string cli, work = "acceptance_work";
  app.add_option("--cli", cli, "Path to the scatterid executable")->required();
  app.add_option("--work", work, "Scratch directory")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg;  // desk corpus: 20 scenarios, K = 4, L = 10, 20 dB, seed 42
    DeskRun run;
    report(1, "simulated detection AUROC on the desk corpus", criterion_detection(cfg, run));
    report(2, "AUROC grows with profile size", criterion_profile_size(cfg));
    report(3, "normalization resists power scaling", criterion_power_scaling(cfg));
    report(4, "adjusted cosine has the lowest FPR", criterion_metrics(cfg, run));
    report(5, "pipeline correctness oracles", criterion_oracles(cfg, run));
    report(6, "CLI outputs are deterministic", criterion_cli(cli, fs::path(work)));
  } catch (const std::exception& e) {
    std::cout << "FAIL acceptance aborted: " << e.what() << '\n';
    return 2;
  }
  std::cout << (failures ? std::to_string(failures) + " criterion(s) failed" : "all criteria passed")
            << '\n';
  return failures ? 1 : 0;
}
