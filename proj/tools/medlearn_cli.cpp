// Command-line front end: simulate, fit, calibrate, replicate, report,
// surface. Every run writes a manifest.ini that reproduces it bit for bit.

#include "medlearn/experiments.hpp"
#include "medlearn/rng.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOptions {
  std::uint64_t seed = 20240501;
  int jobs = 1;
  std::string out_dir;
};

struct PipelineOptions {
  std::string learner = "rf";
  int trees = 2000;
  int rounds = 100;
  double learning_rate = 0.3;
  int boost_depth = 6;
  int dim = 2;
  double perplexity = 0.0;
  int tsne_iters = 1000;
  int restarts = 10;
  int k_min = 0;
  int k_max = 0;
  std::string target = "auto";
  std::string coding = "scalar";
  bool baseline = false;
  bool mediation = false;
  medlearn::Index min_region = 30;
  int bootstrap = 499;
};

struct ScenarioOptions {
  std::string scenario;
  medlearn::Index n = 1000;
  medlearn::Index d = 10;
  std::string noise = "low";
};

struct DataOptions {
  std::string data_path;
  std::string treatment_col;
  std::string outcome_col;
  std::string mediator_col;
  std::vector<std::string> covariate_cols;
  std::vector<std::string> recodes;  // col:old=new
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--seed", opts.seed, "Master seed")->envname("MEDLEARN_SEED");
  cmd->add_option("--jobs", opts.jobs, "Worker threads; outputs do not depend on it")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", opts.out_dir, "Output directory")->required();
}

void add_pipeline(CLI::App* cmd, PipelineOptions& opts) {
  cmd->add_option("--learner", opts.learner, "Base learner: cart, rf or gb")
      ->check(CLI::IsMember({"cart", "rf", "gb"}));
  cmd->add_option("--trees", opts.trees, "Random-forest tree count");
  cmd->add_option("--rounds", opts.rounds, "Boosting rounds");
  cmd->add_option("--learning-rate", opts.learning_rate, "Boosting learning rate");
  cmd->add_option("--boost-depth", opts.boost_depth, "Boosting tree depth");
  cmd->add_option("--dim", opts.dim, "Projection dimension (2 or 3)");
  cmd->add_option("--perplexity", opts.perplexity, "t-SNE perplexity (0 = auto)");
  cmd->add_option("--tsne-iters", opts.tsne_iters, "t-SNE iterations");
  cmd->add_option("--restarts", opts.restarts, "K-means restarts");
  cmd->add_option("--k-min", opts.k_min, "Smallest cluster count (0 = auto)");
  cmd->add_option("--k-max", opts.k_max, "Largest cluster count (0 = auto)");
  cmd->add_option("--target", opts.target, "LRT target: outcome, mediator or auto")
      ->check(CLI::IsMember({"outcome", "mediator", "auto"}));
  cmd->add_option("--coding", opts.coding, "Leaf coding in the LRT (scalar or categorical)")
      ->check(CLI::IsMember({"categorical", "scalar"}));
  cmd->add_flag("--baseline", opts.baseline, "Cluster raw covariates, skip effect estimation");
  cmd->add_flag("--mediation", opts.mediation, "Estimate per-region mediation proportions");
  cmd->add_option("--min-region", opts.min_region, "Smallest region for mediation analysis");
  cmd->add_option("--bootstrap", opts.bootstrap, "Bootstrap resamples for mediation p-values");
}

void add_scenario(CLI::App* cmd, ScenarioOptions& opts, bool required) {
  auto* opt = cmd->add_option("--scenario", opts.scenario,
                              "Scenario: simple, complex, global, null, simple-all, simple-part, "
                              "complex-all, complex-part, simple-null1, simple-null2, simple-global");
  if (required) opt->required();
  cmd->add_option("--n", opts.n, "Sample size");
  cmd->add_option("--d", opts.d, "Covariate count");
  cmd->add_option("--noise", opts.noise, "Noise level: low, moderate, high or a variance");
}

void add_data(CLI::App* cmd, DataOptions& opts) {
  cmd->add_option("--data", opts.data_path, "CSV dataset path");
  cmd->add_option("--treatment-col", opts.treatment_col, "Treatment column name");
  cmd->add_option("--outcome-col", opts.outcome_col, "Outcome column name");
  cmd->add_option("--mediator-col", opts.mediator_col, "Mediator column name");
  cmd->add_option("--covariate-cols", opts.covariate_cols,
                  "Covariate columns (default: all remaining)");
  cmd->add_option("--recode", opts.recodes, "Categorical recode, repeatable: col:old=new");
}

medlearn::ScenarioConfig make_scenario(const ScenarioOptions& opts, std::uint64_t seed) {
  auto cfg = medlearn::ScenarioConfig::for_scenario(medlearn::parse_scenario(opts.scenario));
  cfg.n = opts.n;
  cfg.d = opts.d;
  cfg.noise_variance = medlearn::noise_variance_for_level(opts.noise);
  cfg.seed = seed;
  return cfg;
}

medlearn::PipelineConfig make_pipeline(const PipelineOptions& opts, const CommonOptions& common,
                                       std::optional<medlearn::ScenarioId> scenario) {
  medlearn::PipelineConfig pipe;
  pipe.learner.kind = medlearn::parse_learner_kind(opts.learner);
  pipe.learner.forest.n_trees = opts.trees;
  pipe.learner.boost.n_rounds = opts.rounds;
  pipe.learner.boost.learning_rate = opts.learning_rate;
  pipe.learner.boost.max_depth = opts.boost_depth;
  pipe.tsne.dim = opts.dim;
  pipe.tsne.perplexity = opts.perplexity;
  pipe.tsne.iterations = opts.tsne_iters;
  pipe.kmeans.restarts = opts.restarts;
  if (opts.k_min > 0 || opts.k_max > 0) {
    if (opts.k_min <= 0 || opts.k_max <= 0) {
      throw medlearn::ConfigError("--k-min and --k-max must be given together");
    }
    pipe.k_range = std::make_pair(opts.k_min, opts.k_max);
  }
  if (opts.target == "auto") {
    if (scenario) {
      pipe.target = medlearn::default_target(*scenario);
    } else {
      throw medlearn::ConfigError("--target auto needs a --scenario; name it explicitly");
    }
  } else {
    pipe.target = medlearn::parse_target(opts.target);
  }
  pipe.coding = opts.coding == "scalar" ? medlearn::LeafCoding::scalar
                                        : medlearn::LeafCoding::categorical;
  pipe.baseline_on_covariates = opts.baseline;
  pipe.evaluate_mediation = opts.mediation;
  pipe.min_region = opts.min_region;
  pipe.bootstrap_resamples = opts.bootstrap;
  pipe.jobs = common.jobs;
  return pipe;
}

medlearn::CsvSchema make_schema(const DataOptions& opts) {
  medlearn::CsvSchema schema;
  schema.treatment = opts.treatment_col;
  schema.outcome = opts.outcome_col;
  if (!opts.mediator_col.empty()) schema.mediator = opts.mediator_col;
  schema.covariates = opts.covariate_cols;
  for (const auto& spec : opts.recodes) {
    const auto colon = spec.find(':');
    const auto eq = spec.find('=', colon == std::string::npos ? 0 : colon);
    if (colon == std::string::npos || eq == std::string::npos || eq < colon) {
      throw medlearn::ConfigError("bad --recode '" + spec + "', expected col:old=new");
    }
    schema.recodes[spec.substr(0, colon)][spec.substr(colon + 1, eq - colon - 1)] =
        spec.substr(eq + 1);
  }
  return schema;
}

fs::path prepare_out(const CommonOptions& common) {
  fs::path dir(common.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw medlearn::IoError("cannot create output directory '" + common.out_dir + "'");
  return dir;
}

// The resolved configuration, written so the run can be replayed exactly.
// --jobs is omitted on purpose: outputs do not depend on it.
void write_manifest(const CLI::App& app, const CLI::App* cmd, const fs::path& dir) {
  std::ofstream out(dir / "manifest.ini");
  if (!out) throw medlearn::IoError("cannot write manifest");
  out << "command = " << cmd->get_name() << "\n";
  for (const auto* opt : cmd->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "jobs" || name == "help") continue;
    std::string value;
    if (!opt->results().empty()) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    } else {
      value = opt->get_default_str();
    }
    if (value.empty() && opt->count() == 0) continue;
    out << name << " = " << value << "\n";
  }
  (void)app;
}

void write_error(const std::string& kind, int code, const std::string& message) {
  json j;
  j["error"] = kind;
  j["code"] = code;
  j["message"] = message;
  std::cerr << j.dump() << std::endl;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

void cmd_simulate(const CommonOptions& common, const ScenarioOptions& scen) {
  const auto dir = prepare_out(common);
  const auto cfg = make_scenario(scen, common.seed);
  auto [ds, truth] = medlearn::generate(cfg);

  medlearn::CsvSchema schema;
  schema.treatment = "w";
  schema.outcome = "y";
  if (ds.has_mediator()) schema.mediator = "m";
  medlearn::write_csv(ds, (dir / "dataset.csv").string(), schema);

  std::ofstream gt(dir / "ground_truth.csv");
  if (!gt) throw medlearn::IoError("cannot write ground_truth.csv");
  const bool mediator = truth.true_tau_ite.size() > 0;
  gt << "unit_index,true_tau_tot" << (mediator ? ",true_tau_ite" : "") << ",in_region\n";
  for (medlearn::Index i = 0; i < ds.n(); ++i) {
    gt << i << ',' << medlearn::format_double(truth.true_tau_tot[i]);
    if (mediator) gt << ',' << medlearn::format_double(truth.true_tau_ite[i]);
    gt << ',' << (truth.region_indicator[static_cast<size_t>(i)] ? 1 : 0) << '\n';
  }
  std::cout << "wrote " << (dir / "dataset.csv").string() << " (n=" << ds.n() << ", d=" << ds.dim()
            << ")\n";
}

void cmd_calibrate(const CommonOptions& common, const ScenarioOptions& scen,
                   const PipelineOptions& pipe_opts, int reps, double alpha) {
  const auto dir = prepare_out(common);
  const auto cfg = make_scenario(scen, common.seed);
  const auto pipe = make_pipeline(pipe_opts, common, cfg.id);

  const auto report = medlearn::run_replications(cfg, reps, pipe);
  std::vector<double> pvalues;
  std::vector<std::uint64_t> seeds;
  for (const auto& record : report.records) {
    pvalues.push_back(record.p_leaf);
    seeds.push_back(record.seed);
  }
  const auto threshold = medlearn::calibrate_threshold(pvalues, alpha, medlearn::to_string(cfg.id),
                                                       std::move(seeds));
  medlearn::save_threshold(threshold, (dir / "threshold.json").string());
  medlearn::write_ecdf_csv(medlearn::ecdf(pvalues), (dir / "null_pvalues_ecdf.csv").string());
  medlearn::write_replication_csv(report, (dir / "replications.csv").string());

  int rejected_at_threshold = 0;
  for (double p : pvalues) rejected_at_threshold += p <= threshold.threshold ? 1 : 0;
  std::cout << "threshold = " << threshold.threshold << " (alpha " << alpha << ", acceptance rate "
            << static_cast<double>(rejected_at_threshold) / static_cast<double>(reps)
            << " on the calibration sample)"
            << (threshold.degenerate_support ? " [degenerate null support]" : "") << "\n";
}

void cmd_fit(const CommonOptions& common, const ScenarioOptions& scen, const DataOptions& data,
             const PipelineOptions& pipe_opts, const std::string& threshold_file) {
  const auto dir = prepare_out(common);

  std::optional<medlearn::Dataset> ds;
  std::optional<medlearn::ScenarioId> scenario;
  if (!data.data_path.empty()) {
    if (!scen.scenario.empty()) {
      throw medlearn::ConfigError("give either --data or --scenario, not both");
    }
    if (data.treatment_col.empty() || data.outcome_col.empty()) {
      throw medlearn::ConfigError("--data needs --treatment-col and --outcome-col");
    }
    ds = medlearn::load_csv(data.data_path, make_schema(data));
  } else if (!scen.scenario.empty()) {
    const auto cfg = make_scenario(scen, common.seed);
    scenario = cfg.id;
    ds = medlearn::generate(cfg).first;
  } else {
    throw medlearn::ConfigError("fit needs --data or --scenario");
  }

  auto pipe_opts_local = pipe_opts;
  if (pipe_opts.target == "auto" && !scenario) {
    pipe_opts_local.target = ds->has_mediator() ? "mediator" : "outcome";
  }
  const auto pipe = make_pipeline(pipe_opts_local, common, scenario);
  auto result = medlearn::run_pipeline(*ds, pipe, common.seed);

  std::optional<medlearn::CalibrationThreshold> threshold;
  if (!threshold_file.empty()) {
    threshold = medlearn::load_threshold(threshold_file);
    medlearn::decide(result.selection, *threshold);
  }

  if (result.effects.values.size() > 0) {
    medlearn::write_effects_csv(result.effects, (dir / "effects.csv").string());
    // Embedding with the chosen candidate's cluster labels; the per-k seed
    // derivation matches the pipeline's, so these are the labels the
    // selected tree was fit to.
    const int chosen_k = result.selection.tree.k_source;
    const auto labels = medlearn::kmeans(
        result.embedding.coords, chosen_k,
        medlearn::derive_seed(common.seed, static_cast<std::uint64_t>(chosen_k)), pipe.kmeans);
    medlearn::write_embedding_csv(result.embedding, labels, (dir / "embedding.csv").string());
  }

  const auto profiles = medlearn::extract_leaf_profiles(result.selection.tree, *ds);
  {
    std::ofstream txt(dir / "profiles.txt");
    for (const auto& profile : profiles) txt << medlearn::to_string(profile) << '\n';
  }

  json sel;
  sel["p_leaf"] = result.selection.lrt.p_leaf;
  sel["statistic"] = result.selection.lrt.statistic;
  sel["df"] = result.selection.lrt.df;
  sel["chosen_k"] = result.selection.tree.k_source;
  sel["leaf_count"] = result.selection.lrt.leaf_count;
  sel["rank_deficient"] = result.selection.lrt.rank_deficient;
  sel["decision"] = result.selection.decision == medlearn::SubtypeSelection::Decision::accepted
                        ? "accepted"
                        : (result.selection.decision == medlearn::SubtypeSelection::Decision::rejected
                               ? "rejected"
                               : "undecided");
  sel["threshold_applied"] = !threshold_file.empty();
  if (threshold) sel["threshold"] = threshold->threshold;
  json per_k = json::array();
  for (const auto& cand : result.selection.per_k) {
    per_k.push_back({{"k", cand.k}, {"leaf_count", cand.leaf_count}, {"p_leaf", cand.p_leaf}});
  }
  sel["candidates"] = per_k;
  json jprofiles = json::array();
  for (const auto& profile : profiles) {
    json cond = json::array();
    for (const auto& c : profile.conditions) cond.push_back(medlearn::to_string(c));
    jprofiles.push_back({{"subtype", profile.subtype_id},
                         {"n", profile.n_samples},
                         {"majority_cluster", profile.majority_cluster},
                         {"conditions", cond}});
  }
  sel["profiles"] = jprofiles;
  std::ofstream(dir / "selection.json") << sel.dump(2) << '\n';

  std::cout << "p_leaf = " << result.selection.lrt.p_leaf << ", k = "
            << result.selection.tree.k_source << ", leaves = " << result.selection.lrt.leaf_count
            << ", decision = " << sel["decision"].get<std::string>() << "\n";
}

void cmd_replicate(const CommonOptions& common, const ScenarioOptions& scen,
                   const PipelineOptions& pipe_opts, int reps, const std::string& threshold_file) {
  const auto dir = prepare_out(common);
  const auto cfg = make_scenario(scen, common.seed);
  const auto pipe = make_pipeline(pipe_opts, common, cfg.id);

  std::optional<medlearn::CalibrationThreshold> threshold;
  if (!threshold_file.empty()) threshold = medlearn::load_threshold(threshold_file);

  const auto report =
      medlearn::run_replications(cfg, reps, pipe, threshold ? &*threshold : nullptr);
  medlearn::write_replication_csv(report, (dir / "replications.csv").string());

  const auto hits = medlearn::hit_table(report);
  medlearn::write_hit_table_csv(hits, reps, (dir / "hit_table.csv").string());
  medlearn::write_covariate_distribution_csv(medlearn::covariate_count_distribution(report),
                                             (dir / "covariate_distribution.csv").string());
  std::vector<double> pvalues;
  for (const auto& record : report.records) pvalues.push_back(record.p_leaf);
  medlearn::write_ecdf_csv(medlearn::ecdf(pvalues), (dir / "pleaf_ecdf.csv").string());
  if (pipe.evaluate_mediation) {
    medlearn::write_region_comparison_csv(medlearn::region_comparison(report),
                                          (dir / "region_comparison.csv").string());
  }

  int accepted = 0;
  for (const auto& record : report.records) {
    accepted += record.decision == medlearn::RunDecision::accepted ? 1 : 0;
  }
  std::cout << "replications = " << reps << ", accepted = " << accepted << ", x1&x2 hits = "
            << hits.both << "\n";
}

void cmd_report(const CommonOptions& common, const std::vector<std::string>& inputs) {
  const auto dir = prepare_out(common);
  std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> curves;
  for (const auto& input : inputs) {
    std::ifstream in(input);
    if (!in) throw medlearn::IoError("cannot open '" + input + "'");
    std::string line;
    if (!std::getline(in, line)) throw medlearn::IngestionError("'" + input + "' is empty");
    // Locate the p_leaf and scenario columns by header name.
    std::vector<std::string> header;
    {
      std::stringstream ss(line);
      std::string field;
      while (std::getline(ss, field, ',')) header.push_back(field);
    }
    int p_col = -1, scen_col = -1;
    for (size_t j = 0; j < header.size(); ++j) {
      if (header[j] == "p_leaf") p_col = static_cast<int>(j);
      if (header[j] == "scenario") scen_col = static_cast<int>(j);
    }
    if (p_col < 0) throw medlearn::IngestionError("'" + input + "' has no p_leaf column");
    std::vector<double> pvalues;
    std::string label = fs::path(input).stem().string();
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string field;
      int j = 0;
      while (std::getline(ss, field, ',')) {
        if (j == p_col) {
          double v = 0.0;
          auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
          if (ec != std::errc{}) throw medlearn::IngestionError("bad p_leaf in '" + input + "'");
          pvalues.push_back(v);
        } else if (j == scen_col) {
          label = field;
        }
        ++j;
      }
    }
    if (pvalues.empty()) throw medlearn::IngestionError("'" + input + "' has no rows");
    curves.emplace_back(label, medlearn::ecdf(pvalues));
  }
  for (const auto& [label, curve] : curves) {
    medlearn::write_ecdf_csv(curve, (dir / ("ecdf_" + label + ".csv")).string());
  }
  medlearn::write_ecdf_svg(curves, "p_leaf ECDF", (dir / "ecdf.svg").string());
  std::cout << "wrote " << (dir / "ecdf.svg").string() << " (" << curves.size() << " curves)\n";
}

void cmd_surface(const CommonOptions& common, const ScenarioOptions& scen,
                 const PipelineOptions& pipe_opts, int reps, double lo, double hi, double step) {
  const auto dir = prepare_out(common);
  const auto cfg = make_scenario(scen, common.seed);
  const auto pipe = make_pipeline(pipe_opts, common, cfg.id);
  medlearn::SurfaceSpec spec{lo, hi, step};
  const auto surface = medlearn::effect_surface_grid(cfg, pipe, spec, reps);
  medlearn::write_surface_csv(surface, (dir / "surface.csv").string());
  std::cout << "wrote " << (dir / "surface.csv").string() << " (" << surface.size()
            << " grid points, " << reps << " replications)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Treatment-effect subgroup discovery with mediation-aware effect estimation"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default(true);
  app.set_config("--config", "", "Read options from an INI config file; flags override it");
  app.footer(
      "Exit codes: 0 success, 1 internal error, 2 config/usage, 3 schema, 4 ingestion,\n"
      "5 validation, 6 degenerate arm, 7 numeric, 8 file system.\n"
      "MEDLEARN_SEED sets the master seed when --seed is absent.");

  CommonOptions common;
  ScenarioOptions scen;
  PipelineOptions pipe;
  DataOptions data;
  int reps = 100;
  double alpha = 0.10;
  std::string threshold_file;
  std::vector<std::string> report_inputs;
  double grid_lo = -1.5, grid_hi = 1.5, grid_step = 0.05;

  auto* simulate = app.add_subcommand("simulate", "Write a simulated dataset and its ground truth");
  add_common(simulate, common);
  add_scenario(simulate, scen, true);

  auto* calibrate =
      app.add_subcommand("calibrate", "Build a null-calibrated p_leaf threshold file");
  add_common(calibrate, common);
  add_scenario(calibrate, scen, true);
  add_pipeline(calibrate, pipe);
  calibrate->add_option("--reps", reps, "Null replications");
  calibrate->add_option("--alpha", alpha, "Target type I error rate");

  auto* fit = app.add_subcommand("fit", "Run the pipeline once on a dataset");
  add_common(fit, common);
  add_scenario(fit, scen, false);
  add_data(fit, data);
  add_pipeline(fit, pipe);
  fit->add_option("--threshold-file", threshold_file, "Calibration file for the accept decision");

  auto* replicate = app.add_subcommand("replicate", "Run R seeded replications and aggregate");
  add_common(replicate, common);
  add_scenario(replicate, scen, true);
  add_pipeline(replicate, pipe);
  replicate->add_option("--reps", reps, "Replications");
  replicate->add_option("--threshold-file", threshold_file, "Calibration file for decisions");

  auto* report = app.add_subcommand("report", "Aggregate replication CSVs into ECDF tables/plots");
  add_common(report, common);
  report->add_option("--in", report_inputs, "replications.csv files")->required();

  auto* surface = app.add_subcommand("surface", "Average estimated effect over a covariate grid");
  add_common(surface, common);
  add_scenario(surface, scen, true);
  add_pipeline(surface, pipe);
  surface->add_option("--reps", reps, "Replications");
  surface->add_option("--grid-lo", grid_lo, "Grid lower bound");
  surface->add_option("--grid-hi", grid_hi, "Grid upper bound");
  surface->add_option("--grid-step", grid_step, "Grid step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    write_error("config", 2, e.what());
    return 2;
  }

  try {
    CLI::App* cmd = app.get_subcommands().front();
    if (cmd == simulate) {
      cmd_simulate(common, scen);
    } else if (cmd == calibrate) {
      cmd_calibrate(common, scen, pipe, reps, alpha);
    } else if (cmd == fit) {
      cmd_fit(common, scen, data, pipe, threshold_file);
    } else if (cmd == replicate) {
      cmd_replicate(common, scen, pipe, reps, threshold_file);
    } else if (cmd == report) {
      cmd_report(common, report_inputs);
    } else if (cmd == surface) {
      cmd_surface(common, scen, pipe, reps, grid_lo, grid_hi, grid_step);
    }
    write_manifest(app, cmd, fs::path(common.out_dir));
  } catch (const medlearn::Error& e) {
    const char* kind = "error";
    switch (e.code()) {
      case medlearn::ErrorCode::config: kind = "config"; break;
      case medlearn::ErrorCode::schema: kind = "schema"; break;
      case medlearn::ErrorCode::ingestion: kind = "ingestion"; break;
      case medlearn::ErrorCode::validation: kind = "validation"; break;
      case medlearn::ErrorCode::degenerate: kind = "degenerate_arm"; break;
      case medlearn::ErrorCode::numeric: kind = "numeric"; break;
      case medlearn::ErrorCode::io: kind = "io"; break;
    }
    write_error(kind, e.exit_code(), e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    write_error("internal", 1, e.what());
    return 1;
  }
  return 0;
}
