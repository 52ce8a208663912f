// Python bindings for the core operations: data ingestion, scenario
// generation, effect estimation, projection/clustering, subtype trees,
// the leaf LRT and calibration.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "medlearn/experiments.hpp"

namespace py = pybind11;
using namespace medlearn;

namespace {

LearnerSpec make_learner(const std::string& kind, std::uint64_t seed, int trees, int rounds,
                         double learning_rate, int boost_depth) {
  LearnerSpec spec;
  spec.kind = parse_learner_kind(kind);
  spec.seed = seed;
  spec.forest.n_trees = trees;
  spec.boost.n_rounds = rounds;
  spec.boost.learning_rate = learning_rate;
  spec.boost.max_depth = boost_depth;
  return spec;
}

PipelineConfig make_pipeline(const LearnerSpec& learner, const std::string& target, int dim,
                             double perplexity, int tsne_iterations, int restarts,
                             std::optional<std::pair<int, int>> k_range, bool baseline,
                             const std::string& coding) {
  PipelineConfig pipe;
  pipe.learner = learner;
  pipe.target = parse_target(target);
  pipe.coding = coding == "categorical" ? LeafCoding::categorical : LeafCoding::scalar;
  pipe.tsne.dim = dim;
  pipe.tsne.perplexity = perplexity;
  pipe.tsne.iterations = tsne_iterations;
  pipe.kmeans.restarts = restarts;
  pipe.k_range = k_range;
  pipe.baseline_on_covariates = baseline;
  return pipe;
}

py::dict truth_to_dict(const GroundTruth& truth) {
  py::dict out;
  out["true_tau_tot"] = truth.true_tau_tot;
  if (truth.true_tau_ite.size() > 0) out["true_tau_ite"] = truth.true_tau_ite;
  std::vector<bool> region = truth.region_indicator;
  out["region_indicator"] = region;
  return out;
}

py::dict selection_to_dict(const SubtypeSelection& selection, const Dataset& ds) {
  py::dict out;
  out["p_leaf"] = selection.lrt.p_leaf;
  out["statistic"] = selection.lrt.statistic;
  out["df"] = selection.lrt.df;
  out["chosen_k"] = selection.tree.k_source;
  out["leaf_count"] = selection.lrt.leaf_count;
  out["rank_deficient"] = selection.lrt.rank_deficient;
  switch (selection.decision) {
    case SubtypeSelection::Decision::undecided: out["decision"] = "undecided"; break;
    case SubtypeSelection::Decision::accepted: out["decision"] = "accepted"; break;
    case SubtypeSelection::Decision::rejected: out["decision"] = "rejected"; break;
  }
  py::list per_k;
  for (const auto& cand : selection.per_k) {
    py::dict row;
    row["k"] = cand.k;
    row["leaf_count"] = cand.leaf_count;
    row["p_leaf"] = cand.p_leaf;
    per_k.append(row);
  }
  out["candidates"] = per_k;
  out["train_assignment"] = selection.tree.train_assignment;
  py::list profiles;
  for (const auto& profile : extract_leaf_profiles(selection.tree, ds)) {
    py::dict row;
    row["subtype"] = profile.subtype_id;
    row["n"] = profile.n_samples;
    row["majority_cluster"] = profile.majority_cluster;
    row["rule"] = to_string(profile);
    profiles.append(row);
  }
  out["profiles"] = profiles;
  return out;
}

}  // namespace

PYBIND11_MODULE(_medlearn, m) {
  m.doc() = "Treatment-effect subgroup discovery with mediation-aware estimation";

  py::register_exception<ConfigError>(m, "MedlearnConfigError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "MedlearnValidationError", PyExc_ValueError);
  py::register_exception<DegenerateArmError>(m, "MedlearnDegenerateArmError", PyExc_ValueError);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](const Matrix& covariates, const std::vector<int>& treatment,
                       const Vector& outcome, std::optional<Vector> mediator) {
             return Dataset(covariates, treatment, outcome, std::move(mediator));
           }),
           py::arg("covariates"), py::arg("treatment"), py::arg("outcome"),
           py::arg("mediator") = std::nullopt)
      .def_property_readonly("n", &Dataset::n)
      .def_property_readonly("dim", &Dataset::dim)
      .def_property_readonly("covariates",
                             [](const Dataset& ds) -> Matrix { return ds.covariates(); })
      .def_property_readonly("treatment",
                             [](const Dataset& ds) { return ds.treatment(); })
      .def_property_readonly("outcome", [](const Dataset& ds) -> Vector { return ds.outcome(); })
      .def_property_readonly("has_mediator", &Dataset::has_mediator)
      .def_property_readonly("mediator",
                             [](const Dataset& ds) -> std::optional<Vector> {
                               if (!ds.has_mediator()) return std::nullopt;
                               return ds.mediator();
                             })
      .def_property_readonly("column_names", [](const Dataset& ds) {
        std::vector<std::string> names;
        for (Index j = 0; j < ds.dim(); ++j) names.push_back(ds.column_name(j));
        return names;
      });

  m.def(
      "load_csv",
      [](const std::string& path, const std::string& treatment, const std::string& outcome,
         std::optional<std::string> mediator, std::vector<std::string> covariates,
         std::map<std::string, std::map<std::string, std::string>> recodes) {
        CsvSchema schema;
        schema.treatment = treatment;
        schema.outcome = outcome;
        schema.mediator = std::move(mediator);
        schema.covariates = std::move(covariates);
        schema.recodes = std::move(recodes);
        return load_csv(path, schema);
      },
      py::arg("path"), py::arg("treatment"), py::arg("outcome"), py::arg("mediator") = std::nullopt,
      py::arg("covariates") = std::vector<std::string>{},
      py::arg("recodes") = std::map<std::string, std::map<std::string, std::string>>{});

  m.def(
      "generate",
      [](const std::string& scenario, Index n, Index d, double noise_variance,
         std::uint64_t seed) {
        auto cfg = ScenarioConfig::for_scenario(parse_scenario(scenario));
        cfg.n = n;
        cfg.d = d;
        cfg.noise_variance = noise_variance;
        cfg.seed = seed;
        auto [ds, truth] = generate(cfg);
        return py::make_tuple(std::move(ds), truth_to_dict(truth));
      },
      py::arg("scenario"), py::arg("n") = 1000, py::arg("d") = 10,
      py::arg("noise_variance") = 0.01, py::arg("seed") = 0);

  m.def("make_learner", &make_learner, py::arg("kind") = "rf", py::arg("seed") = 0,
        py::arg("trees") = 2000, py::arg("rounds") = 100, py::arg("learning_rate") = 0.3,
        py::arg("boost_depth") = 6);
  py::class_<LearnerSpec>(m, "LearnerSpec")
      .def_readwrite("seed", &LearnerSpec::seed);

  m.def(
      "estimate_catte",
      [](const Dataset& ds, const LearnerSpec& spec) -> Vector {
        return estimate_catte(ds, spec).values;
      },
      py::arg("dataset"), py::arg("learner"));
  m.def(
      "estimate_caite",
      [](const Dataset& ds, const LearnerSpec& spec) -> Vector {
        return estimate_caite(ds, spec).values;
      },
      py::arg("dataset"), py::arg("learner"));

  m.def(
      "distance_matrix",
      [](const Vector& tau) {
        EffectVector effects;
        effects.values = tau;
        return distance_matrix(effects);
      },
      py::arg("tau"));

  m.def(
      "project_tsne",
      [](const Matrix& distances, int dim, double perplexity, int iterations,
         std::uint64_t seed) -> Matrix {
        TsneParams params;
        params.dim = dim;
        params.perplexity = perplexity;
        params.iterations = iterations;
        return project_tsne(distances, params, seed).coords;
      },
      py::arg("distances"), py::arg("dim") = 2, py::arg("perplexity") = 0.0,
      py::arg("iterations") = 1000, py::arg("seed") = 0);

  m.def(
      "kmeans",
      [](const Matrix& points, int k, std::uint64_t seed, int restarts) {
        KmeansParams params;
        params.restarts = restarts;
        const ClusterAssignment labels = kmeans(points, k, seed, params);
        return py::make_tuple(labels.labels, labels.inertia);
      },
      py::arg("points"), py::arg("k"), py::arg("seed") = 0, py::arg("restarts") = 10);

  m.def(
      "candidate_ks",
      [](Index d, int k_min, int k_max) {
        std::optional<std::pair<int, int>> range;
        if (k_min > 0 && k_max > 0) range = std::make_pair(k_min, k_max);
        return candidate_ks(d, range);
      },
      py::arg("d"), py::arg("k_min") = 0, py::arg("k_max") = 0);

  py::class_<SubtypeTree>(m, "SubtypeTree")
      .def_property_readonly("k_source", [](const SubtypeTree& t) { return t.k_source; })
      .def_property_readonly("leaf_count", &SubtypeTree::leaf_count)
      .def_property_readonly("train_assignment",
                             [](const SubtypeTree& t) { return t.train_assignment; })
      .def("assign", &SubtypeTree::assign, py::arg("covariates"))
      .def("profiles", [](const SubtypeTree& tree, const Dataset& ds) {
        std::vector<std::string> rules;
        for (const auto& profile : extract_leaf_profiles(tree, ds)) {
          rules.push_back(to_string(profile));
        }
        return rules;
      });

  m.def(
      "fit_subtype_tree",
      [](const Matrix& X, const std::vector<int>& labels, int k_source) {
        ClusterAssignment assignment;
        assignment.labels = labels;
        assignment.k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
        return fit_subtype_tree(X, assignment, {}, k_source);
      },
      py::arg("covariates"), py::arg("labels"), py::arg("k_source") = 0);

  m.def(
      "p_leaf",
      [](const Dataset& ds, const std::vector<int>& leaf_ids, const std::string& target,
         const std::string& coding) {
        const LrtResult res =
            p_leaf_test(ds, leaf_ids, parse_target(target),
                        coding == "scalar" ? LeafCoding::scalar : LeafCoding::categorical);
        py::dict out;
        out["p_leaf"] = res.p_leaf;
        out["statistic"] = res.statistic;
        out["df"] = res.df;
        out["logL0"] = res.logL0;
        out["logL1"] = res.logL1;
        out["leaf_count"] = res.leaf_count;
        out["rank_deficient"] = res.rank_deficient;
        return out;
      },
      py::arg("dataset"), py::arg("leaf_ids"), py::arg("target") = "outcome",
      py::arg("coding") = "categorical");

  m.def(
      "run_pipeline",
      [](const Dataset& ds, const LearnerSpec& learner, const std::string& target, int dim,
         double perplexity, int tsne_iterations, int restarts,
         std::optional<std::pair<int, int>> k_range, bool baseline, const std::string& coding,
         std::uint64_t seed) {
        const PipelineConfig pipe = make_pipeline(learner, target, dim, perplexity,
                                                  tsne_iterations, restarts, k_range, baseline,
                                                  coding);
        const PipelineResult result = run_pipeline(ds, pipe, seed);
        py::dict out = selection_to_dict(result.selection, ds);
        if (result.effects.values.size() > 0) {
          out["effects"] = result.effects.values;
          out["embedding"] = result.embedding.coords;
        }
        return out;
      },
      py::arg("dataset"), py::arg("learner"), py::arg("target") = "outcome", py::arg("dim") = 2,
      py::arg("perplexity") = 0.0, py::arg("tsne_iterations") = 1000, py::arg("restarts") = 10,
      py::arg("k_range") = std::nullopt, py::arg("baseline") = false,
      py::arg("coding") = "scalar", py::arg("seed") = 0);

  py::class_<CalibrationThreshold>(m, "CalibrationThreshold")
      .def_readonly("alpha", &CalibrationThreshold::alpha)
      .def_readonly("threshold", &CalibrationThreshold::threshold)
      .def_readonly("degenerate_support", &CalibrationThreshold::degenerate_support);

  m.def(
      "calibrate_threshold",
      [](std::vector<double> null_ps, double alpha, const std::string& scenario) {
        return calibrate_threshold(std::move(null_ps), alpha, scenario);
      },
      py::arg("null_pvalues"), py::arg("alpha") = 0.10, py::arg("scenario") = "");
  m.def("save_threshold", &save_threshold, py::arg("threshold"), py::arg("path"));
  m.def("load_threshold", &load_threshold, py::arg("path"));

  m.def(
      "mediation_proportion",
      [](const Dataset& ds, const std::vector<Index>& region, Index min_region, int resamples,
         std::uint64_t seed) {
        const MediationEstimate est = mediation_proportion(ds, region, min_region, resamples, seed);
        py::dict out;
        out["tte"] = est.tte;
        out["ite"] = est.ite;
        out["med_prop"] = est.med_prop_defined ? py::object(py::float_(est.med_prop))
                                               : py::object(py::none());
        out["p_tte"] = est.p_tte;
        out["p_ite"] = est.p_ite;
        out["p_med"] = est.p_med;
        out["n_region"] = est.n_region;
        return out;
      },
      py::arg("dataset"), py::arg("region"), py::arg("min_region") = 30,
      py::arg("resamples") = 499, py::arg("seed") = 0);

  m.def(
      "true_effect_surface",
      [](const std::string& scenario, const Matrix& grid) -> Vector {
        return true_effect_surface(ScenarioConfig::for_scenario(parse_scenario(scenario)), grid);
      },
      py::arg("scenario"), py::arg("grid"));
}
