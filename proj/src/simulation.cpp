#include "medlearn/simulation.hpp"

#include "medlearn/rng.hpp"

#include <cmath>
#include <charconv>

namespace medlearn {

ScenarioFamily family_of(ScenarioId id) {
  switch (id) {
    case ScenarioId::simple:
    case ScenarioId::complex:
    case ScenarioId::global:
    case ScenarioId::null:
      return ScenarioFamily::no_mediator;
    default:
      return ScenarioFamily::mediator;
  }
}

ScenarioId parse_scenario(const std::string& name) {
  std::string s;
  for (char ch : name) s += (ch == '-') ? '_' : static_cast<char>(std::tolower(ch));
  if (s == "simple") return ScenarioId::simple;
  if (s == "complex") return ScenarioId::complex;
  if (s == "global") return ScenarioId::global;
  if (s == "null") return ScenarioId::null;
  if (s == "simple_all") return ScenarioId::simple_all;
  if (s == "simple_part") return ScenarioId::simple_part;
  if (s == "complex_all") return ScenarioId::complex_all;
  if (s == "complex_part") return ScenarioId::complex_part;
  if (s == "simple_null1") return ScenarioId::simple_null1;
  if (s == "simple_null2") return ScenarioId::simple_null2;
  if (s == "simple_global") return ScenarioId::simple_global;
  throw ConfigError("unknown scenario '" + name + "'");
}

std::string to_string(ScenarioId id) {
  switch (id) {
    case ScenarioId::simple: return "simple";
    case ScenarioId::complex: return "complex";
    case ScenarioId::global: return "global";
    case ScenarioId::null: return "null";
    case ScenarioId::simple_all: return "simple-all";
    case ScenarioId::simple_part: return "simple-part";
    case ScenarioId::complex_all: return "complex-all";
    case ScenarioId::complex_part: return "complex-part";
    case ScenarioId::simple_null1: return "simple-null1";
    case ScenarioId::simple_null2: return "simple-null2";
    case ScenarioId::simple_global: return "simple-global";
  }
  return "?";
}

std::vector<ScenarioId> all_scenarios() {
  return {ScenarioId::simple,       ScenarioId::complex,      ScenarioId::global,
          ScenarioId::null,         ScenarioId::simple_all,   ScenarioId::simple_part,
          ScenarioId::complex_all,  ScenarioId::complex_part, ScenarioId::simple_null1,
          ScenarioId::simple_null2, ScenarioId::simple_global};
}

ScenarioConfig ScenarioConfig::for_scenario(ScenarioId id) {
  ScenarioConfig cfg;
  cfg.id = id;
  if (id == ScenarioId::simple_null2) cfg.c = 0.0;
  return cfg;
}

double noise_variance_for_level(const std::string& level) {
  if (level == "low") return 0.01;
  if (level == "moderate") return 0.1;
  if (level == "high") return 1.0;
  double v;
  auto [ptr, ec] = std::from_chars(level.data(), level.data() + level.size(), v);
  if (ec != std::errc{} || ptr != level.data() + level.size() || v < 0.0) {
    throw ConfigError("noise level must be low, moderate, high or a non-negative variance");
  }
  return v;
}

namespace {

// Covariates beyond d contribute zero, so small-d test configs stay valid.
inline double coord(const ConstRowRef& x, Index j) {
  return j < x.size() ? x[j] : 0.0;
}

inline double kappa_hetero(const ConstRowRef& x) {
  double out = 0.0;
  for (Index j = 0; j < 2; ++j) {
    const double v = coord(x, j);
    if (v > 0.0) out += v;
  }
  return out;
}

inline double eta_main(const ConstRowRef& x) {
  return 0.5 * (coord(x, 0) + coord(x, 1)) + coord(x, 2) + coord(x, 3);
}

inline double inv_logit_pos(double t) { return 1.0 / (1.0 + std::exp(t)); }

struct NoMediatorForms {
  std::function<double(const ConstRowRef&)> eta;
  std::function<double(const ConstRowRef&)> kappa;
  bool logistic = false;
};

NoMediatorForms no_mediator_forms(ScenarioId id) {
  NoMediatorForms f;
  switch (id) {
    case ScenarioId::simple:
      f.eta = eta_main;
      f.kappa = kappa_hetero;
      break;
    case ScenarioId::complex:
      f.eta = eta_main;
      f.kappa = kappa_hetero;
      f.logistic = true;
      break;
    case ScenarioId::global:
      f.eta = [](const auto& x) { return coord(x, 2) + coord(x, 3); };
      f.kappa = [](const auto&) { return 1.0; };
      break;
    case ScenarioId::null:
      f.eta = [](const auto& x) { return coord(x, 2) + coord(x, 3); };
      f.kappa = [](const auto&) { return 0.0; };
      break;
    default:
      throw ConfigError("scenario '" + to_string(id) + "' has a mediator");
  }
  return f;
}

struct MediatorForms {
  std::function<double(const ConstRowRef&)> kappa1;
  std::function<double(const ConstRowRef&)> kappa2;
  bool logistic = false;  // outcome model only; the mediator model is linear
};

MediatorForms mediator_forms(ScenarioId id) {
  auto zero = [](const ConstRowRef&) { return 0.0; };
  auto one = [](const ConstRowRef&) { return 1.0; };
  MediatorForms f;
  switch (id) {
    case ScenarioId::simple_all:
      f.kappa1 = kappa_hetero;
      f.kappa2 = zero;
      break;
    case ScenarioId::simple_part:
      f.kappa1 = kappa_hetero;
      f.kappa2 = kappa_hetero;
      break;
    case ScenarioId::complex_all:
      f.kappa1 = kappa_hetero;
      f.kappa2 = zero;
      f.logistic = true;
      break;
    case ScenarioId::complex_part:
      f.kappa1 = kappa_hetero;
      f.kappa2 = kappa_hetero;
      f.logistic = true;
      break;
    case ScenarioId::simple_null1:
      f.kappa1 = zero;
      f.kappa2 = kappa_hetero;
      break;
    case ScenarioId::simple_null2:
      f.kappa1 = zero;
      f.kappa2 = kappa_hetero;
      break;
    case ScenarioId::simple_global:
      f.kappa1 = one;
      f.kappa2 = zero;
      break;
    default:
      throw ConfigError("scenario '" + to_string(id) + "' has no mediator");
  }
  return f;
}

inline double eta2(const ConstRowRef& x) {
  return 0.5 * (coord(x, 2) + coord(x, 3));
}

Matrix draw_covariates(const ScenarioConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, rng_tag::covariates));
  Matrix X(cfg.n, cfg.d);
  for (Index i = 0; i < cfg.n; ++i) {
    for (Index j = 0; j < cfg.d; ++j) X(i, j) = rng.normal();
  }
  return X;
}

// Exact 1:1 randomization: ceil(n/2) ones, floor(n/2) zeros, shuffled.
std::vector<int> draw_assignment(const ScenarioConfig& cfg) {
  std::vector<int> w(static_cast<size_t>(cfg.n), 0);
  for (Index i = 0; i < (cfg.n + 1) / 2; ++i) w[static_cast<size_t>(i)] = 1;
  Rng rng(derive_seed(cfg.seed, rng_tag::assignment));
  for (Index i = cfg.n - 1; i > 0; --i) {
    const auto j = rng.uniform_int(static_cast<std::uint64_t>(i) + 1);
    std::swap(w[static_cast<size_t>(i)], w[static_cast<size_t>(j)]);
  }
  return w;
}

std::vector<bool> region_of(const Matrix& X) {
  std::vector<bool> region(static_cast<size_t>(X.rows()));
  for (Index i = 0; i < X.rows(); ++i) {
    region[static_cast<size_t>(i)] = X(i, 0) > 0.0 && (X.cols() > 1 ? X(i, 1) > 0.0 : false);
  }
  return region;
}

}  // namespace

std::pair<Dataset, GroundTruth> generate(const ScenarioConfig& cfg) {
  if (cfg.n < 4) throw ConfigError("scenario needs n >= 4");
  if (cfg.d < 2) throw ConfigError("scenario needs d >= 2");
  if (cfg.noise_variance < 0.0) throw ConfigError("noise variance must be non-negative");

  const Matrix X = draw_covariates(cfg);
  const std::vector<int> w = draw_assignment(cfg);
  const double sd = std::sqrt(cfg.noise_variance);

  GroundTruth truth;
  truth.region_indicator = region_of(X);

  if (family_of(cfg.id) == ScenarioFamily::no_mediator) {
    const auto f = no_mediator_forms(cfg.id);
    Rng noise(derive_seed(cfg.seed, rng_tag::noise1));
    Vector y(cfg.n);
    truth.true_tau_tot.resize(cfg.n);
    for (Index i = 0; i < cfg.n; ++i) {
      const auto x = X.row(i);
      const double eps = sd * noise.normal();
      const double base = f.eta(x) + cfg.b + eps;
      const double half_kappa = 0.5 * f.kappa(x);
      // Same eps in both potential outcomes.
      const double y0 = f.logistic ? inv_logit_pos(base - half_kappa) : base - half_kappa;
      const double y1 = f.logistic ? inv_logit_pos(base + half_kappa) : base + half_kappa;
      y[i] = w[static_cast<size_t>(i)] == 1 ? y1 : y0;
      truth.true_tau_tot[i] = y1 - y0;
    }
    return {Dataset(X, w, std::move(y)), std::move(truth)};
  }

  const auto f = mediator_forms(cfg.id);
  Rng noise1(derive_seed(cfg.seed, rng_tag::noise1));
  Rng noise2(derive_seed(cfg.seed, rng_tag::noise2));
  Vector y(cfg.n), m(cfg.n);
  truth.true_tau_tot.resize(cfg.n);
  truth.true_tau_ite.resize(cfg.n);
  for (Index i = 0; i < cfg.n; ++i) {
    const auto x = X.row(i);
    const double eps1 = sd * noise1.normal();
    const double eps2 = sd * noise2.normal();
    const double m_base = eta_main(x) + cfg.b1 + eps1;
    const double m0 = m_base - 0.5 * f.kappa1(x);
    const double m1 = m_base + 0.5 * f.kappa1(x);
    const double y_base = eta2(x) + cfg.b2 + eps2;
    const double half_kappa2 = 0.5 * f.kappa2(x);
    auto outcome = [&](double arm_sign, double med) {
      const double t = y_base + arm_sign * half_kappa2 + cfg.c * med;
      return f.logistic ? inv_logit_pos(t) : t;
    };
    const double y0_m0 = outcome(-1.0, m0);
    const double y1_m0 = outcome(+1.0, m0);
    const double y1_m1 = outcome(+1.0, m1);
    if (w[static_cast<size_t>(i)] == 1) {
      m[i] = m1;
      y[i] = y1_m1;
    } else {
      m[i] = m0;
      y[i] = y0_m0;
    }
    truth.true_tau_tot[i] = y1_m1 - y0_m0;
    truth.true_tau_ite[i] = y1_m1 - y1_m0;
  }
  return {Dataset(X, w, std::move(y), std::move(m)), std::move(truth)};
}

Vector true_effect_surface(const ScenarioConfig& cfg, const Matrix& grid) {
  Vector out(grid.rows());
  if (family_of(cfg.id) == ScenarioFamily::no_mediator) {
    const auto f = no_mediator_forms(cfg.id);
    for (Index i = 0; i < grid.rows(); ++i) {
      const auto x = grid.row(i);
      if (f.logistic) {
        const double base = f.eta(x) + cfg.b;
        const double hk = 0.5 * f.kappa(x);
        out[i] = inv_logit_pos(base + hk) - inv_logit_pos(base - hk);
      } else {
        out[i] = f.kappa(x);
      }
    }
    return out;
  }
  const auto f = mediator_forms(cfg.id);
  for (Index i = 0; i < grid.rows(); ++i) {
    const auto x = grid.row(i);
    const double m0 = eta_main(x) + cfg.b1 - 0.5 * f.kappa1(x);
    const double m1 = eta_main(x) + cfg.b1 + 0.5 * f.kappa1(x);
    const double treated_base = eta2(x) + cfg.b2 + 0.5 * f.kappa2(x);
    if (f.logistic) {
      out[i] = inv_logit_pos(treated_base + cfg.c * m1) - inv_logit_pos(treated_base + cfg.c * m0);
    } else {
      out[i] = cfg.c * (m1 - m0);
    }
  }
  return out;
}

OracleFunctions oracle_functions(const ScenarioConfig& cfg) {
  OracleFunctions fns;
  if (family_of(cfg.id) == ScenarioFamily::no_mediator) {
    const auto f = no_mediator_forms(cfg.id);
    const double b = cfg.b;
    fns.g0 = [f, b](const ConstRowRef& x) {
      const double t = f.eta(x) + b - 0.5 * f.kappa(x);
      return f.logistic ? inv_logit_pos(t) : t;
    };
    fns.g1 = [f, b](const ConstRowRef& x) {
      const double t = f.eta(x) + b + 0.5 * f.kappa(x);
      return f.logistic ? inv_logit_pos(t) : t;
    };
    return fns;
  }
  const auto f = mediator_forms(cfg.id);
  const double b1 = cfg.b1;
  const double b2 = cfg.b2;
  const double c = cfg.c;
  fns.gm0 = [f, b1](const ConstRowRef& x) {
    return eta_main(x) + b1 - 0.5 * f.kappa1(x);
  };
  fns.gm1 = [f, b1](const ConstRowRef& x) {
    return eta_main(x) + b1 + 0.5 * f.kappa1(x);
  };
  // The mediator arrives as the last column of the design row.
  fns.gy1 = [f, b2, c](const ConstRowRef& xm) {
    const auto x = xm.head(xm.size() - 1);
    const double m = xm[xm.size() - 1];
    const double t = eta2(x) + b2 + 0.5 * f.kappa2(x) + c * m;
    return f.logistic ? inv_logit_pos(t) : t;
  };
  return fns;
}

}  // namespace medlearn
