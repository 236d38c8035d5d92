#include "zoibmed/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "zoibmed/error.hpp"
#include "zoibmed/inference.hpp"
#include "zoibmed/selfcheck.hpp"
#include "zoibmed/sensitivity.hpp"
#include "zoibmed/serialize.hpp"
#include "zoibmed/simharness.hpp"

#ifndef ZOIBMED_DATA_DIR
#define ZOIBMED_DATA_DIR "data"
#endif

namespace zoibmed::cli {

namespace fs = std::filesystem;

const std::vector<std::pair<std::string, std::string>>& config_keys() {
  static const std::vector<std::pair<std::string, std::string>> keys = {
      {"input", "CSV file with a header row"},
      {"outcome", "outcome column"},
      {"mediator", "mediator column"},
      {"treatment", "treatment column (0/1)"},
      {"covariates", "numeric covariate columns, comma separated"},
      {"categorical", "categorical columns, comma separated; name:l1|l2|... fixes the levels"},
      {"bounds", "original-scale bounds, e.g. depress2:1:5,job_seek:1:5"},
      {"standardize", "standardize covariates (true/false, default true)"},
      {"heterogeneous", "separate coefficients per treatment arm (default false)"},
      {"prior_sd", "ridge penalty as a Normal(0, sd^2) prior on slopes"},
      {"K", "Monte Carlo draws per covariate row (default 10)"},
      {"B", "bootstrap replicates (default 200)"},
      {"q", "quantile levels, comma separated (default 0.5)"},
      {"lambda", "sensitivity grid, comma separated (default: pilot range)"},
      {"lambda_points", "grid size for the pilot range (default 9)"},
      {"rho", "copula correlation on the logit scale (default 0.95)"},
      {"scale", "sensitivity scale: logit, linear or both (default both)"},
      {"seed", "master seed (default $ZOIBMED_SEED or 1)"},
      {"threads", "worker threads (default 1)"},
      {"output", "output directory (default .)"},
      {"formats", "csv, json or csv,json (default csv,json)"},
      {"stratify", "bootstrap within treatment arms (default false)"},
      {"original_scale", "report effects on the outcome's original scale (default true)"},
      {"percent", "simulate: multiply truth, bias, rmse and length by 100"},
      {"pool", "simulate: covariate pool CSV"},
      {"model", "simulate: true coefficients (JSON)"},
      {"xi_m", "simulate: mediator treatment multipliers, one per scenario"},
      {"xi_y", "simulate: outcome treatment multipliers, one per scenario"},
      {"N", "simulate: sample size (default 899)"},
      {"reps", "simulate: datasets per scenario (default 200)"},
      {"truth_mc", "simulate: Monte Carlo size for true effects (default 90799)"},
      {"quick", "check: smaller Monte Carlo sizes"},
  };
  return keys;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

bool known_key(const std::string& k) {
  for (const auto& [key, help] : config_keys())
    if (key == k) return true;
  return false;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    return parse_double(v);
  } catch (const DataError&) {
    throw DataError("config '" + key + "': '" + v + "' is not a number");
  }
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& p : split(v, ',')) out.push_back(to_double(key, p));
  return out;
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto t = trim(v);
  const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw DataError("config '" + key + "': '" + v + "' is not a nonnegative integer");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  const auto t = trim(v);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw DataError("config '" + key + "': '" + v + "' is not a boolean");
}

}  // namespace

KeyValues parse_config(const std::string& text) {
  KeyValues kv;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!known_key(key))
      throw DataError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

RunConfig make_config(const KeyValues& kv, const std::string& env_seed) {
  RunConfig c;
  auto get = [&](const char* k) -> const std::string* {
    const auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (auto v = get("input")) c.input = *v;
  if (auto v = get("outcome")) c.ingest.roles.outcome = *v;
  if (auto v = get("mediator")) c.ingest.roles.mediator = *v;
  if (auto v = get("treatment")) c.ingest.roles.treatment = *v;
  if (auto v = get("covariates")) c.ingest.roles.covariates = split(*v, ',');
  if (auto v = get("categorical"))
    for (const auto& item : split(*v, ',')) {
      CategoricalColumn col;
      const auto colon = item.find(':');
      col.name = trim(item.substr(0, colon));
      if (colon != std::string::npos) col.levels = split(item.substr(colon + 1), '|');
      c.ingest.roles.categorical.push_back(col);
    }
  if (auto v = get("bounds"))
    for (const auto& item : split(*v, ',')) {
      const auto parts = split(item, ':');
      if (parts.size() != 3) throw DataError("config 'bounds': expected name:lo:hi, got '" + item + "'");
      c.ingest.bounds[parts[0]] = {to_double("bounds", parts[1]), to_double("bounds", parts[2])};
    }
  if (auto v = get("standardize")) c.ingest.standardize = to_bool("standardize", *v);
  if (auto v = get("heterogeneous")) c.spec.heterogeneous = to_bool("heterogeneous", *v);
  if (auto v = get("prior_sd")) {
    const double sd = to_double("prior_sd", *v);
    if (!(sd > 0.0)) throw DataError("config 'prior_sd' must be positive");
    c.spec.prior_sd = sd;
  }
  if (auto v = get("K")) c.K = static_cast<int>(to_count("K", *v));
  if (auto v = get("B")) c.B = to_count("B", *v);
  if (auto v = get("q")) c.q = to_doubles("q", *v);
  if (auto v = get("lambda")) c.lambdas = to_doubles("lambda", *v);
  if (auto v = get("lambda_points")) c.lambda_points = to_count("lambda_points", *v);
  if (auto v = get("rho")) c.rho = to_double("rho", *v);
  if (auto v = get("scale")) c.scale = *v;
  if (auto v = get("seed"))
    c.seed = to_count("seed", *v);
  else if (!env_seed.empty())
    c.seed = to_count("ZOIBMED_SEED", env_seed);
  if (auto v = get("threads")) c.threads = static_cast<unsigned>(to_count("threads", *v));
  if (auto v = get("output")) c.output = *v;
  if (auto v = get("formats")) c.formats = split(*v, ',');
  if (auto v = get("stratify")) c.stratify = to_bool("stratify", *v);
  if (auto v = get("original_scale")) c.original_scale = to_bool("original_scale", *v);
  if (auto v = get("percent")) c.percent = to_bool("percent", *v);
  c.pool = std::string(ZOIBMED_DATA_DIR) + "/jobs_synthetic_pool.csv";
  c.model = std::string(ZOIBMED_DATA_DIR) + "/reference_model.json";
  if (auto v = get("pool")) c.pool = *v;
  if (auto v = get("model")) c.model = *v;
  if (auto v = get("xi_m")) c.xi_m = to_doubles("xi_m", *v);
  if (auto v = get("xi_y")) c.xi_y = to_doubles("xi_y", *v);
  if (auto v = get("N")) c.N = to_count("N", *v);
  if (auto v = get("reps")) c.reps = to_count("reps", *v);
  if (auto v = get("truth_mc")) c.truth_mc = to_count("truth_mc", *v);
  if (auto v = get("quick")) c.check_quick = to_bool("quick", *v);

  if (c.K < 1) throw DataError("K must be at least 1");
  if (c.threads < 1) c.threads = 1;
  if (c.scale != "logit" && c.scale != "linear" && c.scale != "both")
    throw DataError("scale must be logit, linear or both");
  for (const auto& f : c.formats)
    if (f != "csv" && f != "json") throw DataError("unknown output format '" + f + "'");
  for (double q : c.q)
    if (!(q > 0.0 && q < 1.0)) throw DataError("quantile levels must lie in (0, 1)");
  if (c.xi_m.size() != c.xi_y.size())
    throw DataError("xi_m and xi_y need one entry per scenario");
  return c;
}

namespace {

class Runner {
 public:
  Runner(RunConfig cfg, std::ostream& out, std::ostream& err)
      : cfg_(std::move(cfg)), out_(out), err_(err) {}

  void write(const Table& t, const std::string& base) {
    fs::create_directories(cfg_.output);
    for (const auto& f : cfg_.formats) {
      const fs::path path = fs::path(cfg_.output) / (base + "." + f);
      std::ofstream os(path, std::ios::binary);
      if (!os) throw DataError("cannot write '" + path.string() + "'");
      if (f == "csv")
        t.write_csv(os);
      else
        os << t.to_json();
      out_ << "wrote " << path.string() << "\n";
    }
  }

  Ingested load() {
    if (cfg_.input.empty()) throw DataError("no input file (set 'input')");
    Ingested in = ingest_csv(cfg_.input, cfg_.ingest);
    const auto& r = in.report;
    out_ << "ingested " << r.rows << " rows (" << r.arm_rows[0] << " control, "
         << r.arm_rows[1] << " treated), " << r.design_columns.size()
         << " covariate columns\n";
    return in;
  }

  Table ingest_table(const IngestReport& r) {
    Table t({"variable", "arm", "n", "prop_zero", "prop_one", "interior_mean", "interior_sd"});
    auto add = [&](const std::string& var, const std::array<BoundarySummary, 2>& s) {
      for (std::size_t a = 0; a < 2; ++a)
        t.add_row({var, static_cast<long long>(a), static_cast<long long>(s[a].n), s[a].zero,
                   s[a].one, s[a].interior_mean, s[a].interior_sd});
    };
    add(cfg_.ingest.roles.mediator, r.mediator);
    add(cfg_.ingest.roles.outcome, r.outcome);
    return t;
  }

  double display_factor(const Dataset& d) const {
    if (!cfg_.original_scale) return 1.0;
    const auto rec = d.rescale_record(cfg_.ingest.roles.outcome);
    return rec ? rec->hi - rec->lo : 1.0;
  }

  InferenceOptions inference_options() const {
    InferenceOptions o;
    o.spec = cfg_.spec;
    o.replicates = cfg_.B;
    o.seed = cfg_.seed;
    o.threads = cfg_.threads;
    o.stratify_by_arm = cfg_.stratify;
    return o;
  }

  void report_failures(const InferenceResult& r) {
    if (r.failures.empty()) return;
    err_ << r.failures.size() << " bootstrap replicate(s) excluded\n";
    for (const auto& f : r.failures) err_ << "  " << f << "\n";
  }

  static void effect_row(Table& t, std::vector<Table::Cell> lead, const IntervalSummary& s,
                         double factor) {
    const double est = s.estimate * factor;
    const double sd = s.sd * factor;
    const double z = sd > 0.0 ? est / sd : (est == 0.0 ? 0.0 : std::copysign(INFINITY, est));
    const double p = std::erfc(std::abs(z) / std::sqrt(2.0));
    lead.insert(lead.end(), {est, sd, s.lower * factor, s.upper * factor, z, p});
    t.add_row(lead);
  }

  int fit() {
    const Ingested in = load();
    const FittedModels f = fit_all(in.dataset, cfg_.spec);
    ModelFile m{cfg_.spec, f.coefficients, in.dataset.column_names(),
                in.dataset.standardization()};
    fs::create_directories(cfg_.output);
    const fs::path path = fs::path(cfg_.output) / "model.json";
    std::ofstream(path, std::ios::binary) << model_to_json(m);
    out_ << "wrote " << path.string() << "\n";
    Table comp({"component", "iterations", "converged", "loglik", "gradient_norm", "warning"});
    for (const auto& c : f.components)
      comp.add_row({c.name, static_cast<long long>(c.iterations), c.converged ? "true" : "false",
                    c.loglik, c.gradient_norm, c.warning});
    write(comp, "fit_components");
    write(ingest_table(in.report), "ingest_report");
    out_ << "log-likelihood " << format_double(f.loglik) << "\n";
    return 0;
  }

  int effects() {
    const Ingested in = load();
    const InferenceResult r =
        run_inference(in.dataset, inference_options(), average_effects_evaluator(cfg_.K));
    report_failures(r);
    const double factor = display_factor(in.dataset);
    const std::vector<std::string> cols = {"effect", "Est", "SD", "Lower", "Upper", "Z", "P"};
    Table shown(cols), unit(cols);
    Table normal({"effect", "Est", "normal_lower", "normal_upper"});
    for (std::size_t e = 0; e < 5; ++e) {
      const std::string name(kEffectNames[e]);
      effect_row(shown, {name}, r.summary[e], factor);
      effect_row(unit, {name}, r.summary[e], 1.0);
      normal.add_row({name, r.summary[e].estimate * factor, r.summary[e].normal_lower * factor,
                      r.summary[e].normal_upper * factor});
    }
    write(shown, "effects");
    write(unit, "effects_unit");
    write(normal, "effects_normal");
    out_ << shown.to_csv();
    return 0;
  }

  int quantile() {
    const Ingested in = load();
    const int K = cfg_.K;
    const std::vector<double> qs = cfg_.q;
    const Evaluator eval = [K, qs](const FittedModels& m, const Dataset& d,
                                   const WeightVector& w, std::uint64_t cell) {
      std::vector<double> v;
      for (double q : qs) {
        const auto e = estimate_quantile_effects(m, d, q, w, K, cell).values();
        v.insert(v.end(), e.begin(), e.end());
      }
      return v;
    };
    const InferenceResult r = run_inference(in.dataset, inference_options(), eval);
    report_failures(r);
    const double factor = display_factor(in.dataset);
    Table t({"q", "effect", "Est", "SD", "Lower", "Upper", "Z", "P"});
    for (std::size_t j = 0; j < qs.size(); ++j)
      for (std::size_t e = 0; e < 5; ++e)
        effect_row(t, {qs[j], std::string(kEffectNames[e])}, r.summary[j * 5 + e], factor);
    write(t, "quantile_effects");
    out_ << t.to_csv();
    return 0;
  }

  std::vector<double> grid_for(const Dataset& d, SensitivityScale scale, Table& ranges) {
    if (!cfg_.lambdas.empty()) return cfg_.lambdas;
    const LambdaRange r = pilot_lambda_range(d, scale);
    ranges.add_row({scale == SensitivityScale::kLogit ? "logit" : "linear", r.lo, r.hi,
                    r.mediator_coefficient});
    const std::size_t n = std::max<std::size_t>(cfg_.lambda_points, 1);
    std::vector<double> g(n, 0.0);
    if (n == 1) return g;
    const double half = 0.5 * static_cast<double>(n - 1);
    for (std::size_t k = 0; k < n; ++k)
      g[k] = r.hi * (static_cast<double>(k) - half) / half;
    return g;
  }

  int sensitivity() {
    const Ingested in = load();
    std::vector<SensitivityScale> scales;
    if (cfg_.scale != "linear") scales.push_back(SensitivityScale::kLogit);
    if (cfg_.scale != "logit") scales.push_back(SensitivityScale::kLinear);
    SensitivityParams{0.0, cfg_.rho}.validate();

    Table ranges({"scale", "lo", "hi", "mediator_coefficient"});
    std::vector<std::vector<double>> grids;
    for (auto s : scales) grids.push_back(grid_for(in.dataset, s, ranges));

    const int K = cfg_.K;
    const double rho = cfg_.rho;
    const Evaluator eval = [&, K, rho](const FittedModels& m, const Dataset& d,
                                       const WeightVector& w, std::uint64_t cell) {
      std::vector<double> v;
      for (std::size_t s = 0; s < scales.size(); ++s) {
        const auto rows = sensitivity_grid(m, d, grids[s], rho, scales[s], w, K, cell);
        for (const auto& row : rows) {
          const auto e = row.effects.values();
          v.insert(v.end(), e.begin(), e.end());
        }
      }
      return v;
    };
    const InferenceResult r = run_inference(in.dataset, inference_options(), eval);
    report_failures(r);
    const double factor = display_factor(in.dataset);
    Table t({"scale", "lambda", "rho", "effect", "estimate", "lower", "upper"});
    std::size_t j = 0;
    for (std::size_t s = 0; s < scales.size(); ++s) {
      const bool logit = scales[s] == SensitivityScale::kLogit;
      for (double lambda : grids[s])
        for (std::size_t e = 0; e < 5; ++e, ++j) {
          const auto& sm = r.summary[j];
          t.add_row({logit ? "logit" : "linear", lambda,
                     logit ? Table::Cell(rho) : Table::Cell(std::string("NA")),
                     std::string(kEffectNames[e]), sm.estimate * factor, sm.lower * factor,
                     sm.upper * factor});
        }
    }
    if (ranges.rows() > 0) write(ranges, "lambda_range");
    write(t, "sensitivity");
    return 0;
  }

  int simulate() {
    std::ifstream pin(cfg_.pool, std::ios::binary);
    if (!pin) throw DataError("cannot open pool '" + cfg_.pool + "'");
    const Table pool = Table::read_csv(pin);
    std::ifstream min(cfg_.model, std::ios::binary);
    if (!min) throw DataError("cannot open model '" + cfg_.model + "'");
    std::stringstream ms;
    ms << min.rdbuf();
    const ModelFile model = model_from_json(ms.str());
    const RowMatrix x = reference_pool_covariates(pool, model);

    EstimatorConfig est;
    est.B = cfg_.B;
    est.K = cfg_.K;
    est.seed = cfg_.seed;
    est.threads = cfg_.threads;

    Table all({"scenario", "N", "effect", "truth", "bias", "rmse", "coverage", "length", "reps"});
    for (std::size_t s = 0; s < cfg_.xi_m.size(); ++s) {
      ScenarioSpec sc;
      sc.spec = model.spec;
      sc.true_coefficients = model.coefficients;
      sc.xi_m_multiplier = cfg_.xi_m[s];
      sc.xi_y_multiplier = cfg_.xi_y[s];
      sc.N = cfg_.N;
      sc.reps = cfg_.reps;
      sc.truth_mc_size = cfg_.truth_mc;
      const ScenarioResult res = run_scenario(sc, x, est);
      if (res.failures) err_ << res.label << ": " << res.failures << " replicate(s) failed\n";
      const Table t = metrics_table(res, cfg_.N, cfg_.percent);
      for (std::size_t r = 0; r < t.rows(); ++r) {
        std::vector<Table::Cell> row;
        for (std::size_t c = 0; c < t.cols(); ++c) row.emplace_back(t.at(r, c));
        all.add_row(row);
      }
    }
    write(all, "simulation");
    out_ << all.to_csv();
    return 0;
  }

  int check() {
    std::optional<Ingested> in;
    if (!cfg_.input.empty()) in = load();
    const auto results =
        run_selfcheck(in ? &in->dataset : nullptr, cfg_.spec, cfg_.seed, cfg_.check_quick);
    Table t({"check", "result", "detail"});
    bool ok = true;
    for (const auto& r : results) {
      out_ << (r.passed ? "PASS " : "FAIL ") << r.name;
      if (!r.detail.empty()) out_ << " (" << r.detail << ")";
      out_ << "\n";
      t.add_row({r.name, r.passed ? "pass" : "fail", r.detail});
      ok = ok && r.passed;
    }
    write(t, "check");
    return ok ? 0 : 3;
  }

  int make_pool() {
    const Table pool = make_synthetic_pool();
    const ModelFile model = fit_reference_model(pool);
    fs::create_directories(cfg_.output);
    const fs::path pp = fs::path(cfg_.output) / "jobs_synthetic_pool.csv";
    const fs::path mp = fs::path(cfg_.output) / "reference_model.json";
    std::ofstream(pp, std::ios::binary) << pool.to_csv();
    std::ofstream(mp, std::ios::binary) << model_to_json(model);
    out_ << "wrote " << pp.string() << "\nwrote " << mp.string() << "\n";
    return 0;
  }

 private:
  RunConfig cfg_;
  std::ostream& out_;
  std::ostream& err_;
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Causal mediation with zero-one inflated beta models"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "key = value configuration file");
  KeyValues flags;
  for (const auto& [key, help] : config_keys())
    app.add_option_function<std::string>(
        "--" + key, [&flags, k = key](const std::string& v) { flags[k] = v; }, help);

  struct Command {
    const char* name;
    const char* help;
    int (Runner::*fn)();
  };
  const Command commands[] = {
      {"fit", "fit the mediator and outcome models", &Runner::fit},
      {"effects", "average direct, indirect and total effects", &Runner::effects},
      {"quantile", "quantile direct, indirect and total effects", &Runner::quantile},
      {"sensitivity", "sensitivity grid over lambda", &Runner::sensitivity},
      {"simulate", "simulation study from known coefficients", &Runner::simulate},
      {"check", "run the invariant suite", &Runner::check},
      {"make-pool", "regenerate the synthetic covariate pool and reference model",
       &Runner::make_pool},
  };
  for (const auto& c : commands) app.add_subcommand(c.name, c.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    KeyValues kv;
    if (!config_path.empty()) {
      std::ifstream in(config_path, std::ios::binary);
      if (!in) throw DataError("cannot open config '" + config_path + "'");
      std::stringstream ss;
      ss << in.rdbuf();
      kv = parse_config(ss.str());
    }
    for (const auto& [k, v] : flags) kv[k] = v;
    const char* env = std::getenv("ZOIBMED_SEED");
    Runner runner(make_config(kv, env ? env : ""), out, err);
    for (const auto& c : commands)
      if (app.got_subcommand(c.name)) return (runner.*c.fn)();
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace zoibmed::cli
