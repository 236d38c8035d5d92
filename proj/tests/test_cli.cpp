#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "zoibmed/cli.hpp"
#include "zoibmed/error.hpp"
#include "zoibmed/ingest.hpp"
#include "zoibmed/table.hpp"

using namespace zoibmed;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("zoibmed_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Five-point outcome and mediator, numeric and categorical covariates.
Table study_table(std::size_t n, std::uint64_t seed) {
  const auto c = fixture::simple_coefficients(2, 0.6, 0.3, 1.2);
  const Dataset d = fixture::simulate(c, n, 2, seed);
  Table t({"y", "m", "a", "x1", "x2", "site"});
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const char* site = i % 3 == 0 ? "north" : (i % 3 == 1 ? "south" : "east");
    t.add_row({1.0 + 4.0 * d.outcome()[k], d.mediator()[k],
               static_cast<long long>(d.treatment()[i]), d.covariates()(k, 0),
               d.covariates()(k, 1), std::string(site)});
  }
  return t;
}

IngestOptions study_options() {
  IngestOptions o;
  o.roles.outcome = "y";
  o.roles.mediator = "m";
  o.roles.treatment = "a";
  o.roles.covariates = {"x1", "x2"};
  o.roles.categorical = {{"site", {}}};
  o.bounds["y"] = {1.0, 5.0};
  return o;
}

int run_cli(std::vector<std::string> args, std::string* err_text = nullptr) {
  std::vector<const char*> argv = {"zoibmed"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config grammar") {
  const auto kv = cli::parse_config(
      "# comment\n  K = 25  \nB=40 # trailing\n\nlambda = -1, 0, 1\nscale=linear\n");
  CHECK(kv.at("K") == "25");
  CHECK(kv.at("B") == "40");
  const cli::RunConfig c = cli::make_config(kv);
  CHECK(c.K == 25);
  CHECK(c.B == 40);
  CHECK(c.lambdas == std::vector<double>{-1.0, 0.0, 1.0});
  CHECK(c.scale == "linear");
  CHECK(c.seed == 1);
  CHECK(cli::make_config({}, "77").seed == 77);
  CHECK(cli::make_config({{"seed", "5"}}, "77").seed == 5);
  CHECK_THROWS_AS(cli::parse_config("bogus = 1\n"), DataError);
  CHECK_THROWS_AS(cli::parse_config("K 10\n"), DataError);
  CHECK_THROWS_AS(cli::make_config({{"K", "ten"}}), DataError);
  CHECK_THROWS_AS(cli::make_config({{"scale", "probit"}}), DataError);
  CHECK_THROWS_AS(cli::make_config({{"q", "1.2"}}), DataError);
  CHECK_THROWS_AS(cli::make_config({{"prior_sd", "0"}}), DataError);
  const auto b = cli::make_config({{"bounds", "y:1:5, m:0:10"}, {"categorical", "site:a|b|c"}});
  CHECK(b.ingest.bounds.at("m").second == 10.0);
  REQUIRE(b.ingest.roles.categorical.size() == 1);
  CHECK(b.ingest.roles.categorical[0].levels == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("ingest rescales and expands") {
  const Table t = study_table(120, 1);
  const Ingested in = ingest_table(t, study_options());
  const Dataset& d = in.dataset;
  CHECK(d.size() == 120);
  for (std::size_t i = 0; i < d.size(); ++i)
    CHECK(std::abs(d.outcome()[static_cast<Eigen::Index>(i)] - (t.number(i, "y") - 1.0) / 4.0) < 1e-12);
  CHECK(d.num_covariates() == 4);
  CHECK(in.report.design_columns ==
        std::vector<std::string>{"x1", "x2", "site=north", "site=south"});
  CHECK(std::abs(d.covariates().col(0).mean()) < 1e-12);
  CHECK(in.report.arm_rows[0] + in.report.arm_rows[1] == 120);
  const auto rec = d.rescale_record("y");
  REQUIRE(rec.has_value());
  CHECK(rec->effect_to_original(0.1) == doctest::Approx(0.4));
}

TEST_CASE("ingest reports bad rows") {
  Table t({"y", "m", "a", "x1", "x2", "site"});
  t.add_row({3.0, 0.5, 1LL, 0.1, 0.2, std::string("north")});
  t.add_row({5.1, 0.5, 0LL, 0.3, 0.1, std::string("south")});
  t.add_row({2.0, 0.2, 0LL, 0.5, 0.3, std::string("north")});
  try {
    ingest_table(t, study_options());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(e.row() == 1);
    const std::string msg = e.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("5.1") != std::string::npos);
  }

  Table one_arm({"y", "m", "a", "x1", "x2", "site"});
  for (int i = 0; i < 5; ++i)
    one_arm.add_row({2.0, 0.3, 1LL, 0.1 * i, 0.2 * i, std::string(i % 2 ? "north" : "south")});
  try {
    ingest_table(one_arm, study_options());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("overlap") != std::string::npos);
  }

  IngestOptions levels = study_options();
  levels.roles.categorical = {{"site", {"north", "south"}}};
  try {
    ingest_table(study_table(30, 2), levels);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("unknown category 'east'") != std::string::npos);
  }

  IngestOptions dup = study_options();
  dup.roles.covariates = {"x1", "y"};
  CHECK_THROWS_AS(ingest_table(study_table(30, 2), dup), DataError);
}

TEST_CASE("csv round trip") {
  Table t({"name", "value", "count"});
  t.add_row({std::string("a, \"quoted\""), 0.1, 3LL});
  t.add_row({std::string("line\nbreak"), -1e-300, -7LL});
  t.add_row({std::string("nan"), std::nan(""), 0LL});
  const Table back = Table::parse_csv(t.to_csv());
  CHECK(back.to_csv() == t.to_csv());
  CHECK(back.at(0, "name") == "a, \"quoted\"");
  CHECK(back.number(1, "value") == -1e-300);
  CHECK(std::isnan(back.number(2, "value")));
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 123456789.123, 5e-324})
    CHECK(parse_double(format_double(v)) == v);
  CHECK(format_double(-0.0) == "0");
  CHECK(Table::parse_csv("\xEF\xBB\xBFx,y\n1,2\n").header()[0] == "x");
}

TEST_CASE("effects command writes a complete, reproducible table") {
  const fs::path dir = scratch("effects");
  {
    std::ofstream os(dir / "study.csv", std::ios::binary);
    study_table(160, 3).write_csv(os);
  }
  std::ofstream(dir / "run.cfg") << "input = " << (dir / "study.csv").string()
                                  << "\noutcome = y\nmediator = m\ntreatment = a\n"
                                     "covariates = x1, x2\ncategorical = site\n"
                                     "bounds = y:1:5\nK = 2\nB = 8\nseed = 11\n";
  const std::string cfg = (dir / "run.cfg").string();
  std::string err;
  REQUIRE(run_cli({"effects", "--config", cfg, "--output", (dir / "t1").string(), "--threads", "1"}, &err) == 0);
  REQUIRE(run_cli({"effects", "--config", cfg, "--output", (dir / "t3").string(), "--threads", "3"}, &err) == 0);
  for (const char* f : {"effects.csv", "effects.json", "effects_unit.csv", "effects_normal.csv"}) {
    REQUIRE(fs::exists(dir / "t1" / f));
    CHECK(slurp(dir / "t1" / f) == slurp(dir / "t3" / f));
  }
  const Table t = Table::parse_csv(slurp(dir / "t1" / "effects.csv"));
  REQUIRE(t.rows() == 5);
  CHECK(t.header() == std::vector<std::string>{"effect", "Est", "SD", "Lower", "Upper", "Z", "P"});
  for (std::size_t r = 0; r < 5; ++r) {
    CHECK(t.at(r, "effect") == std::string(kEffectNames[r]));
    CHECK(std::abs(t.number(r, "Z") - t.number(r, "Est") / t.number(r, "SD")) < 1e-12);
    CHECK(t.number(r, "Lower") <= t.number(r, "Upper"));
    CHECK(t.number(r, "P") >= 0.0);
    CHECK(t.number(r, "P") <= 1.0);
  }
  // Display scale is four times the unit scale for a 1..5 outcome.
  const Table u = Table::parse_csv(slurp(dir / "t1" / "effects_unit.csv"));
  CHECK(t.number(4, "Est") == doctest::Approx(4.0 * u.number(4, "Est")).epsilon(1e-12));

  // Flags override the config file.
  REQUIRE(run_cli({"effects", "--config", cfg, "--output", (dir / "s").string(), "--seed", "12"}) == 0);
  CHECK(slurp(dir / "s" / "effects.csv") != slurp(dir / "t1" / "effects.csv"));
}

TEST_CASE("fit, quantile and sensitivity commands") {
  const fs::path dir = scratch("commands");
  {
    std::ofstream os(dir / "study.csv", std::ios::binary);
    study_table(160, 4).write_csv(os);
  }
  const std::vector<std::string> common = {"--input", (dir / "study.csv").string(), "--outcome", "y",
                                           "--mediator", "m", "--treatment", "a", "--covariates", "x1,x2",
                                           "--bounds", "y:1:5", "--K", "2", "--B", "6",
                                           "--output", dir.string(), "--formats", "csv"};
  auto with = [&](std::string cmd, std::vector<std::string> extra = {}) {
    std::vector<std::string> a = {std::move(cmd)};
    a.insert(a.end(), common.begin(), common.end());
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  };
  std::string err;
  REQUIRE(run_cli(with("fit"), &err) == 0);
  CHECK(fs::exists(dir / "model.json"));
  CHECK(fs::exists(dir / "fit_components.csv"));
  CHECK(!fs::exists(dir / "fit_components.json"));

  REQUIRE(run_cli(with("quantile", {"--q", "0.25,0.5"}), &err) == 0);
  const Table q = Table::parse_csv(slurp(dir / "quantile_effects.csv"));
  CHECK(q.rows() == 10);
  CHECK(q.has_column("q"));

  REQUIRE(run_cli(with("sensitivity", {"--lambda_points", "5"}), &err) == 0);
  const Table s = Table::parse_csv(slurp(dir / "sensitivity.csv"));
  CHECK(s.rows() == 2 * 5 * 5);
  const Table e = [&] {
    REQUIRE(run_cli(with("effects"), &err) == 0);
    return Table::parse_csv(slurp(dir / "effects.csv"));
  }();
  // The linear row at lambda = 0 reproduces the plain effects.
  std::size_t matched = 0;
  for (std::size_t r = 0; r < s.rows(); ++r)
    if (s.at(r, "scale") == "linear" && s.number(r, "lambda") == 0.0) {
      CHECK(s.at(r, "rho") == "NA");
      for (std::size_t k = 0; k < 5; ++k)
        if (e.at(k, "effect") == s.at(r, "effect")) {
          CHECK(s.number(r, "estimate") == e.number(k, "Est"));
          ++matched;
        }
    }
  CHECK(matched == 5);
}

TEST_CASE("usage and data errors have distinct exit codes") {
  std::string err;
  CHECK(run_cli({"no-such-command"}, &err) == 2);
  CHECK(run_cli({"effects", "--input", "/nonexistent/file.csv", "--outcome", "y", "--mediator",
                 "m", "--treatment", "a"}, &err) == 1);
  CHECK(err.find("error:") != std::string::npos);
  CHECK(run_cli({"effects", "--config", "/nonexistent.cfg"}, &err) == 1);
}

TEST_CASE("simulate command labels scenarios") {
  const fs::path dir = scratch("simulate");
  std::string err;
  REQUIRE(run_cli({"simulate", "--xi_m", "0", "--xi_y", "1", "--N", "400", "--reps", "2", "--B", "4",
                   "--K", "2", "--truth_mc", "10000", "--output", dir.string(), "--formats", "csv"},
                  &err) == 0);
  const Table t = Table::parse_csv(slurp(dir / "simulation.csv"));
  REQUIRE(t.rows() == 5);
  CHECK(t.at(0, "scenario") == "Scenario 1");
  CHECK(t.number(0, "truth") == 0.0);
  CHECK(t.at(0, "N") == "400");
}

TEST_CASE("quantile effects vanish at the median of a symmetric null") {
  // Outcome and mediator independent of treatment and symmetric about 1/2.
  CoefficientSet c;
  c.mediator.banks[0] = LinkCoefficients::zeros(3);
  c.outcome.banks[0] = LinkCoefficients::zeros(4);
  c.outcome.banks[0].alpha[0] = -kLinkClamp;
  c.outcome.banks[0].gamma[0] = -kLinkClamp;
  c.outcome.banks[0].phi[0] = std::log(6.0);
  const Dataset d = fixture::simulate(c, 200, 1, 5);
  MonteCarloConfig cfg;
  cfg.K = 200;
  const EffectEstimates e = estimate_quantile_effects(fixture::as_models(c, 1), d, 0.5, cfg);
  for (double v : e.values()) CHECK(v == 0.0);
  for (const auto& row : e.potential)
    for (double v : row) CHECK(std::abs(v - 0.5) < 0.02);
}

}  // TEST_SUITE
