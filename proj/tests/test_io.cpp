#include <doctest.h>

#include <cmath>
#include <fstream>
#include <cstring>
#include <random>
#include <unistd.h>

#include "jnnts/commands.hpp"
#include "jnnts/error.hpp"
#include "jnnts/io.hpp"
#include "support.hpp"

using namespace jnnts;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("jnnts_io_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void put(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::kDiagnostic;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

std::vector<std::string> warnings;
void collect(const std::string& w) { warnings.push_back(w); }

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("tables parse commas and whitespace") {
    const auto dir = scratch("tables");
    put(dir / "a.csv", "a,b\n1,2.5\n-3e2, 4\n");
    put(dir / "b.txt", "a b\n1   2.5\n-300\t4\n\n");
    const Mat a = read_table(dir / "a.csv");
    const Mat b = read_table(dir / "b.txt");
    CHECK(a.rows() == 2);
    CHECK(a == b);
    CHECK(a(1, 0) == -300.0);

    put(dir / "bad.csv", "a,b\n1,2\n3,x\n");
    const std::string msg = message_of([&] { read_table(dir / "bad.csv"); });
    CHECK(msg.find("bad.csv") != std::string::npos);
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("column 2") != std::string::npos);
    put(dir / "ragged.csv", "a,b\n1,2\n3\n");
    CHECK(code_of([&] { read_table(dir / "ragged.csv"); }) == ErrorCode::kInput);
    CHECK(code_of([&] { read_table(dir / "missing.csv"); }) == ErrorCode::kInput);
    fs::remove_all(dir);
  }

  TEST_CASE("full precision round trip") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::uint64_t> bits;
    for (int k = 0; k < 2000; ++k) {
      double v;
      const std::uint64_t b = bits(rng);
      std::memcpy(&v, &b, sizeof v);
      if (!std::isfinite(v)) continue;
      CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
    }
    Rng r(2);
    const Dataset d = testing::random_dataset(7, 4, 3, r);
    for (ZLayout layout : {ZLayout::kStacked, ZLayout::kUpperTriangle}) {
      const auto dir = scratch(std::string("rt_") + z_layout_name(layout));
      DatasetPaths paths = save_dataset(d, dir, "", layout);
      paths.z_layout = ZLayout::kAuto;
      const Dataset back = load_dataset(paths);
      CHECK(back.y == d.y);
      CHECK(back.W == d.W);
      CHECK(back.X == d.X);
      CHECK(back.coords == d.coords);
      for (std::size_t i = 0; i < 7; ++i) CHECK(back.Z[i] == d.Z[i]);
      fs::remove_all(dir);
    }
  }

  TEST_CASE("upper triangle indexing and W intercept") {
    const auto dir = scratch("tri");
    put(dir / "y.csv", "y\n1\n2\n");
    put(dir / "X.csv", "x0,x1,x2\n1,2,3\n4,5,6\n");
    put(dir / "Z.csv", "z01,z02,z12\n7,8,9\n1,2,3\n");
    put(dir / "W.csv", "age\n30\n40\n");
    DatasetPaths p;
    p.y = dir / "y.csv";
    p.X = dir / "X.csv";
    p.Z = dir / "Z.csv";
    p.W = dir / "W.csv";
    warnings.clear();
    set_warning_handler(collect);
    const Dataset d = load_dataset(p);
    CHECK(d.Z[0](0, 1) == 7.0);
    CHECK(d.Z[0](0, 2) == 8.0);
    CHECK(d.Z[0](1, 2) == 9.0);
    CHECK(d.Z[0](2, 1) == 9.0);
    CHECK(d.Z[0](1, 1) == 0.0);
    CHECK(d.W.cols() == 2);
    CHECK(d.W.col(0) == Vec::Ones(2));
    CHECK(d.W(1, 1) == 40.0);
    CHECK(warnings.size() == 1);

    put(dir / "y.csv", "y\n1\nnan\n");
    const std::string msg = message_of([&] { load_dataset(p); });
    CHECK(msg.find("row 2") != std::string::npos);

    put(dir / "y.csv", "y\n1\n2\n");
    put(dir / "Z.csv", "a,b,c\n0,1,2\n1.1,0,3\n2,3,0\n0,1,2\n1,0,3\n2,3,0\n");
    p.z_layout = ZLayout::kStacked;
    CHECK(code_of([&] { load_dataset(p); }) == ErrorCode::kInput);
    put(dir / "Z.csv", "a,b,c\n0,1,2\n1.000000001,0,3\n2,3,0\n0,1,2\n1,0,3\n2,3,0\n");
    CHECK(load_dataset(p).Z[0](0, 1) == doctest::Approx(1.0));
    put(dir / "X.csv", "x0,x1,x2\n1,2,3\n");
    CHECK(code_of([&] { load_dataset(p); }) == ErrorCode::kInput);
    set_warning_handler(nullptr);
    fs::remove_all(dir);
  }

  TEST_CASE("chain files round trip") {
    Rng rng(3);
    Dataset d = testing::random_dataset(20, 4, 2, rng);
    ModelConfig cfg;
    const PriorStructure prior = make_prior_structure(d.coords, cfg.kernel, 4);
    d.y = testing::simulate_outcome(d, testing::sample_prior_state(4, 2, cfg, prior, rng), rng);
    const auto chain = run_chain(d, prior, cfg, 5, 60, 20);
    const auto dir = scratch("chain");
    write_chain(dir / "c.csv", chain);
    const auto back = read_chain(dir / "c.csv", chain.header);
    REQUIRE(back.size() == chain.size());
    for (std::size_t t = 0; t < chain.size(); ++t) {
      CHECK(back.draws[t].eta == chain.draws[t].eta);
      CHECK(back.draws[t].latent.alpha_tilde == chain.draws[t].latent.alpha_tilde);
      CHECK(back.draws[t].latent.theta_r == chain.draws[t].latent.theta_r);
      CHECK(back.draws[t].var.field == chain.draws[t].var.field);
      CHECK(back.draws[t].latent.lambda == chain.draws[t].latent.lambda);
      CHECK(back.network_indicators[t] == chain.network_indicators[t]);
    }
    const auto cols = chain_columns(chain.header);
    CHECK(cols.front() == "eta_0");
    CHECK(cols[3] == "beta_tilde_1");
    CHECK(std::find(cols.begin(), cols.end(), "lambda") - std::find(cols.begin(), cols.end(), "rho") == 1);
    CHECK(chain_header_from_json(to_json(chain.header)).p == 4);
    fs::remove_all(dir);
  }

  TEST_CASE("run configuration") {
    const Json j = Json::parse(R"({
      "seed": 4, "chains": 2, "n_iter": 100, "n_burn": 50,
      "model": {"rank": 3, "ablation": "network-only",
                "kernel": {"kind": "hemisphere-symmetric", "pairs": [[0, 1]]},
                "hyperpriors": {"lambda_max": 2.0, "sigma_eps": {"shape": 1.0, "rate": 2.0}},
                "mh": {"adapt": false}},
      "data": {"y": "y.csv", "X": "X.csv", "Z": "Z.csv"},
      "scenario": {"scenario": "S2-decoupled", "sigma_eps": 6}
    })");
    const RunConfig c = run_config_from_json(j, "/base");
    CHECK(c.seed == 4);
    CHECK(c.model.rank == 3);
    CHECK(c.model.ablation == Ablation::kNetworkOnly);
    CHECK(c.model.kernel.pairs.size() == 1);
    CHECK(c.model.hyper.eps.rate == 2.0);
    CHECK(c.model.hyper.beta.rate == 0.1);
    CHECK_FALSE(c.model.mh.adapt);
    CHECK(c.data.y == fs::path("/base/y.csv"));
    CHECK(c.scenario.scenario == Scenario::kDecoupled);
    CHECK(c.scenario.sigma_eps == 6.0);
    CHECK(c.scenario.seed == 4);

    // Echo parses back to the same configuration.
    const RunConfig again = run_config_from_json(to_json(c));
    CHECK(to_json(again) == to_json(c));

    RunConfig defaults = run_config_from_json(Json::object());
    CHECK(defaults.n_iter == 10000);
    CHECK(defaults.n_burn == 5000);
    CHECK(defaults.chains == 1);

    auto bad = [](const char* text) {
      return code_of([&] { run_config_from_json(Json::parse(text)); });
    };
    CHECK(bad(R"({"seeds": 1})") == ErrorCode::kConfiguration);
    CHECK(bad(R"({"model": {"kernel": {"lengthscale": 2}}})") == ErrorCode::kConfiguration);
    CHECK(bad(R"({"n_iter": 10, "n_burn": 10})") == ErrorCode::kConfiguration);
    CHECK(bad(R"({"chains": 0})") == ErrorCode::kConfiguration);
    CHECK(bad(R"({"chains": -2})") == ErrorCode::kConfiguration);
    CHECK(bad(R"({"model": {"ablation": "both"}})") == ErrorCode::kConfiguration);
    CHECK(bad(R"({"model": {"rank": 0}})") == ErrorCode::kConfiguration);
    CHECK_NOTHROW(run_config_from_json(Json::parse(R"({"model": {"rank": 0, "ablation": "node-only"}})")));
  }

  TEST_CASE("ground truth round trip") {
    const ScenarioData d = generate_scenario(default_scenario(Scenario::kEdgeRemoved, 2.0, 3));
    const GroundTruth back = ground_truth_from_json(Json::parse(to_json(d.truth).dump()));
    CHECK(back.signal_matrix == d.truth.signal_matrix);
    CHECK(back.coefficients.alpha == d.truth.coefficients.alpha);
    CHECK(back.true_edges == d.truth.true_edges);
    CHECK(back.noise_test == d.truth.noise_test);
    CHECK(back.spec.removed_edges == d.truth.spec.removed_edges);
    CHECK(code_of([] { ground_truth_from_json(Json::object()); }) == ErrorCode::kInput);
  }

  TEST_CASE("commands write and clean up artifacts") {
    const auto dir = scratch("cmd");
    RunConfig c = run_config_from_json(Json::parse(R"({"n_iter": 60, "n_burn": 30, "chains": 2,
      "scenario": {"scenario": "S1-coupled", "p": 8, "n": 40, "n_test": 10,
                   "true_nodes": [0, 1, 2], "true_subnetworks": [[0, 1, 2], [3, 4, 5]]}})"));
    c.output_dir = dir / "sim";
    const CommandResult sim = run_command(Command::kSimulate, c);
    CHECK(fs::exists(dir / "sim" / "truth.json"));
    CHECK(fs::exists(dir / "sim" / "train_Z.csv"));
    CHECK(sim.report["config"]["seed"] == 0);

    c.data = {dir / "sim" / "train_y.csv", dir / "sim" / "train_W.csv", dir / "sim" / "train_X.csv",
              dir / "sim" / "train_Z.csv", dir / "sim" / "train_coords.csv", ZLayout::kAuto};
    c.output_dir = dir / "fit";
    run_command(Command::kFit, c);
    CHECK(fs::exists(dir / "fit" / "chain_0.csv"));
    CHECK(fs::exists(dir / "fit" / "chain_1.json"));
    const Json summary = read_json(dir / "fit" / "summary.json");
    CHECK(summary.contains("config"));
    CHECK(summary["summary"]["node_mpp"].size() == 8);

    c.fit_dir = dir / "fit";
    c.test = {dir / "sim" / "test_y.csv", dir / "sim" / "test_W.csv", dir / "sim" / "test_X.csv",
              dir / "sim" / "test_Z.csv", dir / "sim" / "test_coords.csv", ZLayout::kAuto};
    c.output_dir = dir / "eval_missing";
    c.truth = dir / "sim" / "nope.json";
    CHECK(code_of([&] { run_command(Command::kEvaluate, c); }) == ErrorCode::kInput);
    CHECK_FALSE(fs::exists(dir / "eval_missing"));

    c.truth = dir / "sim" / "truth.json";
    c.output_dir = dir / "eval";
    const CommandResult ev = run_command(Command::kEvaluate, c);
    CHECK(ev.report["metrics"].contains("r2_test"));
    CHECK(fs::exists(dir / "eval" / "metrics.csv"));

    c.output_dir = dir / "diag";
    const CommandResult dg = run_command(Command::kDiagnose, c, true);
    CHECK(fs::exists(dir / "diag" / "trace_log_sigma_eps.csv"));
    CHECK((dg.exit_code == 0 || dg.exit_code == 5));

    // A failure after some files were written leaves nothing behind.
    RunConfig broken = c;
    broken.fit_dir.clear();
    broken.data.Z = dir / "sim" / "test_Z.csv";
    broken.output_dir = dir / "broken";
    CHECK(code_of([&] { run_command(Command::kFit, broken); }) == ErrorCode::kInput);
    CHECK_FALSE(fs::exists(dir / "broken"));
    fs::remove_all(dir);
  }
}
