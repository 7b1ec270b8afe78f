#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <sys/wait.h>

#include "jnnts/jnnts.h"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

fs::path fresh(const std::string& name) {
  const fs::path p = fs::path(JNNTS_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string take(char* s) {
  std::string out = s ? s : "";
  jnnts_string_free(s);
  return out;
}

const char* kSmallScenario = R"({
  "seed": 11, "chains": 2, "n_iter": 80, "n_burn": 40,
  "model": {"rank": 2},
  "scenario": {"scenario": "S1-coupled", "p": 8, "n": 60, "n_test": 20,
               "true_nodes": [0, 1, 2, 3], "true_subnetworks": [[0, 1, 2], [4, 5, 6]]}
})";

struct Config {
  jnnts_config* c = nullptr;
  ~Config() { jnnts_config_free(c); }
};

// Runs the CLI and returns its exit status; stdout goes to out_file.
int cli(const std::string& args, const fs::path& out_file) {
  const std::string cmd = std::string("\"") + JNNTS_CLI_PATH + "\" " + args + " > \"" + out_file.string() + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

Json read_json(const fs::path& p) {
  std::ifstream f(p);
  return Json::parse(f);
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

}  // namespace

TEST_SUITE("capi") {
  TEST_CASE("configuration errors carry a status and message") {
    jnnts_set_quiet(1);
    CHECK(std::string(jnnts_version()).size() > 0);
    jnnts_config* c = nullptr;
    CHECK(jnnts_config_parse("{\"bogus\": 1}", ".", &c) == JNNTS_ERROR_CONFIGURATION);
    CHECK(c == nullptr);
    CHECK(std::string(jnnts_last_error()).find("bogus") != std::string::npos);
    CHECK(jnnts_config_parse("{not json", ".", &c) == JNNTS_ERROR_CONFIGURATION);
    CHECK(jnnts_config_parse(nullptr, ".", &c) != JNNTS_OK);
    CHECK(jnnts_config_load("/nonexistent/config.json", &c) == JNNTS_ERROR_CONFIGURATION);
    CHECK(jnnts_run("fly", nullptr, 0, nullptr) != JNNTS_OK);

    Config ok;
    REQUIRE(jnnts_config_parse("{\"seed\": 3}", ".", &ok.c) == JNNTS_OK);
    CHECK(jnnts_run("fly", ok.c, 0, nullptr) == JNNTS_ERROR_CONFIGURATION);
    CHECK(jnnts_config_set_seed(ok.c, 99) == JNNTS_OK);
    char* text = nullptr;
    REQUIRE(jnnts_config_to_json(ok.c, &text) == JNNTS_OK);
    CHECK(Json::parse(take(text))["seed"] == 99);
  }

  TEST_CASE("dataset load and in-memory fit") {
    jnnts_set_quiet(1);
    const fs::path dir = fresh("capi_fit");
    Config c;
    REQUIRE(jnnts_config_parse(kSmallScenario, dir.c_str(), &c.c) == JNNTS_OK);
    REQUIRE(jnnts_config_set_output_dir(c.c, (dir / "sim").c_str()) == JNNTS_OK);
    char* report = nullptr;
    REQUIRE(jnnts_run("simulate", c.c, 0, &report) == JNNTS_OK);
    CHECK(Json::parse(take(report)).contains("config"));

    const fs::path s = dir / "sim";
    jnnts_dataset* d = nullptr;
    CHECK(jnnts_dataset_load((s / "train_y.csv").c_str(), nullptr, (s / "train_X.csv").c_str(),
                             (s / "train_Z.csv").c_str(), nullptr, "sideways", &d) == JNNTS_ERROR_CONFIGURATION);
    REQUIRE(jnnts_dataset_load((s / "train_y.csv").c_str(), (s / "train_W.csv").c_str(),
                               (s / "train_X.csv").c_str(), (s / "train_Z.csv").c_str(),
                               (s / "train_coords.csv").c_str(), "auto", &d) == JNNTS_OK);
    size_t n = 0, p = 0, q = 0;
    REQUIRE(jnnts_dataset_dims(d, &n, &p, &q) == JNNTS_OK);
    CHECK(p == 8);
    CHECK(q == 1);
    CHECK(n + 6 == 60);

    jnnts_fit* fit = nullptr;
    REQUIRE(jnnts_fit_run(d, c.c, &fit) == JNNTS_OK);
    size_t draws = 0;
    CHECK(jnnts_fit_draws(fit, &draws) == JNNTS_OK);
    CHECK(draws == 80);
    std::vector<double> node(p), edge(p * p), beta(p);
    CHECK(jnnts_fit_node_mpp(fit, node.data(), p - 1) == JNNTS_ERROR_INPUT);
    REQUIRE(jnnts_fit_node_mpp(fit, node.data(), p) == JNNTS_OK);
    REQUIRE(jnnts_fit_edge_mpp(fit, edge.data(), p * p) == JNNTS_OK);
    REQUIRE(jnnts_fit_beta_hat(fit, beta.data(), p) == JNNTS_OK);
    for (size_t i = 0; i < p; ++i) {
      CHECK(node[i] >= 0.0);
      CHECK(node[i] <= 1.0);
      CHECK(edge[i * p + i] == 0.0);
      for (size_t j = 0; j < p; ++j) CHECK(edge[i * p + j] == edge[j * p + i]);
    }
    double psrf = 0.0;
    REQUIRE(jnnts_fit_max_psrf(fit, &psrf) == JNNTS_OK);
    CHECK(psrf > 0.9);
    char* summary = nullptr;
    REQUIRE(jnnts_fit_summary_json(fit, &summary) == JNNTS_OK);
    CHECK(Json::parse(take(summary))["node_mpp"].size() == p);
    jnnts_fit_free(fit);

    // One chain has no convergence statistic.
    Config one;
    REQUIRE(jnnts_config_parse("{\"n_iter\": 20, \"n_burn\": 10}", ".", &one.c) == JNNTS_OK);
    REQUIRE(jnnts_fit_run(d, one.c, &fit) == JNNTS_OK);
    CHECK(jnnts_fit_max_psrf(fit, &psrf) == JNNTS_ERROR_DIAGNOSTIC);
    jnnts_fit_free(fit);

    Config wide;
    CHECK(jnnts_config_parse("{\"model\": {\"rank\": 0}}", ".", &wide.c) == JNNTS_ERROR_CONFIGURATION);
    CHECK(jnnts_fit_run(d, nullptr, &fit) != JNNTS_OK);
    jnnts_dataset_free(d);
  }
}

TEST_SUITE("cli") {
  TEST_CASE("simulate, fit, tune, evaluate and diagnose") {
    const fs::path dir = fresh("cli");
    Json cfg = Json::parse(kSmallScenario);
    cfg["chains"] = 4;
    cfg["model"]["rank_candidates"] = {2, 3, 4, 5};
    cfg["data"] = {{"y", "sim/train_y.csv"}, {"W", "sim/train_W.csv"}, {"X", "sim/train_X.csv"},
                   {"Z", "sim/train_Z.csv"}, {"coords", "sim/train_coords.csv"}};
    cfg["validation"] = {{"y", "sim/validation_y.csv"}, {"W", "sim/validation_W.csv"},
                         {"X", "sim/validation_X.csv"}, {"Z", "sim/validation_Z.csv"},
                         {"coords", "sim/validation_coords.csv"}};
    cfg["test"] = {{"y", "sim/test_y.csv"}, {"W", "sim/test_W.csv"}, {"X", "sim/test_X.csv"},
                   {"Z", "sim/test_Z.csv"}, {"coords", "sim/test_coords.csv"}};
    cfg["truth"] = "sim/truth.json";
    cfg["fit_dir"] = "fit";
    write_text(dir / "run.json", cfg.dump(2));
    const std::string conf = "--config \"" + (dir / "run.json").string() + "\" --quiet";
    const fs::path log = dir / "log.txt";

    REQUIRE(cli("simulate " + conf + " --out \"" + (dir / "sim").string() + "\"", log) == 0);
    CHECK(fs::exists(dir / "sim" / "truth.json"));
    CHECK(read_json(dir / "sim" / "truth.json")["seed"] == 11);

    REQUIRE(cli("fit " + conf + " --out \"" + (dir / "fit").string() + "\"", log) == 0);
    for (int k = 0; k < 4; ++k) {
      CHECK(fs::exists(dir / "fit" / ("chain_" + std::to_string(k) + ".csv")));
      CHECK(fs::exists(dir / "fit" / ("chain_" + std::to_string(k) + ".json")));
    }
    CHECK(fs::exists(dir / "fit" / "summary.json"));
    CHECK(read_json(dir / "fit" / "convergence.json")["convergence"].contains("gelman_rubin"));

    REQUIRE(cli("tune " + conf + " --out \"" + (dir / "tune").string() + "\"", log) == 0);
    const Json tune = read_json(dir / "tune" / "tune.json");
    CHECK(tune["tune"]["validation_r2"].size() == 4);
    CHECK(tune["tune"]["chosen_R"].get<int>() >= 2);

    REQUIRE(cli("evaluate " + conf + " --out \"" + (dir / "eval").string() + "\"", log) == 0);
    const Json metrics = read_json(dir / "eval" / "metrics.json");
    CHECK(metrics["metrics"].contains("node_sens"));
    CHECK(fs::exists(dir / "eval" / "metrics.csv"));

    const int diag = cli("diagnose " + conf + " --strict --out \"" + (dir / "diag").string() + "\"", log);
    CHECK((diag == 0 || diag == 5));
    CHECK(fs::exists(dir / "diag" / "convergence.json"));
    const Json conv = read_json(dir / "diag" / "convergence.json");
    double worst = 0.0;
    for (const auto& g : conv["convergence"]["gelman_rubin"]) worst = std::max(worst, g["psrf"].is_string() ? INFINITY : g["psrf"].get<double>());
    CHECK((diag == 5) == (worst > 1.1));
  }

  TEST_CASE("failures exit nonzero and leave no partial output") {
    const fs::path dir = fresh("cli_fail");
    const fs::path log = dir / "log.txt";
    write_text(dir / "bad.json", "{\"n_iter\": 10, \"n_burn\": 20}");
    CHECK(cli("fit --config \"" + (dir / "bad.json").string() + "\"", log) == 3);
    CHECK(cli("fit", log) == 3);
    CHECK(cli("launch --config x", log) == 3);

    Json cfg = Json::parse(kSmallScenario);
    write_text(dir / "sim.json", cfg.dump());
    REQUIRE(cli("simulate --quiet --config \"" + (dir / "sim.json").string() + "\" --out \"" +
                    (dir / "sim").string() + "\"", log) == 0);
    cfg["data"] = {{"y", "sim/train_y.csv"}, {"X", "sim/train_X.csv"}, {"Z", "sim/train_Z.csv"},
                   {"coords", "sim/train_coords.csv"}};
    cfg["test"] = {{"y", "sim/test_y.csv"}, {"X", "sim/test_X.csv"}, {"Z", "sim/test_Z.csv"}};
    cfg["fit_dir"] = "sim";
    cfg["truth"] = "sim/missing_truth.json";
    write_text(dir / "eval.json", cfg.dump());
    CHECK(cli("evaluate --quiet --config \"" + (dir / "eval.json").string() + "\" --out \"" +
                  (dir / "eval").string() + "\"", log) == 2);
    CHECK_FALSE(fs::exists(dir / "eval"));

    // Mismatched Z rows fail after nothing useful was produced.
    cfg["data"]["Z"] = "sim/test_Z.csv";
    write_text(dir / "fit.json", cfg.dump());
    CHECK(cli("fit --quiet --config \"" + (dir / "fit.json").string() + "\" --out \"" +
                  (dir / "fit").string() + "\"", log) == 2);
    CHECK_FALSE(fs::exists(dir / "fit"));

    // Seed override reproduces files exactly.
    cfg.erase("truth");
    cfg.erase("test");
    cfg.erase("fit_dir");
    cfg["data"]["Z"] = "sim/train_Z.csv";
    cfg["chains"] = 1;
    write_text(dir / "fit.json", cfg.dump());
    for (const char* name : {"a", "b"})
      REQUIRE(cli("fit --quiet --seed 5 --config \"" + (dir / "fit.json").string() + "\" --out \"" +
                      (dir / name).string() + "\"", log) == 0);
    auto slurp = [](const fs::path& p) {
      std::ifstream f(p, std::ios::binary);
      return std::string(std::istreambuf_iterator<char>(f), {});
    };
    CHECK(slurp(dir / "a" / "chain_0.csv") == slurp(dir / "b" / "chain_0.csv"));
    CHECK(slurp(dir / "a" / "chain_0.csv").size() > 100);
  }
}
