#include "jnnts/jnnts.h"

#include <atomic>
#include <cstdio>
#include <cstring>
#include <new>
#include <optional>
#include <string>

#include "jnnts/commands.hpp"
#include "jnnts/error.hpp"
#include "jnnts/prior.hpp"

struct jnnts_config {
  jnnts::RunConfig value;
};

struct jnnts_dataset {
  jnnts::Dataset value;
};

struct jnnts_fit {
  std::vector<jnnts::PosteriorChain> chains;
  jnnts::SelectionSummary summary;
  std::optional<jnnts::ConvergenceReport> convergence;
};

namespace {

thread_local std::string last_error;
std::atomic<bool> quiet{false};

void stderr_warning(const std::string& msg) {
  if (!quiet.load()) std::fprintf(stderr, "warning: %s\n", msg.c_str());
}

jnnts_status fail(jnnts_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <class F>
jnnts_status guarded(F&& f) {
  last_error.clear();
  try {
    return f();
  } catch (const jnnts::Error& e) {
    return fail(static_cast<jnnts_status>(static_cast<int>(e.code())),
                std::string(jnnts::error_code_name(e.code())) + ": " + e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(JNNTS_ERROR_INPUT, std::string("input_error: ") + e.what());
  } catch (const std::bad_alloc&) {
    return fail(JNNTS_ERROR_INTERNAL, "internal_error: out of memory");
  } catch (const std::exception& e) {
    return fail(JNNTS_ERROR_INTERNAL, std::string("internal_error: ") + e.what());
  } catch (...) {
    return fail(JNNTS_ERROR_INTERNAL, "internal_error: unknown failure");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

jnnts_status null_arg(const char* name) { return fail(JNNTS_ERROR_INPUT, std::string("input_error: null argument '") + name + "'"); }

struct WarningInit {
  WarningInit() { jnnts::set_warning_handler(stderr_warning); }
} warning_init;

}  // namespace

extern "C" {

const char* jnnts_version(void) { return "0.1.0"; }

const char* jnnts_last_error(void) { return last_error.c_str(); }

void jnnts_string_free(char* s) { std::free(s); }

void jnnts_set_quiet(int q) { quiet.store(q != 0); }

jnnts_status jnnts_config_load(const char* path, jnnts_config** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] {
    auto c = std::make_unique<jnnts_config>();
    c->value = jnnts::load_run_config(path);
    *out = c.release();
    return JNNTS_OK;
  });
}

jnnts_status jnnts_config_parse(const char* json, const char* base_dir, jnnts_config** out) {
  if (!json) return null_arg("json");
  if (!out) return null_arg("out");
  return guarded([&] {
    jnnts::Json j;
    try {
      j = jnnts::Json::parse(json);
    } catch (const nlohmann::json::exception& e) {
      jnnts::throw_config(std::string("config: ") + e.what());
    }
    auto c = std::make_unique<jnnts_config>();
    c->value = jnnts::run_config_from_json(j, base_dir ? base_dir : "");
    *out = c.release();
    return JNNTS_OK;
  });
}

jnnts_status jnnts_config_set_seed(jnnts_config* config, uint64_t seed) {
  if (!config) return null_arg("config");
  config->value.seed = seed;
  config->value.scenario.seed = seed;
  return JNNTS_OK;
}

jnnts_status jnnts_config_set_output_dir(jnnts_config* config, const char* dir) {
  if (!config) return null_arg("config");
  if (!dir) return null_arg("dir");
  config->value.output_dir = dir;
  return JNNTS_OK;
}

jnnts_status jnnts_config_to_json(const jnnts_config* config, char** out) {
  if (!config) return null_arg("config");
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = dup_string(jnnts::to_json(config->value).dump(2));
    return JNNTS_OK;
  });
}

void jnnts_config_free(jnnts_config* config) { delete config; }

jnnts_status jnnts_run(const char* command, const jnnts_config* config, int strict, char** report) {
  if (!command) return null_arg("command");
  if (!config) return null_arg("config");
  return guarded([&] {
    const auto res = jnnts::run_command(jnnts::parse_command(command), config->value, strict != 0);
    if (report) *report = dup_string(res.report.dump(2));
    if (res.exit_code != 0) {
      last_error = "non_convergence: Gelman-Rubin statistic above " + std::to_string(config->value.gr_threshold);
      return static_cast<jnnts_status>(res.exit_code);
    }
    return JNNTS_OK;
  });
}

jnnts_status jnnts_dataset_load(const char* y, const char* w, const char* x, const char* z, const char* coords,
                                const char* z_layout, jnnts_dataset** out) {
  if (!y) return null_arg("y");
  if (!x) return null_arg("x");
  if (!z) return null_arg("z");
  if (!out) return null_arg("out");
  return guarded([&] {
    jnnts::DatasetPaths p;
    p.y = y;
    p.X = x;
    p.Z = z;
    if (w) p.W = w;
    if (coords) p.coords = coords;
    if (z_layout) p.z_layout = jnnts::parse_z_layout(z_layout);
    auto d = std::make_unique<jnnts_dataset>();
    d->value = jnnts::load_dataset(p);
    *out = d.release();
    return JNNTS_OK;
  });
}

jnnts_status jnnts_dataset_dims(const jnnts_dataset* data, size_t* n, size_t* p, size_t* q) {
  if (!data) return null_arg("data");
  if (n) *n = data->value.n();
  if (p) *p = data->value.p();
  if (q) *q = data->value.q();
  return JNNTS_OK;
}

void jnnts_dataset_free(jnnts_dataset* data) { delete data; }

jnnts_status jnnts_fit_run(const jnnts_dataset* data, const jnnts_config* config, jnnts_fit** out) {
  if (!data) return null_arg("data");
  if (!config) return null_arg("config");
  if (!out) return null_arg("out");
  return guarded([&] {
    const auto& c = config->value;
    const auto& d = data->value;
    jnnts::validate_run_config(c);
    jnnts::validate_config(c.model, d);
    const auto prior = jnnts::make_prior_structure(d.coords, c.model.kernel, d.p(), c.model.delta);
    auto fit = std::make_unique<jnnts_fit>();
    fit->chains = jnnts::run_chains(d, prior, c.model, c.seed, c.n_iter, c.n_burn, c.chains);
    fit->summary = jnnts::summarize(jnnts::merge_chains(std::span<const jnnts::PosteriorChain>(fit->chains)),
                                    c.mpp_cutoff);
    if (fit->chains.size() >= 2 && fit->chains.front().size() >= 10) {
      const auto mon = jnnts::default_monitored_scalars();
      fit->convergence = jnnts::gelman_rubin(std::span<const jnnts::PosteriorChain>(fit->chains),
                                             std::span<const jnnts::MonitoredScalar>(mon));
    }
    *out = fit.release();
    return JNNTS_OK;
  });
}

jnnts_status jnnts_fit_draws(const jnnts_fit* fit, size_t* draws) {
  if (!fit) return null_arg("fit");
  if (!draws) return null_arg("draws");
  *draws = fit->summary.draws;
  return JNNTS_OK;
}

namespace {

jnnts_status copy_out(const double* src, size_t have, double* out, size_t len) {
  if (!out) return null_arg("out");
  if (len != have)
    return fail(JNNTS_ERROR_INPUT, "input_error: buffer length " + std::to_string(len) + ", expected " + std::to_string(have));
  std::memcpy(out, src, have * sizeof(double));
  return JNNTS_OK;
}

}  // namespace

jnnts_status jnnts_fit_node_mpp(const jnnts_fit* fit, double* out, size_t len) {
  if (!fit) return null_arg("fit");
  const auto& v = fit->summary.node_mpp;
  return copy_out(v.data(), static_cast<size_t>(v.size()), out, len);
}

jnnts_status jnnts_fit_edge_mpp(const jnnts_fit* fit, double* out, size_t len) {
  if (!fit) return null_arg("fit");
  // Symmetric, so the column-major storage reads the same row-major.
  const auto& m = fit->summary.union_edge_mpp;
  return copy_out(m.data(), static_cast<size_t>(m.size()), out, len);
}

jnnts_status jnnts_fit_beta_hat(const jnnts_fit* fit, double* out, size_t len) {
  if (!fit) return null_arg("fit");
  const auto& v = fit->summary.beta_hat;
  return copy_out(v.data(), static_cast<size_t>(v.size()), out, len);
}

jnnts_status jnnts_fit_max_psrf(const jnnts_fit* fit, double* out) {
  if (!fit) return null_arg("fit");
  if (!out) return null_arg("out");
  if (!fit->convergence)
    return fail(JNNTS_ERROR_DIAGNOSTIC, "diagnostic_error: Gelman-Rubin needs at least two chains with 10 or more draws");
  *out = fit->convergence->max_psrf();
  return JNNTS_OK;
}

jnnts_status jnnts_fit_summary_json(const jnnts_fit* fit, char** out) {
  if (!fit) return null_arg("fit");
  if (!out) return null_arg("out");
  return guarded([&] {
    jnnts::Json j = jnnts::to_json(fit->summary);
    if (fit->convergence) j["convergence"] = jnnts::to_json(*fit->convergence);
    *out = dup_string(j.dump(2));
    return JNNTS_OK;
  });
}

void jnnts_fit_free(jnnts_fit* fit) { delete fit; }

}  // extern "C"
