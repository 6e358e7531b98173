#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "causalvar/bounds.hpp"
#include "causalvar/error.hpp"
#include "causalvar/experiment.hpp"
#include "causalvar/io.hpp"
#include "causalvar/parallel.hpp"
#include "causalvar/risk.hpp"
#include "causalvar/var_process.hpp"

using namespace causalvar;

namespace {

enum Exit { kOk = 0, kBadInput = 2, kNumerical = 3, kConfig = 4 };

struct Globals {
  std::optional<std::uint64_t> seed;
  int threads = defaultThreads();
  std::string config;
  std::string out;
};

// Values from --config fill options not given on the command line.
void applyConfig(CLI::App& sub, const std::map<std::string, std::string>& kv,
                 const std::set<std::string>& reserved) {
  for (const auto& [key, value] : kv) {
    if (reserved.count(key)) continue;
    CLI::Option* opt = nullptr;
    try {
      opt = sub.get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw ConfigError("config key '" + key + "' is not an option of '" + sub.get_name() + "'");
    }
    if (opt->count() > 0) continue;
    opt->add_result(value);
    opt->run_callback();
  }
}

void emit(const std::string& outPath, const std::string& text) {
  if (outPath.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(outPath, std::ios::binary);
  if (!f) throw InvalidInput("cannot write '" + outPath + "'");
  f << text;
}

int fail(const char* tag, int code, const std::string& what) {
  std::string line = what;
  for (char& c : line)
    if (c == '\n') c = ' ';
  std::cerr << "error[" << tag << "]: " << line << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Statistical versus interventional forecast risk of VAR models"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seedValue = 0;
  CLI::Option* seedOpt = app.add_option("--seed", seedValue, "Seed for every stochastic step");
  app.add_option("--threads", g.threads, "Worker cap (default: hardware threads)")->check(CLI::PositiveNumber);
  app.add_option("--config", g.config, "key = value file");
  app.add_option("--out", g.out, "Output file (directory for experiment)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Sample a path from a model JSON");
  std::string modelFile;
  int n = 0;
  int burnIn = -1;
  bool allowUnstable = false;
  std::string noise = "gaussian";
  sim->add_option("--model", modelFile, "Model JSON");
  sim->add_option("--n", n, "Path length");
  sim->add_option("--burn-in", burnIn, "Discarded initial steps (default from the spectral radius)");
  sim->add_option("--noise", noise, "gaussian | uniform");
  sim->add_flag("--allow-unstable", allowUnstable, "Simulate non-stationary models");

  // risk
  auto* risk = app.add_subcommand("risk", "Analytic risk report");
  std::string truthFile, fittedFile, specFile;
  int omega = 1;
  int component = 1;
  for (CLI::App* s : {risk}) {
    s->add_option("--truth", truthFile, "True model JSON");
    s->add_option("--fitted", fittedFile, "Fitted model JSON");
    s->add_option("--omega", omega, "Forecast horizon");
    s->add_option("--component", component, "Output component (1-based)");
    s->add_option("--spec", specFile, "Intervention JSON (default: averaged on --component)");
  }

  // bounds
  auto* bnd = app.add_subcommand("bounds", "Bound table for a model pair");
  std::string pathFile;
  double rho = 0.0, truncation = 0.0, confidence = 0.05, kp = 0.0;
  int mu = 0, blockLen = 0, radDraws = 200;
  bnd->add_option("--truth", truthFile, "True model JSON");
  bnd->add_option("--fitted", fittedFile, "Fitted model JSON");
  bnd->add_option("--omega", omega, "Forecast horizon");
  bnd->add_option("--component", component, "Intervened component (1-based)");
  bnd->add_option("--path", pathFile, "Training path CSV (enables the finite-sample bound)");
  bnd->add_option("--rho", rho, "Mixing rate (default: truth spectral radius)");
  bnd->add_option("--M", truncation, "Loss truncation (default: 99.9th percentile)");
  bnd->add_option("--conf", confidence, "Confidence delta");
  bnd->add_option("--kp", kp, "Stability bound constant (default 4 q^q)");
  bnd->add_option("--mu", mu, "Block count (with --m; default scheme otherwise)");
  bnd->add_option("--m", blockLen, "Block length");
  bnd->add_option("--rademacher-draws", radDraws, "Sign vectors for the Rademacher estimate");

  // experiment
  auto* exp = app.add_subcommand("experiment", "Simulation study; writes CSV and metadata");
  std::vector<std::string> overrides;
  exp->add_option("--set", overrides, "key=value override of the experiment config");

  try {
    app.parse(argc, argv);
    if (seedOpt->count() > 0) g.seed = seedValue;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("usage", kBadInput, e.what());
  }

  const auto started = std::chrono::steady_clock::now();
  try {
    if (*exp) {
      std::map<std::string, std::string> kv;
      if (!g.config.empty()) kv = readKeyValueFile(g.config);
      for (const std::string& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + o + "'");
        kv[o.substr(0, eq)] = o.substr(eq + 1);
      }
      if (g.seed) kv["seed"] = std::to_string(*g.seed);
      const ExperimentConfig cfg = configFromMap(kv);
      const std::string dir = g.out.empty() ? "experiment_out" : g.out;
      const ExperimentResult res = runExperiment(cfg, g.threads);
      for (const std::string& f : writeExperiment(res, cfg, dir)) std::cout << f << '\n';
      for (const SummaryTable& t : res.tables)
        std::cerr << t.name << ": " << t.buckets.size() << " buckets\n";
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      std::cerr << "records " << res.records.size() << ", prop1 violations " << res.prop1Violations
                << ", wall " << secs << " s\n";
      return kOk;
    }

    std::map<std::string, std::string> kv;
    if (!g.config.empty()) kv = readKeyValueFile(g.config);
    const std::set<std::string> reserved{"seed", "threads", "out"};
    if (!g.seed && kv.count("seed")) g.seed = std::stoull(kv.at("seed"));
    if (g.out.empty() && kv.count("out")) g.out = kv.at("out");

    if (*sim) {
      applyConfig(*sim, kv, reserved);
      if (modelFile.empty()) throw InvalidInput("simulate: --model is required");
      if (n < 1) throw InvalidInput("simulate: --n must be positive");
      const VarModel model = modelFromJson(readJsonFile(modelFile));
      NoiseKind kind = NoiseKind::gaussian;
      if (noise == "uniform") kind = NoiseKind::uniform;
      else if (noise != "gaussian") throw InvalidInput("simulate: --noise must be gaussian or uniform");
      const SamplePath path = simulate(model, n, g.seed.value_or(0),
                                       burnIn >= 0 ? std::optional<int>(burnIn) : std::nullopt, kind,
                                       allowUnstable);
      std::ostringstream text;
      writePathCsv(text, path);
      emit(g.out, text.str());
      return kOk;
    }

    CLI::App* active = *risk ? risk : bnd;
    applyConfig(*active, kv, reserved);
    if (truthFile.empty() || fittedFile.empty()) throw InvalidInput("--truth and --fitted are required");
    const ModelPair pair(modelFromJson(readJsonFile(truthFile)), modelFromJson(readJsonFile(fittedFile)));
    if (component < 1 || component > pair.dim())
      throw InvalidInput("--component must lie in [1," + std::to_string(pair.dim()) + "]");

    if (*risk) {
      const InterventionSpec spec = specFile.empty()
                                        ? InterventionSpec::averaged(omega, {component - 1})
                                        : specFromJson(readJsonFile(specFile));
      emit(g.out, toJson(analyticReport(pair, spec, component - 1)).dump(2) + "\n");
      return kOk;
    }

    std::vector<BoundReport> reports{prop1Bound(pair, omega, component - 1)};
    if (pair.dim() == 1) {
      reports.push_back(cor2Bound(pair, omega, kp));
      reports.push_back(schurTightBound(pair, omega));
    }
    if (!pathFile.empty()) {
      SamplePath path = readPathCsv(pathFile);
      const double r = rho > 0.0 ? rho : pair.truthModulus();
      const BlockScheme scheme =
          mu > 0 && blockLen > 0
              ? BlockScheme::make(mu, blockLen)
              : BlockScheme::standard(path.length() - pair.fitted().order() - omega + 1, r, confidence);
      Thm1Options o;
      o.omega = omega;
      o.component = component - 1;
      o.truncation = truncation;
      o.rho = r;
      o.confidence = confidence;
      o.rademacherDraws = radDraws;
      o.seed = g.seed.value_or(0);
      reports.push_back(thm1Bound(pair, path, scheme, o));
    }
    Json all = Json::array();
    for (const BoundReport& b : reports) all.push_back(toJson(b));
    std::printf("%-11s %14s %14s %6s %14s\n", "bound", "lhs", "rhs", "holds", "slack");
    for (const BoundReport& b : reports)
      std::printf("%-11s %14.6g %14.6g %6s %14.6g\n", toString(b.name).c_str(), b.lhs, b.value,
                  b.holds ? "yes" : "NO", b.slack);
    if (!g.out.empty()) emit(g.out, all.dump(2) + "\n");
    return kOk;
  } catch (const NonStationaryError& e) {
    return fail("non_stationary", kBadInput, e.what());
  } catch (const InvalidInput& e) {
    return fail("invalid_input", kBadInput, e.what());
  } catch (const NumericalError& e) {
    return fail("numerical", kNumerical, e.what());
  } catch (const ConfigError& e) {
    return fail("config", kConfig, e.what());
  } catch (const std::exception& e) {
    return fail("invalid_input", kBadInput, e.what());
  }
}
