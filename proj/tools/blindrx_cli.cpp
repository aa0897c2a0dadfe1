// SPDX-License-Identifier: Apache-2.0
// Command-line front end for Monte Carlo experiments.
//
//   blindrx run <config> [--seed S] [--trials N] [--out FILE] [--workers W] [--diagnostics DIR]
//   blindrx sweep <config> --param PATH --values V1,V2,... [same flags]
//   blindrx validate <config>
//
// BLINDRX_SEED overrides the config seed; --seed overrides both.
// Exit status: 0 success, 1 configuration error, 2 runtime failure.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "blindrx/harness.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
  std::optional<std::string> diagnostics;
};

void apply_overrides(blindrx::Json& cfg, const Overrides& o) {
  if (const char* env = std::getenv("BLINDRX_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const std::string s(env);
      const auto v = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      cfg["seed"] = v;
    } catch (const std::exception&) {
      throw blindrx::ConfigError(std::vector<blindrx::Violation>{{"seed", "BLINDRX_SEED is not an unsigned integer"}});
    }
  }
  if (o.seed) cfg["seed"] = *o.seed;
  if (o.trials) cfg["trials"] = *o.trials;
  if (o.out) cfg["output"] = *o.out;
  if (o.workers) cfg["workers"] = *o.workers;
  if (o.diagnostics) cfg["diagnostics"] = *o.diagnostics;
}

void report_failures(const blindrx::ResultTable& t) {
  std::size_t failed = 0;
  for (const auto& r : t.rows)
    if (r.error) {
      ++failed;
      std::cerr << "trial " << r.trial << " (" << r.method << ", " << r.snr_db << " dB): " << r.message << '\n';
    }
  if (failed) std::cerr << failed << " of " << t.rows.size() << " rows flagged as errors\n";
}

void print_violations(const std::vector<blindrx::Violation>& v) {
  for (const auto& x : v) std::cerr << (x.path.empty() ? "<root>" : x.path) << ": " << x.message << '\n';
}

std::vector<double> parse_values(const std::string& list) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t end = std::min(list.find(',', start), list.size());
    const std::string item = list.substr(start, end - start);
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (item.empty() || used != item.size())
      throw blindrx::ConfigError(std::vector<blindrx::Violation>{{"values", "cannot parse '" + item + "'"}});
    out.push_back(v);
    start = end + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blind joint channel and source recovery experiments"};
  app.require_subcommand(1);

  std::string config;
  Overrides o;
  std::string param, values;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config, "JSON configuration file")->required();
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--trials", o.trials, "trials per SNR point");
    sub->add_option("--out", o.out, "output CSV path");
    sub->add_option("--workers", o.workers, "concurrent trials");
    sub->add_option("--diagnostics", o.diagnostics, "directory for per-trial PVD traces");
  };
  CLI::App* run = app.add_subcommand("run", "run one experiment");
  add_common(run);
  CLI::App* sw = app.add_subcommand("sweep", "run one experiment per parameter value");
  add_common(sw);
  sw->add_option("--param", param, "dotted parameter path, e.g. dims.N_t or snr_db")->required();
  sw->add_option("--values", values, "comma-separated values")->required();
  CLI::App* val = app.add_subcommand("validate", "check a configuration");
  val->add_option("config", config, "JSON configuration file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    blindrx::Json cfg = blindrx::load_config(config);
    apply_overrides(cfg, o);
    if (*val) {
      const auto v = blindrx::validate(cfg);
      if (v.empty()) {
        std::cout << "ok\n";
        return kOk;
      }
      print_violations(v);
      return kConfigError;
    }
    if (*run) {
      const auto parsed = blindrx::parse_config(cfg);
      const auto table = blindrx::run_experiment(parsed);
      table.write_csv(parsed.output);
      report_failures(table);
      std::cout << "wrote " << table.rows.size() << " rows to " << parsed.output << '\n';
      return kOk;
    }
    const auto parsed = blindrx::parse_config(cfg);
    const auto result = blindrx::sweep(cfg, param, parse_values(values));
    std::ofstream out(parsed.output);
    if (!out) throw blindrx::Error("cannot write " + parsed.output);
    blindrx::write_summary_csv(result.summary, param, out);
    for (const auto& t : result.tables) report_failures(t);
    std::cout << "wrote " << result.summary.size() << " summary rows to " << parsed.output << '\n';
    return kOk;
  } catch (const blindrx::ConfigError& e) {
    print_violations(e.violations());
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}
