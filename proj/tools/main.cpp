#include <filesystem>
#include <iostream>
#include <optional>
#include <regex>
#include <string>

#include <CLI11.hpp>

#include "pip/errors.hpp"
#include "report.hpp"
#include "scenario.hpp"
#include "tasks.hpp"

namespace {

struct Flags {
  std::string scenario;
  std::string out = ".";
  std::optional<std::size_t> trunc;
  std::optional<std::string> grid;
  std::optional<double> tol;
  std::optional<unsigned> jobs;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--scenario", f.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--trunc", f.trunc, "Truncation size N");
  cmd->add_option("--grid", f.grid, "Spectral grid resolution WxH");
  cmd->add_option("--tol", f.tol, "Identity residual tolerance");
  cmd->add_option("--jobs", f.jobs, "Worker threads");
}

// Command-line flags take precedence over the scenario values.
pipcli::json apply_flags(pipcli::json sc, const Flags& f) {
  if (f.trunc) sc["trunc"] = *f.trunc;
  if (f.tol) sc["tol"] = *f.tol;
  if (f.jobs) sc["jobs"] = *f.jobs;
  if (f.grid) {
    static const std::regex wxh(R"((\d+)[xX](\d+))");
    std::smatch m;
    if (!std::regex_match(*f.grid, m, wxh)) throw pipcli::SchemaError("--grid: expected WxH, got '" + *f.grid + "'");
    if (sc.contains("grid") && !sc["grid"].is_object()) throw pipcli::SchemaError("grid: expected an object");
    sc["grid"]["points"] = {std::stoul(m[1].str()), std::stoul(m[2].str())};
  }
  return sc;
}

int run(const std::string& task, const Flags& flags) {
  const pipcli::json original = pipcli::read_scenario(flags.scenario);
  const pipcli::json sc = apply_flags(original, flags);
  const pipcli::Settings s = pipcli::settings_from(sc);
  if (sc.contains("task") && sc.at("task") != task && task != "sweep")
    std::cerr << "note: scenario task '" << sc.at("task").get<std::string>() << "' overridden by '" << task << "'\n";

  pipcli::Report report;
  pipcli::json header;
  if (task == "sweep") {
    const pipcli::json& sw = pipcli::field(sc, "sweep", "scenario");
    std::string inner;
    if (sw.contains("task"))
      inner = sw.at("task").get<std::string>();
    else if (sc.contains("task"))
      inner = sc.at("task").get<std::string>();
    else
      throw pipcli::SchemaError("sweep: no task given");
    if (inner == "sweep") throw pipcli::SchemaError("sweep: cannot sweep a sweep");
    report = pipcli::run_sweep(sc, inner, s.jobs);
    header = pipcli::report_header(task, original, s, {{"sweep", sw}, {"sweep_task", inner}});
  } else {
    auto result = pipcli::run_task(task, sc, s);
    report = std::move(result.report);
    header = pipcli::report_header(task, original, s, result.parameters);
  }
  pipcli::write_report(flags.out, task, report, header);
  std::cout << (std::filesystem::path(flags.out) / (task + ".json")).string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partial inner product space computations from JSON scenarios"};
  app.require_subcommand(1);
  Flags flags;
  std::string task;
  for (const char* name : {"spectrum", "krein", "tightness", "klmn", "frames", "identities", "sweep"}) {
    auto* cmd = app.add_subcommand(name, std::string("Run the ") + name + " task");
    add_common(cmd, flags);
    cmd->callback([&task, name] { task = name; });
  }
  auto* demo = app.add_subcommand("demo", "Demonstrations");
  demo->require_subcommand(1);
  auto* boundary = demo->add_subcommand("boundary-extension", "Spectra of the self-adjoint extensions S_alpha");
  add_common(boundary, flags);
  boundary->callback([&task] { task = "demo-boundary-extension"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    return run(task, flags);
  } catch (const pipcli::SchemaError& e) {
    std::cerr << "SchemaError: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "SchemaError: " << e.what() << "\n";
    return 2;
  } catch (const pip::Error& e) {
    std::cerr << "ComputationError: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
