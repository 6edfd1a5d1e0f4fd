#pragma once

#include <string>
#include <vector>

#include "report.hpp"
#include "scenario.hpp"

namespace pipcli {

inline const std::vector<std::string> kTasks{"spectrum", "krein",      "tightness",
                                             "klmn",     "frames",     "identities",
                                             "demo-boundary-extension"};

struct TaskResult {
  Report report;
  json parameters;  // task-specific effective parameters, merged into the header
  std::vector<std::string> summary;  // one cell per summary column
};

// Settings from the scenario ("trunc", "grid.points", "tol", "jobs", "seed").
Settings settings_from(const json& scenario);

// Throws SchemaError for malformed input and pip::Error from the library.
TaskResult run_task(const std::string& task, const json& scenario, const Settings& settings);

// Fixed columns of the per-task summary used by sweeps.
std::vector<std::string> summary_columns(const std::string& task);

// The swept values: "values": [...] or "from"/"to"/"step".  An empty range is allowed.
std::vector<json> sweep_values(const json& sweep);

// parameter,status,<summary columns>: one row per value, in input order.
Report run_sweep(const json& scenario, const std::string& task, unsigned jobs);

json report_header(const std::string& task, const json& scenario, const Settings& s, const json& parameters);

}  // namespace pipcli
