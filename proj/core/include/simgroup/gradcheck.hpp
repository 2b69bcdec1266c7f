#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "simgroup/graph.hpp"

namespace simgroup {

struct GradCheckOptions {
  double step = 1e-4;
  // Floor on the denominator of the relative error.
  double eps_abs = 1e-6;
  // 0 checks every entry; otherwise at most this many entries per parameter,
  // spread evenly.
  std::size_t max_entries_per_parameter = 0;
};

struct ParameterGradError {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  // Entries whose +/- step crossed a relu, hinge, max or zero-distance kink.
  std::size_t excluded = 0;
};

struct GradReport {
  double step = 0.0;
  std::vector<ParameterGradError> parameters;
  double max_rel_error = 0.0;
  std::size_t total_checked = 0;
  std::size_t total_excluded = 0;
};

// Compares backward() against central differences for every parameter of
// the graph. Parameter values are restored before returning; parameter
// gradients are left holding the analytic gradient.
GradReport check_gradients(Graph& graph, const GradCheckOptions& options = {});

double relative_error(double analytic, double numeric, double eps_abs);

}  // namespace simgroup
