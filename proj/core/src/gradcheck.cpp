#include "simgroup/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "simgroup/error.hpp"

namespace simgroup {

double relative_error(double analytic, double numeric, double eps_abs) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), eps_abs});
  return std::abs(analytic - numeric) / denom;
}

GradReport check_gradients(Graph& graph, const GradCheckOptions& options) {
  if (!(options.step > 0.0)) {
    throw ConfigError("check_gradients: step must be positive");
  }
  GradReport report;
  report.step = options.step;

  graph.forward();
  graph.zero_grad();
  graph.backward();
  const std::uint64_t base_signature = graph.kink_signature();

  for (NodeId param : graph.parameters()) {
    const Matrix original = graph.value(param);
    const Matrix analytic = graph.grad(param);
    ParameterGradError entry;
    entry.name = graph.name(param);

    std::size_t stride = 1;
    if (options.max_entries_per_parameter > 0 &&
        original.size() > options.max_entries_per_parameter) {
      stride = (original.size() + options.max_entries_per_parameter - 1) /
               options.max_entries_per_parameter;
    }
    for (std::size_t i = 0; i < original.size(); i += stride) {
      Matrix probe = original;
      probe[i] = original[i] + options.step;
      graph.set_value(param, probe);
      const double plus = graph.forward()[0];
      const std::uint64_t plus_signature = graph.kink_signature();

      probe[i] = original[i] - options.step;
      graph.set_value(param, probe);
      const double minus = graph.forward()[0];
      const std::uint64_t minus_signature = graph.kink_signature();

      if (plus_signature != base_signature || minus_signature != base_signature) {
        ++entry.excluded;
        continue;
      }
      const double numeric = (plus - minus) / (2.0 * options.step);
      entry.max_rel_error = std::max(entry.max_rel_error,
                                     relative_error(analytic[i], numeric, options.eps_abs));
      ++entry.checked;
    }
    graph.set_value(param, original);

    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.total_checked += entry.checked;
    report.total_excluded += entry.excluded;
    report.parameters.push_back(std::move(entry));
  }
  graph.forward();
  return report;
}

}  // namespace simgroup
