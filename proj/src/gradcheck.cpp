// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "usd/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "usd/error.hpp"

namespace usd {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

double eval_loss(const ParameterSet& params, const GraphLoss& loss) {
  Graph g(params);
  return g.value(loss(g)).item();
}

}  // namespace

GradCheckReport finite_diff_check(const ParameterSet& params, const GraphLoss& loss,
                                  const GradCheckOptions& options) {
  if (params.total_elements() > options.max_elements) {
    throw UsageError("finite_diff_check: " + std::to_string(params.total_elements()) +
                     " parameter elements exceeds limit " + std::to_string(options.max_elements));
  }
  Gradients analytic;
  {
    Graph g(params);
    const NodeId out = loss(g);
    if (!std::isfinite(g.value(out).item())) throw NumericError("finite_diff_check: loss is not finite at the base point");
    analytic = g.backward(out);
  }
  if (options.injected_fault != 0.0) {
    for (std::size_t p = 0; p < analytic.size(); ++p) analytic.at(p)[0] += options.injected_fault;
  }

  GradCheckReport report;
  report.tolerance = options.tolerance;
  ParameterSet probe = params;
  for (std::size_t p = 0; p < probe.size(); ++p) {
    ParamGradCheck pc;
    pc.name = probe.names()[p];
    pc.shape = probe.at(p).shape();
    Tensor& theta = probe.at(p);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double orig = theta[i];
      const double h = 1e-5 * std::max(1.0, std::abs(orig));
      theta[i] = orig + h;
      const double up = eval_loss(probe, loss);
      theta[i] = orig - h;
      const double down = eval_loss(probe, loss);
      theta[i] = orig;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericError("finite_diff_check: non-finite loss when perturbing " + pc.name + "[" +
                           std::to_string(i) + "] by +/-" + std::to_string(h));
      }
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic.at(p)[i];
      const double err = relative_error(a, numeric, options.denominator_floor);
      if (i == 0 || err > pc.max_rel_error) {
        pc.max_rel_error = err;
        pc.worst_index = i;
        pc.analytic = a;
        pc.numeric = numeric;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, pc.max_rel_error);
    report.params.push_back(std::move(pc));
  }
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

std::string format_report(const GradCheckReport& report) {
  std::string out;
  char line[256];
  for (const auto& p : report.params) {
    std::snprintf(line, sizeof line, "%-28s %-12s max_rel_err=%.3e  (analytic=% .6e numeric=% .6e)\n",
                  p.name.c_str(), shape_str(p.shape).c_str(), p.max_rel_error, p.analytic, p.numeric);
    out += line;
  }
  std::snprintf(line, sizeof line, "overall max_rel_err=%.3e tolerance=%.1e -> %s\n", report.max_rel_error,
                report.tolerance, report.passed ? "PASS" : "FAIL");
  out += line;
  return out;
}

}  // namespace usd
