// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "usd/graph.hpp"

namespace usd {

// Builds the loss on a fresh graph bound to the parameters under test and
// returns the single-element loss node. Must be deterministic.
using GraphLoss = std::function<NodeId(Graph&)>;

struct GradCheckOptions {
  double tolerance = 1e-4;
  // Denominator floor for the relative error, so gradients that are zero up
  // to rounding are compared on an absolute scale.
  double denominator_floor = 1e-6;
  std::size_t max_elements = 10000;
  // Added to element 0 of every analytic gradient tensor. Used to prove the
  // checker catches a broken backward pass.
  double injected_fault = 0.0;
};

struct ParamGradCheck {
  std::string name;
  Shape shape;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  std::vector<ParamGradCheck> params;
  double tolerance = 0.0;
  double max_rel_error = 0.0;
  bool passed = false;
};

// |a - n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric, double floor);

// Central differences with step 1e-5 * max(1, |theta|) on every element of
// every parameter, compared against Graph::backward.
GradCheckReport finite_diff_check(const ParameterSet& params, const GraphLoss& loss,
                                  const GradCheckOptions& options = {});

std::string format_report(const GradCheckReport& report);

}  // namespace usd
