// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>

#include "npconv/tensors.hpp"
#include "npconv/triplets.hpp"
#include "npconv/vvor.hpp"

namespace npc {

/// max_i |a_i - b_i| / max(max_i |b_i|, floor). Relative to the largest
/// reference magnitude so zero-crossing elements cannot blow up the metric;
/// `floor` guards all-zero references.
double rel_error(std::span<const double> a, std::span<const double> b,
                 double floor = 1e-30);
double rel_error_f32(std::span<const float> a, std::span<const double> b,
                     double floor = 1e-30);

struct GradCheckResult {
  double max_rel_w = 0.0;   // analytic vs finite-difference weight gradient
  double max_rel_in = 0.0;  // analytic vs finite-difference input gradient
};

/// Central finite differences of the scalar loss sum(projection * F_out)
/// against the analytic gradients. Forward evaluations go through the dense
/// oracle, so this checks the gradient engines against an independent route.
/// `h` is the central step (default 1e-6).
GradCheckResult finite_difference_check(const WeightTensor<double>& weights,
                                        const FeatureTensor<double>& fin,
                                        const TripletList& triplets, std::int64_t n_out,
                                        const FeatureTensor<double>& projection,
                                        const FeatureTensor<double>& grad_in,
                                        const WeightGradient<double>& grad_w,
                                        double h = 1e-6);

}  // namespace npc
