// SPDX-License-Identifier: Apache-2.0
#include "npconv/gradcheck.hpp"

#include <cmath>

#include "npconv/errors.hpp"
#include "npconv/oracle.hpp"

namespace npc {

double rel_error(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw ShapeError("rel_error: size mismatch");
  double max_diff = 0.0;
  double max_ref = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    max_diff = std::max(max_diff, std::abs(a[i] - b[i]));
    max_ref = std::max(max_ref, std::abs(b[i]));
  }
  return max_diff / std::max(max_ref, floor);
}

double rel_error_f32(std::span<const float> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw ShapeError("rel_error_f32: size mismatch");
  double max_diff = 0.0;
  double max_ref = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    max_diff = std::max(max_diff, std::abs(static_cast<double>(a[i]) - b[i]));
    max_ref = std::max(max_ref, std::abs(b[i]));
  }
  return max_diff / std::max(max_ref, floor);
}

namespace {

double projected_loss(const WeightTensor<double>& w, const FeatureTensor<double>& fin,
                      const TripletList& triplets, std::int64_t n_out,
                      const FeatureTensor<double>& projection) {
  const auto r = oracle::dense_conv_oracle(w, fin, triplets, n_out);
  const auto out = r.f_out.values();
  const auto proj = projection.values();
  double loss = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) loss += proj[i] * out[i];
  return loss;
}

}  // namespace

GradCheckResult finite_difference_check(const WeightTensor<double>& weights,
                                        const FeatureTensor<double>& fin,
                                        const TripletList& triplets, std::int64_t n_out,
                                        const FeatureTensor<double>& projection,
                                        const FeatureTensor<double>& grad_in,
                                        const WeightGradient<double>& grad_w, double h) {
  if (projection.n() != n_out || projection.groups() != weights.groups() ||
      projection.channels() != weights.c_out())
    throw ShapeError("finite_difference_check: projection shape mismatch");
  if (grad_in.n() != fin.n() || grad_in.groups() != fin.groups() ||
      grad_in.channels() != fin.channels())
    throw ShapeError("finite_difference_check: grad_in shape mismatch");
  if (grad_w.kernels() != weights.kernels() || grad_w.groups() != weights.groups() ||
      grad_w.c_out() != weights.c_out() || grad_w.c_in() != weights.c_in())
    throw ShapeError("finite_difference_check: grad_w shape mismatch");
  if (!(h > 0.0)) throw DomainError("finite_difference_check: h must be > 0");

  const std::int64_t groups = weights.groups();
  const std::int64_t cig = weights.c_in();
  const std::int64_t cog = weights.c_out();

  // d loss / d W[k,g,c,m], stored in gradient orientation (k,g,m,c).
  WeightTensor<double> w = weights;
  WeightGradient<double> fd_w(weights.kernels(), groups, cog, cig);
  for (std::int64_t k = 0; k < weights.kernels(); ++k)
    for (std::int64_t g = 0; g < groups; ++g)
      for (std::int64_t c = 0; c < cig; ++c)
        for (std::int64_t m = 0; m < cog; ++m) {
          const double orig = w.at(k, g, c, m);
          w.at(k, g, c, m) = orig + h;
          const double up = projected_loss(w, fin, triplets, n_out, projection);
          w.at(k, g, c, m) = orig - h;
          const double down = projected_loss(w, fin, triplets, n_out, projection);
          w.at(k, g, c, m) = orig;
          fd_w.matrix_mut(k, g)[m * cig + c] = (up - down) / (2.0 * h);
        }

  FeatureTensor<double> f = fin;
  FeatureTensor<double> fd_in(fin.n(), groups, cig);
  for (std::int64_t p = 0; p < fin.n(); ++p)
    for (std::int64_t g = 0; g < groups; ++g)
      for (std::int64_t c = 0; c < cig; ++c) {
        const double orig = f.at(p, g, c);
        f.at(p, g, c) = orig + h;
        const double up = projected_loss(weights, f, triplets, n_out, projection);
        f.at(p, g, c) = orig - h;
        const double down = projected_loss(weights, f, triplets, n_out, projection);
        f.at(p, g, c) = orig;
        fd_in.at(p, g, c) = (up - down) / (2.0 * h);
      }

  GradCheckResult r;
  r.max_rel_w = rel_error(grad_w.values(), fd_w.values());
  r.max_rel_in = rel_error(grad_in.values(), fd_in.values());
  return r;
}

}  // namespace npc
