#pragma once

#include <span>
#include <vector>

namespace trendlens {

/// Locally weighted polynomial regression.
///
/// For every query point the `span_points` nearest abscissae form the
/// neighbourhood; its radius h is the distance to the farthest of them
/// (widened by (span_points - n)/2 sample spacings when the span exceeds the
/// data). Neighbours get tricube weights (1 - (r/h)^3)^3, multiplied by the
/// optional robustness weights, and a weighted least-squares polynomial of
/// `degree` (0, 1 or 2) is evaluated at the query point. Query points may lie
/// outside the data range.
///
/// A neighbourhood whose design is rank-deficient for the requested degree
/// falls back to lower degrees, down to the weighted mean. If every weight in
/// the neighbourhood is zero the robustness-weighted mean is used instead, and
/// a NumericalError is thrown when even that is empty.
std::vector<double> loess(std::span<const double> xs, std::span<const double> ys, std::span<const double> at,
                          std::size_t span_points, int degree, std::span<const double> weights = {});

/// Single-point variant of `loess`.
double loess_at(std::span<const double> xs, std::span<const double> ys, double x0, std::size_t span_points,
                int degree, std::span<const double> weights = {});

}  // namespace trendlens
