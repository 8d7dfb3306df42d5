#pragma once

#include <span>
#include <vector>

namespace tite_stein {

enum class Direction { increasing, decreasing };

/// Weighted least-squares projection onto the monotone cone (pool adjacent
/// violators). Zero-weight points take the value of the block they fall in;
/// a block made only of zero-weight points takes their plain mean.
std::vector<double> pava_isotonic(std::span<const double> values, std::span<const double> weights,
                                  Direction direction = Direction::increasing);

/// Weighted least-squares fit that rises up to `mode` (1-based) and falls
/// after it.
std::vector<double> unimodal_isotonic(std::span<const double> values, std::span<const double> weights,
                                      int mode);

/// Weighted sum of squared residuals.
double weighted_sse(std::span<const double> fit, std::span<const double> values,
                    std::span<const double> weights);

}  // namespace tite_stein
