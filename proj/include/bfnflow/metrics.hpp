#pragma once

#include <span>
#include <string>
#include <vector>

namespace bfnflow::metrics {

/// Mean over elements of the minimal circular distance min(|d|, 2pi - |d|),
/// reported in degrees. Throws on length mismatch or empty input.
double wrapped_mae(std::span<const double> pred, std::span<const double> truth);

/// Fraction of elements whose wrapped deviation is within threshold_deg.
double correct_fraction(std::span<const double> pred, std::span<const double> truth,
                        double threshold_deg = 20.0);

/// Amino-acid recovery: percent of matching positions. Throws on mismatch.
double aar(std::span<const int> seq_pred, std::span<const int> seq_true);

/// Mean pairwise Hamming distance over unordered sequence pairs. Throws
/// with fewer than two sequences or unequal lengths.
double hamming_diversity(const std::vector<std::vector<int>>& seqs);

}  // namespace bfnflow::metrics
