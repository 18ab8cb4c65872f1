#include "bfnflow/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "bfnflow/geometry.hpp"

namespace bfnflow::metrics {

namespace {

double wrapped_deg(double a, double b) {
    const double d = geo::wrap_angle(a - b);
    return std::min(d, geo::kTwoPi - d) * 180.0 / geo::kPi;
}

}  // namespace

double wrapped_mae(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size()) {
        throw std::invalid_argument("wrapped_mae: length mismatch");
    }
    if (pred.empty()) {
        throw std::invalid_argument("wrapped_mae: empty input");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += wrapped_deg(pred[i], truth[i]);
    return acc / static_cast<double>(pred.size());
}

double correct_fraction(std::span<const double> pred, std::span<const double> truth,
                        double threshold_deg) {
    if (pred.size() != truth.size()) {
        throw std::invalid_argument("correct_fraction: length mismatch");
    }
    if (pred.empty()) {
        throw std::invalid_argument("correct_fraction: empty input");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (wrapped_deg(pred[i], truth[i]) <= threshold_deg) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double aar(std::span<const int> seq_pred, std::span<const int> seq_true) {
    if (seq_pred.size() != seq_true.size()) {
        throw std::invalid_argument("aar: length mismatch");
    }
    if (seq_pred.empty()) {
        throw std::invalid_argument("aar: empty input");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < seq_pred.size(); ++i) {
        if (seq_pred[i] == seq_true[i]) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(seq_pred.size());
}

double hamming_diversity(const std::vector<std::vector<int>>& seqs) {
    if (seqs.size() < 2) {
        throw std::invalid_argument("hamming_diversity: needs at least two sequences");
    }
    const std::size_t len = seqs.front().size();
    for (const auto& s : seqs) {
        if (s.size() != len) {
            throw std::invalid_argument("hamming_diversity: sequences differ in length");
        }
    }
    double acc = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        for (std::size_t j = i + 1; j < seqs.size(); ++j) {
            int d = 0;
            for (std::size_t p = 0; p < len; ++p) d += seqs[i][p] != seqs[j][p];
            acc += d;
            ++pairs;
        }
    }
    return acc / static_cast<double>(pairs);
}

}  // namespace bfnflow::metrics
