#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "leafpipe/types.hpp"

namespace leafpipe::embed {

// Dense square matrix, row-major. Small helper; N is capped at 5000 so the
// O(N^2) exact computation stays tractable.
struct SquareMatrix {
    size_t n = 0;
    std::vector<double> values;

    SquareMatrix() = default;
    explicit SquareMatrix(size_t size, double fill = 0.0)
        : n(size), values(size * size, fill) {}

    double& at(size_t i, size_t j) { return values[i * n + j]; }
    double at(size_t i, size_t j) const { return values[i * n + j]; }
};

struct TsneConfig {
    double perplexity = 30.0;
    int iterations = 1000;
    double learning_rate = 200.0;
    double momentum_start = 0.5;
    double momentum_final = 0.8;
    int momentum_switch_iter = 250;
    double early_exaggeration = 12.0;
    int exaggeration_iters = 250;
    uint64_t seed = 0;

    void validate(size_t n_points) const;
};

inline constexpr size_t kMaxTsnePoints = 5000;

using Point2 = std::array<double, 2>;

// Row-stochastic Gaussian affinities: each row's bandwidth is found by binary
// search (at most 64 iterations) so 2^entropy matches the perplexity within
// 1e-5. Throws DataError naming the first row whose target is unreachable
// (e.g. enough exact duplicates to cap the entropy range).
SquareMatrix conditional_affinities(const std::vector<std::vector<double>>& features,
                                    double perplexity);

// P = (C + C^T) / (2N); symmetric, zero diagonal, entries sum to 1.
SquareMatrix symmetrize(const SquareMatrix& conditional);

struct KlGrad {
    double kl = 0.0;
    std::vector<Point2> grad;
};

// Student-t low-dimensional affinities Q from Y; KL(P||Q) with 0*log0 = 0 and
// Q floored at 1e-12; gradient 4*sum_j (p_ij - q_ij)(y_i - y_j)/(1+|y_i-y_j|^2).
KlGrad kl_and_gradient(const SquareMatrix& p, const std::vector<Point2>& y);

struct TsneResult {
    std::vector<Point2> coords;
    std::vector<double> kl_trace;  // KL against the un-exaggerated P, once per iteration
};

// Exact t-SNE: Y ~ N(0, 1e-4) from the seed, momentum gradient descent with
// early exaggeration, coordinates re-centered every iteration. Duplicate
// feature rows receive 1e-10 jitter (logged) before the affinity search.
TsneResult tsne(const std::vector<std::vector<double>>& features, const TsneConfig& cfg);

}  // namespace leafpipe::embed
