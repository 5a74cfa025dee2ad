#include "leafpipe/embed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "leafpipe/log.hpp"
#include "leafpipe/rng.hpp"

namespace leafpipe::embed {

void TsneConfig::validate(size_t n_points) const {
    if (n_points < 4) throw DataError("tsne: need at least 4 points");
    if (n_points > kMaxTsnePoints) {
        throw DataError("tsne: " + std::to_string(n_points) + " points exceeds the exact-method cap of " +
                        std::to_string(kMaxTsnePoints));
    }
    if (!(perplexity > 0.0) || perplexity >= static_cast<double>(n_points)) {
        throw ConfigError("tsne: perplexity must lie in (0, N)");
    }
    if (iterations < 1 || momentum_switch_iter < 0 || exaggeration_iters < 0) {
        throw ConfigError("tsne: iteration counts must be positive");
    }
    if (!(learning_rate > 0.0) || !(early_exaggeration >= 1.0)) {
        throw ConfigError("tsne: learning_rate must be positive and exaggeration >= 1");
    }
    if (momentum_start < 0.0 || momentum_start >= 1.0 || momentum_final < 0.0 ||
        momentum_final >= 1.0) {
        throw ConfigError("tsne: momentum must lie in [0,1)");
    }
}

namespace {

SquareMatrix pairwise_squared_distances(const std::vector<std::vector<double>>& x) {
    const size_t n = x.size();
    const size_t dim = x[0].size();
    SquareMatrix d2(n);
    for (size_t i = 0; i < n; ++i) {
        if (x[i].size() != dim) throw DataError("tsne: inconsistent feature dimensions");
        for (size_t j = i + 1; j < n; ++j) {
            double sum = 0.0;
            for (size_t k = 0; k < dim; ++k) {
                const double delta = x[i][k] - x[j][k];
                sum += delta * delta;
            }
            d2.at(i, j) = sum;
            d2.at(j, i) = sum;
        }
    }
    return d2;
}

// Row entropy (bits) and normalized probabilities for precision beta.
double row_distribution(const SquareMatrix& d2, size_t row, double beta,
                        std::vector<double>& probs) {
    const size_t n = d2.n;
    double sum = 0.0;
    double min_d2 = -1.0;
    for (size_t j = 0; j < n; ++j) {
        if (j == row) continue;
        if (min_d2 < 0.0 || d2.at(row, j) < min_d2) min_d2 = d2.at(row, j);
    }
    for (size_t j = 0; j < n; ++j) {
        if (j == row) {
            probs[j] = 0.0;
            continue;
        }
        // shift by the row minimum so exp() cannot underflow for the nearest neighbor
        probs[j] = std::exp(-beta * (d2.at(row, j) - min_d2));
        sum += probs[j];
    }
    double entropy_nats = 0.0;
    for (size_t j = 0; j < n; ++j) {
        if (j == row) continue;
        probs[j] /= sum;
        if (probs[j] > 0.0) entropy_nats -= probs[j] * std::log(probs[j]);
    }
    return entropy_nats / std::log(2.0);
}

}  // namespace

SquareMatrix conditional_affinities(const std::vector<std::vector<double>>& features,
                                    double perplexity) {
    const size_t n = features.size();
    if (n < 4) throw DataError("conditional_affinities: need at least 4 points");
    if (!(perplexity > 0.0) || perplexity >= static_cast<double>(n)) {
        throw ConfigError("conditional_affinities: perplexity must lie in (0, N)");
    }
    for (size_t i = 0; i < n; ++i) {
        for (double v : features[i]) {
            if (!std::isfinite(v)) {
                throw DataError("conditional_affinities: non-finite feature in row " +
                                std::to_string(i));
            }
        }
    }

    const SquareMatrix d2 = pairwise_squared_distances(features);
    const double tolerance = 1e-5;
    constexpr int kMaxIterations = 64;

    SquareMatrix cond(n);
    std::vector<double> probs(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
        double beta = 1.0;
        double lo = 0.0;
        double hi = std::numeric_limits<double>::infinity();
        bool converged = false;
        for (int it = 0; it < kMaxIterations; ++it) {
            const double entropy_bits = row_distribution(d2, i, beta, probs);
            const double achieved = std::exp2(entropy_bits);
            if (std::abs(achieved - perplexity) <= tolerance) {
                converged = true;
                break;
            }
            if (achieved > perplexity) {
                // entropy too high -> sharpen
                lo = beta;
                beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
            } else {
                hi = beta;
                beta = lo == 0.0 ? beta * 0.5 : 0.5 * (beta + lo);
            }
        }
        if (!converged) {
            throw DataError("conditional_affinities: perplexity " + std::to_string(perplexity) +
                            " unreachable for row " + std::to_string(i) +
                            " (duplicate or degenerate neighborhood)");
        }
        for (size_t j = 0; j < n; ++j) cond.at(i, j) = probs[j];
    }
    return cond;
}

SquareMatrix symmetrize(const SquareMatrix& conditional) {
    const size_t n = conditional.n;
    if (n == 0) throw DataError("symmetrize: empty matrix");
    SquareMatrix p(n);
    const double scale = 1.0 / (2.0 * static_cast<double>(n));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            p.at(i, j) = (conditional.at(i, j) + conditional.at(j, i)) * scale;
        }
    }
    return p;
}

KlGrad kl_and_gradient(const SquareMatrix& p, const std::vector<Point2>& y) {
    const size_t n = p.n;
    if (y.size() != n || n == 0) throw DataError("kl_and_gradient: shape mismatch");

    // Student-t kernel weights and their normalization
    SquareMatrix w(n);
    double w_sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            const double dx = y[i][0] - y[j][0];
            const double dy = y[i][1] - y[j][1];
            const double weight = 1.0 / (1.0 + dx * dx + dy * dy);
            w.at(i, j) = weight;
            w.at(j, i) = weight;
            w_sum += 2.0 * weight;
        }
    }

    KlGrad out;
    out.grad.assign(n, Point2{0.0, 0.0});
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double q = std::max(w.at(i, j) / w_sum, 1e-12);
            const double pij = p.at(i, j);
            if (pij > 0.0) out.kl += pij * std::log(pij / q);
            const double coeff = 4.0 * (pij - q) * w.at(i, j);
            out.grad[i][0] += coeff * (y[i][0] - y[j][0]);
            out.grad[i][1] += coeff * (y[i][1] - y[j][1]);
        }
    }
    return out;
}

TsneResult tsne(const std::vector<std::vector<double>>& features, const TsneConfig& cfg) {
    const size_t n = features.size();
    cfg.validate(n);

    // jitter exact duplicate rows so the bandwidth search stays well-posed
    std::vector<std::vector<double>> points = features;
    {
        std::map<std::vector<double>, size_t> seen;
        auto jitter_stream = derive_stream(cfg.seed, stream_tag("tsne-jitter"));
        size_t jittered = 0;
        for (size_t i = 0; i < n; ++i) {
            auto [it, inserted] = seen.emplace(points[i], i);
            if (!inserted) {
                for (double& v : points[i]) v += jitter_stream.uniform(-1e-10, 1e-10);
                ++jittered;
            }
        }
        if (jittered > 0) {
            log::info("tsne: jittered " + std::to_string(jittered) + " duplicate feature rows");
        }
    }

    const SquareMatrix p = symmetrize(conditional_affinities(points, cfg.perplexity));

    auto init_stream = derive_stream(cfg.seed, stream_tag("tsne-init"));
    std::vector<Point2> y(n);
    for (auto& point : y) {
        point[0] = init_stream.normal() * 1e-2;
        point[1] = init_stream.normal() * 1e-2;
    }

    SquareMatrix p_exaggerated = p;
    for (double& v : p_exaggerated.values) v *= cfg.early_exaggeration;

    TsneResult result;
    std::vector<Point2> velocity(n, Point2{0.0, 0.0});
    for (int iter = 0; iter < cfg.iterations; ++iter) {
        const bool exaggerating = iter < cfg.exaggeration_iters;
        const double momentum =
            iter < cfg.momentum_switch_iter ? cfg.momentum_start : cfg.momentum_final;
        const KlGrad step = kl_and_gradient(exaggerating ? p_exaggerated : p, y);
        // trace the true objective even while the gradient uses exaggerated P
        result.kl_trace.push_back(exaggerating ? kl_and_gradient(p, y).kl : step.kl);

        for (size_t i = 0; i < n; ++i) {
            velocity[i][0] = momentum * velocity[i][0] - cfg.learning_rate * step.grad[i][0];
            velocity[i][1] = momentum * velocity[i][1] - cfg.learning_rate * step.grad[i][1];
            y[i][0] += velocity[i][0];
            y[i][1] += velocity[i][1];
        }
        // keep the embedding centered
        double mean_x = 0.0;
        double mean_y = 0.0;
        for (const auto& point : y) {
            mean_x += point[0];
            mean_y += point[1];
        }
        mean_x /= static_cast<double>(n);
        mean_y /= static_cast<double>(n);
        for (auto& point : y) {
            point[0] -= mean_x;
            point[1] -= mean_y;
        }
    }
    result.coords = std::move(y);
    return result;
}

}  // namespace leafpipe::embed
