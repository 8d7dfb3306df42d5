#include "tite_stein/isotonic.hpp"

#include "tite_stein/design.hpp"

#include <algorithm>
#include <cmath>

namespace tite_stein {

namespace {

void check_inputs(std::span<const double> values, std::span<const double> weights, const char* who) {
    if (values.size() != weights.size()) {
        throw contract_error(std::string(who) + ": values and weights differ in length");
    }
    bool positive = false;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw contract_error(std::string(who) + ": weights must be >= 0");
        positive = positive || w > 0.0;
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw contract_error(std::string(who) + ": values must be finite");
    }
    if (!positive) throw contract_error(std::string(who) + ": at least one weight must be positive");
}

struct Block {
    double wsum;
    double wvsum;
    double vsum;
    std::size_t count;

    double value() const { return wsum > 0.0 ? wvsum / wsum : vsum / static_cast<double>(count); }
};

std::vector<double> pava_increasing(std::span<const double> values, std::span<const double> weights) {
    std::vector<Block> blocks;
    blocks.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        blocks.push_back({weights[i], weights[i] * values[i], values[i], 1});
        while (blocks.size() > 1 && blocks[blocks.size() - 2].value() > blocks.back().value()) {
            Block top = blocks.back();
            blocks.pop_back();
            Block& prev = blocks.back();
            prev.wsum += top.wsum;
            prev.wvsum += top.wvsum;
            prev.vsum += top.vsum;
            prev.count += top.count;
        }
    }
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& b : blocks) out.insert(out.end(), b.count, b.value());
    return out;
}

std::vector<double> pava_any(std::span<const double> values, std::span<const double> weights,
                             Direction direction) {
    if (values.empty()) return {};
    if (direction == Direction::increasing) return pava_increasing(values, weights);
    std::vector<double> negated(values.begin(), values.end());
    for (double& v : negated) v = -v;
    auto fit = pava_increasing(negated, weights);
    for (double& v : fit) v = -v;
    return fit;
}

}  // namespace

std::vector<double> pava_isotonic(std::span<const double> values, std::span<const double> weights,
                                  Direction direction) {
    check_inputs(values, weights, "pava_isotonic");
    return pava_any(values, weights, direction);
}

double weighted_sse(std::span<const double> fit, std::span<const double> values,
                    std::span<const double> weights) {
    double sse = 0.0;
    for (std::size_t i = 0; i < fit.size(); ++i) sse += weights[i] * (fit[i] - values[i]) * (fit[i] - values[i]);
    return sse;
}

// The prefix fit under the extra bound x <= v is min(a, v), and likewise for
// the suffix, so the problem reduces to a convex search over the peak value v.
// The optimum is either a breakpoint of the clipping or the weighted mean of
// the clipped points together with the mode.
std::vector<double> unimodal_isotonic(std::span<const double> values, std::span<const double> weights,
                                      int mode) {
    check_inputs(values, weights, "unimodal_isotonic");
    const auto n = values.size();
    if (mode < 1 || static_cast<std::size_t>(mode) > n) throw contract_error("unimodal_isotonic: mode out of range");
    const auto m = static_cast<std::size_t>(mode - 1);

    const auto prefix = pava_any(values.first(m), weights.first(m), Direction::increasing);
    const auto suffix = pava_any(values.subspan(m + 1), weights.subspan(m + 1), Direction::decreasing);

    auto fit_for = [&](double v) {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < m; ++i) x[i] = std::min(prefix[i], v);
        x[m] = v;
        for (std::size_t i = m + 1; i < n; ++i) x[i] = std::min(suffix[i - m - 1], v);
        return x;
    };

    std::vector<double> candidates;
    candidates.push_back(values[m]);
    if (m > 0) candidates.push_back(prefix[m - 1]);
    if (m + 1 < n) candidates.push_back(suffix[0]);
    candidates.insert(candidates.end(), prefix.begin(), prefix.end());
    candidates.insert(candidates.end(), suffix.begin(), suffix.end());
    for (std::size_t k = 0; k <= m; ++k) {
        for (std::size_t l = 0; l < n - m; ++l) {
            double ws = weights[m];
            double wv = weights[m] * values[m];
            for (std::size_t i = m - k; i < m; ++i) ws += weights[i], wv += weights[i] * values[i];
            for (std::size_t i = m + 1; i <= m + l; ++i) ws += weights[i], wv += weights[i] * values[i];
            if (ws > 0.0) candidates.push_back(wv / ws);
        }
    }

    std::vector<double> best;
    double best_sse = 0.0;
    for (double v : candidates) {
        auto x = fit_for(v);
        const double sse = weighted_sse(x, values, weights);
        if (best.empty() || sse < best_sse - 1e-15) {
            best = std::move(x);
            best_sse = sse;
        }
    }
    return best;
}

}  // namespace tite_stein
