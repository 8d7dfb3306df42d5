#include "tite_stein/verification.hpp"

#include "tite_stein/isotonic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace tite_stein {

namespace {

double draw_beta(double a, double b, std::mt19937_64& rng) {
    std::gamma_distribution<double> ga(a, 1.0);
    std::gamma_distribution<double> gb(b, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    return x / (x + y);
}

double quantile(const std::vector<double>& sorted, double prob) {
    const double pos = prob * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

VerificationReport verify(const FinalData& data, int candidate, const DesignParams& params,
                          std::uint64_t seed) {
    data.validate();
    if (candidate < 1 || candidate > data.num_doses()) throw contract_error("verify: candidate out of range");
    if (!data.tried(candidate)) throw contract_error("verify: candidate dose is untried");
    const auto& v = params.verify;
    if (v.M < 1) throw contract_error("verify: M must be >= 1");

    const auto dose_count = data.n.size();
    const std::vector<double> weights(data.n.begin(), data.n.end());
    const auto c = static_cast<std::size_t>(candidate - 1);

    std::mt19937_64 rng(seed);
    std::vector<double> p(dose_count), q(dose_count), pseudo_y(dose_count), utilities;
    utilities.reserve(static_cast<std::size_t>(v.M));
    int above = 0;
    for (int m = 0; m < v.M; ++m) {
        for (std::size_t d = 0; d < dose_count; ++d) {
            p[d] = draw_beta(data.y_tox[d] + v.alpha_T, data.n[d] - data.y_tox[d] + v.beta_T, rng);
            q[d] = draw_beta(data.y_eff[d] + v.alpha_E, data.n[d] - data.y_eff[d] + v.beta_E, rng);
        }
        const auto p_fit = pava_isotonic(p, weights, Direction::increasing);
        for (std::size_t d = 0; d < dose_count; ++d) pseudo_y[d] = data.n[d] * q[d];
        const auto q_avg = model_average(q, weights, data.n, pseudo_y);
        const double u = utility(p_fit[c], q_avg.q[c], params);
        utilities.push_back(u);
        if (u > v.U_B) ++above;
    }

    VerificationReport report;
    report.candidate = candidate;
    report.M = v.M;
    report.U_B = v.U_B;
    report.p_min = v.p_min;
    report.p_g = static_cast<double>(above) / v.M;
    report.accepted = report.p_g > v.p_min;
    double sum = 0.0;
    for (double u : utilities) sum += u;
    report.utility_mean = sum / v.M;
    std::sort(utilities.begin(), utilities.end());
    report.utility_q05 = quantile(utilities, 0.05);
    report.utility_q50 = quantile(utilities, 0.50);
    report.utility_q95 = quantile(utilities, 0.95);
    return report;
}

}  // namespace tite_stein
