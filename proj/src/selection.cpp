#include "tite_stein/selection.hpp"

#include "tite_stein/isotonic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tite_stein {

void FinalData::validate() const {
    const auto d = n.size();
    if (d == 0) throw contract_error("FinalData: no doses");
    if (y_tox.size() != d || y_eff.size() != d) throw contract_error("FinalData: vectors differ in length");
    if (!eliminated.empty() && eliminated.size() != d) {
        throw contract_error("FinalData: eliminated flags differ in length");
    }
    for (std::size_t i = 0; i < d; ++i) {
        if (n[i] < 0 || y_tox[i] < 0 || y_eff[i] < 0 || y_tox[i] > n[i] || y_eff[i] > n[i]) {
            throw contract_error("FinalData: counts at dose " + std::to_string(i + 1) + " are inconsistent");
        }
    }
}

namespace {

constexpr double kClamp = 1e-10;

double log_likelihood(std::span<const double> q, std::span<const int> n, std::span<const double> y) {
    double ll = 0.0;
    for (std::size_t d = 0; d < q.size(); ++d) {
        if (n[d] == 0) continue;
        const double qc = std::clamp(q[d], kClamp, 1.0 - kClamp);
        ll += y[d] * std::log(qc) + (n[d] - y[d]) * std::log1p(-qc);
    }
    return ll;
}

std::vector<double> observed_rates(std::span<const int> n, std::span<const int> y) {
    std::vector<double> rate(n.size(), 0.0);
    for (std::size_t d = 0; d < n.size(); ++d) {
        if (n[d] > 0) rate[d] = static_cast<double>(y[d]) / n[d];
    }
    return rate;
}

std::vector<double> as_weights(std::span<const int> n) { return {n.begin(), n.end()}; }

}  // namespace

ModelAverage model_average(std::span<const double> q_hat, std::span<const double> reg_weights,
                           std::span<const int> n, std::span<const double> y) {
    const auto dose_count = q_hat.size();
    if (reg_weights.size() != dose_count || n.size() != dose_count || y.size() != dose_count) {
        throw contract_error("model_average: inputs differ in length");
    }
    ModelAverage out;
    std::vector<double> log_l(dose_count);
    for (std::size_t mode = 1; mode <= dose_count; ++mode) {
        out.fits.push_back(unimodal_isotonic(q_hat, reg_weights, static_cast<int>(mode)));
        log_l[mode - 1] = log_likelihood(out.fits.back(), n, y);
    }
    const double top = *std::max_element(log_l.begin(), log_l.end());
    double total = 0.0;
    out.weights.resize(dose_count);
    for (std::size_t k = 0; k < dose_count; ++k) {
        out.weights[k] = std::exp(log_l[k] - top);
        total += out.weights[k];
    }
    for (double& w : out.weights) w /= total;
    out.q.assign(dose_count, 0.0);
    for (std::size_t k = 0; k < dose_count; ++k) {
        for (std::size_t d = 0; d < dose_count; ++d) out.q[d] += out.weights[k] * out.fits[k][d];
    }
    return out;
}

ModelAverage model_average_efficacy(const FinalData& data) {
    data.validate();
    const auto weights = as_weights(data.n);
    if (std::none_of(weights.begin(), weights.end(), [](double w) { return w > 0.0; })) {
        throw contract_error("model_average_efficacy: every dose is untried");
    }
    const std::vector<double> responses(data.y_eff.begin(), data.y_eff.end());
    return model_average(observed_rates(data.n, data.y_eff), weights, data.n, responses);
}

SelectionReport select_candidate(const FinalData& data, const DesignParams& params) {
    data.validate();
    if (data.num_doses() != params.num_doses) {
        throw contract_error("select_candidate: data has " + std::to_string(data.num_doses()) +
                             " doses, design has " + std::to_string(params.num_doses));
    }
    const auto dose_count = data.n.size();
    SelectionReport report;
    report.eligible.assign(dose_count, false);
    report.utilities.assign(dose_count, std::numeric_limits<double>::quiet_NaN());
    bool any_tried = false;
    for (std::size_t d = 0; d < dose_count; ++d) {
        const bool elim = !data.eliminated.empty() && data.eliminated[d];
        report.eligible[d] = data.n[d] > 0 && !elim;
        any_tried = any_tried || data.n[d] > 0;
    }
    if (!any_tried) return report;

    const auto weights = as_weights(data.n);
    report.p_tilde = pava_isotonic(observed_rates(data.n, data.y_tox), weights, Direction::increasing);
    const std::vector<double> responses(data.y_eff.begin(), data.y_eff.end());
    auto avg = model_average(observed_rates(data.n, data.y_eff), weights, data.n, responses);
    report.q_tilde = std::move(avg.q);
    report.model_weights = std::move(avg.weights);

    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t d = 0; d < dose_count; ++d) {
        if (!report.eligible[d]) continue;
        report.utilities[d] = utility(report.p_tilde[d], report.q_tilde[d], params);
        if (report.utilities[d] > best) {
            best = report.utilities[d];
            report.candidate = static_cast<int>(d + 1);
        }
    }
    return report;
}

}  // namespace tite_stein
