#pragma once

#include "tite_stein/design.hpp"

#include <span>
#include <vector>

namespace tite_stein {

/// Fully observed end-of-trial data, one entry per dose.
struct FinalData {
    std::vector<int> n;
    std::vector<int> y_tox;
    std::vector<int> y_eff;
    std::vector<bool> eliminated;

    int num_doses() const noexcept { return static_cast<int>(n.size()); }
    bool tried(int dose) const { return n.at(static_cast<std::size_t>(dose - 1)) > 0; }

    /// Throws contract_error on ragged vectors or counts outside [0, n].
    void validate() const;
};

struct ModelAverage {
    std::vector<double> q;                    // model-averaged estimate per dose
    std::vector<double> weights;              // pi per mode, sums to 1
    std::vector<std::vector<double>> fits;    // fits[mode - 1][dose - 1]
};

/// Averages the D unimodal fits of `q_hat` (regression weights `reg_weights`)
/// by their binomial pseudo-likelihoods under n trials with y responses.
/// `y` may be fractional. Doses with n = 0 contribute a factor of one.
ModelAverage model_average(std::span<const double> q_hat, std::span<const double> reg_weights,
                           std::span<const int> n, std::span<const double> y);

/// model_average on the observed response rates with weights n_d.
ModelAverage model_average_efficacy(const FinalData& data);

struct SelectionReport {
    std::vector<double> p_tilde;
    std::vector<double> q_tilde;
    std::vector<double> model_weights;
    std::vector<double> utilities;   // NaN for ineligible doses
    std::vector<bool> eligible;      // tried and not eliminated
    int candidate = 0;               // 1-based, 0 when no dose is eligible
};

/// Isotonic toxicity, model-averaged efficacy and the utility argmax over
/// tried, non-eliminated doses. Ties go to the lower dose.
SelectionReport select_candidate(const FinalData& data, const DesignParams& params);

}  // namespace tite_stein
