#pragma once

#include "tite_stein/design.hpp"
#include "tite_stein/selection.hpp"

#include <cstdint>

namespace tite_stein {

struct VerificationReport {
    int candidate = 0;
    double p_g = 0.0;
    bool accepted = false;
    int M = 0;
    double U_B = 0.0;
    double p_min = 0.0;
    double utility_mean = 0.0;
    double utility_q05 = 0.0;
    double utility_q50 = 0.0;
    double utility_q95 = 0.0;
};

/// Posterior-sampling check of the candidate's utility. Each of the M draws
/// passes through the same isotonic and model-averaging steps as selection,
/// with the draw standing in for the observed rates (n_d trials and n_d q_d
/// responses in the pseudo-likelihood). p_g is the share of draws with
/// utility above U_B. Deterministic in `seed`.
VerificationReport verify(const FinalData& data, int candidate, const DesignParams& params,
                          std::uint64_t seed);

}  // namespace tite_stein
