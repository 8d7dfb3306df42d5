#pragma once

#include "tite_stein/decision.hpp"
#include "tite_stein/design.hpp"
#include "tite_stein/interim.hpp"
#include "tite_stein/selection.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace tite_stein {

/// Distribution of an event time within its assessment window. Uniform over
/// (0, A], or piecewise uniform with `masses` over the window fractions
/// [breaks[k], breaks[k + 1]].
struct TimeLaw {
    enum class Kind { uniform, piecewise };
    Kind kind = Kind::uniform;
    std::vector<double> breaks;
    std::vector<double> masses;

    double sample(double window, std::mt19937_64& rng) const;
    void validate(const std::string& path) const;
};

struct Scenario {
    std::string name;
    std::vector<double> p_tox;
    std::vector<double> q_eff;
    TimeLaw tox_law;
    TimeLaw eff_law;
    int true_obd = 0;                   // 1-based, 0 when no dose qualifies
    double time_units_per_month = 1.0;  // durations are reported in months

    int num_doses() const noexcept { return static_cast<int>(p_tox.size()); }
    void validate() const;
};

struct AccrualModel {
    enum class Law { exponential, fixed };
    double rate = 3.0;  // patients per time unit
    Law law = Law::exponential;

    double next_gap(std::mt19937_64& rng) const;
    void validate() const;
};

struct TraceEntry {
    double time = 0.0;
    Verdict verdict = Verdict::stay;
    int from = 0;
    int to = 0;
    std::string rule;
};

struct TrialResult {
    int selected = 0;  // 1-based, 0 when no dose is declared
    int candidate = 0; // utility argmax before verification
    std::vector<int> allocation;
    double duration = 0.0;  // trial time units
    bool early_terminated = false;
    int enrolled = 0;
    std::vector<TraceEntry> trace;
};

struct OperatingCharacteristics {
    std::vector<double> selection_pct;
    double none_pct = 0.0;
    std::vector<double> mean_allocation;
    double mean_duration = 0.0;  // months
    int reps = 0;
    std::vector<double> selection_se;
    double none_se = 0.0;
    std::vector<double> allocation_se;
    double duration_se = 0.0;
    double early_termination_pct = 0.0;  // stopped during dose finding
};

/// Draws the latent outcomes of one patient at `dose`. Both event times are
/// always drawn so every patient consumes the same number of variates.
PatientRecord sample_patient(const Scenario& scenario, int dose, const DesignParams& params,
                             std::mt19937_64& rng);

/// One virtual trial in calendar time.
TrialResult run_trial(const DesignParams& params, const Scenario& scenario, const AccrualModel& accrual,
                      std::mt19937_64& rng);

/// Generator for replication `rep` of a run seeded with `seed`.
std::mt19937_64 replication_rng(std::uint64_t seed, std::uint64_t rep);

/// Worker count from TITE_STEIN_THREADS, else the hardware concurrency.
int default_thread_count();

/// Aggregates `reps` replications. Results do not depend on `threads`
/// (0 selects default_thread_count()).
OperatingCharacteristics operating_characteristics(const DesignParams& params, const Scenario& scenario,
                                                   const AccrualModel& accrual, int reps,
                                                   std::uint64_t seed, int threads = 0);

OperatingCharacteristics summarize_results(const std::vector<TrialResult>& results, int num_doses,
                                           double time_units_per_month);

/// Utility-maximizing admissible dose under the true curves (p <= pT_cap,
/// q >= qE_floor), or 0 when none is admissible.
int true_obd(const Scenario& scenario, const DesignParams& params);

}  // namespace tite_stein
