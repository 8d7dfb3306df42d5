#pragma once

#include "tite_stein/design.hpp"
#include "tite_stein/interim.hpp"

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace tite_stein {

/// Interim state of one dose level. Safety elimination cascades upward:
/// if dose d is safety-eliminated so is every dose above it.
struct DoseState {
    InterimSummary tox;
    InterimSummary eff;
    bool eliminated_safety = false;
    bool eliminated_futility = false;

    bool eliminated() const noexcept { return eliminated_safety || eliminated_futility; }
    bool tried() const noexcept { return tox.n_patients > 0; }
};

enum class Verdict {
    stay,
    de_escalate,
    move_to,
    suspend,
    eliminate_and_deescalate,
    terminate,
};

const char* to_string(Verdict verdict);

/// Short label in decision-table vocabulary (S, D, DU, TBD, Pending, ET).
const char* table_label(Verdict verdict);

/// Which rule fired and the quantities it compared. Fields that the rule
/// never reached are NaN / empty.
struct Rationale {
    std::string rule;
    std::string detail;
    double pending_fraction = std::numeric_limits<double>::quiet_NaN();
    double p_tilde = std::numeric_limits<double>::quiet_NaN();
    double q_tilde = std::numeric_limits<double>::quiet_NaN();
    double safety_tail = std::numeric_limits<double>::quiet_NaN();
    double futility_tail = std::numeric_limits<double>::quiet_NaN();
    Boundaries boundaries;
    std::vector<int> admissible;
    std::vector<double> admissible_tails;
};

/// Engine verdict for the next cohort. `next_dose` is 1-based; it equals the
/// current dose for SUSPEND and is 0 for TERMINATE. The elimination vectors
/// carry the flags after this evaluation; the caller persists them.
struct Decision {
    Verdict verdict = Verdict::stay;
    int current_dose = 1;
    int next_dose = 1;
    Rationale rationale;
    std::vector<bool> eliminated_safety;
    std::vector<bool> eliminated_futility;
};

/// Prior used by the elimination rules and the admissible-set posterior.
inline constexpr BetaPrior kUniformPrior{1.0, 1.0};

/// Builds per-dose interim states at `now`, carrying over elimination flags
/// from `previous` when given (same length as num_doses).
std::vector<DoseState> build_dose_states(std::span<const PatientRecord> patients, double now,
                                         const DesignParams& params,
                                         std::span<const DoseState> previous = {});

/// Applies the elimination flags of a decision to a state vector.
void apply_eliminations(std::vector<DoseState>& doses, const Decision& decision);

/// Dose-assignment rule for the next cohort. Precedence: accrual suspension,
/// then safety / futility elimination, then the interval rules on the
/// current dose. When every admissible dose is eliminated but some dose
/// remains, the verdict is MOVE_TO the nearest remaining dose (lower first)
/// with rule "nearest_available". `current` is 1-based and must have at
/// least one patient.
Decision next_dose(std::span<const DoseState> doses, int current, const Boundaries& boundaries,
                   const DesignParams& params);

}  // namespace tite_stein
