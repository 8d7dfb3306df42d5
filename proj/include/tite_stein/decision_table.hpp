#pragma once

#include "tite_stein/design.hpp"

#include <span>
#include <string>
#include <vector>

namespace tite_stein {

/// Condition on an integer count column (n_T or n_E).
struct CountCondition {
    enum class Op { any, exactly, at_least, at_most };
    Op op = Op::any;
    int value = 0;

    std::string text() const;
};

/// Condition on an effective-count column. `value` / `upper` hold exact
/// bounds; text() shows them floored to two decimals.
struct BoundCondition {
    enum class Op { any, at_most, above, below, at_least, between };
    Op op = Op::any;
    double value = 0.0;
    double upper = 0.0;  // only for `between`, read as (value, upper]

    std::string text() const;
};

struct DecisionTableRow {
    int n_d = 0;
    bool pending_rule = false;
    int pending_cutoff = 0;  // pending rule: max{o_T, o_E} >= cutoff
    CountCondition tox_count;
    BoundCondition tox_bound;
    CountCondition eff_count;
    BoundCondition eff_bound;
    std::string decision;  // S, D, DU, TBD or Pending
};

/// Largest number of pending outcomes at a dose with n_d patients that does
/// not trigger suspension.
int max_pending_without_suspension(int n_d, const DesignParams& params);

/// Feasible effective-count range [lo, hi] for `events` events among n_d
/// patients when suspension is not triggered.
std::pair<double, double> feasible_effective_range(int n_d, int events, const DesignParams& params);

/// Effective non-DLT count below which the safety rule eliminates (the
/// rule fires for m < bound). Located by bisection to 1e-9. Returns a
/// negative value when the rule cannot fire even at m = 0.
double safety_elimination_bound(int n_tox, const DesignParams& params);

/// Effective non-DLT count at or below which p >= phi_U.
double deescalation_bound(int n_tox, const DesignParams& params);

/// Effective non-response count at or below which q >= psi.
double stay_bound(int n_eff, const DesignParams& params);

/// Regenerates the decision table for each n_d in `n_values`. "≥ k" rows
/// may carry the threshold of their lowest member when it holds for every
/// member; "≤ k" rows group members whose decision is uniform.
std::vector<DecisionTableRow> generate_decision_table(const DesignParams& params,
                                                      std::span<const int> n_values);

std::string format_decision_table_text(std::span<const DecisionTableRow> rows);
std::string format_decision_table_csv(std::span<const DecisionTableRow> rows);

/// One cell of the table after expanding count groups into single counts
/// and clipping each effective-count condition to its feasible range at the
/// displayed two-decimal precision. `n_eff` is -1 when the decision does not
/// depend on efficacy. Used to compare tables independent of row grouping.
struct TableAtom {
    int n_d = 0;
    int n_tox = 0;
    double tox_lo = 0.0;
    bool tox_lo_open = false;
    double tox_hi = 0.0;
    bool tox_hi_open = false;
    int n_eff = -1;
    double eff_lo = 0.0;
    bool eff_lo_open = false;
    double eff_hi = 0.0;
    bool eff_hi_open = false;
    std::string decision;

    bool operator==(const TableAtom& other) const;
    std::string describe() const;
};

std::vector<TableAtom> expand_rows(std::span<const DecisionTableRow> rows, const DesignParams& params);

}  // namespace tite_stein
