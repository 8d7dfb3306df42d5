#include "tite_stein/decision_table.hpp"

#include "tite_stein/decision.hpp"
#include "tite_stein/interim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace tite_stein {

namespace {

// Table thresholds are shown truncated to two decimals.
double floor2(double x) { return std::floor(x * 100.0 + 1e-9) / 100.0; }

std::string two_decimals(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", floor2(x));
    return buf;
}

struct Segment {
    std::string verdict;  // DU, D, or E (efficacy-dependent) / S, TBD
    double lo;
    bool lo_open;
    double hi;
    bool hi_open;
};

bool nonempty(const Segment& s) {
    return s.lo < s.hi || (s.lo == s.hi && !s.lo_open && !s.hi_open);
}

bool covers(const Segment& s, double flo, double fhi) {
    return s.lo <= flo && !s.lo_open && s.hi >= fhi && !s.hi_open;
}

// Displayed condition for a segment, relative to the feasible range.
BoundCondition condition_for(const Segment& s, double flo, double fhi, bool efficacy_style) {
    BoundCondition c;
    const bool from_bottom = s.lo <= flo && !s.lo_open;
    const bool to_top = s.hi >= fhi && !s.hi_open;
    if (from_bottom && to_top) return c;
    if (from_bottom) {
        c.op = efficacy_style ? BoundCondition::Op::below : BoundCondition::Op::at_most;
        c.value = s.hi;
    } else if (to_top) {
        c.op = efficacy_style ? BoundCondition::Op::at_least : BoundCondition::Op::above;
        c.value = s.lo;
    } else {
        c.op = BoundCondition::Op::between;
        c.value = s.lo;
        c.upper = s.hi;
    }
    return c;
}

std::vector<Segment> tox_segments(int n_d, int n_tox, const DesignParams& params) {
    const auto [flo, fhi] = feasible_effective_range(n_d, n_tox, params);
    const double du = safety_elimination_bound(n_tox, params);
    const double d = n_tox > 0 ? deescalation_bound(n_tox, params) : -1.0;
    std::vector<Segment> out;
    // DU: m < du.  D: du <= m <= d.  E: m > d.
    Segment s_du{"DU", flo, false, std::min(du, fhi), du <= fhi};
    Segment s_d{"D", std::max(du, flo), du > flo, std::min(d, fhi), false};
    Segment s_e{"E", std::max(d, flo), d >= flo, fhi, false};
    if (du >= 0.0 && nonempty(s_du)) out.push_back(s_du);
    if (d >= 0.0 && nonempty(s_d)) {
        if (du < 0.0) s_d.lo = flo, s_d.lo_open = false;
        out.push_back(s_d);
    }
    if (d < 0.0) {
        s_e.lo = std::max(std::max(du, 0.0), flo);
        s_e.lo_open = du >= flo;
        if (du < 0.0) s_e.lo = flo, s_e.lo_open = false;
    }
    if (nonempty(s_e)) out.push_back(s_e);
    return out;
}

std::vector<Segment> eff_segments(int n_d, int n_eff, const DesignParams& params) {
    const auto [flo, fhi] = feasible_effective_range(n_d, n_eff, params);
    std::vector<Segment> out;
    if (n_eff == 0) {
        out.push_back({"TBD", flo, false, fhi, false});
        return out;
    }
    const double s = stay_bound(n_eff, params);
    Segment stay{"S", flo, false, std::min(s, fhi), false};
    Segment tbd{"TBD", std::max(s, flo), s >= flo, fhi, false};
    if (nonempty(stay)) out.push_back(stay);
    if (nonempty(tbd)) out.push_back(tbd);
    return out;
}

CountCondition count_label(int top, int bottom, int n_d) {
    CountCondition c;
    if (top == bottom) {
        c.op = CountCondition::Op::exactly;
        c.value = top;
    } else if (top == n_d) {
        c.op = CountCondition::Op::at_least;
        c.value = bottom;
    } else if (bottom == 0) {
        c.op = CountCondition::Op::at_most;
        c.value = top;
    } else {
        c.op = CountCondition::Op::exactly;  // not produced by the grouping below
        c.value = top;
    }
    return c;
}

struct Group {
    int top;
    int bottom;
    Segment segment;
    BoundCondition bound;
};

// Groups one count column (n_T or n_E) at a fixed n_d. `head` is the verdict
// that may form a "≥ k" group, `tail` the verdict of the uniform "≤ k" group.
std::vector<Group> group_counts(int n_d, const DesignParams& params, bool efficacy,
                                const std::string& head, const std::string& tail) {
    std::vector<std::pair<int, std::vector<Segment>>> per_count;
    for (int k = n_d; k >= 0; --k) {
        per_count.emplace_back(k, efficacy ? eff_segments(n_d, k, params) : tox_segments(n_d, k, params));
    }
    std::vector<Group> groups;
    std::size_t i = 0;
    auto full = [&](std::size_t idx) {
        const auto [flo, fhi] = feasible_effective_range(n_d, per_count[idx].first, params);
        const auto& segs = per_count[idx].second;
        return segs.size() == 1 && covers(segs[0], flo, fhi);
    };

    // "≥ k" head group of uniform members, possibly absorbing the first
    // segment of the next member when its bound holds for all of them.
    std::size_t skip_first_segment_of = per_count.size();
    if (!per_count.empty() && full(0) && per_count[0].second[0].verdict == head) {
        std::size_t j = 0;
        while (j + 1 < per_count.size() && full(j + 1) && per_count[j + 1].second[0].verdict == head) ++j;
        Group g{per_count[0].first, per_count[j].first, per_count[j].second[0], {}};
        if (j + 1 < per_count.size()) {
            const auto& next = per_count[j + 1].second;
            if (!next.empty() && next[0].verdict == head) {
                bool holds = true;
                for (std::size_t m = 0; m <= j; ++m) {
                    const double fhi = feasible_effective_range(n_d, per_count[m].first, params).second;
                    holds = holds && (next[0].hi_open ? fhi < next[0].hi : fhi <= next[0].hi);
                }
                if (holds) {
                    const auto [flo, fhi] = feasible_effective_range(n_d, per_count[j + 1].first, params);
                    g.bottom = per_count[j + 1].first;
                    g.segment = next[0];
                    g.bound = condition_for(next[0], flo, fhi, efficacy);
                    skip_first_segment_of = j + 1;
                }
            }
        }
        groups.push_back(g);
        i = j + 1;
    }

    // Uniform "≤ k" tail group.
    std::size_t tail_start = per_count.size();
    while (tail_start > i && full(tail_start - 1) && per_count[tail_start - 1].second[0].verdict == tail) {
        --tail_start;
    }
    if (tail_start + 1 >= per_count.size()) tail_start = per_count.size();  // a single member is not grouped

    for (; i < tail_start; ++i) {
        const auto [flo, fhi] = feasible_effective_range(n_d, per_count[i].first, params);
        const auto& segs = per_count[i].second;
        for (std::size_t s = 0; s < segs.size(); ++s) {
            if (i == skip_first_segment_of && s == 0) continue;
            groups.push_back({per_count[i].first, per_count[i].first, segs[s],
                              condition_for(segs[s], flo, fhi, efficacy)});
        }
    }
    if (tail_start < per_count.size()) {
        groups.push_back({per_count[tail_start].first, 0, per_count[tail_start].second[0], {}});
    }
    return groups;
}

}  // namespace

std::string CountCondition::text() const {
    switch (op) {
    case Op::any: return "Any";
    case Op::exactly: return std::to_string(value);
    case Op::at_least: return ">= " + std::to_string(value);
    case Op::at_most: return "<= " + std::to_string(value);
    }
    return "?";
}

std::string BoundCondition::text() const {
    switch (op) {
    case Op::any: return "Any";
    case Op::at_most: return "<= " + two_decimals(value);
    case Op::above: return "> " + two_decimals(value);
    case Op::below: return "< " + two_decimals(value);
    case Op::at_least: return ">= " + two_decimals(value);
    case Op::between: return "(" + two_decimals(value) + ", " + two_decimals(upper) + "]";
    }
    return "?";
}

int max_pending_without_suspension(int n_d, const DesignParams& params) {
    // pending / n_d <= suspend_fraction
    return static_cast<int>(std::floor(params.suspend_fraction * n_d + 1e-12));
}

std::pair<double, double> feasible_effective_range(int n_d, int events, const DesignParams& params) {
    const int non_events = n_d - events;
    const int pending = std::min(max_pending_without_suspension(n_d, params), non_events);
    return {static_cast<double>(non_events - pending), static_cast<double>(non_events)};
}

double safety_elimination_bound(int n_tox, const DesignParams& params) {
    auto fires = [&](double m) {
        return posterior_tail(n_tox, m, kUniformPrior, params.elim.pi_T, Tail::above) > params.elim.c_T;
    };
    if (!fires(0.0)) return -1.0;
    double lo = 0.0;
    double hi = 1.0;
    while (fires(hi)) hi *= 2.0;
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        (fires(mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double deescalation_bound(int n_tox, const DesignParams& params) {
    const double phi_U = compute_boundaries(params).phi_U;
    return n_tox * (1.0 - phi_U) / phi_U;
}

double stay_bound(int n_eff, const DesignParams& params) {
    const double psi = compute_boundaries(params).psi;
    return n_eff * (1.0 - psi) / psi;
}

std::vector<DecisionTableRow> generate_decision_table(const DesignParams& params,
                                                      std::span<const int> n_values) {
    params.validate();
    std::vector<DecisionTableRow> rows;
    for (int n_d : n_values) {
        if (n_d < 1) throw contract_error("generate_decision_table: n_d must be positive");
        DecisionTableRow pending;
        pending.n_d = n_d;
        pending.pending_rule = true;
        pending.pending_cutoff = max_pending_without_suspension(n_d, params) + 1;
        pending.decision = "Pending";
        rows.push_back(pending);

        const auto eff_groups = group_counts(n_d, params, true, "S", "TBD");
        for (const auto& tg : group_counts(n_d, params, false, "DU", "E")) {
            DecisionTableRow base;
            base.n_d = n_d;
            base.tox_count = count_label(tg.top, tg.bottom, n_d);
            base.tox_bound = tg.bound;
            if (tg.segment.verdict != "E") {
                base.decision = tg.segment.verdict;
                rows.push_back(base);
                continue;
            }
            for (const auto& eg : eff_groups) {
                DecisionTableRow row = base;
                row.eff_count = count_label(eg.top, eg.bottom, n_d);
                row.eff_bound = eg.bound;
                row.decision = eg.segment.verdict;
                rows.push_back(row);
            }
        }
    }
    return rows;
}

std::string format_decision_table_text(std::span<const DecisionTableRow> rows) {
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-4s | %-6s | %-9s | %-6s | %-9s | %s\n", "n_d", "n_T", "m_T", "n_E",
                  "m_E", "Decision");
    os << buf << std::string(56, '-') << '\n';
    for (const auto& r : rows) {
        if (r.pending_rule) {
            std::snprintf(buf, sizeof buf, "%-4d | Pending if max{o_T, o_E} >= %d\n", r.n_d, r.pending_cutoff);
            os << buf;
            continue;
        }
        const bool eff_free = r.decision == "D" || r.decision == "DU";
        std::snprintf(buf, sizeof buf, "%-4d | %-6s | %-9s | %-6s | %-9s | %s\n", r.n_d,
                      r.tox_count.text().c_str(), r.tox_bound.text().c_str(),
                      eff_free ? "Any" : r.eff_count.text().c_str(),
                      eff_free ? "" : r.eff_bound.text().c_str(), r.decision.c_str());
        os << buf;
    }
    return os.str();
}

std::string format_decision_table_csv(std::span<const DecisionTableRow> rows) {
    std::ostringstream os;
    os << "n_d,n_tox,m_tox,n_eff,m_eff,decision\n";
    for (const auto& r : rows) {
        if (r.pending_rule) {
            os << r.n_d << ",,,,,Pending if max{o_T;o_E} >= " << r.pending_cutoff << '\n';
            continue;
        }
        const bool eff_free = r.decision == "D" || r.decision == "DU";
        os << r.n_d << ',' << r.tox_count.text() << ',' << r.tox_bound.text() << ','
           << (eff_free ? "Any" : r.eff_count.text()) << ',' << (eff_free ? "" : r.eff_bound.text()) << ','
           << r.decision << '\n';
    }
    return os.str();
}

namespace {

std::vector<int> expand_count(const CountCondition& c, int n_d) {
    std::vector<int> out;
    for (int k = n_d; k >= 0; --k) {
        bool in = false;
        switch (c.op) {
        case CountCondition::Op::any: in = true; break;
        case CountCondition::Op::exactly: in = k == c.value; break;
        case CountCondition::Op::at_least: in = k >= c.value; break;
        case CountCondition::Op::at_most: in = k <= c.value; break;
        }
        if (in) out.push_back(k);
    }
    return out;
}

struct Interval {
    double lo;
    bool lo_open;
    double hi;
    bool hi_open;
};

// Clips a displayed condition to [flo, fhi]; returns false when empty.
bool clip(const BoundCondition& c, double flo, double fhi, Interval& out) {
    const double inf = std::numeric_limits<double>::infinity();
    Interval raw{-inf, false, inf, false};
    const double v = floor2(c.value);
    switch (c.op) {
    case BoundCondition::Op::any: break;
    case BoundCondition::Op::at_most: raw.hi = v; break;
    case BoundCondition::Op::below: raw.hi = v; raw.hi_open = true; break;
    case BoundCondition::Op::above: raw.lo = v; raw.lo_open = true; break;
    case BoundCondition::Op::at_least: raw.lo = v; break;
    case BoundCondition::Op::between:
        raw.lo = v;
        raw.lo_open = true;
        raw.hi = floor2(c.upper);
        break;
    }
    out = raw;
    if (out.lo < flo || (out.lo == flo && !out.lo_open)) out.lo = flo, out.lo_open = false;
    if (out.hi > fhi || (out.hi == fhi && !out.hi_open)) out.hi = fhi, out.hi_open = false;
    return out.lo < out.hi || (out.lo == out.hi && !out.lo_open && !out.hi_open);
}

}  // namespace

bool TableAtom::operator==(const TableAtom& o) const {
    auto same = [](double a, double b) { return std::abs(a - b) < 1e-9; };
    return n_d == o.n_d && n_tox == o.n_tox && n_eff == o.n_eff && decision == o.decision &&
           same(tox_lo, o.tox_lo) && tox_lo_open == o.tox_lo_open && same(tox_hi, o.tox_hi) &&
           tox_hi_open == o.tox_hi_open && same(eff_lo, o.eff_lo) && eff_lo_open == o.eff_lo_open &&
           same(eff_hi, o.eff_hi) && eff_hi_open == o.eff_hi_open;
}

std::string TableAtom::describe() const {
    char buf[200];
    if (n_tox < 0) {
        std::snprintf(buf, sizeof buf, "n_d=%d pending if max{o} >= %.0f", n_d, tox_lo);
        return buf;
    }
    int len = std::snprintf(buf, sizeof buf, "n_d=%d n_T=%d m_T in %c%.2f, %.2f%c", n_d, n_tox,
                            tox_lo_open ? '(' : '[', tox_lo, tox_hi, tox_hi_open ? ')' : ']');
    if (n_eff >= 0) {
        len += std::snprintf(buf + len, sizeof buf - static_cast<std::size_t>(len),
                             " n_E=%d m_E in %c%.2f, %.2f%c", n_eff, eff_lo_open ? '(' : '[', eff_lo, eff_hi,
                             eff_hi_open ? ')' : ']');
    }
    std::snprintf(buf + len, sizeof buf - static_cast<std::size_t>(len), " -> %s", decision.c_str());
    return buf;
}

std::vector<TableAtom> expand_rows(std::span<const DecisionTableRow> rows, const DesignParams& params) {
    std::vector<TableAtom> atoms;
    for (const auto& r : rows) {
        if (r.pending_rule) {
            TableAtom a;
            a.n_d = r.n_d;
            a.n_tox = -1;
            a.tox_lo = r.pending_cutoff;
            a.decision = "Pending";
            atoms.push_back(a);
            continue;
        }
        const bool eff_free = r.decision == "D" || r.decision == "DU";
        for (int nt : expand_count(r.tox_count, r.n_d)) {
            const auto [tlo, thi] = feasible_effective_range(r.n_d, nt, params);
            Interval ti;
            if (!clip(r.tox_bound, tlo, thi, ti)) continue;
            TableAtom a;
            a.n_d = r.n_d;
            a.n_tox = nt;
            a.tox_lo = ti.lo;
            a.tox_lo_open = ti.lo_open;
            a.tox_hi = ti.hi;
            a.tox_hi_open = ti.hi_open;
            a.decision = r.decision;
            if (eff_free) {
                atoms.push_back(a);
                continue;
            }
            for (int ne : expand_count(r.eff_count, r.n_d)) {
                const auto [elo, ehi] = feasible_effective_range(r.n_d, ne, params);
                Interval ei;
                if (!clip(r.eff_bound, elo, ehi, ei)) continue;
                TableAtom b = a;
                b.n_eff = ne;
                b.eff_lo = ei.lo;
                b.eff_lo_open = ei.lo_open;
                b.eff_hi = ei.hi;
                b.eff_hi_open = ei.hi_open;
                atoms.push_back(b);
            }
        }
    }
    return atoms;
}

}  // namespace tite_stein
