#include "tite_stein/session.hpp"

#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using namespace tite_stein;

namespace {

TrialEvent enroll(const std::string& patient, double t, int dose) {
    return {"e-" + patient, TrialEvent::Type::enroll, t, patient, dose};
}

TrialEvent dlt(const std::string& patient, double t) {
    return {"t-" + patient, TrialEvent::Type::toxicity, t, patient, 0};
}

TrialEvent response(const std::string& patient, double t) {
    return {"r-" + patient, TrialEvent::Type::response, t, patient, 0};
}

DesignParams start_at_two() {
    DesignParams p;
    p.start_dose = 2;
    return p;
}

// Three patients at dose 2; two DLTs and one late follow-up.
TrialSession toxic_cohort() {
    TrialSession s("toxic", start_at_two(), 7);
    s.post(0.2, {enroll("a", 0.0, 2), enroll("b", 0.1, 2), enroll("c", 0.2, 2)});
    s.post(1.15, {dlt("a", 0.5), dlt("b", 0.6), response("c", 0.8), response("a", 1.0)});
    return s;
}

std::filesystem::path temp_file(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "tite_stein_session_tests";
    std::filesystem::create_directories(dir);
    const auto file = dir / name;
    std::filesystem::remove(file);
    return file;
}

}  // namespace

TEST_CASE("a fresh session waits at the start dose") {
    TrialSession s("fresh", start_at_two());
    CHECK(s.current_dose() == 2);
    CHECK(s.status() == SessionStatus::enrolling);
    CHECK_FALSE(s.decision());
    const auto& d = s.post(0.0, {});
    CHECK(d.verdict == Verdict::stay);
    CHECK(d.rationale.rule == "start");
    CHECK(s.records().size() == 2);
}

TEST_CASE("toxic first cohort de-escalates as the engine says") {
    const TrialSession s = toxic_cohort();
    REQUIRE(s.decision());
    const Decision& d = *s.decision();
    CHECK(d.verdict == Verdict::de_escalate);
    CHECK(d.next_dose == 1);
    CHECK(s.current_dose() == 2);
    const auto states = s.dose_states();
    CHECK(states[1].tox.n_patients == 3);
    CHECK(states[1].tox.n_events == 2);
    CHECK(states[1].tox.n_pending == 1);
    CHECK(states[1].tox.m_effective == doctest::Approx(0.95));
    const Decision direct = next_dose(states, 2, compute_boundaries(s.params()), s.params());
    CHECK(direct.verdict == d.verdict);
    CHECK(direct.next_dose == d.next_dose);
}

TEST_CASE("mostly pending outcomes suspend accrual") {
    TrialSession s("pending", DesignParams{});
    const auto& d = s.post(0.5, {enroll("a", 0.0, 1), enroll("b", 0.2, 1), enroll("c", 0.4, 1)});
    CHECK(d.verdict == Verdict::suspend);
    CHECK(d.rationale.pending_fraction > s.params().suspend_fraction);
    CHECK(s.status() == SessionStatus::suspended);
}

TEST_CASE("duplicate and conflicting events") {
    TrialSession s = toxic_cohort();
    const auto before = s.records().size();
    s.post(1.15, {dlt("a", 0.5)});
    CHECK(s.records().size() == before);

    CHECK_THROWS_AS(s.post(1.2, {{"t-a", TrialEvent::Type::toxicity, 0.55, "a", 0}}), conflict_error);
    CHECK_THROWS_AS(s.post(1.2, {{"t-a2", TrialEvent::Type::toxicity, 0.9, "a", 0}}), conflict_error);
    CHECK_THROWS_AS(s.post(1.2, {enroll("a", 1.2, 1)}), conflict_error);
    CHECK_THROWS_AS(s.post(1.2, {enroll("d", 1.0, 1)}), conflict_error);
    CHECK_THROWS_AS(s.post(1.0, {}), conflict_error);
    CHECK_THROWS_AS(s.post(1.2, {enroll("d", 1.3, 1)}), config_error);
    CHECK_THROWS_AS(s.post(1.2, {response("zz", 1.2)}), config_error);
    CHECK_THROWS_AS(s.post(1.2, {enroll("d", 1.2, 9)}), config_error);
    CHECK_THROWS_AS(s.post(5.0, {dlt("c", 5.0)}), config_error);
    CHECK(s.records().size() == before);
    CHECK(s.decision()->verdict == Verdict::de_escalate);
}

TEST_CASE("invalid requests report the failing event") {
    TrialSession s("paths", DesignParams{});
    try {
        s.post(1.0, {enroll("a", 0.0, 1), enroll("b", 0.5, 7)});
        FAIL("expected a configuration error");
    } catch (const config_error& e) {
        CHECK(e.path() == "events[1].dose");
    }
    CHECK(s.enrolled() == 0);
}

TEST_CASE("what-if leaves the session untouched") {
    TrialSession s("what-if", start_at_two(), 7);
    s.post(0.25, {enroll("a", 0.0, 2), enroll("b", 0.1, 2), enroll("c", 0.2, 2), enroll("d", 0.25, 2)});
    s.post(1.2, {dlt("a", 0.5), response("a", 0.6), response("b", 0.7), response("c", 0.8)});
    REQUIRE(s.decision()->verdict == Verdict::stay);
    CHECK(s.decision()->rationale.p_tilde == doctest::Approx(1.0 / 3.95));
    const json view = s.view();
    const auto records = s.records();

    const Decision worse = s.what_if(1.2, {dlt("d", 1.2)});
    CHECK(worse.verdict == Verdict::de_escalate);
    CHECK(worse.next_dose == 1);
    CHECK(worse.rationale.p_tilde == doctest::Approx(0.5));
    const Decision crowded = s.what_if(1.3, {enroll("e", 1.21, 2), enroll("f", 1.22, 2), enroll("g", 1.23, 2),
                                             enroll("h", 1.24, 2)});
    CHECK(crowded.verdict == Verdict::suspend);
    CHECK_THROWS_AS(s.what_if(1.0, {}), conflict_error);

    CHECK(s.view() == view);
    CHECK(s.records() == records);
    CHECK(s.decision()->verdict == Verdict::stay);
}

TEST_CASE("replaying the log rebuilds the session") {
    const TrialSession s = toxic_cohort();
    const TrialSession r = TrialSession::replay(s.records());
    CHECK(r.view() == s.view());
    CHECK_THROWS_AS(TrialSession::replay({}), contract_error);
    CHECK_THROWS_AS(TrialSession::replay({json{{"type", "event"}}}), contract_error);
}

TEST_CASE("persisted sessions reload") {
    const auto file = temp_file("persist.jsonl");
    TrialSession s("persist", start_at_two(), 11);
    s.persist_to(file);
    s.post(0.2, {enroll("a", 0.0, 2), enroll("b", 0.1, 2), enroll("c", 0.2, 2)});
    s.post(1.15, {dlt("a", 0.5)});
    const TrialSession loaded = TrialSession::load(file);
    CHECK(loaded.view() == s.view());

    std::ifstream in(file);
    int lines = 0;
    for (std::string line; std::getline(in, line);) ++lines;
    CHECK(lines == static_cast<int>(s.records().size()));
}

TEST_CASE("finalization waits for every outcome") {
    TrialSession s = toxic_cohort();
    try {
        s.finalize(2.0);
        FAIL("expected pending outcomes");
    } catch (const pending_error& e) {
        CHECK(e.patients() == std::vector<std::string>{"b"});
    }
    CHECK_FALSE(s.final_report());

    const auto& report = s.finalize(3.2);
    CHECK(s.status() == SessionStatus::finalized);
    const FinalData data = s.final_data();
    CHECK(data.n == std::vector<int>{0, 3, 0, 0, 0});
    CHECK(data.y_tox == std::vector<int>{0, 2, 0, 0, 0});
    CHECK(data.y_eff == std::vector<int>{0, 2, 0, 0, 0});
    const auto direct = finalize_trial(data, s.params(), s.seed());
    CHECK(to_json(report, s.params(), s.seed()) == to_json(direct, s.params(), s.seed()));
    CHECK_THROWS_AS(s.post(4.0, {}), conflict_error);
    CHECK_THROWS_AS(s.finalize(4.0), conflict_error);
    CHECK(TrialSession::replay(s.records()).view() == s.view());
}

TEST_CASE("termination blocks enrollment") {
    TrialSession s("stop", DesignParams{});
    s.post(0.2, {enroll("a", 0.0, 1), enroll("b", 0.1, 1), enroll("c", 0.2, 1)});
    s.post(1.0, {dlt("a", 0.5), dlt("b", 0.6), dlt("c", 0.7), response("a", 0.8), response("b", 0.9),
                 response("c", 1.0)});
    REQUIRE(s.decision()->verdict == Verdict::terminate);
    CHECK(s.status() == SessionStatus::terminated);
    CHECK_THROWS_AS(s.post(1.4, {enroll("d", 1.4, 1)}), conflict_error);
    CHECK(s.finalize(3.3).obd == 0);
}

TEST_CASE("event documents") {
    const json doc{{"id", "x"}, {"type", "enroll"}, {"time", 1.5}, {"patient", "p1"}, {"dose", 3}};
    const auto e = TrialEvent::from_json(doc, "events[0]");
    CHECK(e.to_json() == doc);
    auto bad = [](json d) {
        try {
            TrialEvent::from_json(d, "events[0]");
        } catch (const config_error& err) {
            return err.path();
        }
        return std::string("<no error>");
    };
    CHECK(bad(json{{"id", "x"}, {"type", "enroll"}, {"time", 1.5}, {"patient", "p1"}}) == "events[0].dose");
    CHECK(bad(json{{"id", "x"}, {"type", "maybe"}, {"time", 1.5}, {"patient", "p1"}}) == "events[0].type");
    CHECK(bad(json{{"id", "x"}, {"type", "response"}, {"time", -1}, {"patient", "p1"}}) == "events[0].time");
    CHECK(bad(json{{"id", "x"}, {"type", "response"}, {"time", 1}, {"patient", "p1"}, {"dose", 1}}) ==
          "events[0].dose");
    CHECK(bad(json{{"id", ""}, {"type", "response"}, {"time", 1}, {"patient", "p1"}}) == "events[0].id");
    CHECK(bad(json{{"id", "x"}, {"type", "response"}, {"time", 1}, {"patient", "p1"}, {"note", 1}}) ==
          "events[0].note");
}
