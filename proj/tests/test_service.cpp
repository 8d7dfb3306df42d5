#include "tite_stein/cli.hpp"
#include "tite_stein/service.hpp"

#include "doctest.h"
#include "httplib.h"

#include <filesystem>
#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

using namespace tite_stein;

namespace {

const std::filesystem::path kRoot = TITE_STEIN_SOURCE_DIR;

struct Call {
    int status;
    json body;
    std::string text;
};

Call call(const ConductService& service, const std::string& method, const std::string& path, const json& body = {},
          const std::map<std::string, std::string>& query = {}, const std::string& auth = {}) {
    const auto r = service.handle(method, path, query, body.is_null() ? std::string() : body.dump(), auth);
    Call c{r.status, json(), r.body};
    if (r.content_type == "application/json") c.body = json::parse(r.body);
    return c;
}

json config_file(const char* name) { return load_json_file(kRoot / "configs" / name); }

json enroll(const std::string& patient, double t, int dose) {
    return {{"id", "e-" + patient}, {"type", "enroll"}, {"time", t}, {"patient", patient}, {"dose", dose}};
}

json outcome(const char* type, const std::string& patient, double t) {
    return {{"id", std::string(type) + "-" + patient}, {"type", type}, {"time", t}, {"patient", patient}};
}

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "tite_stein_service_tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("new trials start where the configuration says") {
    ConductService service;
    const auto a = call(service, "POST", "/trials", json{{"config", config_file("default.json")}});
    CHECK(a.status == 201);
    CHECK(a.body["current_dose"] == 1);
    CHECK(a.body["id"] == "trial-0001");
    const auto b = call(service, "POST", "/trials", json{{"config", config_file("sa3.json")}, {"seed", 5}});
    CHECK(b.body["current_dose"] == 2);
    CHECK(b.body["seed"] == 5);
    const auto c = call(service, "POST", "/trials", json::object());
    CHECK(c.body["config_hash"] == a.body["config_hash"]);

    const auto list = call(service, "GET", "/trials");
    CHECK(list.body["trials"].size() == 3);
    CHECK(call(service, "GET", "/trials/trial-0002").body == b.body);
}

TEST_CASE("invalid configurations name the key") {
    ConductService service;
    json cfg = config_file("default.json");
    cfg["phi1"] = 0.35;
    auto r = call(service, "POST", "/trials", json{{"config", cfg}});
    CHECK(r.status == 422);
    CHECK(r.body["error"]["code"] == "invalid_payload");
    CHECK(r.body["error"]["path"] == "config.phi1");

    r = call(service, "POST", "/trials", json{{"config", {{"elim", {{"c_Q", 1}}}}}});
    CHECK(r.body["error"]["path"] == "config.elim.c_Q");
    r = call(service, "POST", "/trials", json{{"seed", -1}});
    CHECK(r.body["error"]["path"] == "seed");
    r = call(service, "POST", "/trials", json{{"colour", "red"}});
    CHECK(r.body["error"]["path"] == "colour");

    const auto raw = service.handle("POST", "/trials", {}, "{not json", "");
    CHECK(raw.status == 400);
    CHECK(json::parse(raw.body)["error"]["code"] == "invalid_json");
    CHECK(call(service, "GET", "/trials").body["trials"].empty());
}

TEST_CASE("events move the trial and errors leave it alone") {
    ConductService service;
    const std::string id = call(service, "POST", "/trials", json{{"config", config_file("sa3.json")}}).body["id"];
    const std::string base = "/trials/" + id;
    auto r = call(service, "POST", base + "/events",
                  json{{"now", 0.2}, {"events", {enroll("a", 0.0, 2), enroll("b", 0.1, 2), enroll("c", 0.2, 2)}}});
    CHECK(r.status == 200);
    CHECK(r.body["decision"]["verdict"] == "SUSPEND");
    CHECK(r.body["status"] == "SUSPENDED");

    r = call(service, "POST", base + "/events",
             json{{"now", 1.15},
                  {"events", {outcome("toxicity", "a", 0.5), outcome("toxicity", "b", 0.6),
                              outcome("response", "c", 0.8), outcome("response", "a", 1.0)}}});
    CHECK(r.body["decision"]["verdict"] == "DE_ESCALATE");
    CHECK(r.body["decision"]["label"] == "D");
    CHECK(r.body["decision"]["next_dose"] == 1);
    const json before = r.body;

    r = call(service, "POST", base + "/events", json{{"now", 1.0}});
    CHECK(r.status == 409);
    CHECK(r.body["error"]["code"] == "conflict");
    r = call(service, "POST", base + "/events", json{{"now", 1.2}, {"events", {enroll("d", 1.2, 8)}}});
    CHECK(r.status == 422);
    CHECK(r.body["error"]["path"] == "events[0].dose");
    r = call(service, "POST", base + "/events", json{{"events", json::array()}});
    CHECK(r.body["error"]["path"] == "now");
    r = call(service, "POST", base + "/events", json{{"now", 1.2}, {"extra", 1}});
    CHECK(r.body["error"]["path"] == "extra");

    const auto w = call(service, "POST", base + "/what-if",
                        json{{"now", 1.3}, {"events", {enroll("d", 1.3, 1), enroll("e", 1.3, 1)}}});
    CHECK(w.status == 200);
    CHECK(w.body["persisted"] == false);
    CHECK(w.body["decision"]["verdict"] == "SUSPEND");
    CHECK(call(service, "GET", base).body == before);
}

TEST_CASE("unknown routes, sessions and tokens") {
    ConductService service({{}, "s3cret"});
    CHECK(call(service, "GET", "/trials").status == 401);
    CHECK(call(service, "GET", "/trials", {}, {}, "Bearer wrong").status == 401);
    const auto ok = call(service, "GET", "/trials", {}, {}, "Bearer s3cret");
    CHECK(ok.status == 200);
    CHECK(call(service, "GET", "/trials/nope", {}, {}, "Bearer s3cret").status == 404);
    CHECK(call(service, "GET", "/elsewhere", {}, {}, "Bearer s3cret").status == 404);
    const std::string id = call(service, "POST", "/trials", json::object(), {}, "Bearer s3cret").body["id"];
    CHECK(call(service, "GET", "/trials/" + id + "/bogus", {}, {}, "Bearer s3cret").status == 404);
    CHECK(call(service, "DELETE", "/trials/" + id, {}, {}, "Bearer s3cret").status == 404);
}

TEST_CASE("decision table formats") {
    ConductService service;
    const std::string id = call(service, "POST", "/trials", json::object()).body["id"];
    const std::string path = "/trials/" + id + "/decision-table";
    const auto j = call(service, "GET", path);
    CHECK(j.status == 200);
    CHECK(j.body["boundaries"]["phi_L"].get<double>() == doctest::Approx(0.26134).epsilon(1e-4));
    CHECK_FALSE(j.body["rows"].empty());

    const auto csv = service.handle("GET", path, {{"format", "csv"}, {"n", "3,6"}}, "", "");
    CHECK(csv.content_type == "text/csv");
    CHECK(csv.body.rfind("n_d,n_tox,m_tox,n_eff,m_eff,decision", 0) == 0);
    const auto text = service.handle("GET", path, {{"format", "text"}}, "", "");
    CHECK(text.content_type == "text/plain");
    CHECK(text.body.find("Pending") != std::string::npos);

    CHECK(call(service, "GET", path, {}, {{"format", "xml"}}).body["error"]["path"] == "format");
    CHECK(call(service, "GET", path, {}, {{"n", "3,x"}}).body["error"]["path"] == "n");
    CHECK(call(service, "GET", path, {}, {{"n", "0"}}).status == 422);
}

TEST_CASE("finalize through the API matches the command line") {
    ConductService service;
    const std::string id = call(service, "POST", "/trials", json{{"config", config_file("sa3.json")}}).body["id"];
    const std::string base = "/trials/" + id;
    call(service, "POST", base + "/events",
         json{{"now", 1.15},
              {"events", {enroll("a", 0.0, 2), enroll("b", 0.1, 2), enroll("c", 0.2, 2), outcome("toxicity", "a", 0.5),
                          outcome("toxicity", "b", 0.6), outcome("response", "c", 0.8),
                          outcome("response", "a", 1.0)}}});

    auto r = call(service, "POST", base + "/finalize", json{{"now", 2.0}});
    CHECK(r.status == 409);
    CHECK(r.body["error"]["code"] == "outcomes_pending");
    CHECK(r.body["error"]["pending_patients"] == json::array({"b"}));

    r = call(service, "POST", base + "/finalize", json{{"now", 3.5}});
    REQUIRE(r.status == 200);
    CHECK(r.body["status"] == "FINALIZED");

    const auto dir = fresh_dir("finalize");
    const json session = call(service, "GET", base).body;
    {
        std::ofstream(dir / "data.json") << to_json(FinalData{{0, 3, 0, 0, 0}, {0, 2, 0, 0, 0}, {0, 2, 0, 0, 0}, {}});
        std::ofstream(dir / "config.json") << session["config"];
    }
    const std::string config = (dir / "config.json").string(), data = (dir / "data.json").string();
    const std::string seed = std::to_string(session["seed"].get<std::uint64_t>());
    const char* argv[] = {"tite-stein", "finalize", "--config", config.c_str(), "--data", data.c_str(), "--seed",
                          seed.c_str()};
    std::ostringstream out, err;
    const int code = run_cli(8, argv, out, err);
    CHECK(code == (r.body["report"]["obd"] == 0 ? kExitNoObd : kExitOk));
    CHECK(err.str() == "");
    CHECK(out.str() == r.body["report"].dump(2) + "\n");

    CHECK(call(service, "POST", base + "/finalize", json{{"now", 4.0}}).status == 409);
    CHECK(call(service, "POST", base + "/events", json{{"now", 4.0}}).status == 409);
}

TEST_CASE("sessions survive a restart") {
    const auto dir = fresh_dir("restart");
    json view;
    {
        ConductService service({dir, {}});
        const std::string id = call(service, "POST", "/trials", json::object()).body["id"];
        view = call(service, "POST", "/trials/" + id + "/events",
                    json{{"now", 0.5}, {"events", {enroll("a", 0.0, 1), enroll("b", 0.3, 1)}}})
                   .body;
    }
    ConductService again({dir, {}});
    CHECK(call(again, "GET", "/trials/trial-0001").body == view);
    CHECK(call(again, "POST", "/trials", json::object()).body["id"] == "trial-0002");
}

TEST_CASE("real HTTP round trip") {
    ConductService service({{}, "tok"});
    httplib::Server server;
    service.mount(server);
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    client.set_bearer_token_auth("tok");
    auto created = client.Post("/trials", R"({"config": {"start_dose": 3}})", "application/json");
    REQUIRE(created);
    CHECK(created->status == 201);
    CHECK(created->get_header_value("Access-Control-Allow-Origin") == "*");
    const json body = json::parse(created->body);
    CHECK(body["current_dose"] == 3);

    auto table = client.Get("/trials/" + body["id"].get<std::string>() + "/decision-table?format=csv&n=3");
    REQUIRE(table);
    CHECK(table->status == 200);
    CHECK(table->get_header_value("Content-Type") == "text/csv");

    httplib::Client anonymous("127.0.0.1", port);
    auto denied = anonymous.Get("/trials");
    REQUIRE(denied);
    CHECK(denied->status == 401);
    auto options = anonymous.Options("/trials");
    REQUIRE(options);
    CHECK(options->status == 204);

    server.stop();
    worker.join();
}

TEST_CASE("API verdicts equal the engine on generated event logs") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int log = 0; log < 20; ++log) {
        CAPTURE(log);
        ConductService service;
        DesignParams params;
        params.start_dose = 1 + log % 3;
        const std::string id = call(service, "POST", "/trials", json{{"config", to_json(params)}}).body["id"];
        TrialSession mirror("mirror", params);
        double now = 0.0;
        int patients = 0;
        for (int step = 0; step < 8; ++step) {
            json events = json::array();
            std::vector<TrialEvent> typed;
            const double next = now + 0.2 + u(rng);
            const int dose = mirror.decision() ? std::max(1, mirror.decision()->next_dose) : params.start_dose;
            if (mirror.status() == SessionStatus::enrolling) {
                for (int k = 0; k < 3; ++k) {
                    const std::string p = "p" + std::to_string(patients++);
                    const double t = now + (k + 1) * (next - now) / 4.0;
                    typed.push_back({"e-" + p, TrialEvent::Type::enroll, t, p, dose});
                    if (u(rng) < 0.3 && t + 0.5 <= next) typed.push_back({"t-" + p, TrialEvent::Type::toxicity, t + 0.5, p, 0});
                }
            }
            std::stable_sort(typed.begin(), typed.end(), [](const TrialEvent& a, const TrialEvent& b) { return a.time < b.time; });
            for (const auto& e : typed) events.push_back(e.to_json());
            const auto r = call(service, "POST", "/trials/" + id + "/events", json{{"now", next}, {"events", events}});
            REQUIRE(r.status == 200);
            const Decision& d = mirror.post(next, typed);
            CHECK(r.body["decision"] == to_json(d));
            if (d.rationale.rule != "start" && mirror.status() != SessionStatus::terminated) {
                const auto direct = next_dose(mirror.dose_states(), mirror.current_dose(),
                                              compute_boundaries(params), params);
                CHECK(r.body["decision"]["verdict"] == to_string(direct.verdict));
            }
            if (mirror.status() == SessionStatus::terminated) break;
            now = next;
        }
    }
}
