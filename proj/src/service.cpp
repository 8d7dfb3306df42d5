#include "tite_stein/service.hpp"

#include "tite_stein/decision_table.hpp"

#include "httplib.h"

#include <cstdio>
#include <set>
#include <sstream>

namespace tite_stein {

namespace {

ServiceResponse reply(int status, const json& body) {
    return {status, "application/json", body.dump()};
}

ServiceResponse error(int status, const std::string& code, const std::string& message,
                      const std::string& path = {}) {
    json e{{"code", code}, {"message", message}};
    if (!path.empty()) e["path"] = path;
    return reply(status, json{{"error", e}});
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string part;
    std::istringstream in(text);
    while (std::getline(in, part, sep)) {
        if (!part.empty()) out.push_back(part);
    }
    return out;
}

double read_now(const json& body) {
    const auto it = body.find("now");
    if (it == body.end()) throw config_error("now", "is required");
    if (!it->is_number()) throw config_error("now", "expected a number");
    return it->get<double>();
}

std::vector<TrialEvent> read_events(const json& body) {
    static const std::set<std::string> known{"now", "events"};
    for (const auto& [key, value] : body.items()) {
        if (!known.count(key)) throw config_error(key, "unknown key");
    }
    std::vector<TrialEvent> events;
    const auto it = body.find("events");
    if (it == body.end()) return events;
    if (!it->is_array()) throw config_error("events", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
        events.push_back(TrialEvent::from_json((*it)[i], "events[" + std::to_string(i) + "]"));
    }
    return events;
}

// Runs `body` and maps library exceptions onto HTTP errors.
template <typename F>
ServiceResponse guarded(F&& body) {
    try {
        return body();
    } catch (const config_error& e) {
        std::string message = e.what();
        if (!e.path().empty()) message = message.substr(e.path().size() + 2);
        return error(422, "invalid_payload", message, e.path());
    } catch (const pending_error& e) {
        auto r = error(409, "outcomes_pending", e.what());
        json body = json::parse(r.body);
        body["error"]["pending_patients"] = e.patients();
        r.body = body.dump();
        return r;
    } catch (const conflict_error& e) {
        return error(409, "conflict", e.what());
    } catch (const contract_error& e) {
        return error(422, "invalid_payload", e.what());
    }
}

}  // namespace

ConductService::ConductService(ServiceOptions options) : options_(std::move(options)) {
    if (options_.data_dir.empty()) return;
    std::filesystem::create_directories(options_.data_dir);
    for (const auto& entry : std::filesystem::directory_iterator(options_.data_dir)) {
        if (entry.path().extension() != ".jsonl") continue;
        TrialSession s = TrialSession::load(entry.path());
        const std::string id = s.id();
        long number = 0;
        if (std::sscanf(id.c_str(), "trial-%ld", &number) == 1) next_number_ = std::max(next_number_, number + 1);
        sessions_.emplace(id, std::make_shared<Slot>(std::move(s)));
    }
}

std::shared_ptr<ConductService::Slot> ConductService::find(const std::string& id) const {
    std::shared_lock lock(sessions_mutex_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

std::string ConductService::next_id() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "trial-%04ld", next_number_++);
    return buf;
}

ServiceResponse ConductService::create(const json& body) const {
    static const std::set<std::string> known{"config", "seed"};
    for (const auto& [key, value] : body.items()) {
        if (!known.count(key)) throw config_error(key, "unknown key");
    }
    DesignParams params;
    if (const auto it = body.find("config"); it != body.end()) {
        try {
            params = design_from_json(*it);
        } catch (const config_error& e) {
            std::string message = e.what();
            if (!e.path().empty()) message = message.substr(e.path().size() + 2);
            throw config_error(e.path().empty() ? "config" : "config." + e.path(), message);
        }
    }
    std::uint64_t seed = kDefaultSeed;
    if (const auto it = body.find("seed"); it != body.end()) {
        if (!it->is_number_unsigned()) throw config_error("seed", "expected a non-negative integer");
        seed = it->get<std::uint64_t>();
    }

    std::unique_lock lock(sessions_mutex_);
    const std::string id = next_id();
    TrialSession session(id, params, seed);
    if (!options_.data_dir.empty()) session.persist_to(options_.data_dir / (id + ".jsonl"));
    auto slot = std::make_shared<Slot>(std::move(session));
    json view = slot->session.view();
    sessions_.emplace(id, std::move(slot));
    return reply(201, view);
}

ServiceResponse ConductService::list() const {
    std::shared_lock lock(sessions_mutex_);
    json out = json::array();
    for (const auto& [id, slot] : sessions_) {
        std::lock_guard guard(slot->mutex);
        out.push_back({{"id", id}, {"status", to_string(slot->session.status())}});
    }
    return reply(200, json{{"trials", out}});
}

ServiceResponse ConductService::handle(const std::string& method, const std::string& path,
                                       const std::map<std::string, std::string>& query,
                                       const std::string& body_text, const std::string& authorization) const {
    if (!options_.token.empty() && authorization != "Bearer " + options_.token) {
        return error(401, "unauthorized", "missing or wrong bearer token");
    }
    const auto parts = split(path, '/');
    if (parts.empty() || parts[0] != "trials" || parts.size() > 3) return error(404, "not_found", "unknown route");

    json body = json::object();
    if (method == "POST" && !body_text.empty()) {
        try {
            body = json::parse(body_text);
        } catch (const json::parse_error& e) {
            return error(400, "invalid_json", e.what());
        }
        if (!body.is_object()) return error(422, "invalid_payload", "request body must be an object");
    }

    if (parts.size() == 1) {
        if (method == "GET") return list();
        if (method == "POST") return guarded([&] { return create(body); });
        return error(404, "not_found", "unknown route");
    }

    const auto slot = find(parts[1]);
    if (!slot) return error(404, "not_found", "unknown trial '" + parts[1] + "'");
    const std::string action = parts.size() == 3 ? parts[2] : "";

    return guarded([&]() -> ServiceResponse {
        std::lock_guard guard(slot->mutex);
        TrialSession& s = slot->session;
        if (action.empty() && method == "GET") return reply(200, s.view());
        if (action == "events" && method == "POST") {
            const auto events = read_events(body);
            s.post(read_now(body), events);
            return reply(200, s.view());
        }
        if (action == "what-if" && method == "POST") {
            const auto events = read_events(body);
            const Decision d = s.what_if(read_now(body), events);
            return reply(200, json{{"decision", to_json(d)}, {"persisted", false}});
        }
        if (action == "finalize" && method == "POST") {
            for (const auto& [key, value] : body.items()) {
                if (key != "now") throw config_error(key, "unknown key");
            }
            const FinalizeReport& report = s.finalize(read_now(body));
            return reply(200, json{{"status", to_string(s.status())},
                                   {"report", to_json(report, s.params(), s.seed())}});
        }
        if (action == "decision-table" && method == "GET") {
            std::vector<int> ns{3, 6, 9};
            if (const auto it = query.find("n"); it != query.end()) {
                ns.clear();
                for (const auto& item : split(it->second, ',')) {
                    try {
                        ns.push_back(std::stoi(item));
                    } catch (const std::exception&) {
                        throw config_error("n", "expected a comma-separated list of integers");
                    }
                    if (ns.back() < 1 || ns.back() > 1000) throw config_error("n", "values must lie in [1, 1000]");
                }
            }
            const auto rows = generate_decision_table(s.params(), ns);
            const std::string format = query.count("format") ? query.at("format") : "json";
            if (format == "text") return {200, "text/plain", format_decision_table_text(rows)};
            if (format == "csv") return {200, "text/csv", format_decision_table_csv(rows)};
            if (format != "json") throw config_error("format", "expected json, csv or text");
            return reply(200, json{{"config_hash", config_hash(s.params())},
                                   {"boundaries", to_json(compute_boundaries(s.params()))},
                                   {"rows", to_json(rows)}});
        }
        return error(404, "not_found", "unknown route");
    });
}

void ConductService::mount(httplib::Server& server) const {
    auto adapter = [this](const httplib::Request& req, httplib::Response& res) {
        std::map<std::string, std::string> query;
        for (const auto& [key, value] : req.params) query[key] = value;
        const auto r = handle(req.method, req.path, query, req.body, req.get_header_value("Authorization"));
        res.status = r.status;
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_content(r.body, r.content_type);
    };
    server.Get(".*", adapter);
    server.Post(".*", adapter);
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Headers", "Authorization, Content-Type");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.status = 204;
    });
}

}  // namespace tite_stein
