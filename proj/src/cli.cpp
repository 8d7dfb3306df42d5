#include "tite_stein/cli.hpp"

#include "tite_stein/config_io.hpp"
#include "tite_stein/decision_table.hpp"
#include "tite_stein/service.hpp"
#include "tite_stein/simulator.hpp"

#include "CLI11.hpp"
#include "httplib.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace tite_stein {

namespace fs = std::filesystem;

namespace {

// A config_error raised while reading `file`.
struct FileError {
    std::string file;
    config_error error;
};

DesignParams load_design(const std::string& file) {
    if (file.empty()) return DesignParams{};
    try {
        return design_from_json(load_json_file(file));
    } catch (const config_error& e) {
        throw FileError{file, e};
    }
}

ScenarioDocument load_scenario(const std::string& file) {
    try {
        ScenarioDocument doc = scenario_from_json(load_json_file(file));
        if (doc.scenario.name.empty()) doc.scenario.name = fs::path(file).stem().string();
        return doc;
    } catch (const config_error& e) {
        throw FileError{file, e};
    }
}

FinalData load_data(const std::string& file) {
    try {
        return final_data_from_json(load_json_file(file));
    } catch (const config_error& e) {
        throw FileError{file, e};
    }
}

void write_file(const fs::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::trunc);
    out << text;
    if (!out.flush()) throw std::runtime_error("cannot write " + file.string());
}

std::string fixed(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

struct SimulateOptions {
    std::string config;
    std::vector<std::string> scenarios;
    std::string manifest;
    int reps = 1000;
    std::uint64_t seed = kDefaultSeed;
    std::string out_dir;
    std::string mode;
    std::string format = "text";
    int threads = 0;
};

// Fills options from a manifest file; flags given on the command line win.
void apply_manifest(SimulateOptions& o, const CLI::App& cmd) {
    json doc;
    try {
        doc = load_json_file(o.manifest);
    } catch (const config_error& e) {
        throw FileError{o.manifest, e};
    }
    const fs::path base = fs::path(o.manifest).parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? p : (base / p).string(); };
    auto fail = [&](const std::string& key, const std::string& what) {
        throw FileError{o.manifest, config_error(key, what)};
    };
    if (!doc.is_object()) fail("", "manifest must be an object");
    for (const auto& [key, value] : doc.items()) {
        if (key == "config") {
            if (!value.is_string()) fail(key, "expected a string");
            if (cmd.count("--config") == 0) o.config = resolve(value.get<std::string>());
        } else if (key == "scenarios") {
            if (!value.is_array()) fail(key, "expected an array of paths");
            if (cmd.count("--scenario") == 0) {
                for (std::size_t i = 0; i < value.size(); ++i) {
                    if (!value[i].is_string()) fail(key + "[" + std::to_string(i) + "]", "expected a string");
                    o.scenarios.push_back(resolve(value[i].get<std::string>()));
                }
            }
        } else if (key == "reps") {
            if (!value.is_number_integer()) fail(key, "expected an integer");
            if (cmd.count("--reps") == 0) o.reps = value.get<int>();
        } else if (key == "seed") {
            if (!value.is_number_unsigned()) fail(key, "expected a non-negative integer");
            if (cmd.count("--seed") == 0) o.seed = value.get<std::uint64_t>();
        } else if (key == "out") {
            if (!value.is_string()) fail(key, "expected a string");
            if (cmd.count("--out") == 0) o.out_dir = resolve(value.get<std::string>());
        } else if (key == "mode") {
            if (!value.is_string()) fail(key, "expected a string");
            if (cmd.count("--mode") == 0) o.mode = value.get<std::string>();
        } else {
            fail(key, "unknown key");
        }
    }
}

int simulate(SimulateOptions o, const CLI::App& cmd, std::ostream& out) {
    if (!o.manifest.empty()) apply_manifest(o, cmd);
    if (o.scenarios.empty()) throw FileError{"", config_error("scenario", "at least one scenario is required")};
    if (o.reps < 1) throw FileError{"", config_error("reps", "must be at least 1")};

    // Everything is loaded and checked before any output is written.
    DesignParams params = load_design(o.config);
    if (!o.mode.empty()) {
        try {
            params.mode = mode_from_string(o.mode);
        } catch (const config_error& e) {
            throw FileError{"--mode", e};
        }
    }
    std::vector<ScenarioDocument> scenarios;
    for (const auto& file : o.scenarios) {
        scenarios.push_back(load_scenario(file));
        if (scenarios.back().scenario.num_doses() != params.num_doses) {
            throw FileError{file, config_error("p_tox", "scenario has " +
                                                            std::to_string(scenarios.back().scenario.num_doses()) +
                                                            " doses, config has " + std::to_string(params.num_doses))};
        }
    }

    const int threads = o.threads > 0 ? o.threads : default_thread_count();
    std::vector<OperatingCharacteristics> results;
    for (const auto& doc : scenarios) {
        results.push_back(operating_characteristics(params, doc.scenario, doc.accrual, o.reps, o.seed, threads));
    }

    if (!o.out_dir.empty()) {
        fs::create_directories(o.out_dir);
        json run{{"config", to_json(params)},
                 {"config_hash", config_hash(params)},
                 {"seed", o.seed},
                 {"reps", o.reps},
                 {"scenarios", json::array()}};
        for (std::size_t i = 0; i < scenarios.size(); ++i) {
            const Scenario& s = scenarios[i].scenario;
            const fs::path stem = fs::path(o.out_dir) / s.name;
            write_file(stem.string() + ".csv",
                       oc_csv_header(s.num_doses()) + "\n" + oc_csv_row(results[i], s, params, o.seed) + "\n");
            json j = oc_to_json(results[i], s, params, o.seed);
            j["scenario_spec"] = to_json(s, scenarios[i].accrual);
            write_file(stem.string() + ".json", j.dump(2) + "\n");
            run["scenarios"].push_back(s.name);
        }
        write_file(fs::path(o.out_dir) / "run.json", run.dump(2) + "\n");
    }

    if (o.format == "csv") {
        out << oc_csv_header(params.num_doses) << '\n';
        for (std::size_t i = 0; i < scenarios.size(); ++i) {
            out << oc_csv_row(results[i], scenarios[i].scenario, params, o.seed) << '\n';
        }
    } else if (o.format == "json") {
        json all = json::array();
        for (std::size_t i = 0; i < scenarios.size(); ++i) {
            all.push_back(oc_to_json(results[i], scenarios[i].scenario, params, o.seed));
        }
        out << all.dump(2) << '\n';
    } else {
        out << "mode " << to_string(params.mode) << ", reps " << o.reps << ", seed " << o.seed << ", config "
            << config_hash(params) << '\n';
        for (std::size_t i = 0; i < scenarios.size(); ++i) {
            const auto& oc = results[i];
            out << scenarios[i].scenario.name << "  sel%";
            for (double x : oc.selection_pct) out << ' ' << fixed(x, 1);
            out << "  ET " << fixed(oc.none_pct, 1) << "  N";
            for (double x : oc.mean_allocation) out << ' ' << fixed(x, 1);
            out << "  duration " << fixed(oc.mean_duration, 1) << '\n';
        }
    }
    return kExitOk;
}

std::vector<int> parse_sizes(const std::string& text) {
    std::vector<int> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || v < 1) throw FileError{"--n", config_error("n", "expected positive integers, got '" + text + "'")};
        out.push_back(v);
    }
    if (out.empty()) throw FileError{"--n", config_error("n", "is empty")};
    return out;
}

int decision_table(const std::string& config, const std::string& sizes, const std::string& format,
                   const std::string& out_file, std::ostream& out) {
    const DesignParams params = load_design(config);
    const auto rows = generate_decision_table(params, parse_sizes(sizes));
    std::string text;
    if (format == "csv") {
        text = format_decision_table_csv(rows);
    } else if (format == "json") {
        text = json{{"config_hash", config_hash(params)},
                    {"boundaries", to_json(compute_boundaries(params))},
                    {"rows", to_json(rows)}}
                   .dump(2) +
               "\n";
    } else {
        text = format_decision_table_text(rows);
    }
    if (out_file.empty()) {
        out << text;
    } else {
        write_file(out_file, text);
    }
    return kExitOk;
}

int finalize(const std::string& config, const std::string& data_file, std::uint64_t seed, const std::string& format,
             std::ostream& out) {
    const DesignParams params = load_design(config);
    const FinalData data = load_data(data_file);
    if (data.num_doses() != params.num_doses) {
        throw FileError{data_file, config_error("n", "dataset has " + std::to_string(data.num_doses()) +
                                                         " doses, config has " + std::to_string(params.num_doses))};
    }
    const FinalizeReport report = finalize_trial(data, params, seed);
    if (format == "text") {
        const auto& s = report.selection;
        out << "candidate: " << (s.candidate ? "DL" + std::to_string(s.candidate) : std::string("none")) << '\n';
        for (int d = 1; d <= data.num_doses(); ++d) {
            const auto i = static_cast<std::size_t>(d - 1);
            out << "  DL" << d << "  p " << fixed(s.p_tilde[i], 4) << "  q " << fixed(s.q_tilde[i], 4) << "  U "
                << (s.eligible[i] ? fixed(s.utilities[i], 4) : std::string("-")) << '\n';
        }
        if (report.verified) {
            out << "p_g: " << fixed(report.verification.p_g, 4) << '\n';
            out << "accepted: " << (report.verification.accepted ? "yes" : "no") << '\n';
        }
        out << "OBD: " << (report.obd ? "DL" + std::to_string(report.obd) : std::string("none")) << '\n';
    } else {
        out << to_json(report, params, seed).dump(2) << '\n';
    }
    return report.obd > 0 ? kExitOk : kExitNoObd;
}

int validate(const std::string& config, const std::vector<std::string>& scenarios, const std::string& data,
             std::ostream& out) {
    if (config.empty() && scenarios.empty() && data.empty()) {
        throw FileError{"", config_error("", "nothing to validate; pass --config, --scenario or --data")};
    }
    if (!config.empty()) {
        const DesignParams p = load_design(config);
        const Boundaries b = compute_boundaries(p);
        out << "ok " << config << "  config " << config_hash(p) << "  phi_L " << fixed(b.phi_L, 5) << "  phi_U "
            << fixed(b.phi_U, 5) << "  psi " << fixed(b.psi, 5) << '\n';
    }
    for (const auto& file : scenarios) {
        const auto doc = load_scenario(file);
        out << "ok " << file << "  " << doc.scenario.num_doses() << " doses\n";
    }
    if (!data.empty()) {
        const auto d = load_data(data);
        out << "ok " << data << "  " << d.num_doses() << " doses\n";
    }
    return kExitOk;
}

int serve(const std::string& host, int port, const std::string& data_dir, std::string token, std::ostream& out) {
    if (token.empty()) {
        if (const char* env = std::getenv("TITE_STEIN_TOKEN")) token = env;
    }
    ConductService service({data_dir, token});
    httplib::Server server;
    service.mount(server);
    out << "listening on " << host << ':' << port << std::endl;
    if (!server.listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dose finding with time-to-event toxicity and efficacy outcomes"};
    app.require_subcommand(1);

    SimulateOptions sim;
    auto* simulate_cmd = app.add_subcommand("simulate", "Monte-Carlo operating characteristics");
    simulate_cmd->add_option("--config", sim.config, "Design configuration (JSON)");
    simulate_cmd->add_option("--scenario", sim.scenarios, "Scenario file (JSON); repeatable");
    simulate_cmd->add_option("--manifest", sim.manifest, "Run manifest (JSON)");
    simulate_cmd->add_option("--reps", sim.reps, "Replications per scenario")->capture_default_str();
    simulate_cmd->add_option("--seed", sim.seed, "Base seed")->capture_default_str();
    simulate_cmd->add_option("--out", sim.out_dir, "Directory for per-scenario CSV and JSON files");
    simulate_cmd->add_option("--mode", sim.mode, "Override the config mode")->check(CLI::IsMember({"tite", "complete", "TITE", "COMPLETE"}));
    simulate_cmd->add_option("--format", sim.format, "Summary format on stdout")
        ->check(CLI::IsMember({"csv", "json", "text"}))
        ->capture_default_str();
    simulate_cmd->add_option("--threads", sim.threads, "Worker threads (default TITE_STEIN_THREADS or all cores)");

    std::string table_config, table_sizes = "3,6,9", table_format = "text", table_out;
    auto* table_cmd = app.add_subcommand("decision-table", "Regenerate the dose-assignment decision table");
    table_cmd->add_option("--config", table_config, "Design configuration (JSON)");
    table_cmd->add_option("--n", table_sizes, "Comma-separated cohort totals")->capture_default_str();
    table_cmd->add_option("--format", table_format)->check(CLI::IsMember({"csv", "json", "text"}))->capture_default_str();
    table_cmd->add_option("--out", table_out, "Write to a file instead of stdout");

    std::string fin_config, fin_data, fin_format = "json";
    std::uint64_t fin_seed = kDefaultSeed;
    auto* finalize_cmd = app.add_subcommand("finalize", "Select and verify the OBD from complete trial data");
    finalize_cmd->add_option("--config", fin_config, "Design configuration (JSON)");
    finalize_cmd->add_option("--data", fin_data, "Final dataset (JSON)")->required();
    finalize_cmd->add_option("--seed", fin_seed, "Verification seed")->capture_default_str();
    finalize_cmd->add_option("--format", fin_format)->check(CLI::IsMember({"json", "text"}))->capture_default_str();

    std::string val_config, val_data;
    std::vector<std::string> val_scenarios;
    auto* validate_cmd = app.add_subcommand("validate", "Check configuration, scenario and dataset files");
    validate_cmd->add_option("--config", val_config);
    validate_cmd->add_option("--scenario", val_scenarios);
    validate_cmd->add_option("--data", val_data);

    std::string host = "127.0.0.1", data_dir = "sessions", token;
    int port = 8080;
    auto* serve_cmd = app.add_subcommand("serve", "Run the trial-conduct HTTP service");
    serve_cmd->add_option("--host", host)->capture_default_str();
    serve_cmd->add_option("--port", port)->capture_default_str();
    serve_cmd->add_option("--data-dir", data_dir, "Directory of session logs")->capture_default_str();
    serve_cmd->add_option("--token", token, "Static bearer token (or TITE_STEIN_TOKEN)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (*simulate_cmd) return simulate(sim, *simulate_cmd, out);
        if (*table_cmd) return decision_table(table_config, table_sizes, table_format, table_out, out);
        if (*finalize_cmd) return finalize(fin_config, fin_data, fin_seed, fin_format, out);
        if (*validate_cmd) return validate(val_config, val_scenarios, val_data, out);
        if (*serve_cmd) return serve(host, port, data_dir, token, out);
    } catch (const FileError& e) {
        err << "error: ";
        if (!e.file.empty() && e.file != e.error.path()) err << e.file << ": ";
        err << e.error.what() << '\n';
        return kExitConfigError;
    } catch (const config_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}

}  // namespace tite_stein
