#pragma once

#include "tite_stein/decision.hpp"
#include "tite_stein/decision_table.hpp"
#include "tite_stein/design.hpp"
#include "tite_stein/selection.hpp"
#include "tite_stein/simulator.hpp"
#include "tite_stein/verification.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace tite_stein {

using json = nlohmann::json;

/// Seed used by finalize when the caller gives none.
inline constexpr std::uint64_t kDefaultSeed = 2025;

/// Reads and parses a JSON file. IO and syntax failures become config_error
/// with the file name as path.
json load_json_file(const std::filesystem::path& file);

/// Design configuration. Missing keys keep their defaults; unknown keys and
/// wrong types raise config_error naming the key path. The result is
/// validated.
DesignParams design_from_json(const json& doc);
json to_json(const DesignParams& params);

/// Scenario document: the scenario fields plus an optional "accrual" object.
struct ScenarioDocument {
    Scenario scenario;
    AccrualModel accrual;
};

ScenarioDocument scenario_from_json(const json& doc);
json to_json(const Scenario& scenario, const AccrualModel& accrual);

FinalData final_data_from_json(const json& doc);
json to_json(const FinalData& data);

json to_json(const Boundaries& boundaries);
json to_json(const InterimSummary& summary);
json to_json(const Decision& decision);
json to_json(const SelectionReport& report);
json to_json(const VerificationReport& report);
json to_json(std::span<const DecisionTableRow> rows);

/// 16 hex digits of FNV-1a 64 over the compact dump of to_json(params).
std::string config_hash(const DesignParams& params);

/// Selection, verification and the declared OBD for a complete dataset.
/// Verification runs only when a candidate exists and is enabled. The JSON
/// form is shared by the CLI and the service.
struct FinalizeReport {
    SelectionReport selection;
    bool verified = false;
    VerificationReport verification;
    int obd = 0;  // 0 when no dose is declared
};

FinalizeReport finalize_trial(const FinalData& data, const DesignParams& params, std::uint64_t seed);
json to_json(const FinalizeReport& report, const DesignParams& params, std::uint64_t seed);

/// Operating characteristics as JSON and as a one-row CSV. Both carry the
/// scenario name, the config hash and the seed.
json oc_to_json(const OperatingCharacteristics& oc, const Scenario& scenario, const DesignParams& params,
                std::uint64_t seed);
std::string oc_csv_header(int num_doses);
std::string oc_csv_row(const OperatingCharacteristics& oc, const Scenario& scenario,
                       const DesignParams& params, std::uint64_t seed);

}  // namespace tite_stein
