#pragma once

// Reads decision tables in the CSV layout written by
// format_decision_table_csv.

#include "tite_stein/decision_table.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace table_reference {

inline tite_stein::CountCondition parse_count(const std::string& s) {
    using Op = tite_stein::CountCondition::Op;
    if (s.empty() || s == "Any") return {Op::any, 0};
    if (s.rfind(">= ", 0) == 0) return {Op::at_least, std::stoi(s.substr(3))};
    if (s.rfind("<= ", 0) == 0) return {Op::at_most, std::stoi(s.substr(3))};
    return {Op::exactly, std::stoi(s)};
}

inline tite_stein::BoundCondition parse_bound(const std::string& s) {
    using Op = tite_stein::BoundCondition::Op;
    tite_stein::BoundCondition b;
    if (s.empty() || s == "Any") return b;
    if (s.rfind("<= ", 0) == 0) return {Op::at_most, std::stod(s.substr(3)), 0.0};
    if (s.rfind(">= ", 0) == 0) return {Op::at_least, std::stod(s.substr(3)), 0.0};
    if (s.rfind("> ", 0) == 0) return {Op::above, std::stod(s.substr(2)), 0.0};
    if (s.rfind("< ", 0) == 0) return {Op::below, std::stod(s.substr(2)), 0.0};
    if (s.front() == '(') {
        const auto comma = s.find(',');
        return {Op::between, std::stod(s.substr(1, comma - 1)), std::stod(s.substr(comma + 1))};
    }
    throw std::invalid_argument("bad bound '" + s + "'");
}

inline std::vector<std::string> fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::vector<tite_stein::DecisionTableRow> parse_csv(std::istream& in) {
    std::vector<tite_stein::DecisionTableRow> rows;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = fields(line);
        if (f.size() != 6) throw std::invalid_argument("bad row '" + line + "'");
        tite_stein::DecisionTableRow r;
        r.n_d = std::stoi(f[0]);
        if (f[5].rfind("Pending", 0) == 0) {
            r.pending_rule = true;
            r.pending_cutoff = std::stoi(f[5].substr(f[5].rfind(' ') + 1));
            r.decision = "Pending";
        } else {
            r.tox_count = parse_count(f[1]);
            r.tox_bound = parse_bound(f[2]);
            r.eff_count = parse_count(f[3]);
            r.eff_bound = parse_bound(f[4]);
            r.decision = f[5];
        }
        rows.push_back(r);
    }
    return rows;
}

inline std::vector<tite_stein::DecisionTableRow> load(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file);
    return parse_csv(in);
}

inline std::vector<tite_stein::DecisionTableRow> parse_text(const std::string& csv) {
    std::istringstream in(csv);
    return parse_csv(in);
}

}  // namespace table_reference
