#pragma once

// Machine-readable run reports: one record per check, each carrying its
// tolerance and direction. Text rendering is byte-stable given the same
// scenario and seed; timings are emitted on a separate trailing line so they
// can be stripped for comparisons.

#include "util.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace qm {

enum class Bound { UpperAbs, LowerValue }; // |value| <= tol, or value >= tol

struct Check {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    Bound bound = Bound::UpperAbs;
    bool pass = false;

    static Check upper(std::string name, double value, double tol) {
        Check c{std::move(name), value, tol, Bound::UpperAbs, std::abs(value) <= tol};
        return c;
    }
    static Check lower(std::string name, double value, double tol) {
        Check c{std::move(name), value, tol, Bound::LowerValue, value >= tol};
        return c;
    }
};

struct Report {
    std::string command;
    std::string scenario_digest;
    std::vector<Check> checks;
    std::vector<std::pair<std::string, std::string>> notes;
    double elapsed_ms = 0.0;

    void add(Check c) { checks.push_back(std::move(c)); }
    void note(std::string k, std::string v) { notes.emplace_back(std::move(k), std::move(v)); }

    bool pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }

    int exit_code() const { return pass() ? 0 : 1; }

    std::string render(bool with_timings = true) const {
        std::string out;
        out += "command: " + command + "\n";
        out += "scenario: " + scenario_digest + "\n";
        char line[256];
        std::snprintf(line, sizeof line, "%-44s %-22s %-4s %-14s %s\n", "check", "value", "dir",
                      "tolerance", "status");
        out += line;
        for (const auto& c : checks) {
            std::snprintf(line, sizeof line, "%-44s %-22s %-4s %-14s %s\n", c.name.c_str(),
                          fmt_sci(c.value).c_str(), c.bound == Bound::UpperAbs ? "<=" : ">=",
                          fmt_g(c.tolerance).c_str(), c.pass ? "pass" : "FAIL");
            out += line;
        }
        for (const auto& [k, v] : notes) out += "note " + k + ": " + v + "\n";
        out += std::string("result: ") + (pass() ? "pass" : "FAIL") + "\n";
        if (with_timings) out += "time_ms: " + fmt_g(elapsed_ms) + "\n";
        return out;
    }

    std::string to_json() const {
        nlohmann::json j;
        j["command"] = command;
        j["scenario"] = scenario_digest;
        j["result"] = pass() ? "pass" : "fail";
        j["time_ms"] = elapsed_ms;
        j["checks"] = nlohmann::json::array();
        for (const auto& c : checks) {
            nlohmann::json jc;
            jc["name"] = c.name;
            jc["value"] = c.value;
            jc["tolerance"] = c.tolerance;
            jc["direction"] = c.bound == Bound::UpperAbs ? "<=" : ">=";
            jc["pass"] = c.pass;
            j["checks"].push_back(jc);
        }
        j["notes"] = nlohmann::json::object();
        for (const auto& [k, v] : notes) j["notes"][k] = v;
        return j.dump(2) + "\n";
    }
};

} // namespace qm
