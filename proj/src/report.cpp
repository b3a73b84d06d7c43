#include "crcm/report.hpp"

#include "json.hpp"

namespace crcm {

void Report::add(const std::string& id, const std::string& equation, double residual, double tol) {
    checks_.push_back({id, equation, residual, tol, std::abs(residual) <= tol});
}

void Report::add_value(const std::string& id, const std::string& equation, double value) {
    checks_.push_back({id, equation, value, -1.0, true}); // informational
}

void Report::note(const std::string& id, const std::string& text) { notes_.emplace_back(id, text); }

bool Report::all_pass() const { return failures() == 0; }

int Report::failures() const {
    int n = 0;
    for (const auto& c : checks_)
        if (!c.pass) ++n;
    return n;
}

std::string Report::to_json() const {
    nlohmann::json j;
    j["tool"] = tool_;
    j["format"] = "crcm-report-v1";
    try {
        j["config"] = nlohmann::json::parse(config_);
    } catch (...) {
        j["config"] = config_;
    }
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : checks_) {
        nlohmann::json e;
        e["id"] = c.id;
        e["equation"] = c.equation;
        e["residual"] = c.residual;
        if (c.tol >= 0) {
            e["tol"] = c.tol;
            e["pass"] = c.pass;
        } else {
            e["informational"] = true;
        }
        checks.push_back(e);
    }
    j["checks"] = checks;
    nlohmann::json notes = nlohmann::json::object();
    for (const auto& [k, v] : notes_) notes[k] = v;
    j["notes"] = notes;
    j["summary"] = {{"total", checks_.size()}, {"failures", failures()}};
    return j.dump(2);
}

} // namespace crcm
