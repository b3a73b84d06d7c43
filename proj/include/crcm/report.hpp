#pragma once

#include <string>
#include <vector>

namespace crcm {

struct CheckRecord {
    std::string id;
    std::string equation; // construction equation tag, or "plumbing"
    double residual = 0;
    double tol = 0;
    bool pass = false;
};

/// Deterministic JSON report: same inputs and seed give identical text.
class Report {
public:
    explicit Report(std::string tool, std::string config_echo = "{}")
        : tool_(std::move(tool)), config_(std::move(config_echo)) {}

    void add(const std::string& id, const std::string& equation, double residual, double tol);
    void add_value(const std::string& id, const std::string& equation, double value);
    void note(const std::string& id, const std::string& text);

    bool all_pass() const;
    int failures() const;
    std::string to_json() const;
    const std::vector<CheckRecord>& checks() const { return checks_; }

private:
    std::string tool_;
    std::string config_;
    std::vector<CheckRecord> checks_;
    std::vector<std::pair<std::string, std::string>> notes_;
};

} // namespace crcm
