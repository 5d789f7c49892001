#pragma once

#include "json.hpp"
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kpzlab/harness/config.hpp"
#include "kpzlab/harness/summary.hpp"

namespace kpzlab {

inline constexpr int kSummarySchemaVersion = 1;

using Cell = std::variant<std::string, double, long long>;

struct Table {
    std::string name;  // file stem
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    Table() = default;
    Table(std::string n, std::vector<std::string> cols) : name(std::move(n)), columns(std::move(cols)) {}
    void add(std::vector<Cell> row);
    std::string csv() const;
};

// doubles print with 17 significant digits, strings are quoted when they hold a comma or quote
std::string csv_field(const Cell& c);

struct Verdict {
    std::string name;
    bool pass = false;
    std::string detail;
    nlohmann::json values = nlohmann::json::object();
};

struct Failure {
    std::string kind;
    std::string message;
};

struct RunArtifact {
    ExperimentConfig config;
    std::vector<Table> tables;
    std::vector<Verdict> verdicts;
    nlohmann::json estimates = nlohmann::json::object();
    double wall_seconds = 0.0;
    std::optional<Failure> failure;

    bool all_pass() const;
    const Verdict& verdict(const std::string& name) const;
    Table& table(const std::string& name);
};

// JSON summary: schema version, config snapshot, verdicts, estimates, timings, failure record
nlohmann::json summary_json(const RunArtifact& a);

// Summary of a bare replica table: per-column replica mean and standard error, and
// weighted log-log slopes of the requested y columns against x.
nlohmann::json summarize(const Table& t, const std::string& x_column, const std::vector<std::string>& y_columns);

// writes to path + ".tmp" then renames over path
void write_atomic(const std::string& path, const std::string& content);
// config.ini, <table>.csv and summary.json under dir (created if needed)
void write_artifact(const RunArtifact& a, const std::string& dir);

}  // namespace kpzlab
