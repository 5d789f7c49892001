#include "kpzlab/harness/artifact.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "kpzlab/core/errors.hpp"

namespace kpzlab {

using nlohmann::json;

void Table::add(std::vector<Cell> row) {
    if (row.size() != columns.size())
        throw UsageError("table " + name + ": row has " + std::to_string(row.size()) + " cells, expected " +
                         std::to_string(columns.size()));
    rows.push_back(std::move(row));
}

std::string csv_field(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", *d);
        return buf;
    }
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    const auto& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + "\"";
}

std::string Table::csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + csv_field(columns[i]);
    out += "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + csv_field(r[i]);
        out += "\n";
    }
    return out;
}

bool RunArtifact::all_pass() const {
    if (failure) return false;
    for (const auto& v : verdicts)
        if (!v.pass) return false;
    return true;
}

const Verdict& RunArtifact::verdict(const std::string& name) const {
    for (const auto& v : verdicts)
        if (v.name == name) return v;
    throw UsageError("artifact: no verdict named " + name);
}

Table& RunArtifact::table(const std::string& name) {
    for (auto& t : tables)
        if (t.name == name) return t;
    throw UsageError("artifact: no table named " + name);
}

namespace {
json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
}  // namespace

json summary_json(const RunArtifact& a) {
    json j;
    j["schema_version"] = kSummarySchemaVersion;
    j["experiment"] = a.config.has("run", "experiment") ? a.config.experiment() : "";
    json cfg = json::object();
    for (const auto& [s, keys] : a.config.sections)
        for (const auto& [k, v] : keys) cfg[s][k] = v;
    j["config"] = cfg;
    j["verdicts"] = json::array();
    for (const auto& v : a.verdicts)
        j["verdicts"].push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}, {"values", v.values}});
    j["all_pass"] = a.all_pass();
    j["estimates"] = a.estimates;
    j["tables"] = json::array();
    for (const auto& t : a.tables) j["tables"].push_back({{"name", t.name}, {"rows", t.rows.size()}, {"columns", t.columns}});
    j["wall_seconds"] = a.wall_seconds;
    j["failure"] = a.failure ? json{{"kind", a.failure->kind}, {"message", a.failure->message}} : json(nullptr);
    return j;
}

json summarize(const Table& t, const std::string& x_column, const std::vector<std::string>& y_columns) {
    auto col = [&](const std::string& name) {
        for (std::size_t i = 0; i < t.columns.size(); ++i)
            if (t.columns[i] == name) return i;
        throw UsageError("summarize: table " + t.name + " has no column " + name);
    };
    auto as_num = [](const Cell& c) {
        if (const auto* d = std::get_if<double>(&c)) return *d;
        if (const auto* i = std::get_if<long long>(&c)) return double(*i);
        throw UsageError("summarize: non-numeric cell");
    };
    const std::size_t xc = col(x_column);
    std::vector<std::size_t> yc;
    for (const auto& y : y_columns) yc.push_back(col(y));

    std::map<double, std::vector<std::vector<double>>> groups;
    for (const auto& r : t.rows) {
        auto& g = groups[as_num(r[xc])];
        g.resize(yc.size());
        for (std::size_t i = 0; i < yc.size(); ++i) g[i].push_back(as_num(r[yc[i]]));
    }
    json out;
    out["table"] = t.name;
    out["x"] = x_column;
    out["groups"] = json::array();
    std::vector<double> xs;
    std::vector<std::vector<double>> means(yc.size()), ses(yc.size());
    for (const auto& [x, g] : groups) {
        json row{{"x", x}, {"replicas", g.empty() ? 0 : g[0].size()}};
        xs.push_back(x);
        for (std::size_t i = 0; i < yc.size(); ++i) {
            const auto e = mean_estimate(g[i]);
            row[y_columns[i]] = {{"mean", e.value}, {"se", finite_or_null(e.se)}};
            means[i].push_back(e.value);
            ses[i].push_back(e.se);
        }
        out["groups"].push_back(row);
    }
    out["slopes"] = json::object();
    for (std::size_t i = 0; i < yc.size(); ++i) {
        SlopeFit f;
        bool positive = std::all_of(means[i].begin(), means[i].end(), [](double v) { return v > 0; });
        if (positive) f = loglog_slope(xs, means[i], ses[i]);
        else f.verdict = "insufficient";
        out["slopes"][y_columns[i]] = {{"verdict", f.verdict},
                                       {"points", xs.size()},
                                       {"slope", finite_or_null(f.slope)},
                                       {"slope_se", finite_or_null(f.slope_se)},
                                       {"ci_low", finite_or_null(f.ci_low)},
                                       {"ci_high", finite_or_null(f.ci_high)}};
    }
    return out;
}

void write_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw ConfigError("cannot write " + tmp);
        f << content;
        f.flush();
        if (!f) throw ConfigError("write failed for " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw ConfigError("cannot rename " + tmp + ": " + ec.message());
    }
}

void write_artifact(const RunArtifact& a, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
    const std::filesystem::path d(dir);
    write_atomic((d / "config.ini").string(), serialize(a.config));
    for (const auto& t : a.tables) write_atomic((d / (t.name + ".csv")).string(), t.csv());
    write_atomic((d / "summary.json").string(), summary_json(a).dump(2) + "\n");
}

}  // namespace kpzlab
