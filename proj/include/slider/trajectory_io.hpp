#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>

#include "slider/errors.hpp"
#include "slider/scenario.hpp"

namespace slider {

enum class TrajectoryFormat { Csv, Jsonl };

inline constexpr std::array<const char*, 21> kTrajectoryColumns = {
    "t",      "x",      "y",      "theta",   "vx",      "vy", "r",  "fx_cmd", "fy_cmd", "tau_cmd", "fx_real",
    "fy_real", "tau_real", "T1", "T2", "T3", "T4", "T5", "T6", "T7", "T8"};

/// Shortest decimal with 9 significant digits.
inline std::string format_sig9(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

/// Value after a trip through the 9-significant-digit text form.
inline double round_sig9(double v) { return std::strtod(format_sig9(v).c_str(), nullptr); }

namespace detail {

inline std::array<double, 13> numeric_fields(const TrajectorySample& s) {
    return {s.t,           s.state.x,     s.state.y,       s.state.theta, s.state.v_x,
            s.state.v_y,   s.state.r,     s.commanded.f_x, s.commanded.f_y, s.commanded.tau,
            s.realized.f_x, s.realized.f_y, s.realized.tau};
}

inline TrajectorySample sample_from_fields(const std::array<double, 13>& v, const ThrusterSet& flags) {
    TrajectorySample s;
    s.t = v[0];
    s.state = {v[1], v[2], v[3], v[4], v[5], v[6]};
    s.commanded = {v[7], v[8], v[9]};
    s.realized = {v[10], v[11], v[12]};
    s.thrusters = flags;
    return s;
}

}  // namespace detail

inline void write_trajectory_csv(const TrajectoryRecord& record, std::ostream& out) {
    for (std::size_t i = 0; i < kTrajectoryColumns.size(); ++i) out << (i ? "," : "") << kTrajectoryColumns[i];
    out << '\n';
    for (const auto& s : record.samples) {
        const auto fields = detail::numeric_fields(s);
        for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << format_sig9(fields[i]);
        for (std::size_t k = 0; k < kThrusterCount; ++k) out << ',' << (s.thrusters.test(k) ? 1 : 0);
        out << '\n';
    }
}

inline void write_trajectory_jsonl(const TrajectoryRecord& record, std::ostream& out) {
    for (const auto& s : record.samples) {
        const auto fields = detail::numeric_fields(s);
        nlohmann::ordered_json row;
        for (std::size_t i = 0; i < fields.size(); ++i) row[kTrajectoryColumns[i]] = round_sig9(fields[i]);
        for (std::size_t k = 0; k < kThrusterCount; ++k) row[kTrajectoryColumns[13 + k]] = s.thrusters.test(k) ? 1 : 0;
        out << row.dump() << '\n';
    }
}

/// Writes `record` to `path`; throws std::system_error on I/O failure.
inline void export_trajectory(const TrajectoryRecord& record, const std::filesystem::path& path, TrajectoryFormat format) {
    if (record.empty()) throw ParameterError("cannot export an empty trajectory");
    std::ofstream out(path);
    if (!out) throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
    if (format == TrajectoryFormat::Csv) write_trajectory_csv(record, out);
    else write_trajectory_jsonl(record, out);
    out.flush();
    if (!out) throw std::system_error(errno, std::generic_category(), "write failed: " + path.string());
}

inline TrajectoryRecord read_trajectory_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigurationError("trajectory file is empty");
    {
        std::string expected;
        for (std::size_t i = 0; i < kTrajectoryColumns.size(); ++i) expected += (i ? "," : "") + std::string(kTrajectoryColumns[i]);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line != expected) throw ConfigurationError("unexpected trajectory header: " + line);
    }
    TrajectoryRecord record;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        std::istringstream cells(line);
        std::string cell;
        std::array<double, 13> values{};
        ThrusterSet flags;
        std::size_t col = 0;
        while (std::getline(cells, cell, ',')) {
            if (col >= kTrajectoryColumns.size()) throw ConfigurationError("too many columns on row " + std::to_string(row));
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str()) throw ConfigurationError("bad number on row " + std::to_string(row) + ": " + cell);
            if (col < 13) values[col] = v;
            else if (v != 0.0) flags.set(col - 13);
            ++col;
        }
        if (col != kTrajectoryColumns.size()) throw ConfigurationError("too few columns on row " + std::to_string(row));
        record.samples.push_back(detail::sample_from_fields(values, flags));
    }
    return record;
}

inline TrajectoryRecord read_trajectory_jsonl(std::istream& in) {
    TrajectoryRecord record;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto row = nlohmann::json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object()) throw ConfigurationError("bad JSONL trajectory row");
        std::array<double, 13> values{};
        ThrusterSet flags;
        for (std::size_t i = 0; i < kTrajectoryColumns.size(); ++i) {
            const auto it = row.find(kTrajectoryColumns[i]);
            if (it == row.end() || !it->is_number())
                throw ConfigurationError(std::string("trajectory row missing field ") + kTrajectoryColumns[i]);
            if (i < 13) values[i] = it->get<double>();
            else if (it->get<double>() != 0.0) flags.set(i - 13);
        }
        record.samples.push_back(detail::sample_from_fields(values, flags));
    }
    return record;
}

/// Reads a trajectory, choosing the format by extension (.jsonl, otherwise CSV).
inline TrajectoryRecord load_trajectory(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
    return path.extension() == ".jsonl" ? read_trajectory_jsonl(in) : read_trajectory_csv(in);
}

}  // namespace slider
