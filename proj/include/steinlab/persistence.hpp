#pragma once

#include "steinlab/dynamics.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace steinlab {

/// Writes `content` to `path` through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

/// Rows `t,particle,x_1,...,x_d`, one per particle and snapshot.
std::string trajectory_csv(const TrajectoryRecord& record);
/// Inverse of `trajectory_csv`; `dt` and `method` are not stored in the CSV.
TrajectoryRecord parse_trajectory_csv(const std::string& text);

/// One JSON object per line.
std::string jsonl(const std::vector<nlohmann::json>& records);
std::vector<nlohmann::json> parse_jsonl(const std::string& text);

/// Shortest decimal representation that round-trips.
std::string format_number(double v);

}  // namespace steinlab
