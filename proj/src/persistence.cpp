#include "steinlab/persistence.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace steinlab {

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp + "'");
    out << content;
    if (!out) throw ConfigError("write to '" + tmp + "' failed");
  }
  std::filesystem::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trajectory_csv(const TrajectoryRecord& record) {
  std::ostringstream out;
  const Eigen::Index d = record.snapshots.empty() ? 1 : record.snapshots.front().dim();
  out << "t,particle";
  for (Eigen::Index k = 0; k < d; ++k) out << ",x_" << (k + 1);
  out << '\n';
  for (std::size_t s = 0; s < record.snapshots.size(); ++s) {
    const auto& snap = record.snapshots[s];
    for (Eigen::Index i = 0; i < snap.size(); ++i) {
      out << format_number(record.times[s]) << ',' << i;
      for (Eigen::Index k = 0; k < d; ++k) out << ',' << format_number(snap.positions()(k, i));
      out << '\n';
    }
  }
  return out.str();
}

TrajectoryRecord parse_trajectory_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,particle", 0) != 0) throw ConfigError("trajectory CSV header missing");
  const auto d = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',') - 1);
  if (d < 1) throw ConfigError("trajectory CSV has no coordinate columns");

  TrajectoryRecord record;
  std::vector<double> coords;
  double current = std::nan("");
  auto flush = [&]() {
    if (coords.empty()) return;
    const auto n = static_cast<Eigen::Index>(coords.size()) / d;
    record.times.push_back(current);
    record.snapshots.emplace_back(PointCloud(Eigen::Map<PointCloud>(coords.data(), d, n)));
    coords.clear();
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
      if (res.ec != std::errc() || res.ptr != item.data() + item.size())
        throw ConfigError("malformed trajectory CSV row: " + line);
      cells.push_back(v);
    }
    if (static_cast<Eigen::Index>(cells.size()) != d + 2) throw ConfigError("trajectory CSV row has wrong arity: " + line);
    if (cells[0] != current) {
      flush();
      current = cells[0];
    }
    coords.insert(coords.end(), cells.begin() + 2, cells.end());
  }
  flush();
  return record;
}

std::string jsonl(const std::vector<nlohmann::json>& records) {
  std::string out;
  for (const auto& r : records) out += r.dump() + "\n";
  return out;
}

std::vector<nlohmann::json> parse_jsonl(const std::string& text) {
  std::vector<nlohmann::json> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  return out;
}

}  // namespace steinlab
