#include "ccgeom/report.hpp"

#include <chrono>
#include <fstream>
#include <iostream>

#include "ccgeom/parallel.hpp"

namespace ccgeom {

int& thread_cap() {
  static int cap = 0;
  return cap;
}

nlohmann::json report_envelope(const std::string& subcommand) {
  nlohmann::json j;
  j["tool"] = "cc-geom";
  j["version"] = kVersion;
  j["command"] = subcommand;
  j["timestamp"] = static_cast<int64_t>(
      std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
  j["error"] = nullptr;
  return j;
}

void write_report(const nlohmann::json& j, const std::string& path) {
  if (path.empty() || path == "-" || path == "json") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

}  // namespace ccgeom
