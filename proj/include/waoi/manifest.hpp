#pragma once

#include <chrono>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "waoi/errors.hpp"

namespace waoi {

inline const char* tool_version() { return "0.1.0"; }

// Every file-producing run writes a manifest next to its outputs. Re-running
// the recorded command with the same config and seed regenerates the listed
// CSVs byte for byte.
struct RunManifest {
  std::uint64_t config_hash = 0;
  std::string version = tool_version();
  std::uint64_t seed = 0;
  std::string command;  // subcommand + flags, shell-style
  std::string started;
  std::string finished;
  std::vector<std::string> outputs;

  void write(const std::string& path) const {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot write manifest '" + path + "'");
    f << "config_hash = " << config_hash << "\n";
    f << "tool_version = " << version << "\n";
    f << "seed = " << seed << "\n";
    f << "command = " << command << "\n";
    f << "started = " << started << "\n";
    f << "finished = " << finished << "\n";
    for (const auto& o : outputs) f << "output = " << o << "\n";
  }

  static RunManifest read(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open manifest '" + path + "'");
    RunManifest m;
    std::string line;
    while (std::getline(f, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key == "config_hash")
        m.config_hash = std::stoull(value);
      else if (key == "tool_version")
        m.version = value;
      else if (key == "seed")
        m.seed = std::stoull(value);
      else if (key == "command")
        m.command = value;
      else if (key == "started")
        m.started = value;
      else if (key == "finished")
        m.finished = value;
      else if (key == "output")
        m.outputs.push_back(value);
    }
    return m;
  }
};

inline std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

}  // namespace waoi
