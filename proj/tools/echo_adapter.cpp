// Reference adapter for the line protocol. Wraps a built-in benchmark and
// offers switches for exercising host error paths.
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfals/models.hpp"

namespace {

void usage() {
  std::cerr << "usage: mfals_echo_adapter [--function four_branch|rastrigin|borehole]\n"
               "                          [--bad-id] [--error MSG] [--crash-after N]\n"
               "                          [--exit-code N] [--drift] [--no-handshake]\n";
}

}  // namespace

int main(int argc, char** argv) {
  std::string function = "four_branch";
  bool bad_id = false;
  bool drift = false;
  bool handshake = true;
  std::string error;
  long crash_after = -1;
  int exit_code = 3;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    auto next = [&]() -> std::string {
      if (i + 1 >= argc) {
        usage();
        std::exit(64);
      }
      return argv[++i];
    };
    if (a == "--function") {
      function = next();
    } else if (a == "--bad-id") {
      bad_id = true;
    } else if (a == "--error") {
      error = next();
    } else if (a == "--crash-after") {
      crash_after = std::stol(next());
    } else if (a == "--exit-code") {
      exit_code = std::stoi(next());
    } else if (a == "--drift") {
      drift = true;
    } else if (a == "--no-handshake") {
      handshake = false;
    } else {
      usage();
      return 64;
    }
  }

  std::vector<std::string> inputs;
  if (function == "four_branch" || function == "rastrigin") {
    inputs = {"x1", "x2"};
  } else if (function == "borehole") {
    inputs = {"rw", "r", "Tu", "Hu", "Tl", "Hl", "L", "Kw"};
  } else {
    usage();
    return 64;
  }

  if (handshake) {
    std::cout << nlohmann::json{{"ready", true}, {"inputs", inputs}}.dump() << std::endl;
  } else {
    std::cout << "hello" << std::endl;
  }

  long served = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    if (crash_after >= 0 && served >= crash_after) return exit_code;
    nlohmann::json req = nlohmann::json::parse(line, nullptr, false);
    if (req.is_discarded() || !req.contains("id") || !req.contains("params")) {
      std::cout << nlohmann::json{{"id", 0}, {"error", "malformed request"}}.dump() << std::endl;
      continue;
    }
    const auto id = req["id"].get<std::uint64_t>();
    const auto reply_id = bad_id ? id + 1 : id;
    if (!error.empty()) {
      std::cout << nlohmann::json{{"id", reply_id}, {"error", error}}.dump() << std::endl;
      ++served;
      continue;
    }
    std::vector<double> x;
    bool missing = false;
    for (const auto& name : inputs) {
      if (!req["params"].contains(name)) {
        missing = true;
        break;
      }
      x.push_back(req["params"][name].get<double>());
    }
    if (missing) {
      std::cout << nlohmann::json{{"id", reply_id}, {"error", "missing parameter"}}.dump()
                << std::endl;
      ++served;
      continue;
    }
    try {
      double v = function == "four_branch" ? mfals::four_branch(x)
                 : function == "rastrigin" ? mfals::rastrigin_limit(x)
                                           : mfals::borehole(x);
      if (drift) v += 1e-3 * static_cast<double>(served);
      std::cout << nlohmann::json{{"id", reply_id}, {"value", v}}.dump() << std::endl;
    } catch (const std::exception& e) {
      std::cout << nlohmann::json{{"id", reply_id}, {"error", e.what()}}.dump() << std::endl;
    }
    ++served;
  }
  return 0;
}
