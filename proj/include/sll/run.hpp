#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sll/critical.hpp"
#include "sll/verify.hpp"

namespace sll {

// A validated configuration. `doc` is the normalized document with every default made
// explicit, so echoing it and parsing again yields an equal RunConfig.
struct RunConfig {
  nlohmann::json doc;
  std::vector<std::string> warnings;  // unknown keys accepted under lenient parsing
  bool operator==(const RunConfig& o) const { return doc == o.doc; }
};

// ParseError (syntax, type, unknown key; message carries a JSON pointer) or SemanticError.
RunConfig parse_config(const std::string& text, bool lenient = false);
RunConfig parse_config(const nlohmann::json& doc, bool lenient = false);

ProblemData build_problem(const RunConfig& cfg);
SearchConfig search_config(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);  // FNV-1a of the normalized document

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  bool timings = true;
};

struct Artifact {
  std::string name;
  std::string data;
};

struct RunOutput {
  int exit_code = 0;  // 0 success, 2 no result
  std::string report;
  std::vector<Artifact> artifacts;
};

// Commands: analyze, landscape, search, minmax, verify, classes.
RunOutput run_command(const std::string& command, const RunConfig& cfg, const RunOptions& opt = {});

}  // namespace sll
