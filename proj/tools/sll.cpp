// Command-line front end. Talks to the library only through the C interface.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "sll/sll.h"

namespace fs = std::filesystem;

namespace {

int report_error(sll_status s) {
  std::cerr << "sll: " << sll_status_name(s) << ": " << sll_last_error() << "\n";
  return 1;
}

// Write to a sibling temp file, then rename over the target.
bool write_atomic(const fs::path& path, const std::string& data) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) return false;
    f.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!f) return false;
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fs::remove(tmp, ec);
  return !ec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for singular Liouville-type mean-field problems on closed surfaces"};
  app.set_version_flag("--version", std::string(sll_version()));

  std::string command, config_path, out_dir;
  long long seed = -1;
  double tol = 0;
  bool lenient = false, no_timings = false;
  app.add_option("command", command, "analyze | landscape | search | minmax | verify | classes")
      ->required()
      ->check(CLI::IsMember({"analyze", "landscape", "search", "minmax", "verify", "classes"}));
  app.add_option("--config", config_path, "JSON configuration file")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (default: output.path from the config)");
  auto* seed_opt = app.add_option("--seed", seed, "override search.seed")->check(CLI::NonNegativeNumber);
  auto* tol_opt = app.add_option("--tol", tol, "override search.grad_tol")->check(CLI::PositiveNumber);
  app.add_flag("--lenient", lenient, "warn on unknown keys instead of failing");
  app.add_flag("--no-timings", no_timings, "omit wall-clock timings so reports are byte-reproducible");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  std::ifstream in(config_path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  if (!in && !in.eof()) {
    std::cerr << "sll: cannot read " << config_path << "\n";
    return 1;
  }

  sll_session* session = nullptr;
  if (sll_status s = sll_session_create(buf.str().c_str(), lenient ? 1 : 0, &session); s != SLL_OK)
    return report_error(s);

  std::string opts = "{";
  auto add = [&](const std::string& kv) { opts += (opts.size() > 1 ? "," : "") + kv; };
  if (*seed_opt) add("\"seed\":" + std::to_string(seed));
  if (*tol_opt) {
    char t[64];
    std::snprintf(t, sizeof t, "%.17g", tol);
    add(std::string("\"tol\":") + t);
  }
  if (no_timings) add("\"timings\":false");
  opts += "}";

  sll_result* result = nullptr;
  sll_status s = sll_run(session, command.c_str(), opts.c_str(), &result);
  if (s != SLL_OK) {
    sll_session_destroy(session);
    return report_error(s);
  }

  if (out_dir.empty()) out_dir = sll_session_output_path(session);
  int rc = sll_result_exit_code(result);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  bool ok = !ec && write_atomic(fs::path(out_dir) / "report.json", sll_result_report(result));
  for (size_t i = 0; ok && i < sll_result_artifact_count(result); ++i)
    ok = write_atomic(fs::path(out_dir) / sll_result_artifact_name(result, i), sll_result_artifact_data(result, i));
  sll_result_destroy(result);
  sll_session_destroy(session);
  if (!ok) {
    std::cerr << "sll: cannot write outputs to " << out_dir << "\n";
    return 1;
  }
  if (rc == 2) std::cerr << "sll: no result found\n";
  return rc;
}
