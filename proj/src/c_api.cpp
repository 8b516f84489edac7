#include "sll/sll.h"

#include <memory>
#include <string>

#include "sll/run.hpp"

struct sll_session {
  sll::RunConfig cfg;
  std::string normalized;
  std::string output_path;
  std::unique_ptr<sll::ProblemData> problem;  // built on first use
};

struct sll_result {
  sll::RunOutput out;
};

namespace {

thread_local std::string g_last_error;

template <class F>
sll_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return SLL_OK;
  } catch (const sll::Error& e) {
    g_last_error = e.what();
    return static_cast<sll_status>(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SLL_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return SLL_INTERNAL;
  }
}

const sll::ProblemData& problem(const sll_session* s) {
  auto* m = const_cast<sll_session*>(s);
  if (!m->problem) m->problem = std::make_unique<sll::ProblemData>(sll::build_problem(m->cfg));
  return *m->problem;
}

sll::Configuration chart_config(const sll::SurfaceModel& surf, const double* c, int n) {
  sll::Configuration xi;
  for (int i = 0; i < n; ++i) xi.xi.push_back(surf.from_chart(c[2 * i], c[2 * i + 1]));
  return xi;
}

}  // namespace

extern "C" {

const char* sll_version(void) { return SLL_VERSION_STRING; }

const char* sll_status_name(sll_status s) { return sll::error_name(static_cast<sll::ErrorCode>(s)); }

const char* sll_last_error(void) { return g_last_error.c_str(); }

sll_status sll_session_create(const char* config_json, int lenient, sll_session** out) {
  return guarded([&] {
    if (!config_json || !out) sll::fail(sll::ErrorCode::InvalidArgument, "null argument");
    *out = nullptr;
    auto s = std::make_unique<sll_session>();
    s->cfg = sll::parse_config(std::string(config_json), lenient != 0);
    s->normalized = s->cfg.doc.dump();
    s->output_path = s->cfg.doc["output"]["path"].get<std::string>();
    *out = s.release();
  });
}

void sll_session_destroy(sll_session* s) { delete s; }

const char* sll_session_config(const sll_session* s) { return s ? s->normalized.c_str() : ""; }
const char* sll_session_output_path(const sll_session* s) { return s ? s->output_path.c_str() : "."; }

sll_status sll_run(sll_session* s, const char* command, const char* options_json, sll_result** out) {
  return guarded([&] {
    if (!s || !command || !out) sll::fail(sll::ErrorCode::InvalidArgument, "null argument");
    *out = nullptr;
    sll::RunOptions opt;
    if (options_json && *options_json) {
      nlohmann::json o;
      try {
        o = nlohmann::json::parse(options_json);
      } catch (const nlohmann::json::parse_error& e) {
        sll::fail(sll::ErrorCode::ParseError, std::string("options: ") + e.what());
      }
      if (!o.is_object()) sll::fail(sll::ErrorCode::ParseError, "options: expected an object");
      for (auto it = o.begin(); it != o.end(); ++it) {
        const auto& k = it.key();
        const auto& v = it.value();
        if (k == "seed" && v.is_number_unsigned()) opt.seed = v.get<std::uint64_t>();
        else if (k == "tol" && v.is_number()) opt.tol = v.get<double>();
        else if (k == "timings" && v.is_boolean()) opt.timings = v.get<bool>();
        else sll::fail(sll::ErrorCode::ParseError, "options/" + k + ": unknown key or wrong type");
      }
    }
    auto r = std::make_unique<sll_result>();
    r->out = sll::run_command(command, s->cfg, opt);
    *out = r.release();
  });
}

int sll_result_exit_code(const sll_result* r) { return r ? r->out.exit_code : 1; }
const char* sll_result_report(const sll_result* r) { return r ? r->out.report.c_str() : ""; }
size_t sll_result_artifact_count(const sll_result* r) { return r ? r->out.artifacts.size() : 0; }
const char* sll_result_artifact_name(const sll_result* r, size_t i) {
  return r && i < r->out.artifacts.size() ? r->out.artifacts[i].name.c_str() : nullptr;
}
const char* sll_result_artifact_data(const sll_result* r, size_t i) {
  return r && i < r->out.artifacts.size() ? r->out.artifacts[i].data.c_str() : nullptr;
}
void sll_result_destroy(sll_result* r) { delete r; }

sll_status sll_evaluate(const sll_session* s, const double* chart, int n, double* psi, double* phi) {
  return guarded([&] {
    if (!s || !chart || n < 1) sll::fail(sll::ErrorCode::InvalidArgument, "bad configuration");
    const auto& d = problem(s);
    auto xi = chart_config(*d.surface, chart, n);
    if (psi) *psi = sll::psi(d, xi);
    if (phi) *phi = sll::phi(d, xi);
  });
}

sll_status sll_green(const sll_session* s, const double* x, const double* p, double* out) {
  return guarded([&] {
    if (!s || !x || !p || !out) sll::fail(sll::ErrorCode::InvalidArgument, "null argument");
    const auto& surf = *problem(s).surface;
    *out = surf.green(surf.from_chart(x[0], x[1]), surf.from_chart(p[0], p[1]));
  });
}

}  // extern "C"
