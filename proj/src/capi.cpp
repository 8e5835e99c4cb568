#include "aqmeis/aqmeis.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <time.h>

#include "aqmeis/server.hpp"
#include "aqmeis/system.hpp"
#include "json_codec.hpp"

using namespace aqmeis;
using codec::json;

struct aqmeis_system {
  std::unique_ptr<System> sys;
  std::unique_ptr<api::Server> server;
};

namespace {

thread_local std::string g_last_error;

int record(ErrorCode code, std::string message) {
  g_last_error = std::move(message);
  return static_cast<int>(code);
}

char* dup(std::string_view s) {
  auto* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) return nullptr;
  std::memcpy(p, s.data(), s.size());
  p[s.size()] = '\0';
  return p;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return AQMEIS_OK;
  } catch (const Error& e) {
    return record(e.code(), e.what());
  } catch (const json::exception& e) {
    return record(ErrorCode::BadRequest, e.what());
  } catch (const std::bad_alloc&) {
    return record(ErrorCode::Internal, "out of memory");
  } catch (const std::exception& e) {
    return record(ErrorCode::Internal, e.what());
  }
}

void need(const void* p, const char* what) {
  if (!p) fail(ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

void emit(char** out, std::string_view s) {
  *out = dup(s);
  if (!*out) throw std::bad_alloc();
}

Config build_config(const char* config_path, const char* overrides_json) {
  json base = json::object();
  std::filesystem::path base_dir = std::filesystem::current_path();
  if (config_path) {
    std::ifstream in(config_path);
    if (!in) fail(ErrorCode::ConfigError, std::string("cannot read config file ") + config_path);
    try {
      base = json::parse(in);
    } catch (const json::exception& e) {
      fail(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
    }
    base_dir = std::filesystem::absolute(config_path).parent_path();
  }
  if (overrides_json) {
    try {
      base.merge_patch(json::parse(overrides_json));
    } catch (const json::exception& e) {
      fail(ErrorCode::ConfigError, std::string("overrides are not valid JSON: ") + e.what());
    }
  }
  Config cfg = parse_config(base.dump(), base_dir);
  apply_secret_env(cfg);
  return cfg;
}

report::ReportTable report_from(aqmeis_system* h, const char* request_json) {
  auto params = codec::params_from_json(json::parse(request_json));
  return report::build_report(h->sys->store(), codec::report_request_from(params, h->sys->today()));
}

}  // namespace

extern "C" {

const char* aqmeis_version(void) { return "1.0.0"; }

const char* aqmeis_status_name(int status) {
  static thread_local std::string name;
  name = error_name(static_cast<ErrorCode>(status));
  if (name == "Internal" && status != AQMEIS_E_INTERNAL) name = "Unknown";
  return name.c_str();
}

const char* aqmeis_last_error(void) { return g_last_error.c_str(); }

void aqmeis_free(void* p) { std::free(p); }

int aqmeis_open(const char* config_path, const char* overrides_json, aqmeis_system** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    auto h = std::make_unique<aqmeis_system>();
    h->sys = std::make_unique<System>(build_config(config_path, overrides_json));
    *out = h.release();
  });
}

void aqmeis_close(aqmeis_system* sys) {
  if (!sys) return;
  if (sys->server) sys->server->stop();
  delete sys;
}

int aqmeis_check_config(const char* config_path, const char* overrides_json, char** out_json) {
  return guarded([&] {
    need(out_json, "out_json");
    *out_json = nullptr;
    Config cfg = build_config(config_path, overrides_json);
    prepare_directories(cfg);
    emit(out_json, describe_config(cfg));
  });
}

int aqmeis_apply_timezone(aqmeis_system* sys) {
  return guarded([&] {
    need(sys, "sys");
    if (::setenv("TZ", sys->sys->config().timezone.c_str(), 1) != 0) fail(ErrorCode::Internal, "setenv failed");
    ::tzset();
  });
}

int aqmeis_set_today(aqmeis_system* sys, const char* date) {
  return guarded([&] {
    need(sys, "sys");
    if (!date) {
      sys->sys->set_today_provider(today_local);
      return;
    }
    auto d = parse_date(date);
    if (!d) fail(ErrorCode::BadRequest, "date must be YYYY-MM-DD");
    const Date fixed = *d;
    sys->sys->set_today_provider([fixed] { return fixed; });
  });
}

int aqmeis_ingest_text(aqmeis_system* sys, const char* text, size_t len, char** out_json) {
  return guarded([&] {
    need(sys, "sys");
    need(text, "text");
    need(out_json, "out_json");
    *out_json = nullptr;
    json batches = json::array();
    for (auto chunk : ingest::split_batches(std::string_view(text, len))) {
      try {
        batches.push_back(codec::to_json(sys->sys->gateway().accept_batch(ingest::parse_batch(chunk))));
      } catch (const Error& e) {
        batches.push_back(codec::error_body(e.code(), e.what()));
      }
    }
    emit(out_json, json{{"batches", batches}}.dump());
  });
}

int aqmeis_ingest_file(aqmeis_system* sys, const char* path, char** out_json) {
  need(path, "path");
  std::ifstream in(path, std::ios::binary);
  if (!in) return record(ErrorCode::IoError, std::string("cannot read ") + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  return aqmeis_ingest_text(sys, text.data(), text.size(), out_json);
}

int aqmeis_simulate(const char* scenario_json, const char* start, uint64_t seed, char** out_payload) {
  return guarded([&] {
    need(out_payload, "out_payload");
    *out_payload = nullptr;
    ingest::Scenario sc;
    if (scenario_json) {
      sc = ingest::parse_scenario(scenario_json);
    } else {
      need(start, "start");
      auto t = parse_timestamp(start);
      if (!t) fail(ErrorCode::BadScenario, "start must be YYYY-MM-DDTHH:MM");
      sc = ingest::default_scenario(*t);
    }
    std::string all;
    for (const auto& p : ingest::simulate_stations(sc, seed).payloads) all += p;
    emit(out_payload, all);
  });
}

int aqmeis_report_json(aqmeis_system* sys, const char* request_json, char** out_json) {
  return guarded([&] {
    need(sys, "sys");
    need(request_json, "request_json");
    need(out_json, "out_json");
    *out_json = nullptr;
    auto table = report_from(sys, request_json);
    int page = json::parse(request_json).value("page", 1);
    emit(out_json, codec::to_json(table, report::paginate(table, page)).dump());
  });
}

int aqmeis_report_csv(aqmeis_system* sys, const char* request_json, char** out_csv) {
  return guarded([&] {
    need(sys, "sys");
    need(request_json, "request_json");
    need(out_csv, "out_csv");
    *out_csv = nullptr;
    emit(out_csv, report::export_csv(report_from(sys, request_json)));
  });
}

int aqmeis_markers_xml(aqmeis_system* sys, char** out_xml) {
  return guarded([&] {
    need(sys, "sys");
    need(out_xml, "out_xml");
    *out_xml = nullptr;
    emit(out_xml, sys->sys->markers_xml());
  });
}

int aqmeis_stations_json(aqmeis_system* sys, char** out_json) {
  return guarded([&] {
    need(sys, "sys");
    need(out_json, "out_json");
    *out_json = nullptr;
    json out = json::array();
    for (const auto& s : sys->sys->registry().stations()) out.push_back(codec::to_json(s));
    emit(out_json, out.dump());
  });
}

int aqmeis_aqi_json(aqmeis_system* sys, const char* station, const char* date, char** out_json) {
  return guarded([&] {
    need(sys, "sys");
    need(station, "station");
    need(out_json, "out_json");
    *out_json = nullptr;
    Date day = sys->sys->today();
    if (date) {
      auto d = parse_date(date);
      if (!d) fail(ErrorCode::BadRequest, "date must be YYYY-MM-DD");
      day = *d;
    }
    emit(out_json, codec::to_json(sys->sys->aqi_pair(station, day), sys->sys->config().breakpoints).dump());
  });
}

int aqmeis_forecast_import(aqmeis_system* sys, const char* location, const char* csv_path, size_t* out_rows) {
  return guarded([&] {
    need(sys, "sys");
    need(location, "location");
    need(csv_path, "csv_path");
    const auto n = sys->sys->forecasts().import_file(location, csv_path);
    if (out_rows) *out_rows = n;
  });
}

int aqmeis_forecast_series_json(aqmeis_system* sys, const char* location, const char* parameter, const char* date,
                                char** out_json) {
  return guarded([&] {
    need(sys, "sys");
    need(location, "location");
    need(parameter, "parameter");
    need(out_json, "out_json");
    *out_json = nullptr;
    auto p = forecast::parse_param(parameter);
    if (!p) fail(ErrorCode::BadRequest, std::string("unknown parameter ") + parameter);
    Date day = sys->sys->today();
    if (date) {
      auto d = parse_date(date);
      if (!d) fail(ErrorCode::BadRequest, "date must be YYYY-MM-DD");
      day = *d;
    }
    auto out = codec::to_json(sys->sys->forecasts().hourly_series(location, *p, day));
    out["location"] = location;
    out["parameter"] = forecast::param_name(*p);
    out["unit"] = forecast::param_unit(*p);
    emit(out_json, out.dump());
  });
}

int aqmeis_serve_start(aqmeis_system* sys, const char* host, int port, int* out_port) {
  return guarded([&] {
    need(sys, "sys");
    if (sys->server) fail(ErrorCode::BadRequest, "already serving");
    const auto& cfg = sys->sys->config();
    auto server = std::make_unique<api::Server>(*sys->sys);
    const int bound = server->start(host ? host : cfg.listen_host, port < 0 ? cfg.listen_port : port);
    sys->sys->start_background();
    sys->server = std::move(server);
    if (out_port) *out_port = bound;
  });
}

int aqmeis_serve_stop(aqmeis_system* sys) {
  return guarded([&] {
    need(sys, "sys");
    if (sys->server) sys->server->stop();
    sys->server.reset();
    sys->sys->stop_background();
  });
}

}  // extern "C"
