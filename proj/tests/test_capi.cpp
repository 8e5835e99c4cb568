#include <cstdlib>
#include <fstream>
#include <string>

#include "aqmeis/aqmeis.h"
#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "test_util.hpp"

using nlohmann::json;

namespace {

struct Owned {
  char* p = nullptr;
  ~Owned() { aqmeis_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

std::string overrides_for(const testutil::TempDir& dir) {
  return json{{"data_dir", (dir.path() / "data").string()},
              {"media_root", (dir.path() / "media").string()},
              {"image_root", (dir.path() / "images").string()},
              {"drop_dir", (dir.path() / "drop").string()},
              {"flush_interval_seconds", 3600}}
      .dump();
}

struct Handle {
  aqmeis_system* sys = nullptr;
  explicit Handle(const testutil::TempDir& dir) {
    const auto o = overrides_for(dir);
    REQUIRE(aqmeis_open(nullptr, o.c_str(), &sys) == AQMEIS_OK);
  }
  ~Handle() { aqmeis_close(sys); }
};

}  // namespace

TEST_CASE("status names and last error") {
  CHECK(std::string(aqmeis_status_name(AQMEIS_E_UNKNOWN_STATION)) == "UnknownStation");
  CHECK(std::string(aqmeis_status_name(AQMEIS_E_INVALID_ARGUMENT)) == "InvalidArgument");
  CHECK(std::string(aqmeis_status_name(12345)) == "Unknown");
  CHECK(std::string(aqmeis_version()).size() > 0);

  CHECK(aqmeis_open(nullptr, nullptr, nullptr) == AQMEIS_E_INVALID_ARGUMENT);
  CHECK(std::string(aqmeis_last_error()).find("NULL") != std::string::npos);
  CHECK(aqmeis_markers_xml(nullptr, nullptr) == AQMEIS_E_INVALID_ARGUMENT);
  aqmeis_close(nullptr);
  aqmeis_free(nullptr);
}

TEST_CASE("startup errors map to config and data-dir codes") {
  testutil::TempDir dir("aqmeis-capi");
  aqmeis_system* sys = nullptr;

  CHECK(aqmeis_open("/nonexistent/aqmeis.json", nullptr, &sys) == AQMEIS_E_CONFIG);
  CHECK(sys == nullptr);
  CHECK(aqmeis_open(nullptr, "{not json", &sys) == AQMEIS_E_CONFIG);
  CHECK(aqmeis_open(nullptr, R"({"no_such_key":1})", &sys) == AQMEIS_E_CONFIG);

  const auto blocker = dir.path() / "file";
  std::ofstream(blocker) << "x";
  const auto o = json{{"data_dir", (blocker / "sub").string()}}.dump();
  CHECK(aqmeis_open(nullptr, o.c_str(), &sys) == AQMEIS_E_DATA_DIR);
  CHECK(sys == nullptr);
}

TEST_CASE("config file with overrides and check-config") {
  testutil::TempDir dir("aqmeis-capi");
  const auto path = dir.path() / "conf.json";
  std::ofstream(path) << json{{"data_dir", "rel-data"}, {"listen", {{"port", 9123}}}}.dump();

  Owned out;
  REQUIRE(aqmeis_check_config(path.c_str(), R"({"timezone":"UTC"})", &out.p) == AQMEIS_OK);
  auto j = json::parse(out.str());
  CHECK(j["timezone"] == "UTC");
  CHECK(j["listen"]["port"] == 9123);
  CHECK(j["data_dir"] == (dir.path() / "rel-data").string());
  CHECK(std::filesystem::is_directory(dir.path() / "rel-data"));
}

TEST_CASE("simulate, ingest and report through the C API") {
  testutil::TempDir dir("aqmeis-capi");
  Handle h(dir);
  REQUIRE(aqmeis_set_today(h.sys, "2024-03-02") == AQMEIS_OK);
  CHECK(aqmeis_set_today(h.sys, "March") == AQMEIS_E_BAD_REQUEST);

  Owned payload;
  REQUIRE(aqmeis_simulate(nullptr, "2024-03-01T00:00", 7, &payload.p) == AQMEIS_OK);
  Owned again;
  REQUIRE(aqmeis_simulate(nullptr, "2024-03-01T00:00", 7, &again.p) == AQMEIS_OK);
  CHECK(payload.str() == again.str());
  CHECK(aqmeis_simulate(nullptr, "yesterday", 7, &again.p) == AQMEIS_E_BAD_SCENARIO);

  const auto file = dir.path() / "payload.txt";
  std::ofstream(file) << payload.str();
  Owned ingested;
  REQUIRE(aqmeis_ingest_file(h.sys, file.c_str(), &ingested.p) == AQMEIS_OK);
  auto batches = json::parse(ingested.str())["batches"];
  REQUIRE(batches.size() == 4 * 48);
  std::size_t accepted = 0;
  for (const auto& b : batches) accepted += b.value("accepted", std::size_t{0});
  CHECK(accepted > 0);

  Owned report;
  const char* req = R"({"station":"s001","channels":[1],"interval":"60","category":"custom",
                        "from":"2024-03-01","to":"2024-03-01","page":1})";
  REQUIRE(aqmeis_report_json(h.sys, req, &report.p) == AQMEIS_OK);
  auto r = json::parse(report.str());
  CHECK(r["total_rows"] == 24);
  CHECK(r["total_pages"] == 1);
  CHECK(r["rows"].size() == 24);

  Owned csv;
  REQUIRE(aqmeis_report_csv(h.sys, req, &csv.p) == AQMEIS_OK);
  CHECK(csv.str().find("2024-03-01") != std::string::npos);

  Owned none;
  CHECK(aqmeis_report_json(h.sys, R"({"station":"s999","channels":[1]})", &none.p) == AQMEIS_E_UNKNOWN_STATION);
  CHECK(none.p == nullptr);
  CHECK(aqmeis_report_json(h.sys, R"({"station":"s001","channels":[]})", &none.p) ==
        AQMEIS_E_NO_CHANNELS_SELECTED);
  CHECK(aqmeis_report_json(h.sys, "[", &none.p) == AQMEIS_E_BAD_REQUEST);

  Owned aqi;
  REQUIRE(aqmeis_aqi_json(h.sys, "s001", "2024-03-01", &aqi.p) == AQMEIS_OK);
  CHECK(json::parse(aqi.str()).is_object());

  Owned markers;
  REQUIRE(aqmeis_markers_xml(h.sys, &markers.p) == AQMEIS_OK);
  CHECK(markers.str().find("<markers>") != std::string::npos);
  CHECK(markers.str().find("id=\"1\"") != std::string::npos);

  Owned stations;
  REQUIRE(aqmeis_stations_json(h.sys, &stations.p) == AQMEIS_OK);
  CHECK(json::parse(stations.str()).size() == 4);
}

TEST_CASE("forecast import and series") {
  testutil::TempDir dir("aqmeis-capi");
  Handle h(dir);
  const auto csv = dir.path() / "fc.csv";
  std::ofstream(csv) << "DATE,HOUR,WDIR,TEMP,RHUM,TEMPSCR,RHUMSCR,TSR,NETR,SENS,EVAP,WSTAR,ZMIX,USTAR,LSTAR,RAIN,SNOW\n"
                        "2024-03-01,0,180,12.5,80,12,81,0,-40,-10,5,0,120,0.2,-50,0.4,0\n"
                        "2024-03-01,1,190,12.1,82,11.8,83,0,-42,-11,4,0,110,0.2,-48,,0\n";
  size_t rows = 0;
  REQUIRE(aqmeis_forecast_import(h.sys, "kozani", csv.c_str(), &rows) == AQMEIS_OK);
  CHECK(rows == 2);
  CHECK(aqmeis_forecast_import(h.sys, "atlantis", csv.c_str(), &rows) == AQMEIS_E_UNKNOWN_LOCATION);
  CHECK(aqmeis_forecast_import(h.sys, "kozani", (dir.path() / "missing.csv").c_str(), &rows) ==
        AQMEIS_E_MISSING_FILE);

  Owned series;
  REQUIRE(aqmeis_forecast_series_json(h.sys, "kozani", "temp", "2024-03-01", &series.p) == AQMEIS_OK);
  auto s = json::parse(series.str());
  CHECK(s["hours"].size() == 24);
  CHECK(s["hours"][0]["value"].get<double>() == doctest::Approx(12.5));
  CHECK(s["hours"][1]["value"].get<double>() == doctest::Approx(12.1));
  CHECK(s["hours"][2]["value"].is_null());
  Owned bad;
  CHECK(aqmeis_forecast_series_json(h.sys, "kozani", "nonsense", nullptr, &bad.p) == AQMEIS_E_BAD_REQUEST);
}

TEST_CASE("serve start and stop") {
  testutil::TempDir dir("aqmeis-capi");
  Handle h(dir);
  int port = 0;
  REQUIRE(aqmeis_serve_start(h.sys, "127.0.0.1", 0, &port) == AQMEIS_OK);
  CHECK(port > 0);
  CHECK(aqmeis_serve_start(h.sys, "127.0.0.1", 0, &port) == AQMEIS_E_BAD_REQUEST);

  httplib::Client c("127.0.0.1", port);
  auto res = c.Get("/api/health");
  REQUIRE(res);
  CHECK(res->status == 200);

  CHECK(aqmeis_serve_stop(h.sys) == AQMEIS_OK);
  CHECK(aqmeis_serve_stop(h.sys) == AQMEIS_OK);
}
