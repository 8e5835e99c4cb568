#include "doctest.h"

#include <fstream>

#include "markers_oracle.hpp"
#include "server_fixture.hpp"

using namespace aqmeis;
using nlohmann::json;
using testutil::LiveServer;

namespace {

const Date kToday = make_date(2023, 5, 10);

httplib::Headers bearer(const std::string& token) { return {{"Authorization", "Bearer " + token}}; }

std::string error_code(const httplib::Result& res) { return json::parse(res->body)["error"]["code"]; }

// One hour of 5-minute PM10 readings for s001, sent after the hour closed.
std::string pm10_batch(TimePoint hour, double value) {
  ingest::StationBatch b;
  b.station_id = "s001";
  b.interval = store::Interval::FiveMin;
  b.sent_at = hour + std::chrono::minutes(60);
  for (int m = 0; m < 60; m += 5)
    b.records.push_back({hour + std::chrono::minutes(m), {{5, {value, store::ValidityStatus::Valid}}}});
  return ingest::serialize_batch(b);
}

}  // namespace

TEST_CASE("public endpoints") {
  LiveServer live(kToday);
  auto c = live.client();

  auto health = c.Get("/api/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body)["today"] == "2023-05-10");

  auto stations = c.Get("/api/stations");
  CHECK(json::parse(stations->body).size() == 4);
  auto one = c.Get("/api/stations/1");
  CHECK(json::parse(one->body)["stream_id"] == "s001");
  auto missing = c.Get("/api/stations/99");
  CHECK(missing->status == 404);
  CHECK(error_code(missing) == "UnknownStation");
  CHECK(c.Get("/api/stations/abc")->status == 400);

  auto markers = c.Get("/api/markers.xml");
  CHECK(markers->get_header_value("Content-Type").starts_with("application/xml"));
  auto doc = oracle::parse_markers(markers->body);
  CHECK(doc.error.empty());
  CHECK(doc.markers.size() == 4);

  CHECK(json::parse(c.Get("/api/municipalities")->body).size() == 4);
  CHECK(json::parse(c.Get("/api/categories")->body).size() == 3);
  CHECK(json::parse(c.Get("/api/channels?station=s002")->body).size() == 8);
  CHECK(c.Get("/api/channels?station=s999")->status == 404);
  CHECK(json::parse(c.Get("/api/aqi/breakpoints")->body)["bands"].size() == 10);
  CHECK(json::parse(c.Get("/api/session")->body)["level"] == "public");

  auto nope = c.Get("/api/does-not-exist");
  CHECK(nope->status == 404);
  CHECK(error_code(nope) == "NotFound");
}

TEST_CASE("login and access levels") {
  LiveServer live(kToday);
  auto c = live.client();
  auto bad = c.Post("/api/login", R"({"password":"guess"})", "application/json");
  CHECK(bad->status == 401);
  CHECK(error_code(bad) == "BadCredentials");
  CHECK(c.Post("/api/login", "not json", "application/json")->status == 400);

  const auto member = live.token(testutil::kMemberPassword);
  const auto admin = live.token(testutil::kAdminPassword);
  REQUIRE_FALSE(member.empty());
  CHECK(json::parse(c.Get("/api/session", bearer(member))->body)["level"] == "member");

  const std::string q = "/api/reports?station=s001&channels=5&interval=60&category=daily";
  auto anon = c.Get(q);
  CHECK(anon->status == 401);
  CHECK(error_code(anon) == "DeniedMissing");
  CHECK(c.Get(q, bearer("forged"))->status == 401);

  auto create = c.Post("/api/admin/municipalities", bearer(member), R"({"title":"X","lat":1,"lon":2})",
                       "application/json");
  CHECK(create->status == 403);
  CHECK(error_code(create) == "DeniedInsufficient");
  CHECK(live.system->registry().municipalities().size() == 4);  // nothing ran
  create = c.Post("/api/admin/municipalities", bearer(admin), R"({"title":"X","lat":1,"lon":2})", "application/json");
  CHECK(create->status == 201);
}

TEST_CASE("ingest, reports and CSV over HTTP") {
  LiveServer live(kToday);
  auto c = live.client();
  const auto admin = live.token(testutil::kAdminPassword);
  const auto member = live.token(testutil::kMemberPassword);

  std::string body;
  for (int h = 0; h < 5; ++h) body += pm10_batch(start_of(kToday) + std::chrono::hours(h), 10.0 * (h + 1));
  CHECK(c.Post("/api/ingest", body, "text/plain")->status == 401);
  auto res = c.Post("/api/ingest", {{"X-Ingest-Key", "wrong"}}, body, "text/plain");
  CHECK(res->status == 401);
  res = c.Post("/api/ingest", {{"X-Ingest-Key", testutil::kIngestKey}}, body, "text/plain");
  REQUIRE(res->status == 200);
  auto batches = json::parse(res->body)["batches"];
  REQUIRE(batches.size() == 5);
  CHECK(batches[0]["accepted"] == 12);
  CHECK(batches[0]["refreshed_hours"].size() == 1);

  res = c.Post("/api/ingest", bearer(admin), "#AQMEIS/1;s999;05;2023-05-10T10:00\n", "text/plain");
  CHECK(json::parse(res->body)["batches"][0]["error"]["code"] == "UnknownStation");
  CHECK(c.Post("/api/ingest", bearer(admin), "", "text/plain")->status == 400);

  auto report = c.Get("/api/reports?station=s001&channels=5&interval=60&category=custom&from=2023-05-10&to=2023-05-10",
                      bearer(member));
  REQUIRE(report->status == 200);
  auto r = json::parse(report->body);
  CHECK(r["total_rows"] == 5);
  CHECK(r["banner"] == "5 measurements were found");
  CHECK(r["page_label"] == "page 1 from 1");
  CHECK(r["rows"][2]["cells"][0]["value"] == 30.0);
  CHECK(r["stats"][0]["average"] == 30.0);
  CHECK(r["stats"][0]["count"] == 5);

  auto daily = json::parse(
      c.Get("/api/reports?station=s001&channels=5&interval=05&category=daily&page=9", bearer(member))->body);
  CHECK(daily["total_rows"] == 60);
  CHECK(daily["total_pages"] == 3);
  CHECK(daily["page"] == 3);
  CHECK(daily["rows"].size() == 10);

  CHECK(error_code(c.Get("/api/reports?station=s001&interval=60", bearer(member))) == "NoChannelsSelected");
  CHECK(c.Get("/api/reports?station=s001&channels=5&category=custom&from=2023-05-11&to=2023-05-10", bearer(member))
            ->status == 400);
  CHECK(c.Get("/api/reports?station=s001&channels=5&category=custom&from=2020-01-01&to=2020-01-01", bearer(member))
            ->status == 404);

  auto csv = c.Get("/api/reports.csv?station=s001&channels=5&interval=60&category=daily", bearer(member));
  REQUIRE(csv->status == 200);
  CHECK(csv->body.starts_with("\xEF\xBB\xBF"));
  CHECK(csv->get_header_value("Content-Disposition").find("s001_2023-05-10_2023-05-10.csv") != std::string::npos);

  auto latest = json::parse(c.Get("/api/stations/1/latest")->body);
  CHECK(latest["timestamp"] == "2023-05-10T04:00");

  auto aqi = json::parse(c.Get("/api/aqi?station=s001")->body);
  CHECK(aqi["current"]["index"] == 2);  // mean 30 sits in the 20..40 band
  CHECK(aqi["previous"].is_null());
  auto doc = oracle::parse_markers(c.Get("/api/markers.xml")->body);
  CHECK(doc.markers[0]["index_now"] == "2");
  CHECK(doc.markers[0]["last_update"] == "2023-05-10T04:00");
  CHECK(doc.markers[1]["index_now"].empty());
}

TEST_CASE("admin CRUD reflected in markers") {
  LiveServer live(kToday);
  auto c = live.client();
  const auto admin = live.token(testutil::kAdminPassword);
  auto h = bearer(admin);

  auto created = c.Post("/api/admin/stations", h,
                        R"({"category":1,"municipality":1,"title":"New <one>","lat":40.1,"lon":21.5,"stream_id":"s005"})",
                        "application/json");
  REQUIRE(created->status == 201);
  const int id = json::parse(created->body)["id"];
  auto doc = oracle::parse_markers(c.Get("/api/markers.xml")->body);
  CHECK(doc.markers.size() == 5);
  CHECK(doc.markers.back()["title"] == "New <one>");

  auto dup = c.Post("/api/admin/stations", h,
                    R"({"category":1,"municipality":1,"title":"Dup","lat":40.1,"lon":21.5,"stream_id":"s005"})",
                    "application/json");
  CHECK(dup->status == 409);
  CHECK(error_code(dup) == "DuplicateStream");
  auto badlat = c.Post("/api/admin/stations", h, R"({"category":1,"municipality":1,"title":"B","lat":95,"lon":0})",
                       "application/json");
  CHECK(badlat->status == 400);
  CHECK(error_code(badlat) == "BadCoordinates");
  CHECK(error_code(c.Post("/api/admin/stations", h, R"({"title":"B"})", "application/json")) == "BadRequest");
  CHECK(error_code(c.Post("/api/admin/stations", h, R"({"category":1,"municipality":77,"title":"B","lat":1,"lon":1})",
                          "application/json")) == "UnknownMunicipality");

  auto patched = c.Put("/api/admin/stations/" + std::to_string(id), h, R"({"title":"Renamed"})", "application/json");
  CHECK(json::parse(patched->body)["title"] == "Renamed");
  CHECK(c.Put("/api/admin/stations/" + std::to_string(id), h, R"({"lat":"north"})", "application/json")->status == 400);

  CHECK(error_code(c.Delete("/api/admin/municipalities/1", h)) == "ReferencedEntity");
  CHECK(c.Delete("/api/admin/stations/" + std::to_string(id), h)->status == 200);
  CHECK(c.Delete("/api/admin/stations/" + std::to_string(id), h)->status == 404);
  CHECK(oracle::parse_markers(c.Get("/api/markers.xml")->body).markers.size() == 4);

  auto cat = c.Post("/api/admin/categories", h, R"({"title":"Met","kind":"meteorological"})", "application/json");
  REQUIRE(cat->status == 201);
  const int cid = json::parse(cat->body)["id"];
  CHECK(json::parse(c.Put("/api/admin/categories/" + std::to_string(cid), h, R"({"title":"Meteo","kind":"both"})",
                          "application/json")->body)["kind"] == "both");
  CHECK(c.Post("/api/admin/categories", h, R"({"title":"x","kind":"volcanic"})", "application/json")->status == 400);
  CHECK(c.Delete("/api/admin/categories/" + std::to_string(cid), h)->status == 200);
}

TEST_CASE("forecast and image endpoints") {
  LiveServer live(kToday);
  auto c = live.client();
  auto h = bearer(live.token(testutil::kAdminPassword));

  std::string csv = std::string(forecast::kForecastCsvHeader) + "\n";
  for (int hr = 0; hr < 24; ++hr)
    csv += "2023-05-10," + std::to_string(hr) + ",180,12,80,12,80,0,0,0,0,0,100,0.2,-50," + (hr < 6 ? "1" : "0.5") + ",0\n";
  auto up = c.Post("/api/admin/forecast/kozani", h, csv, "text/csv");
  REQUIRE(up->status == 200);
  CHECK(json::parse(up->body)["stored"] == 24);
  CHECK(c.Post("/api/admin/forecast/atlantis", h, csv, "text/csv")->status == 404);
  CHECK(error_code(c.Post("/api/admin/forecast/kozani", h, "DATE,HOUR\n", "text/csv")) == "BadForecastFile");

  auto series = json::parse(c.Get("/api/forecast/series?location=kozani&parameter=temp")->body);
  CHECK(series["hours"].size() == 24);
  CHECK(series["unit"] == "C");
  auto precip = json::parse(c.Get("/api/forecast/precip?location=kozani&date=2023-05-10")->body);
  CHECK(precip["buckets"][0]["total"] == 6.0);
  CHECK(precip["buckets"][3]["total"] == 3.0);
  auto hist = json::parse(
      c.Get("/api/forecast/history?location=kozani&parameter=RAIN&from=2023-05-09&to=2023-05-11")->body);
  CHECK(hist["days"].size() == 3);
  CHECK(hist["days"][0]["hours"][0]["value"].is_null());
  CHECK(c.Get("/api/forecast/series?location=kozani&parameter=PM10")->status == 400);
  CHECK(c.Get("/api/forecast/series?location=nowhere&parameter=TEMP")->status == 404);
  CHECK(json::parse(c.Get("/api/forecast/locations")->body).size() == 12);
  CHECK(json::parse(c.Get("/api/forecast/parameters")->body).size() == 15);

  auto window = json::parse(c.Get("/api/images/window?date=2023-05-31")->body);
  CHECK(window["from"] == "2023-05-30");
  CHECK(window["to"] == "2023-06-03");
  CHECK(window["days"].size() == 5);

  const auto t = make_time(2023, 5, 10, 6, 0);
  const auto frame = live.dir.path() / "images" / forecast::frame_filename("wm", "PM10", "all", t);
  std::ofstream(frame, std::ios::binary) << "\xFF\xD8jpegdata";
  auto lookup = json::parse(c.Get("/api/images/lookup?region=wm&source=all&when=2023-05-10T06:00")->body);
  CHECK_FALSE(lookup["available"]);
  CHECK(lookup["label"] == forecast::kUnavailablePlaceholder);
  CHECK(json::parse(c.Post("/api/admin/images/rescan", h, "", "text/plain")->body)["frames"] == 1);
  lookup = json::parse(c.Get("/api/images/lookup?region=wm&source=all&when=2023-05-10T06:00")->body);
  REQUIRE(lookup["available"]);
  auto bytes = c.Get(lookup["url"].get<std::string>());
  CHECK(bytes->status == 200);
  CHECK(bytes->get_header_value("Content-Type") == "image/jpeg");
  CHECK(bytes->body == "\xFF\xD8jpegdata");
  CHECK(c.Get("/api/images/frame?region=wm&source=all&when=2023-05-10T07:00")->status == 404);

  const auto extra = live.dir.path() / "extra.jpg";
  std::ofstream(extra) << "x";
  json reg = {{"region", "wm"}, {"source", "all"}, {"date", "2023-05-10"}, {"frame_time", "2023-05-11T06:00"},
              {"path", extra.string()}};
  CHECK(c.Post("/api/admin/images", h, reg.dump(), "application/json")->status == 201);
  reg["frame_time"] = "2023-05-20T06:00";
  CHECK(error_code(c.Post("/api/admin/images", h, reg.dump(), "application/json")) == "BadFrameDate");
  reg["path"] = "/no/such/file.jpg";
  CHECK(error_code(c.Post("/api/admin/images", h, reg.dump(), "application/json")) == "MissingFile");

  auto anim = json::parse(
      c.Get("/api/images/animation?region=wm&source=all&from=2023-05-09T00:00&to=2023-05-13T23:00")->body);
  CHECK(anim["frames"].size() == 2);
  CHECK(anim["frames"][0]["time"] == "2023-05-10T06:00");
  auto inverted = c.Get("/api/images/animation?region=wm&source=all&from=2023-05-13T00:00&to=2023-05-09T00:00");
  CHECK(error_code(inverted) == "InvertedRange");
}

TEST_CASE("media files stay inside the media root") {
  LiveServer live(kToday);
  auto c = live.client();
  std::filesystem::create_directories(live.dir.path() / "media" / "thumbs");
  std::ofstream(live.dir.path() / "media" / "thumbs" / "s001.jpg") << "thumb";
  std::ofstream(live.dir.path() / "secret.txt") << "secret";
  auto ok = c.Get("/media/thumbs/s001.jpg");
  CHECK(ok->status == 200);
  CHECK(ok->body == "thumb");
  CHECK(c.Get("/media/../secret.txt")->status == 404);
  CHECK(c.Get("/media/%2e%2e/secret.txt")->status == 404);
  CHECK(c.Get("/media/thumbs/none.jpg")->status == 404);
}

TEST_CASE("every route refuses requests below its level before running") {
  LiveServer live(kToday);
  auto c = live.client();
  const std::map<auth::AccessLevel, httplib::Headers> as = {
      {auth::AccessLevel::Public, {}},
      {auth::AccessLevel::Member, bearer(live.token(testutil::kMemberPassword))},
      {auth::AccessLevel::Admin, bearer(live.token(testutil::kAdminPassword))},
  };
  const auto before = live.system->registry().stations().size();
  for (const auto& route : api::route_table()) {
    for (const auto& [level, headers] : as) {
      auto res = testutil::send(c, route.method, testutil::concrete_path(route.path), headers);
      REQUIRE(res);
      const bool denied = res->status == 401 || res->status == 403;
      CHECK_MESSAGE(denied == (level < route.level), route.method, " ", route.path, " at level ",
                    auth::level_name(level), " -> ", res->status);
    }
    if (route.mutating) CHECK(route.level == auth::AccessLevel::Admin);
  }
  // the admin DELETE on station 1 ran once, at admin level only
  CHECK(live.system->registry().stations().size() == before - 1);
}
