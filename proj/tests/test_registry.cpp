#include "doctest.h"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <random>
#include <thread>

#include "aqmeis/registry.hpp"
#include "json.hpp"
#include "markers_oracle.hpp"
#include "test_util.hpp"

using namespace aqmeis;
using namespace aqmeis::geo;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Ok;
}

struct Fixture {
  Registry reg;
  int muni = 0;
  int cat = 0;
  Fixture() {
    muni = reg.add_municipality({0, "Kozani", "Kozani", 40.3, 21.79}).id;
    cat = reg.add_category({0, "Pollution", "Pollution", StationKind::Pollution}).id;
  }
  Station draft(std::string title = "Station A") const {
    Station s;
    s.category = cat;
    s.municipality = muni;
    s.title = std::move(title);
    s.lat = 40.3;
    s.lon = 21.79;
    return s;
  }
};

}  // namespace

TEST_CASE("create_station assigns fresh ids and validates") {
  Fixture f;
  auto a = f.reg.create_station(f.draft());
  auto b = f.reg.create_station(f.draft("B"));
  CHECK(a.id > 0);
  CHECK(b.id != a.id);

  auto bad = f.draft();
  bad.lat = 95;
  CHECK(code_of([&] { f.reg.create_station(bad); }) == ErrorCode::BadCoordinates);
  bad = f.draft();
  bad.lon = -180.5;
  CHECK(code_of([&] { f.reg.create_station(bad); }) == ErrorCode::BadCoordinates);
  bad = f.draft();
  bad.lat = std::nan("");
  CHECK(code_of([&] { f.reg.create_station(bad); }) == ErrorCode::BadCoordinates);
  bad = f.draft();
  bad.municipality = 999;
  CHECK(code_of([&] { f.reg.create_station(bad); }) == ErrorCode::UnknownMunicipality);
  bad = f.draft();
  bad.category = 999;
  CHECK(code_of([&] { f.reg.create_station(bad); }) == ErrorCode::UnknownCategory);
  CHECK(code_of([&] { f.reg.create_station(f.draft("  ")); }) == ErrorCode::EmptyTitle);
  CHECK(f.reg.stations().size() == 2);
}

TEST_CASE("stream ids are unique when present") {
  Fixture f;
  auto d = f.draft();
  d.stream_id = "s001";
  f.reg.create_station(d);
  CHECK(code_of([&] { f.reg.create_station(d); }) == ErrorCode::DuplicateStream);
  // several stations may have no stream
  f.reg.create_station(f.draft("x"));
  f.reg.create_station(f.draft("y"));
  CHECK(f.reg.has_stream("s001"));
  CHECK_FALSE(f.reg.has_stream(""));
  CHECK_FALSE(f.reg.has_stream("s002"));
  d.stream_id = "../etc";
  CHECK(code_of([&] { f.reg.create_station(d); }) == ErrorCode::BadRequest);
}

TEST_CASE("update and delete station") {
  Fixture f;
  auto s = f.reg.create_station(f.draft());
  StationPatch p;
  p.title = "Renamed";
  CHECK(f.reg.update_station(s.id, p).title == "Renamed");
  CHECK(f.reg.find_station(s.id)->title == "Renamed");

  StationPatch bad;
  bad.lat = -91;
  CHECK(code_of([&] { f.reg.update_station(s.id, bad); }) == ErrorCode::BadCoordinates);
  CHECK(f.reg.find_station(s.id)->lat == doctest::Approx(40.3));
  CHECK(code_of([&] { f.reg.update_station(999, p); }) == ErrorCode::UnknownStation);

  f.reg.delete_station(s.id);
  CHECK_FALSE(f.reg.find_station(s.id));
  CHECK(code_of([&] { f.reg.delete_station(s.id); }) == ErrorCode::UnknownStation);
  CHECK(oracle::parse_markers(f.reg.markers_xml()).markers.empty());
}

TEST_CASE("referenced municipalities and categories cannot be deleted") {
  Fixture f;
  auto s = f.reg.create_station(f.draft());
  CHECK(code_of([&] { f.reg.delete_municipality(f.muni); }) == ErrorCode::ReferencedEntity);
  CHECK(code_of([&] { f.reg.delete_category(f.cat); }) == ErrorCode::ReferencedEntity);
  CHECK(code_of([&] { f.reg.delete_municipality(77); }) == ErrorCode::UnknownMunicipality);
  CHECK(code_of([&] { f.reg.delete_category(77); }) == ErrorCode::UnknownCategory);
  f.reg.delete_station(s.id);
  f.reg.delete_municipality(f.muni);
  f.reg.delete_category(f.cat);
  CHECK(f.reg.municipalities().empty());
  CHECK(f.reg.categories().empty());
}

TEST_CASE("municipality and category validation") {
  Registry reg;
  CHECK(code_of([&] { reg.add_municipality({0, "X", "", 100, 0}); }) == ErrorCode::BadCoordinates);
  CHECK(code_of([&] { reg.add_municipality({0, "", "", 10, 0}); }) == ErrorCode::EmptyTitle);
  CHECK(code_of([&] { reg.add_category({0, "", "", StationKind::Both}); }) == ErrorCode::EmptyTitle);
  auto m = reg.add_municipality({0, "X", "", 10, 0});
  m.title = "Y";
  CHECK(reg.update_municipality(m).title == "Y");
  m.id = 42;
  CHECK(code_of([&] { reg.update_municipality(m); }) == ErrorCode::UnknownMunicipality);
  CHECK(parse_kind("pollution") == StationKind::Pollution);
  CHECK_FALSE(parse_kind("volcanic"));
}

TEST_CASE("markers_xml examples") {
  Fixture f;
  auto empty = oracle::parse_markers(f.reg.markers_xml());
  CHECK(empty.error.empty());
  CHECK(empty.root == "markers");
  CHECK(f.reg.markers_xml().find("<markers/>") != std::string::npos);

  f.reg.create_station(f.draft("A&B"));
  const auto xml = f.reg.markers_xml();
  CHECK(xml.find("title=\"A&amp;B\"") != std::string::npos);
  auto doc = oracle::parse_markers(xml);
  REQUIRE(doc.error.empty());
  REQUIRE(doc.markers.size() == 1);
  for (const char* attr : {"id", "title", "lat", "lng", "kind", "city", "address", "desc", "thumb",
                           "image", "index_now", "index_prev", "color_now", "color_prev", "last_update"})
    CHECK_MESSAGE(doc.markers[0].count(attr) == 1, attr);
  CHECK(doc.markers[0]["title"] == "A&B");
  CHECK(doc.markers[0]["kind"] == "pollution");
  CHECK(doc.markers[0]["city"] == "Kozani");
}

TEST_CASE("markers_xml embeds enricher values") {
  Fixture f;
  auto d = f.draft();
  d.stream_id = "s001";
  f.reg.create_station(d);
  auto doc = oracle::parse_markers(f.reg.markers_xml([](const Station& s) {
    MarkerExtras e;
    if (s.stream_id == "s001") {
      e.index_now = 3;
      e.index_prev = 10;
      e.color_now = "#66cc33";
      e.color_prev = "#cc0033";
      e.last_update = make_time(2023, 5, 10, 10, 0);
    }
    return e;
  }));
  REQUIRE(doc.markers.size() == 1);
  CHECK(doc.markers[0]["index_now"] == "3");
  CHECK(doc.markers[0]["index_prev"] == "10");
  CHECK(doc.markers[0]["color_prev"] == "#cc0033");
  CHECK(doc.markers[0]["last_update"] == "2023-05-10T10:00");
  CHECK(doc.markers[0]["stream"] == "s001");
}

TEST_CASE("N stations give N markers in id order") {
  std::mt19937_64 rng(7);
  for (int n : {1, 2, 5, 17, 60}) {
    Fixture f;
    std::vector<int> ids;
    for (int i = 0; i < n; ++i) ids.push_back(f.reg.create_station(f.draft("s" + std::to_string(i))).id);
    // delete a few to make ids sparse
    for (int i = 0; i < n / 4; ++i) {
      std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
      auto k = pick(rng);
      f.reg.delete_station(ids[k]);
      ids.erase(ids.begin() + static_cast<long>(k));
    }
    auto doc = oracle::parse_markers(f.reg.markers_xml());
    REQUIRE(doc.error.empty());
    REQUIRE(doc.markers.size() == ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) CHECK(std::stoi(doc.markers[i]["id"]) == ids[i]);
  }
}

TEST_CASE("escaping keeps documents well-formed") {
  CHECK(xml_escape("a<b>&\"'") == "a&lt;b&gt;&amp;&quot;&apos;");
  CHECK(xml_escape("Κοζάνη") == "Κοζάνη");
  CHECK(xml_escape(std::string("x\x01y", 3)) == "x\xEF\xBF\xBDy");
  CHECK(xml_escape("\xFF") == "\xEF\xBF\xBD");
  CHECK(xml_escape("\xED\xA0\x80") == "\xEF\xBF\xBD\xEF\xBF\xBD\xEF\xBF\xBD");
  CHECK(xml_escape("\xC0\xAF") == "\xEF\xBF\xBD\xEF\xBF\xBD");  // overlong '/'
  CHECK(xml_escape("\t\n") == "&#9;&#10;");
}

TEST_CASE("fuzz: hostile text always parses and round-trips id, coordinates and kind") {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> lat(-90, 90), lon(-180, 180);
  for (int trial = 0; trial < 40; ++trial) {
    Registry reg;
    std::vector<int> cats;
    for (auto k : {StationKind::Meteorological, StationKind::Pollution, StationKind::Both})
      cats.push_back(reg.add_category({0, oracle::hostile_text(rng, true), "", k}).id);
    auto m = reg.add_municipality({0, oracle::hostile_text(rng, true), oracle::hostile_text(rng), 40, 21});
    std::map<int, Station> expected;
    for (int i = 0; i < 8; ++i) {
      Station s;
      s.category = cats[static_cast<std::size_t>(i) % 3];
      s.municipality = m.id;
      s.title = oracle::hostile_text(rng, true);
      s.address = oracle::hostile_text(rng);
      s.description = oracle::hostile_text(rng);
      s.en_city = oracle::hostile_text(rng);
      s.thumb = oracle::hostile_text(rng);
      s.image = oracle::hostile_text(rng);
      s.lat = lat(rng);
      s.lon = lon(rng);
      auto created = reg.create_station(s);
      expected[created.id] = created;
    }
    auto doc = oracle::parse_markers(reg.markers_xml());
    REQUIRE_MESSAGE(doc.error.empty(), doc.error);
    REQUIRE(doc.markers.size() == expected.size());
    for (auto& mk : doc.markers) {
      const auto& s = expected.at(std::stoi(mk["id"]));
      CHECK(std::strtod(mk["lat"].c_str(), nullptr) == s.lat);
      CHECK(std::strtod(mk["lng"].c_str(), nullptr) == s.lon);
      auto cat = reg.categories()[static_cast<std::size_t>(s.category - 1)];
      CHECK(mk["kind"] == kind_name(cat.kind));
    }
  }
}

TEST_CASE("persistence across reopen and corrupt files") {
  testutil::TempDir dir;
  const auto file = dir.path() / "registry.json";
  int id = 0;
  {
    Registry reg(file);
    reg.seed_defaults();
    StationPatch p;
    p.description = "updated";
    id = reg.stations().front().id;
    reg.update_station(id, p);
  }
  Registry again(file);
  CHECK(again.stations().size() == 4);
  CHECK(again.municipalities().size() == 4);
  CHECK(again.categories().size() == 3);
  CHECK(again.find_station(id)->description == "updated");
  CHECK(again.has_stream("s004"));
  // ids keep increasing after reload
  auto s = again.stations().front();
  CHECK(again.create_station({0, s.category, s.municipality, "", "new", "", "", 1, 1, "", "", ""}).id == 5);

  {
    std::ofstream(dir.path() / "bad.json") << "{ not json";
  }
  CHECK(code_of([&] { Registry bad(dir.path() / "bad.json"); }) == ErrorCode::DataDirError);
}

TEST_CASE("invalid stations loaded from disk are omitted from markers") {
  testutil::TempDir dir;
  const auto file = dir.path() / "registry.json";
  {
    Registry reg(file);
    reg.seed_defaults();
  }
  {
    // hand-edit: break one station's coordinates
    std::ifstream in(file);
    auto j = nlohmann::json::parse(in);
    j["points"][1]["lat"] = 1440.0;
    std::ofstream(file, std::ios::trunc) << j.dump();
  }
  Registry reg(file);
  auto doc = oracle::parse_markers(reg.markers_xml());
  REQUIRE(doc.error.empty());
  CHECK(doc.markers.size() == 3);
}

TEST_CASE("markers_xml sees consistent snapshots under concurrent mutation") {
  Fixture f;
  std::atomic<bool> stop{false};
  std::thread writer([&] {
    for (int i = 0; i < 200; ++i) {
      auto s = f.reg.create_station(f.draft("t" + std::to_string(i)));
      if (i % 2) f.reg.delete_station(s.id);
    }
    stop = true;
  });
  std::size_t last = 0;
  while (!stop) {
    auto doc = oracle::parse_markers(f.reg.markers_xml());
    REQUIRE(doc.error.empty());
    CHECK(doc.markers.size() >= last);
    last = doc.markers.size();
  }
  writer.join();
  CHECK(oracle::parse_markers(f.reg.markers_xml()).markers.size() == 100);
}
