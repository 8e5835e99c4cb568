#include "doctest.h"

#include <fstream>
#include <random>
#include <set>

#include "aqmeis/forecast.hpp"
#include "test_util.hpp"

using namespace aqmeis;
using namespace aqmeis::forecast;
using std::chrono::days;
using std::chrono::minutes;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Ok;
}

ForecastStore mem_store() { return ForecastStore({}, default_locations()); }

ForecastRow full_row(Date d, int hour, double base) {
  ForecastRow r{d, hour, {}};
  for (std::size_t i = 0; i < kParameterCount; ++i) r.values[i] = base + static_cast<double>(i);
  return r;
}

void touch(const std::filesystem::path& p) { std::ofstream(p) << "jpg"; }

}  // namespace

TEST_CASE("locations and parameters") {
  auto locs = default_locations();
  CHECK(locs.size() == 12);
  std::set<std::string> keys;
  for (auto& l : locs) keys.insert(l.key);
  CHECK(keys.size() == 12);
  CHECK(keys.count("siatista"));
  CHECK(all_parameters().size() == 15);
  for (auto p : all_parameters()) {
    CHECK(parse_param(param_name(p)) == p);
    CHECK_FALSE(param_unit(p).empty());
  }
  CHECK(parse_param("rain") == MetParameter::RAIN);
  CHECK_FALSE(parse_param("PM10"));
  CHECK(code_of([] { ForecastStore({}, {{"a", "A"}, {"a", "B"}}); }) == ErrorCode::ConfigError);
}

TEST_CASE("store_forecast_rows examples") {
  auto fs = mem_store();
  const Date d = make_date(2023, 5, 10);
  std::vector<ForecastRow> rows;
  for (int h = 0; h < 24; ++h) rows.push_back(full_row(d, h, h));
  CHECK(fs.store_rows("kozani", rows) == 24);
  CHECK(fs.store_rows("kozani", rows) == 24);
  CHECK(fs.dates("kozani") == std::vector<Date>{d});
  CHECK(*fs.row("kozani", d, 7) == rows[7]);

  auto bad = rows;
  bad.push_back(full_row(d, 24, 0));
  bad[0].values[0] = -999;
  CHECK(code_of([&] { fs.store_rows("kozani", bad); }) == ErrorCode::BadHour);
  CHECK(fs.row("kozani", d, 0)->values[0] == 0.0);  // nothing written
  CHECK(code_of([&] { fs.store_rows("atlantis", rows); }) == ErrorCode::UnknownLocation);
}

TEST_CASE("hourly_series is dense") {
  auto fs = mem_store();
  const Date d = make_date(2023, 5, 10);
  auto empty = fs.hourly_series("ptl", MetParameter::TEMP, d);
  CHECK(empty.hours.size() == 24);
  for (auto& h : empty.hours) CHECK_FALSE(h.value);

  std::mt19937_64 rng(3);
  std::bernoulli_distribution keep(0.5);
  std::vector<ForecastRow> rows;
  for (int h = 0; h < 24; ++h)
    if (keep(rng)) rows.push_back(full_row(d, h, h * 1.5));
  fs.store_rows("ptl", rows);
  for (auto p : all_parameters()) {
    auto s = fs.hourly_series("ptl", p, d);
    REQUIRE(s.hours.size() == 24);
    for (int h = 0; h < 24; ++h) {
      auto direct = fs.row("ptl", d, h);
      CHECK(s.hours[static_cast<std::size_t>(h)].hour == h);
      CHECK(s.hours[static_cast<std::size_t>(h)].value == (direct ? direct->get(p) : std::nullopt));
    }
  }
  CHECK(code_of([&] { fs.hourly_series("nowhere", MetParameter::TEMP, d); }) == ErrorCode::UnknownLocation);
}

TEST_CASE("precip_buckets") {
  auto fs = mem_store();
  const Date d = make_date(2023, 5, 10);
  std::vector<ForecastRow> rows;
  for (int h = 0; h < 24; ++h) {
    ForecastRow r{d, h, {}};
    r.set(MetParameter::RAIN, 1.0);
    rows.push_back(r);
  }
  fs.store_rows("servia", rows);
  for (auto& b : fs.precip_buckets("servia", d)) {
    CHECK(b.total == 6.0);
    CHECK(b.complete);
  }
  auto none = fs.precip_buckets("servia", d + days{1});
  for (auto& b : none) {
    CHECK(b.total == 0.0);
    CHECK_FALSE(b.complete);
  }
  CHECK(none[2].from_hour == 12);
  CHECK(none[2].to_hour == 18);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> rain(0, 5);
  std::bernoulli_distribution missing(0.1);
  for (int day = 0; day < 50; ++day) {
    const Date dd = make_date(2024, 1, 1) + days{day};
    std::vector<ForecastRow> rs;
    std::array<double, 24> truth{};
    std::array<bool, 24> present{};
    for (int h = 0; h < 24; ++h) {
      if (missing(rng)) continue;
      ForecastRow r{dd, h, {}};
      truth[static_cast<std::size_t>(h)] = rain(rng);
      present[static_cast<std::size_t>(h)] = true;
      r.set(MetParameter::RAIN, truth[static_cast<std::size_t>(h)]);
      rs.push_back(r);
    }
    fs.store_rows("servia", rs);
    auto buckets = fs.precip_buckets("servia", dd);
    for (std::size_t b = 0; b < 4; ++b) {
      double sum = 0;
      bool complete = true;
      for (std::size_t h = b * 6; h < b * 6 + 6; ++h) {
        sum += truth[h];
        complete = complete && present[h];
      }
      CHECK(buckets[b].total == doctest::Approx(sum).epsilon(1e-12));
      CHECK(buckets[b].complete == complete);
    }
  }
}

TEST_CASE("history_series") {
  auto fs = mem_store();
  const Date d = make_date(2023, 12, 30);
  for (int k = 0; k < 4; ++k) fs.store_rows("florina", {full_row(d + days{k}, k * 5, k)});
  auto h = fs.history_series("florina", MetParameter::TEMP, d, d + days{2});
  CHECK(h.size() == 3);
  CHECK(fs.history_series("florina", MetParameter::TEMP, d, d).size() == 1);
  for (std::size_t i = 0; i < h.size(); ++i)
    CHECK(h[i] == fs.hourly_series("florina", MetParameter::TEMP, d + days{static_cast<int>(i)}));
  CHECK(code_of([&] { fs.history_series("florina", MetParameter::TEMP, d + days{1}, d); }) ==
        ErrorCode::InvertedRange);
  CHECK(code_of([&] { fs.history_series("x", MetParameter::TEMP, d, d); }) == ErrorCode::UnknownLocation);
}

TEST_CASE("forecast CSV parse, format and persistence") {
  const std::string csv =
      "DATE,HOUR,WDIR,TEMP,RHUM,TEMPSCR,RHUMSCR,TSR,NETR,SENS,EVAP,WSTAR,ZMIX,USTAR,LSTAR,RAIN,SNOW\r\n"
      "2023-05-10,0,180,12.5,80,12,81,0,-40,-10,5,0,120,0.2,-50,0.4,0\r\n"
      "2023-05-10,1,190,12.1,82,11.8,83,0,-42,-11,4,0,110,0.2,-48,,0\r\n";
  auto rows = parse_forecast_csv(csv);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].get(MetParameter::TEMP) == 12.5);
  CHECK_FALSE(rows[1].get(MetParameter::RAIN));
  CHECK(parse_forecast_csv(format_forecast_csv(rows)) == rows);

  CHECK(code_of([] { parse_forecast_csv("DATE,HOUR,TEMP\n"); }) == ErrorCode::BadForecastFile);
  CHECK(code_of([] { parse_forecast_csv(""); }) == ErrorCode::BadForecastFile);
  CHECK(code_of([&] { parse_forecast_csv(std::string(kForecastCsvHeader) + "\n2023-05-10,1,2\n"); }) ==
        ErrorCode::BadForecastFile);
  CHECK(code_of([&] {
          parse_forecast_csv(std::string(kForecastCsvHeader) + "\n2023-05-10,24,,,,,,,,,,,,,,,\n");
        }) == ErrorCode::BadHour);
  CHECK(code_of([&] {
          parse_forecast_csv(std::string(kForecastCsvHeader) + "\n2023-05-10,3,x,,,,,,,,,,,,,,\n");
        }) == ErrorCode::BadForecastFile);

  testutil::TempDir dir;
  {
    ForecastStore fs(dir.path() / "forecast", default_locations());
    std::ofstream(dir.path() / "in.csv") << csv;
    CHECK(fs.import_file("kozani", dir.path() / "in.csv") == 2);
    CHECK(code_of([&] { fs.import_file("kozani", dir.path() / "nope.csv"); }) == ErrorCode::MissingFile);
  }
  ForecastStore again(dir.path() / "forecast", default_locations());
  CHECK(*again.row("kozani", make_date(2023, 5, 10), 0) == rows[0]);
  CHECK(std::filesystem::exists(dir.path() / "forecast" / "kozani" / "2023-05-10.csv"));
}

TEST_CASE("display_window") {
  auto w = display_window(make_date(2023, 5, 10));
  CHECK(w.first == make_date(2023, 5, 9));
  CHECK(w.second == make_date(2023, 5, 13));
  w = display_window(make_date(2023, 5, 31));
  CHECK(w.first == make_date(2023, 5, 30));
  CHECK(w.second == make_date(2023, 6, 3));
  w = display_window(make_date(2024, 1, 1));
  CHECK(w.first == make_date(2023, 12, 31));
  w = display_window(make_date(2024, 2, 27));
  CHECK(w.second == make_date(2024, 3, 1));  // leap year
  for (int k = 0; k < 800; ++k) {
    auto [a, b] = display_window(make_date(2022, 1, 1) + days{k});
    CHECK((b - a).count() + 1 == 5);
  }
}

TEST_CASE("frame filenames") {
  const auto t = make_time(2023, 5, 10, 6, 0);
  const auto name = frame_filename("wmacedonia", "PM10", "traffic", t);
  CHECK(name == "wmacedonia_PM10_traffic_202305100600.jpg");
  auto parsed = parse_frame_filename(name);
  REQUIRE(parsed);
  CHECK(parsed->region == "wmacedonia");
  CHECK(parsed->time == t);
  CHECK_FALSE(parse_frame_filename("a_b_c.jpg"));
  CHECK_FALSE(parse_frame_filename("a_b_c_202305100600.png"));
  CHECK_FALSE(parse_frame_filename("a_b_c_202313100600.jpg"));
  CHECK_FALSE(parse_frame_filename(".._b_c_202305100600.jpg"));
}

TEST_CASE("image catalog lookup and registration") {
  testutil::TempDir dir;
  const auto t0 = make_time(2023, 5, 10, 0, 0);
  touch(dir.path() / frame_filename("wm", "PM10", "all", t0));
  touch(dir.path() / "notes.txt");
  ImageCatalog cat(dir.path());
  CHECK(cat.size() == 1);

  auto hit = cat.lookup_image("wm", "PM10", "all", t0);
  CHECK(hit.available);
  CHECK(hit.file.filename() == frame_filename("wm", "PM10", "all", t0));
  auto miss = cat.lookup_image("wm", "PM10", "all", t0 + minutes{60});
  CHECK_FALSE(miss.available);
  CHECK(miss.label() == kUnavailablePlaceholder);
  CHECK_FALSE(cat.lookup_image("nowhere", "NO2", "x", t0).available);

  const auto extra = dir.path() / "sub" / "frame.jpg";
  std::filesystem::create_directories(extra.parent_path());
  touch(extra);
  ImageKey key{"wm", "PM10", "all", make_date(2023, 5, 10), t0 + minutes{180}};
  cat.register_image(key, extra);
  CHECK(cat.lookup_image("wm", "PM10", "all", t0 + minutes{180}).file == extra);
  CHECK(code_of([&] { cat.register_image(key, dir.path() / "missing.jpg"); }) == ErrorCode::MissingFile);
  key.frame_time = make_time(2023, 5, 14, 0, 0);
  CHECK(code_of([&] { cat.register_image(key, extra); }) == ErrorCode::BadFrameDate);
  key.frame_time = make_time(2023, 5, 8, 23, 0);
  CHECK(code_of([&] { cat.register_image(key, extra); }) == ErrorCode::BadFrameDate);
  key.frame_time = make_time(2023, 5, 13, 23, 0);
  CHECK(code_of([&] { cat.register_image(key, extra); }) == ErrorCode::Ok);

  // registrations survive a rescan, and new files appear
  touch(dir.path() / frame_filename("wm", "PM10", "all", t0 + minutes{60}));
  CHECK(cat.rescan() == 2);
  CHECK(cat.lookup_image("wm", "PM10", "all", t0 + minutes{60}).available);
  CHECK(cat.lookup_image("wm", "PM10", "all", t0 + minutes{180}).available);
}

TEST_CASE("animation_sequence") {
  testutil::TempDir dir;
  std::mt19937_64 rng(5);
  std::bernoulli_distribution keep(0.4);
  const auto start = make_time(2023, 5, 9, 0, 0);
  std::vector<TimePoint> registered;
  for (int h = 0; h < 5 * 24; ++h) {
    const auto t = start + minutes{60 * h};
    if (!keep(rng)) continue;
    touch(dir.path() / frame_filename("wm", "PM10", "all", t));
    registered.push_back(t);
  }
  touch(dir.path() / frame_filename("wm", "PM10", "industry", start));
  ImageCatalog cat(dir.path());

  std::uniform_int_distribution<int> off(0, 5 * 24 * 60);
  for (int trial = 0; trial < 200; ++trial) {
    auto a = start + minutes{off(rng)}, b = start + minutes{off(rng)};
    if (a > b) std::swap(a, b);
    auto seq = cat.animation_sequence("wm", "PM10", "all", a, b);
    std::vector<TimePoint> expect;
    for (auto t : registered)
      if (t >= a && t <= b) expect.push_back(t);
    REQUIRE(seq.size() == expect.size());
    for (std::size_t i = 0; i < seq.size(); ++i) {
      CHECK(seq[i].time == expect[i]);
      if (i) CHECK(seq[i - 1].time < seq[i].time);
    }
  }
  CHECK(code_of([&] { cat.animation_sequence("wm", "PM10", "all", start + minutes{1}, start); }) ==
        ErrorCode::InvertedRange);
  CHECK(cat.animation_sequence("none", "PM10", "all", start, start).empty());
}
