#include "aqmeis/server.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include "aqmeis/log.hpp"
#include "aqmeis/system.hpp"
#include "httplib.h"
#include "json_codec.hpp"

namespace aqmeis::api {

namespace fs = std::filesystem;
using auth::AccessLevel;
using codec::json;
using codec::Params;

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Ok: return 200;
    case ErrorCode::BadCredentials:
    case ErrorCode::DeniedMissing:
    case ErrorCode::DeniedExpired: return 401;
    case ErrorCode::DeniedInsufficient: return 403;
    case ErrorCode::UnknownStation:
    case ErrorCode::UnknownMunicipality:
    case ErrorCode::UnknownCategory:
    case ErrorCode::UnknownLocation:
    case ErrorCode::NoDataForPeriod:
    case ErrorCode::NotFound: return 404;
    case ErrorCode::ReferencedEntity:
    case ErrorCode::DuplicateStream: return 409;
    case ErrorCode::ConfigError:
    case ErrorCode::DataDirError:
    case ErrorCode::IoError:
    case ErrorCode::Internal: return 500;
    default: return 400;
  }
}

namespace {

struct Ctx {
  System& sys;
  const httplib::Request& req;
  httplib::Response& res;
  AccessLevel level;
  Params params;
};

using Handler = void (*)(Ctx&);

struct Route {
  RouteInfo info;
  Handler handler;
};

void send_json(Ctx& c, const json& body, int status = 200) {
  c.res.status = status;
  c.res.set_content(body.dump(-1, ' ', false, json::error_handler_t::replace), "application/json; charset=utf-8");
}

json body_json(const Ctx& c) {
  try {
    return json::parse(c.req.body);
  } catch (const json::exception&) {
    fail(ErrorCode::BadRequest, "request body is not valid JSON");
  }
}

int id_param(const Ctx& c) { return codec::int_param(codec::require(c.params, "id"), "id"); }

std::string pct(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char ch : s) {
    if (std::isalnum(ch) || ch == '-' || ch == '_' || ch == '.' || ch == '~') {
      out += static_cast<char>(ch);
    } else {
      out += '%';
      out += kHex[ch >> 4];
      out += kHex[ch & 0xF];
    }
  }
  return out;
}

std::string frame_url(std::string_view region, std::string_view pollutant, std::string_view source, TimePoint t) {
  return "/api/images/frame?region=" + pct(region) + "&pollutant=" + pct(pollutant) + "&source=" + pct(source) +
         "&when=" + pct(format_timestamp(t));
}

std::string pollutant_param(const Params& p) {
  auto it = p.find("pollutant");
  return it == p.end() || it->second.empty() ? std::string("PM10") : it->second;
}

forecast::MetParameter met_param(const Params& p) {
  auto m = forecast::parse_param(codec::require(p, "parameter"));
  if (!m) fail(ErrorCode::BadRequest, "unknown forecast parameter");
  return *m;
}

Date date_or_today(const Ctx& c, std::string_view key) {
  return c.params.count(key) ? codec::date_param(c.params, key) : c.sys.today();
}

// --- public -----------------------------------------------------------------

void h_health(Ctx& c) { send_json(c, {{"status", "ok"}, {"today", format_date(c.sys.today())}}); }

void h_login(Ctx& c) {
  auto body = body_json(c);
  if (!body.is_object() || !body.contains("password") || !body["password"].is_string())
    fail(ErrorCode::BadRequest, "expected {\"password\": ...}");
  auto t = c.sys.auth().login(body["password"].get<std::string>());
  const auto ttl = std::chrono::duration_cast<std::chrono::seconds>(t.expires_at - auth::WallClock::now());
  send_json(c, {{"token", t.token}, {"level", auth::level_name(t.level)}, {"expires_in", ttl.count()}});
}

void h_session(Ctx& c) { send_json(c, {{"level", auth::level_name(c.level)}}); }

void h_stations(Ctx& c) {
  json out = json::array();
  for (const auto& s : c.sys.registry().stations()) out.push_back(codec::to_json(s));
  send_json(c, out);
}

geo::Station station_or_404(Ctx& c) {
  auto s = c.sys.registry().find_station(id_param(c));
  if (!s) fail(ErrorCode::UnknownStation, "no station " + c.params.at("id"));
  return *s;
}

void h_station(Ctx& c) { send_json(c, codec::to_json(station_or_404(c))); }

void h_station_latest(Ctx& c) {
  auto s = station_or_404(c);
  if (s.stream_id.empty() || !c.sys.store().is_known(s.stream_id))
    fail(ErrorCode::NotFound, "station has no measurement stream");
  store::StreamKey key{s.stream_id, store::Interval::SixtyMin};
  json out = {{"station", s.id}, {"stream", s.stream_id}, {"timestamp", nullptr}, {"readings", json::array()}};
  if (auto t = c.sys.store().latest(key)) {
    auto recs = c.sys.store().query_all(key, *t, *t);
    out["timestamp"] = format_timestamp(*t);
    for (const auto& [idx, r] : recs.at(0).channels) {
      const auto* def = c.sys.store().channels().find(s.stream_id, idx);
      auto cell = report::DisplayCell::from(r);
      out["readings"].push_back({{"index", idx},
                                 {"name", def ? def->name : "value" + std::to_string(idx)},
                                 {"unit", def ? def->unit : ""},
                                 {"text", cell.render()},
                                 {"value", cell.kind == report::DisplayCell::Kind::Number ? json(r.value) : json(nullptr)}});
    }
  }
  send_json(c, out);
}

void h_municipalities(Ctx& c) {
  json out = json::array();
  for (const auto& m : c.sys.registry().municipalities()) out.push_back(codec::to_json(m));
  send_json(c, out);
}

void h_categories(Ctx& c) {
  json out = json::array();
  for (const auto& k : c.sys.registry().categories()) out.push_back(codec::to_json(k));
  send_json(c, out);
}

void h_channels(Ctx& c) {
  const auto& station = codec::require(c.params, "station");
  if (!c.sys.store().is_known(station)) fail(ErrorCode::UnknownStation, station);
  json out = json::array();
  for (const auto& d : c.sys.store().channels().channels_for(station))
    out.push_back({{"index", d.index}, {"name", d.name}, {"unit", d.unit},
                   {"kind", d.kind == store::ChannelKind::Pollutant ? "pollutant" : "meteorological"}});
  send_json(c, out);
}

void h_markers(Ctx& c) {
  c.res.status = 200;
  c.res.set_content(c.sys.markers_xml(), "application/xml; charset=utf-8");
}

void h_aqi(Ctx& c) {
  const auto& station = codec::require(c.params, "station");
  send_json(c, codec::to_json(c.sys.aqi_pair(station, date_or_today(c, "date")), c.sys.config().breakpoints));
}

void h_breakpoints(Ctx& c) {
  const auto& t = c.sys.config().breakpoints;
  json bands = json::array();
  for (int i = 1; i <= aqi::kBands; ++i) {
    json b = {{"index", i}, {"color", aqi::index_color(t, i)}};
    b["from"] = i == 1 ? json(0.0) : json(t.thresholds[static_cast<std::size_t>(i - 2)]);
    b["to"] = i == aqi::kBands ? json(nullptr) : json(t.thresholds[static_cast<std::size_t>(i - 1)]);
    bands.push_back(b);
  }
  send_json(c, {{"pollutant", t.pollutant}, {"bands", bands}});
}

void h_forecast_locations(Ctx& c) {
  json out = json::array();
  for (const auto& l : c.sys.forecasts().locations()) out.push_back({{"key", l.key}, {"name", l.display_name}});
  send_json(c, out);
}

void h_forecast_parameters(Ctx& c) {
  json out = json::array();
  for (auto p : forecast::all_parameters())
    out.push_back({{"name", forecast::param_name(p)}, {"unit", forecast::param_unit(p)},
                   {"description", forecast::param_description(p)}});
  send_json(c, out);
}

void h_forecast_series(Ctx& c) {
  const auto& loc = codec::require(c.params, "location");
  auto p = met_param(c.params);
  auto out = codec::to_json(c.sys.forecasts().hourly_series(loc, p, date_or_today(c, "date")));
  out["location"] = loc;
  out["parameter"] = forecast::param_name(p);
  out["unit"] = forecast::param_unit(p);
  send_json(c, out);
}

void h_forecast_precip(Ctx& c) {
  const auto& loc = codec::require(c.params, "location");
  const Date d = date_or_today(c, "date");
  send_json(c, {{"location", loc}, {"date", format_date(d)}, {"unit", "mm"},
                {"buckets", codec::to_json(c.sys.forecasts().precip_buckets(loc, d))}});
}

void h_forecast_history(Ctx& c) {
  const auto& loc = codec::require(c.params, "location");
  auto p = met_param(c.params);
  const Date from = codec::date_param(c.params, "from"), to = codec::date_param(c.params, "to");
  if (to - from > std::chrono::days{366}) fail(ErrorCode::BadRequest, "history range is limited to one year");
  json days = json::array();
  for (const auto& s : c.sys.forecasts().history_series(loc, p, from, to)) days.push_back(codec::to_json(s));
  send_json(c, {{"location", loc}, {"parameter", forecast::param_name(p)}, {"unit", forecast::param_unit(p)},
                {"days", days}});
}

void h_image_lookup(Ctx& c) {
  const auto& region = codec::require(c.params, "region");
  const auto& source = codec::require(c.params, "source");
  const auto pollutant = pollutant_param(c.params);
  const auto when = codec::time_param(c.params, "when");
  auto hit = c.sys.images().lookup_image(region, pollutant, source, when);
  json out = {{"available", hit.available}, {"label", hit.label()}, {"url", nullptr}};
  if (hit.available) out["url"] = frame_url(region, pollutant, source, when);
  send_json(c, out);
}

void h_image_window(Ctx& c) {
  auto [from, to] = forecast::display_window(date_or_today(c, "date"));
  json days = json::array();
  for (Date d = from; d <= to; d += std::chrono::days{1}) days.push_back(format_date(d));
  send_json(c, {{"from", format_date(from)}, {"to", format_date(to)}, {"days", days}});
}

void h_image_animation(Ctx& c) {
  const auto& region = codec::require(c.params, "region");
  const auto& source = codec::require(c.params, "source");
  const auto pollutant = pollutant_param(c.params);
  json frames = json::array();
  for (const auto& f : c.sys.images().animation_sequence(region, pollutant, source, codec::time_param(c.params, "from"),
                                                         codec::time_param(c.params, "to")))
    frames.push_back({{"time", format_timestamp(f.time)}, {"url", frame_url(region, pollutant, source, f.time)}});
  send_json(c, {{"frames", frames}});
}

void send_file(Ctx& c, const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorCode::NotFound, "file unreadable");
  std::stringstream buf;
  buf << in.rdbuf();
  auto ext = file.extension().string();
  std::string type = "application/octet-stream";
  if (ext == ".jpg" || ext == ".jpeg") type = "image/jpeg";
  else if (ext == ".png") type = "image/png";
  else if (ext == ".gif") type = "image/gif";
  c.res.status = 200;
  c.res.set_content(buf.str(), type);
}

void h_image_frame(Ctx& c) {
  auto hit = c.sys.images().lookup_image(codec::require(c.params, "region"), pollutant_param(c.params),
                                         codec::require(c.params, "source"), codec::time_param(c.params, "when"));
  if (!hit.available) fail(ErrorCode::NotFound, std::string(forecast::kUnavailablePlaceholder));
  send_file(c, hit.file);
}

void h_media(Ctx& c) {
  const auto& rel = codec::require(c.params, "path");
  std::error_code ec;
  const fs::path root = fs::weakly_canonical(c.sys.config().media_root, ec);
  const fs::path target = fs::weakly_canonical(root / fs::path(rel).relative_path(), ec);
  auto [r, t] = std::mismatch(root.begin(), root.end(), target.begin(), target.end());
  if (ec || r != root.end() || !fs::is_regular_file(target)) fail(ErrorCode::NotFound, "no such media file");
  send_file(c, target);
}

// --- member -----------------------------------------------------------------

report::ReportTable build(Ctx& c) {
  return report::build_report(c.sys.store(), codec::report_request_from(c.params, c.sys.today()));
}

void h_report(Ctx& c) {
  auto table = build(c);
  int page = 1;
  if (auto it = c.params.find("page"); it != c.params.end() && !it->second.empty())
    page = codec::int_param(it->second, "page");
  send_json(c, codec::to_json(table, report::paginate(table, page)));
}

void h_report_csv(Ctx& c) {
  auto table = build(c);
  c.res.status = 200;
  c.res.set_header("Content-Disposition", "attachment; filename=\"" + table.request.station_id + "_" +
                                              format_date(table.request.period.from) + "_" +
                                              format_date(table.request.period.to) + ".csv\"");
  c.res.set_content(report::export_csv(table), "text/csv; charset=utf-8");
}

// --- admin ------------------------------------------------------------------

void h_create_station(Ctx& c) { send_json(c, codec::to_json(c.sys.registry().create_station(codec::station_from_json(body_json(c)))), 201); }
void h_update_station(Ctx& c) {
  send_json(c, codec::to_json(c.sys.registry().update_station(id_param(c), codec::patch_from_json(body_json(c)))));
}
void h_delete_station(Ctx& c) {
  c.sys.registry().delete_station(id_param(c));
  send_json(c, {{"deleted", id_param(c)}});
}

void h_create_municipality(Ctx& c) {
  send_json(c, codec::to_json(c.sys.registry().add_municipality(codec::municipality_from_json(body_json(c)))), 201);
}
void h_update_municipality(Ctx& c) {
  auto m = codec::municipality_from_json(body_json(c));
  m.id = id_param(c);
  send_json(c, codec::to_json(c.sys.registry().update_municipality(m)));
}
void h_delete_municipality(Ctx& c) {
  c.sys.registry().delete_municipality(id_param(c));
  send_json(c, {{"deleted", id_param(c)}});
}

void h_create_category(Ctx& c) {
  send_json(c, codec::to_json(c.sys.registry().add_category(codec::category_from_json(body_json(c)))), 201);
}
void h_update_category(Ctx& c) {
  auto k = codec::category_from_json(body_json(c));
  k.id = id_param(c);
  send_json(c, codec::to_json(c.sys.registry().update_category(k)));
}
void h_delete_category(Ctx& c) {
  c.sys.registry().delete_category(id_param(c));
  send_json(c, {{"deleted", id_param(c)}});
}

void h_upload_forecast(Ctx& c) {
  const auto& loc = codec::require(c.params, "location");
  const auto n = c.sys.forecasts().store_rows(loc, forecast::parse_forecast_csv(c.req.body));
  send_json(c, {{"location", loc}, {"stored", n}});
}

void h_rescan_images(Ctx& c) { send_json(c, {{"frames_on_disk", c.sys.images().rescan()}, {"frames", c.sys.images().size()}}); }

void h_register_image(Ctx& c) {
  auto p = codec::params_from_json(body_json(c));
  forecast::ImageKey key{codec::require(p, "region"), pollutant_param(p), codec::require(p, "source"),
                         codec::date_param(p, "date"), codec::time_param(p, "frame_time")};
  c.sys.images().register_image(key, codec::require(p, "path"));
  send_json(c, {{"registered", true}, {"url", frame_url(key.region, key.pollutant, key.source, key.frame_time)}}, 201);
}

// --- ingest -----------------------------------------------------------------

void h_ingest(Ctx& c) {
  if (c.req.body.find_first_not_of(" \t\r\n") == std::string::npos) fail(ErrorCode::BadRequest, "empty ingest body");
  auto chunks = ingest::split_batches(c.req.body);
  json batches = json::array();
  for (auto chunk : chunks) {
    try {
      batches.push_back(codec::to_json(c.sys.gateway().accept_batch(ingest::parse_batch(chunk))));
    } catch (const Error& e) {
      batches.push_back(codec::error_body(e.code(), e.what()));
    }
  }
  send_json(c, {{"batches", batches}});
}

const std::vector<Route>& routes() {
  using L = AccessLevel;
  static const std::vector<Route> table = {
      {{"GET", "/api/health", L::Public, false, false, "liveness and server date"}, h_health},
      {{"POST", "/api/login", L::Public, false, false, "exchange a password for a bearer token"}, h_login},
      {{"GET", "/api/session", L::Public, false, false, "access level of the presented token"}, h_session},
      {{"GET", "/api/stations", L::Public, false, false, "all stations"}, h_stations},
      {{"GET", "/api/stations/:id", L::Public, false, false, "one station"}, h_station},
      {{"GET", "/api/stations/:id/latest", L::Public, false, false, "latest hourly record of a station"}, h_station_latest},
      {{"GET", "/api/municipalities", L::Public, false, false, "all municipalities"}, h_municipalities},
      {{"GET", "/api/categories", L::Public, false, false, "all station categories"}, h_categories},
      {{"GET", "/api/channels", L::Public, false, false, "channel list of a stream (?station=)"}, h_channels},
      {{"GET", "/api/markers.xml", L::Public, false, false, "map markers feed"}, h_markers},
      {{"GET", "/api/aqi", L::Public, false, false, "current and previous daily index (?station=&date=)"}, h_aqi},
      {{"GET", "/api/aqi/breakpoints", L::Public, false, false, "index bands and colors"}, h_breakpoints},
      {{"GET", "/api/forecast/locations", L::Public, false, false, "forecast locations"}, h_forecast_locations},
      {{"GET", "/api/forecast/parameters", L::Public, false, false, "forecast parameters and units"}, h_forecast_parameters},
      {{"GET", "/api/forecast/series", L::Public, false, false, "24 hourly values (?location=&parameter=&date=)"}, h_forecast_series},
      {{"GET", "/api/forecast/precip", L::Public, false, false, "6-hour rain buckets (?location=&date=)"}, h_forecast_precip},
      {{"GET", "/api/forecast/history", L::Public, false, false, "stored series per day (?location=&parameter=&from=&to=)"}, h_forecast_history},
      {{"GET", "/api/images/lookup", L::Public, false, false, "frame or placeholder (?region=&pollutant=&source=&when=)"}, h_image_lookup},
      {{"GET", "/api/images/window", L::Public, false, false, "five-day display window (?date=)"}, h_image_window},
      {{"GET", "/api/images/animation", L::Public, false, false, "frames in a range (?region=&pollutant=&source=&from=&to=)"}, h_image_animation},
      {{"GET", "/api/images/frame", L::Public, false, false, "frame image bytes"}, h_image_frame},
      {{"GET", "/media/:path", L::Public, false, false, "static station imagery"}, h_media},
      {{"GET", "/api/reports", L::Member, false, false, "paginated report (?station=&channels=&interval=&category=&from=&to=&page=)"}, h_report},
      {{"GET", "/api/reports.csv", L::Member, false, false, "report as CSV, same parameters"}, h_report_csv},
      {{"POST", "/api/admin/stations", L::Admin, false, true, "create station"}, h_create_station},
      {{"PUT", "/api/admin/stations/:id", L::Admin, false, true, "patch station"}, h_update_station},
      {{"DELETE", "/api/admin/stations/:id", L::Admin, false, true, "delete station"}, h_delete_station},
      {{"POST", "/api/admin/municipalities", L::Admin, false, true, "create municipality"}, h_create_municipality},
      {{"PUT", "/api/admin/municipalities/:id", L::Admin, false, true, "replace municipality"}, h_update_municipality},
      {{"DELETE", "/api/admin/municipalities/:id", L::Admin, false, true, "delete municipality"}, h_delete_municipality},
      {{"POST", "/api/admin/categories", L::Admin, false, true, "create category"}, h_create_category},
      {{"PUT", "/api/admin/categories/:id", L::Admin, false, true, "replace category"}, h_update_category},
      {{"DELETE", "/api/admin/categories/:id", L::Admin, false, true, "delete category"}, h_delete_category},
      {{"POST", "/api/admin/forecast/:location", L::Admin, false, true, "upload a forecast CSV"}, h_upload_forecast},
      {{"POST", "/api/admin/images/rescan", L::Admin, false, true, "rescan the image root"}, h_rescan_images},
      {{"POST", "/api/admin/images", L::Admin, false, true, "register an image frame"}, h_register_image},
      {{"POST", "/api/ingest", L::Admin, true, true, "station batches in the line protocol"}, h_ingest},
  };
  return table;
}

std::optional<std::string> bearer(const httplib::Request& req) {
  auto h = req.get_header_value("Authorization");
  constexpr std::string_view prefix = "Bearer ";
  if (h.size() > prefix.size() && std::string_view(h).substr(0, prefix.size()) == prefix) return h.substr(prefix.size());
  return std::nullopt;
}

}  // namespace

const std::vector<RouteInfo>& route_table() {
  static const std::vector<RouteInfo> infos = [] {
    std::vector<RouteInfo> out;
    for (const auto& r : routes()) out.push_back(r.info);
    return out;
  }();
  return infos;
}

struct Server::Impl {
  System& sys;
  httplib::Server http;
  std::thread thread;
  int port = 0;

  explicit Impl(System& s) : sys(s) {
    for (const auto& r : routes()) {
      auto handler = [this, &r](const httplib::Request& req, httplib::Response& res) { dispatch(r, req, res); };
      // `/media/:path` must accept nested paths, which path parameters cannot.
      const std::string pattern = r.info.path == "/media/:path" ? std::string("/media/(.+)") : r.info.path;
      if (r.info.method == "GET") http.Get(pattern, handler);
      else if (r.info.method == "POST") http.Post(pattern, handler);
      else if (r.info.method == "PUT") http.Put(pattern, handler);
      else if (r.info.method == "DELETE") http.Delete(pattern, handler);
    }
    http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) {
        const auto code = res.status == 404 ? ErrorCode::NotFound : ErrorCode::BadRequest;
        res.set_content(codec::error_body(code, httplib::status_message(res.status)).dump(), "application/json");
      }
    });
    http.set_payload_max_length(64 << 20);
  }

  void dispatch(const Route& r, const httplib::Request& req, httplib::Response& res) {
    const auto token = bearer(req);
    Ctx c{sys, req, res, AccessLevel::Public, {}};
    try {
      c.level = sys.auth().level_of(token);
      const bool key_ok = r.info.ingest_key && sys.auth().ingest_key_matches(req.get_header_value("X-Ingest-Key"));
      if (!key_ok) sys.auth().authorize(token, r.info.level);
      for (const auto& [k, v] : req.params) c.params[k] = v;
      for (const auto& [k, v] : req.path_params) c.params[k] = v;
      if (r.info.path == "/media/:path" && req.matches.size() > 1) c.params["path"] = req.matches[1];
      r.handler(c);
    } catch (const Error& e) {
      send_json(c, codec::error_body(e.code(), e.what()), http_status_for(e.code()));
    } catch (const std::exception& e) {
      log::error("api", r.info.method + " " + req.path + ": " + e.what());
      send_json(c, codec::error_body(ErrorCode::Internal, "internal error"), 500);
    }
  }
};

Server::Server(System& system) : impl_(std::make_unique<Impl>(system)) {}

Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
  if (port == 0) {
    impl_->port = impl_->http.bind_to_any_port(host);
  } else {
    impl_->port = impl_->http.bind_to_port(host, port) ? port : -1;
  }
  if (impl_->port <= 0) fail(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
  return impl_->port;
}

void Server::run() { impl_->http.listen_after_bind(); }

int Server::start(const std::string& host, int port) {
  const int bound = bind(host, port);
  impl_->thread = std::thread([this] { run(); });
  impl_->http.wait_until_ready();
  return bound;
}

void Server::stop() {
  if (!impl_) return;
  impl_->http.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace aqmeis::api
