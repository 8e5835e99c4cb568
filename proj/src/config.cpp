#include "aqmeis/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace aqmeis {

namespace fs = std::filesystem;
using nlohmann::json;
using store::ChannelDef;
using store::ChannelKind;

std::vector<ChannelDef> default_channels() {
  return {
      {1, "TEMP", "C", ChannelKind::Meteorological, false},
      {2, "RHUM", "%", ChannelKind::Meteorological, false},
      {3, "WSPD", "m/s", ChannelKind::Meteorological, false},
      {4, "WDIR", "deg", ChannelKind::Meteorological, true},
      {5, "PM10", "ug/m3", ChannelKind::Pollutant, false},
      {6, "NO2", "ug/m3", ChannelKind::Pollutant, false},
      {7, "SO2", "ug/m3", ChannelKind::Pollutant, false},
      {8, "O3", "ug/m3", ChannelKind::Pollutant, false},
  };
}

Config default_config() {
  Config c;
  c.channels = store::ChannelCatalog(default_channels());
  c.media_root = c.data_dir / "media";
  c.image_root = c.data_dir / "images";
  c.drop_dir = c.data_dir / "drop";
  return c;
}

namespace {

[[noreturn]] void bad(const std::string& what) { fail(ErrorCode::ConfigError, what); }

void only_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) bad(where + " must be an object");
  for (const auto& [k, _] : obj.items())
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) bad("unknown key '" + where + "." + k + "'");
}

bool hex_digest(const std::string& s) {
  return s.empty() || (s.size() == 64 && std::all_of(s.begin(), s.end(), [](char c) {
                         return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
                       }));
}

std::vector<ChannelDef> parse_channels(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.empty()) bad(where + " must be a non-empty array");
  std::vector<ChannelDef> out;
  std::set<int> seen;
  for (const auto& c : arr) {
    only_keys(c, where + "[]", {"index", "name", "unit", "kind", "circular"});
    ChannelDef d;
    d.index = c.at("index").get<int>();
    if (d.index < 1 || d.index > store::kMaxChannels) bad(where + ": channel index out of 1..32");
    if (!seen.insert(d.index).second) bad(where + ": duplicate channel " + std::to_string(d.index));
    d.name = c.at("name").get<std::string>();
    d.unit = c.value("unit", "");
    const auto kind = c.value("kind", "meteorological");
    if (kind == "pollutant") d.kind = ChannelKind::Pollutant;
    else if (kind != "meteorological") bad(where + ": kind must be meteorological or pollutant");
    d.circular = c.value("circular", false);
    out.push_back(std::move(d));
  }
  return out;
}

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() || base.empty() ? p : base / p; }

}  // namespace

Config parse_config(std::string_view json_text, const fs::path& base_dir) {
  Config c = default_config();
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    bad(std::string("not valid JSON: ") + e.what());
  }
  try {
    only_keys(j, "config",
              {"listen", "data_dir", "media_root", "image_root", "drop_dir", "timezone", "channels",
               "station_channels", "breakpoints", "credentials", "flush_interval_seconds", "token_ttl_minutes",
               "line_listener", "forecast_locations", "seed_registry"});
    if (j.contains("listen")) {
      only_keys(j["listen"], "listen", {"host", "port"});
      c.listen_host = j["listen"].value("host", c.listen_host);
      c.listen_port = j["listen"].value("port", c.listen_port);
    }
    if (c.listen_port < 0 || c.listen_port > 65535) bad("listen.port out of range");
    if (j.contains("data_dir")) c.data_dir = j["data_dir"].get<std::string>();
    c.data_dir = resolve(base_dir, c.data_dir);
    c.media_root = j.contains("media_root") ? resolve(base_dir, j["media_root"].get<std::string>()) : c.data_dir / "media";
    c.image_root = j.contains("image_root") ? resolve(base_dir, j["image_root"].get<std::string>()) : c.data_dir / "images";
    c.drop_dir = j.contains("drop_dir") ? resolve(base_dir, j["drop_dir"].get<std::string>()) : c.data_dir / "drop";
    c.timezone = j.value("timezone", c.timezone);
    if (c.timezone.empty()) bad("timezone must not be empty");

    if (j.contains("channels")) c.channels = store::ChannelCatalog(parse_channels(j["channels"], "channels"));
    if (j.contains("station_channels")) {
      if (!j["station_channels"].is_object()) bad("station_channels must be an object");
      for (const auto& [station, arr] : j["station_channels"].items())
        c.channels.set_station_channels(station, parse_channels(arr, "station_channels." + station));
    }
    if (j.contains("breakpoints")) {
      only_keys(j["breakpoints"], "breakpoints", {"pollutant", "thresholds", "colors"});
      aqi::BreakpointTable t;
      t.pollutant = j["breakpoints"].value("pollutant", "PM10");
      t.thresholds = j["breakpoints"].at("thresholds").get<std::vector<double>>();
      t.colors = j["breakpoints"].at("colors").get<std::vector<std::string>>();
      try {
        t.validate();
      } catch (const Error& e) {
        bad(std::string("breakpoints: ") + e.what());
      }
      c.breakpoints = std::move(t);
    }
    if (j.contains("credentials")) {
      only_keys(j["credentials"], "credentials", {"member_sha256", "admin_sha256", "ingest_sha256"});
      c.credentials.member_sha256 = j["credentials"].value("member_sha256", "");
      c.credentials.admin_sha256 = j["credentials"].value("admin_sha256", "");
      c.credentials.ingest_sha256 = j["credentials"].value("ingest_sha256", "");
    }
    if (j.contains("flush_interval_seconds")) {
      const int s = j["flush_interval_seconds"].get<int>();
      if (s < 1) bad("flush_interval_seconds must be positive");
      c.flush_interval = std::chrono::seconds(s);
    }
    if (j.contains("token_ttl_minutes")) {
      const int m = j["token_ttl_minutes"].get<int>();
      if (m < 1) bad("token_ttl_minutes must be positive");
      c.token_ttl = std::chrono::minutes(m);
    }
    if (j.contains("line_listener")) {
      only_keys(j["line_listener"], "line_listener", {"host", "port"});
      c.line_host = j["line_listener"].value("host", c.line_host);
      c.line_port = j["line_listener"].value("port", 0);
      if (c.line_port < 0 || c.line_port > 65535) bad("line_listener.port out of range");
    }
    if (j.contains("forecast_locations")) {
      c.forecast_locations.clear();
      for (const auto& l : j["forecast_locations"]) {
        only_keys(l, "forecast_locations[]", {"key", "name"});
        c.forecast_locations.push_back({l.at("key").get<std::string>(), l.value("name", l.at("key").get<std::string>())});
      }
    }
    c.seed_registry = j.value("seed_registry", c.seed_registry);
  } catch (const json::exception& e) {
    bad(e.what());
  }
  for (const auto* d : {&c.credentials.member_sha256, &c.credentials.admin_sha256, &c.credentials.ingest_sha256})
    if (!hex_digest(*d)) bad("credential digests must be 64 lowercase hex characters");
  return c;
}

Config load_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) bad("cannot read config file " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), fs::absolute(file).parent_path());
}

void apply_secret_env(Config& config) {
  const std::pair<const char*, std::string*> vars[] = {
      {"AQMEIS_MEMBER_SHA256", &config.credentials.member_sha256},
      {"AQMEIS_ADMIN_SHA256", &config.credentials.admin_sha256},
      {"AQMEIS_INGEST_SHA256", &config.credentials.ingest_sha256},
  };
  for (auto [name, target] : vars) {
    if (const char* v = std::getenv(name)) {
      if (!hex_digest(v)) bad(std::string(name) + " is not a SHA-256 hex digest");
      *target = v;
    }
  }
}

void prepare_directories(const Config& config) {
  for (const auto& dir : {config.data_dir, config.media_root, config.image_root, config.drop_dir}) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) fail(ErrorCode::DataDirError, "cannot use directory " + dir.string());
    const fs::path probe = dir / ".write-probe";
    std::ofstream(probe) << "";
    if (!fs::exists(probe)) fail(ErrorCode::DataDirError, "directory not writable: " + dir.string());
    fs::remove(probe, ec);
  }
}

std::string describe_config(const Config& c) {
  auto redact = [](const std::string& d) { return d.empty() ? "disabled" : "set"; };
  json j = {
      {"listen", {{"host", c.listen_host}, {"port", c.listen_port}}},
      {"data_dir", c.data_dir.string()},
      {"media_root", c.media_root.string()},
      {"image_root", c.image_root.string()},
      {"drop_dir", c.drop_dir.string()},
      {"timezone", c.timezone},
      {"breakpoints", {{"pollutant", c.breakpoints.pollutant}, {"thresholds", c.breakpoints.thresholds},
                       {"colors", c.breakpoints.colors}}},
      {"credentials", {{"member", redact(c.credentials.member_sha256)},
                       {"admin", redact(c.credentials.admin_sha256)},
                       {"ingest", redact(c.credentials.ingest_sha256)}}},
      {"flush_interval_seconds", c.flush_interval.count()},
      {"token_ttl_minutes", c.token_ttl.count()},
      {"line_listener", {{"host", c.line_host}, {"port", c.line_port}}},
      {"forecast_locations", c.forecast_locations.size()},
      {"seed_registry", c.seed_registry},
  };
  return j.dump(2);
}

}  // namespace aqmeis
