#include "aqmeis/registry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>

#include "aqmeis/log.hpp"
#include "aqmeis/store.hpp"
#include "json.hpp"

namespace aqmeis::geo {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view kind_name(StationKind k) {
  switch (k) {
    case StationKind::Meteorological: return "meteorological";
    case StationKind::Pollution: return "pollution";
    case StationKind::Both: return "both";
  }
  return "both";
}

std::optional<StationKind> parse_kind(std::string_view name) {
  for (StationKind k : {StationKind::Meteorological, StationKind::Pollution, StationKind::Both})
    if (kind_name(k) == name) return k;
  return std::nullopt;
}

namespace {

bool valid_coords(double lat, double lon) {
  return std::isfinite(lat) && std::isfinite(lon) && lat >= -90 && lat <= 90 && lon >= -180 &&
         lon <= 180;
}

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

bool valid_stream_id(std::string_view s) {
  return s.size() <= 64 && std::all_of(s.begin(), s.end(), [](unsigned char c) {
           return std::isalnum(c) || c == '_' || c == '-';
         });
}

// Decodes one UTF-8 sequence at s[i]; returns its length or 0 when invalid.
std::size_t utf8_sequence(std::string_view s, std::size_t i, char32_t& cp) {
  const auto b = [&](std::size_t k) { return static_cast<unsigned char>(s[i + k]); };
  const unsigned char c = b(0);
  std::size_t len;
  if (c < 0x80) { cp = c; return 1; }
  if (c >= 0xC2 && c <= 0xDF) { len = 2; cp = c & 0x1F; }
  else if (c >= 0xE0 && c <= 0xEF) { len = 3; cp = c & 0x0F; }
  else if (c >= 0xF0 && c <= 0xF4) { len = 4; cp = c & 0x07; }
  else return 0;
  if (i + len > s.size()) return 0;
  for (std::size_t k = 1; k < len; ++k) {
    if ((b(k) & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (b(k) & 0x3F);
  }
  const char32_t min_for_len[] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < min_for_len[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
  return len;
}

}  // namespace

std::string xml_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    char32_t cp = 0;
    std::size_t len = utf8_sequence(text, i, cp);
    if (len == 0) {
      out += "\xEF\xBF\xBD";
      ++i;
      continue;
    }
    switch (cp) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      // attribute-value normalization would turn raw whitespace into spaces
      case '\t': out += "&#9;"; break;
      case '\n': out += "&#10;"; break;
      case '\r': out += "&#13;"; break;
      default:
        if (cp < 0x20 || cp == 0xFFFE || cp == 0xFFFF) out += "\xEF\xBF\xBD";
        else out.append(text.substr(i, len));
    }
    i += len;
  }
  return out;
}

// ---------------------------------------------------------------------------

Registry::Registry(fs::path file) : file_(std::move(file)) {
  if (!file_.empty() && fs::exists(file_)) load();
}

void Registry::seed_defaults() {
  struct Seed {
    const char* town;
    const char* en_town;
    double lat, lon;
    const char* stream;
  };
  const Seed seeds[] = {
      {"Κοζάνη", "Kozani", 40.3007, 21.7887, "s001"},
      {"Φλώρινα", "Florina", 40.7820, 21.4098, "s002"},
      {"Καστοριά", "Kastoria", 40.5193, 21.2687, "s003"},
      {"Γρεβενά", "Grevena", 40.0845, 21.4274, "s004"},
  };
  auto both = add_category({0, "Μετεωρολογικός και ρύπανσης", "Meteorological and pollution",
                            StationKind::Both});
  add_category({0, "Μετεωρολογικός", "Meteorological", StationKind::Meteorological});
  add_category({0, "Ρύπανσης", "Pollution", StationKind::Pollution});
  for (const auto& s : seeds) {
    auto m = add_municipality({0, s.town, s.en_town, s.lat, s.lon});
    Station st;
    st.category = both.id;
    st.municipality = m.id;
    st.title = std::string(s.en_town) + " station";
    st.en_city = s.en_town;
    st.description = "Terminal monitoring station";
    st.lat = s.lat;
    st.lon = s.lon;
    st.thumb = std::string("thumbs/") + s.stream + ".jpg";
    st.image = std::string("images/") + s.stream + ".jpg";
    st.stream_id = s.stream;
    create_station(st);
  }
}

Municipality Registry::add_municipality(Municipality draft) {
  if (!valid_coords(draft.lat, draft.lon)) fail(ErrorCode::BadCoordinates, "municipality coordinates");
  if (blank(draft.title)) fail(ErrorCode::EmptyTitle, "municipality title is empty");
  std::unique_lock lock(mutex_);
  draft.id = next_municipality_++;
  municipalities_.push_back(draft);
  persist();
  return draft;
}

Municipality Registry::update_municipality(const Municipality& m) {
  if (!valid_coords(m.lat, m.lon)) fail(ErrorCode::BadCoordinates, "municipality coordinates");
  if (blank(m.title)) fail(ErrorCode::EmptyTitle, "municipality title is empty");
  std::unique_lock lock(mutex_);
  auto it = std::find_if(municipalities_.begin(), municipalities_.end(),
                         [&](const auto& x) { return x.id == m.id; });
  if (it == municipalities_.end()) fail(ErrorCode::UnknownMunicipality, std::to_string(m.id));
  *it = m;
  persist();
  return m;
}

void Registry::delete_municipality(int id) {
  std::unique_lock lock(mutex_);
  auto it = std::find_if(municipalities_.begin(), municipalities_.end(),
                         [&](const auto& x) { return x.id == id; });
  if (it == municipalities_.end()) fail(ErrorCode::UnknownMunicipality, std::to_string(id));
  if (std::any_of(stations_.begin(), stations_.end(), [&](const auto& s) { return s.municipality == id; }))
    fail(ErrorCode::ReferencedEntity, "municipality " + std::to_string(id) + " still has stations");
  municipalities_.erase(it);
  persist();
}

StationCategory Registry::add_category(StationCategory draft) {
  if (blank(draft.title)) fail(ErrorCode::EmptyTitle, "category title is empty");
  std::unique_lock lock(mutex_);
  draft.id = next_category_++;
  categories_.push_back(draft);
  persist();
  return draft;
}

StationCategory Registry::update_category(const StationCategory& c) {
  if (blank(c.title)) fail(ErrorCode::EmptyTitle, "category title is empty");
  std::unique_lock lock(mutex_);
  auto it = std::find_if(categories_.begin(), categories_.end(), [&](const auto& x) { return x.id == c.id; });
  if (it == categories_.end()) fail(ErrorCode::UnknownCategory, std::to_string(c.id));
  *it = c;
  persist();
  return c;
}

void Registry::delete_category(int id) {
  std::unique_lock lock(mutex_);
  auto it = std::find_if(categories_.begin(), categories_.end(), [&](const auto& x) { return x.id == id; });
  if (it == categories_.end()) fail(ErrorCode::UnknownCategory, std::to_string(id));
  if (std::any_of(stations_.begin(), stations_.end(), [&](const auto& s) { return s.category == id; }))
    fail(ErrorCode::ReferencedEntity, "category " + std::to_string(id) + " still has stations");
  categories_.erase(it);
  persist();
}

// Caller holds the lock.
void Registry::validate(const Station& s) const {
  if (!valid_coords(s.lat, s.lon)) fail(ErrorCode::BadCoordinates, "station coordinates out of range");
  if (blank(s.title)) fail(ErrorCode::EmptyTitle, "station title is empty");
  if (std::none_of(municipalities_.begin(), municipalities_.end(),
                   [&](const auto& m) { return m.id == s.municipality; }))
    fail(ErrorCode::UnknownMunicipality, std::to_string(s.municipality));
  if (std::none_of(categories_.begin(), categories_.end(), [&](const auto& c) { return c.id == s.category; }))
    fail(ErrorCode::UnknownCategory, std::to_string(s.category));
  if (!valid_stream_id(s.stream_id)) fail(ErrorCode::BadRequest, "stream id must match [A-Za-z0-9_-]+");
  if (!s.stream_id.empty() &&
      std::any_of(stations_.begin(), stations_.end(),
                  [&](const auto& o) { return o.id != s.id && o.stream_id == s.stream_id; }))
    fail(ErrorCode::DuplicateStream, s.stream_id);
}

Station Registry::create_station(Station draft) {
  std::unique_lock lock(mutex_);
  draft.id = 0;
  validate(draft);
  draft.id = next_station_++;
  stations_.push_back(draft);
  persist();
  return draft;
}

Station Registry::update_station(int id, const StationPatch& p) {
  std::unique_lock lock(mutex_);
  auto it = std::find_if(stations_.begin(), stations_.end(), [&](const auto& s) { return s.id == id; });
  if (it == stations_.end()) fail(ErrorCode::UnknownStation, std::to_string(id));
  Station s = *it;
  if (p.category) s.category = *p.category;
  if (p.municipality) s.municipality = *p.municipality;
  if (p.address) s.address = *p.address;
  if (p.title) s.title = *p.title;
  if (p.en_city) s.en_city = *p.en_city;
  if (p.description) s.description = *p.description;
  if (p.lat) s.lat = *p.lat;
  if (p.lon) s.lon = *p.lon;
  if (p.thumb) s.thumb = *p.thumb;
  if (p.image) s.image = *p.image;
  if (p.stream_id) s.stream_id = *p.stream_id;
  validate(s);
  *it = s;
  persist();
  return s;
}

void Registry::delete_station(int id) {
  std::unique_lock lock(mutex_);
  auto it = std::find_if(stations_.begin(), stations_.end(), [&](const auto& s) { return s.id == id; });
  if (it == stations_.end()) fail(ErrorCode::UnknownStation, std::to_string(id));
  stations_.erase(it);
  persist();
}

std::optional<Station> Registry::find_station(int id) const {
  std::shared_lock lock(mutex_);
  for (const auto& s : stations_)
    if (s.id == id) return s;
  return std::nullopt;
}

std::optional<Station> Registry::find_by_stream(std::string_view stream_id) const {
  std::shared_lock lock(mutex_);
  if (stream_id.empty()) return std::nullopt;
  for (const auto& s : stations_)
    if (s.stream_id == stream_id) return s;
  return std::nullopt;
}

bool Registry::has_stream(std::string_view stream_id) const { return find_by_stream(stream_id).has_value(); }

std::vector<Station> Registry::stations() const {
  std::shared_lock lock(mutex_);
  return stations_;
}

std::vector<Municipality> Registry::municipalities() const {
  std::shared_lock lock(mutex_);
  return municipalities_;
}

std::vector<StationCategory> Registry::categories() const {
  std::shared_lock lock(mutex_);
  return categories_;
}

std::string Registry::markers_xml(const MarkerEnricher& enrich) const {
  std::vector<Station> stations;
  std::vector<Municipality> munis;
  std::vector<StationCategory> cats;
  {
    std::shared_lock lock(mutex_);
    stations = stations_;
    munis = municipalities_;
    cats = categories_;
  }
  std::sort(stations.begin(), stations.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  std::string body;
  for (const auto& s : stations) {
    auto m = std::find_if(munis.begin(), munis.end(), [&](const auto& x) { return x.id == s.municipality; });
    auto c = std::find_if(cats.begin(), cats.end(), [&](const auto& x) { return x.id == s.category; });
    if (m == munis.end() || c == cats.end() || !valid_coords(s.lat, s.lon) || blank(s.title)) {
      log::warn("markers", "omitting station " + std::to_string(s.id) + ": invalid mandatory fields");
      continue;
    }
    MarkerExtras extra = enrich ? enrich(s) : MarkerExtras{};
    auto attr = [&body](std::string_view name, std::string_view value) {
      body += ' ';
      body += name;
      body += "=\"";
      body += xml_escape(value);
      body += '"';
    };
    auto opt_index = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string{}; };
    body += "  <marker";
    attr("id", std::to_string(s.id));
    attr("title", s.title);
    attr("lat", store::format_value(s.lat));
    attr("lng", store::format_value(s.lon));
    attr("kind", kind_name(c->kind));
    attr("city", m->title);
    attr("en_city", s.en_city.empty() ? m->en_title : s.en_city);
    attr("address", s.address);
    attr("desc", s.description);
    attr("thumb", s.thumb);
    attr("image", s.image);
    attr("stream", s.stream_id);
    attr("index_now", opt_index(extra.index_now));
    attr("index_prev", opt_index(extra.index_prev));
    attr("color_now", extra.color_now);
    attr("color_prev", extra.color_prev);
    attr("last_update", extra.last_update ? format_timestamp(*extra.last_update) : std::string{});
    body += "/>\n";
  }

  std::string doc = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (body.empty()) return doc + "<markers/>\n";
  return doc + "<markers>\n" + body + "</markers>\n";
}

// ---------------------------------------------------------------------------

void Registry::persist() const {
  if (file_.empty()) return;
  json j;
  j["next_ids"] = {{"municipality", next_municipality_}, {"category", next_category_}, {"station", next_station_}};
  j["municipalities"] = json::array();
  for (const auto& m : municipalities_)
    j["municipalities"].push_back({{"id", m.id}, {"title", m.title}, {"en_title", m.en_title}, {"lat", m.lat}, {"lon", m.lon}});
  j["points_categories"] = json::array();
  for (const auto& c : categories_)
    j["points_categories"].push_back({{"id", c.id}, {"title", c.title}, {"en_title", c.en_title}, {"kind", kind_name(c.kind)}});
  j["points"] = json::array();
  for (const auto& s : stations_)
    j["points"].push_back({{"id", s.id}, {"category", s.category}, {"city", s.municipality}, {"en_city", s.en_city},
                           {"address", s.address}, {"title", s.title}, {"description", s.description},
                           {"lat", s.lat}, {"lon", s.lon}, {"thumb", s.thumb}, {"image", s.image},
                           {"stream_id", s.stream_id}});

  std::error_code ec;
  if (file_.has_parent_path()) fs::create_directories(file_.parent_path(), ec);
  const fs::path tmp = file_.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << j.dump(2, ' ', false, json::error_handler_t::replace) << '\n';
    if (!out.flush()) fail(ErrorCode::DataDirError, "cannot write " + tmp.string());
  }
  fs::rename(tmp, file_, ec);
  if (ec) fail(ErrorCode::DataDirError, "cannot replace " + file_.string());
}

void Registry::load() {
  std::ifstream in(file_);
  json j;
  try {
    j = json::parse(in);
    for (const auto& x : j.at("municipalities"))
      municipalities_.push_back({x.at("id"), x.at("title"), x.value("en_title", ""), x.at("lat"), x.at("lon")});
    for (const auto& x : j.at("points_categories")) {
      auto kind = parse_kind(x.value("kind", "both"));
      if (!kind) fail(ErrorCode::DataDirError, "bad category kind in " + file_.string());
      categories_.push_back({x.at("id"), x.at("title"), x.value("en_title", ""), *kind});
    }
    for (const auto& x : j.at("points")) {
      Station s;
      s.id = x.at("id");
      s.category = x.at("category");
      s.municipality = x.at("city");
      s.en_city = x.value("en_city", "");
      s.address = x.value("address", "");
      s.title = x.value("title", "");
      s.description = x.value("description", "");
      s.lat = x.at("lat");
      s.lon = x.at("lon");
      s.thumb = x.value("thumb", "");
      s.image = x.value("image", "");
      s.stream_id = x.value("stream_id", "");
      stations_.push_back(std::move(s));
    }
    const auto& ids = j.at("next_ids");
    next_municipality_ = ids.at("municipality");
    next_category_ = ids.at("category");
    next_station_ = ids.at("station");
  } catch (const json::exception& e) {
    fail(ErrorCode::DataDirError, "corrupt registry " + file_.string() + ": " + e.what());
  }
}

}  // namespace aqmeis::geo
