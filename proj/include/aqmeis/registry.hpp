#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "aqmeis/error.hpp"
#include "aqmeis/time.hpp"

namespace aqmeis::geo {

enum class StationKind { Meteorological, Pollution, Both };

std::string_view kind_name(StationKind k);  // "meteorological" | "pollution" | "both"
std::optional<StationKind> parse_kind(std::string_view name);

struct Municipality {
  int id = 0;
  std::string title;
  std::string en_title;
  double lat = 0;
  double lon = 0;
};

struct StationCategory {
  int id = 0;
  std::string title;
  std::string en_title;
  StationKind kind = StationKind::Both;
};

struct Station {
  int id = 0;
  int category = 0;      // StationCategory::id
  int municipality = 0;  // Municipality::id
  std::string address;
  std::string title;
  std::string en_city;
  std::string description;
  double lat = 0;
  double lon = 0;
  std::string thumb;
  std::string image;
  std::string stream_id;  // measurement stream, e.g. "s001"; may be empty
};

struct StationPatch {
  std::optional<int> category;
  std::optional<int> municipality;
  std::optional<std::string> address;
  std::optional<std::string> title;
  std::optional<std::string> en_city;
  std::optional<std::string> description;
  std::optional<double> lat;
  std::optional<double> lon;
  std::optional<std::string> thumb;
  std::optional<std::string> image;
  std::optional<std::string> stream_id;
};

/// Live values attached to each marker at generation time.
struct MarkerExtras {
  std::optional<int> index_now;
  std::optional<int> index_prev;
  std::string color_now;
  std::string color_prev;
  std::optional<TimePoint> last_update;
};
using MarkerEnricher = std::function<MarkerExtras(const Station&)>;

/// Escapes markup characters and replaces anything that is not valid
/// XML 1.0 character data (bad UTF-8, C0 controls) with U+FFFD.
std::string xml_escape(std::string_view text);

/// Stations, municipalities and categories. Mutations are serialized and
/// written through to a JSON file; reads share a lock.
class Registry {
 public:
  explicit Registry(std::filesystem::path file = {});

  /// Kozani, Florina, Kastoria and Grevena with one station (s001..s004) each.
  void seed_defaults();

  Municipality add_municipality(Municipality draft);
  Municipality update_municipality(const Municipality& m);
  void delete_municipality(int id);
  StationCategory add_category(StationCategory draft);
  StationCategory update_category(const StationCategory& c);
  void delete_category(int id);

  Station create_station(Station draft);
  Station update_station(int id, const StationPatch& patch);
  void delete_station(int id);

  std::optional<Station> find_station(int id) const;
  std::optional<Station> find_by_stream(std::string_view stream_id) const;
  bool has_stream(std::string_view stream_id) const;
  std::vector<Station> stations() const;
  std::vector<Municipality> municipalities() const;
  std::vector<StationCategory> categories() const;

  /// `<markers>` document, one `<marker>` per valid station in id order.
  std::string markers_xml(const MarkerEnricher& enrich = {}) const;

 private:
  void validate(const Station& s) const;
  void persist() const;
  void load();

  std::filesystem::path file_;
  mutable std::shared_mutex mutex_;
  std::vector<Municipality> municipalities_;
  std::vector<StationCategory> categories_;
  std::vector<Station> stations_;
  int next_municipality_ = 1;
  int next_category_ = 1;
  int next_station_ = 1;
};

}  // namespace aqmeis::geo
