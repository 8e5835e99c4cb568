#pragma once

#include <functional>
#include <memory>
#include <string>

#include "aqmeis/aqi.hpp"
#include "aqmeis/auth.hpp"
#include "aqmeis/config.hpp"
#include "aqmeis/forecast.hpp"
#include "aqmeis/ingest.hpp"
#include "aqmeis/registry.hpp"
#include "aqmeis/store.hpp"

namespace aqmeis {

/// Everything one deployment owns, wired from a Config.
///
/// On-disk layout under data_dir:
///   registry.json               stations, municipalities, categories
///   measurements/<s>/t05|t60/   one file per day per stream
///   forecast/<location>/        one CSV per day
class System {
 public:
  /// Throws DataDirError when a directory cannot be created or read.
  explicit System(Config config);
  ~System();
  System(const System&) = delete;
  System& operator=(const System&) = delete;

  const Config& config() const { return config_; }
  geo::Registry& registry() { return *registry_; }
  store::MeasurementStore& store() { return *store_; }
  ingest::Gateway& gateway() { return *gateway_; }
  forecast::ForecastStore& forecasts() { return *forecasts_; }
  forecast::ImageCatalog& images() { return *images_; }
  auth::Authenticator& auth() { return *auth_; }

  /// Current civil date; replaceable for tests and replays.
  Date today() const;
  void set_today_provider(std::function<Date()> provider);

  /// Markers with today's and yesterday's index for every station that
  /// has a measurement stream.
  std::string markers_xml() const;
  aqi::DailyIndexPair aqi_pair(std::string_view stream_id, Date day) const;

  /// TCP line listener (when configured) and drop-directory polling.
  void start_background();
  void stop_background();
  int line_port() const;

 private:
  Config config_;
  std::unique_ptr<geo::Registry> registry_;
  std::unique_ptr<store::MeasurementStore> store_;
  std::unique_ptr<ingest::Gateway> gateway_;
  std::unique_ptr<forecast::ForecastStore> forecasts_;
  std::unique_ptr<forecast::ImageCatalog> images_;
  std::unique_ptr<auth::Authenticator> auth_;
  std::unique_ptr<ingest::LineListener> listener_;
  std::unique_ptr<ingest::DropDirectoryWatcher> watcher_;
  std::function<Date()> today_;
};

}  // namespace aqmeis
