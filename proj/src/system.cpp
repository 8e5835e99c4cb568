#include "aqmeis/system.hpp"

#include "aqmeis/log.hpp"

namespace aqmeis {

System::System(Config config) : config_(std::move(config)), today_(today_local) {
  prepare_directories(config_);
  registry_ = std::make_unique<geo::Registry>(config_.data_dir / "registry.json");
  if (config_.seed_registry && registry_->stations().empty() && registry_->municipalities().empty()) {
    registry_->seed_defaults();
    log::info("system", "seeded default stations");
  }
  geo::Registry* reg = registry_.get();
  store_ = std::make_unique<store::MeasurementStore>(
      config_.data_dir / "measurements", [reg](std::string_view id) { return reg->has_stream(id); },
      config_.channels);
  gateway_ = std::make_unique<ingest::Gateway>(*store_);
  forecasts_ = std::make_unique<forecast::ForecastStore>(config_.data_dir / "forecast", config_.forecast_locations);
  images_ = std::make_unique<forecast::ImageCatalog>(config_.image_root);
  auth_ = std::make_unique<auth::Authenticator>(config_.credentials, config_.token_ttl);
}

System::~System() { stop_background(); }

Date System::today() const { return today_(); }

void System::set_today_provider(std::function<Date()> provider) { today_ = std::move(provider); }

aqi::DailyIndexPair System::aqi_pair(std::string_view stream_id, Date day) const {
  return aqi::daily_indices(*store_, config_.breakpoints, stream_id, day);
}

std::string System::markers_xml() const {
  const Date day = today();
  return registry_->markers_xml([&](const geo::Station& s) {
    geo::MarkerExtras e;
    if (s.stream_id.empty() || !store_->is_known(s.stream_id)) return e;
    auto pair = aqi_pair(s.stream_id, day);
    e.index_now = pair.current;
    e.index_prev = pair.previous;
    if (pair.current) e.color_now = aqi::index_color(config_.breakpoints, *pair.current);
    if (pair.previous) e.color_prev = aqi::index_color(config_.breakpoints, *pair.previous);
    e.last_update = store_->latest({s.stream_id, store::Interval::SixtyMin});
    return e;
  });
}

void System::start_background() {
  if (config_.line_port > 0 && !listener_) {
    listener_ = std::make_unique<ingest::LineListener>(*gateway_, config_.line_host, config_.line_port);
    listener_->start();
    log::info("system", "line listener on port " + std::to_string(listener_->port()));
  }
  if (!watcher_) {
    watcher_ = std::make_unique<ingest::DropDirectoryWatcher>(*gateway_, config_.drop_dir, config_.flush_interval);
    watcher_->start();
  }
}

void System::stop_background() {
  if (listener_) listener_->stop();
  if (watcher_) watcher_->stop();
  listener_.reset();
  watcher_.reset();
}

int System::line_port() const { return listener_ ? listener_->port() : 0; }

}  // namespace aqmeis
