#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "aqmeis/aqi.hpp"
#include "aqmeis/forecast.hpp"
#include "aqmeis/store.hpp"

namespace aqmeis {

/// Lowercase hex SHA-256 digests. An empty digest disables that login.
struct Credentials {
  std::string member_sha256;
  std::string admin_sha256;
  std::string ingest_sha256;
};

struct Config {
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;
  std::filesystem::path data_dir = "data";
  std::filesystem::path media_root;  // default <data_dir>/media
  std::filesystem::path image_root;  // default <data_dir>/images
  std::filesystem::path drop_dir;    // default <data_dir>/drop
  std::string timezone = "Europe/Athens";
  store::ChannelCatalog channels;
  aqi::BreakpointTable breakpoints = aqi::BreakpointTable::default_pm10();
  Credentials credentials;
  std::chrono::seconds flush_interval{60};
  std::chrono::minutes token_ttl{12 * 60};
  std::string line_host = "127.0.0.1";
  int line_port = 0;  // 0 disables the TCP line listener
  std::vector<forecast::Location> forecast_locations = forecast::default_locations();
  bool seed_registry = true;  // create the four default stations on an empty registry
};

/// The eight channels the default stations report.
std::vector<store::ChannelDef> default_channels();
Config default_config();

/// Strict: unknown keys and wrong types throw Error(ConfigError).
/// Relative paths resolve against `base_dir`.
Config parse_config(std::string_view json_text, const std::filesystem::path& base_dir);
Config load_config(const std::filesystem::path& file);
/// AQMEIS_MEMBER_SHA256, AQMEIS_ADMIN_SHA256, AQMEIS_INGEST_SHA256.
void apply_secret_env(Config& config);
/// Creates the data, media, image and drop directories. Throws DataDirError.
void prepare_directories(const Config& config);
/// JSON rendering of the effective config with digests redacted.
std::string describe_config(const Config& config);

}  // namespace aqmeis
