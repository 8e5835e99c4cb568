#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "aqmeis/error.hpp"
#include "aqmeis/store.hpp"

namespace aqmeis::ingest {

using store::Interval;
using store::MeasurementRecord;

/// Wire format, one batch:
///
///   #AQMEIS/1;<station>;<05|60>;<sent_at>\n
///   <timestamp>;<ch>=<value>:<status>[;<ch>=<value>:<status>...]\n
///   ...
///
/// UTF-8, `\n` line endings, timestamps `YYYY-MM-DDTHH:MM`.
inline constexpr std::string_view kHeaderTag = "#AQMEIS/1";

struct RejectedLine {
  std::size_t line_number = 0;  // 1-based, header is line 1
  ErrorCode reason = ErrorCode::Ok;
  std::string text;

  friend bool operator==(const RejectedLine&, const RejectedLine&) = default;
};

struct StationBatch {
  std::string station_id;
  Interval interval = Interval::FiveMin;
  TimePoint sent_at{};
  std::vector<MeasurementRecord> records;
  std::vector<RejectedLine> rejected;  // per-line parse failures

  std::size_t data_lines() const { return records.size() + rejected.size(); }
  friend bool operator==(const StationBatch&, const StationBatch&) = default;
};

struct IngestReport {
  std::string station_id;
  std::size_t accepted = 0;
  std::vector<RejectedLine> rejected;
  std::vector<TimePoint> refreshed_hours;
};

/// Throws Error(BadHeader) when the header is absent or malformed; bad
/// value lines are collected in StationBatch::rejected.
StationBatch parse_batch(std::string_view payload);
std::string serialize_batch(const StationBatch& batch);

/// Splits a byte stream holding several concatenated batches at each header
/// line. Text before the first header is returned as its own chunk so that
/// parse_batch reports it.
std::vector<std::string_view> split_batches(std::string_view stream);

/// Commits parsed batches to the store and keeps the hourly stream current.
class Gateway {
 public:
  explicit Gateway(store::MeasurementStore& store);

  IngestReport accept_batch(const StationBatch& batch);
  /// parse_batch + accept_batch for every batch in `stream`.
  std::vector<IngestReport> ingest_stream(std::string_view stream);
  std::vector<IngestReport> ingest_file(const std::filesystem::path& file);
  /// Imports every pending file in `dir` and moves it under `dir/processed`
  /// (or `dir/failed`). Returns the number of files handled.
  std::size_t import_drop_directory(const std::filesystem::path& dir);

 private:
  std::mutex& station_mutex(const std::string& station_id);

  store::MeasurementStore& store_;
  std::mutex map_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> station_mutexes_;
};

/// Byte-stream endpoint: each connection sends one or more batches, then
/// half-closes. The listener replies with one summary line per batch.
class LineListener {
 public:
  LineListener(Gateway& gateway, std::string host, int port);
  ~LineListener();
  LineListener(const LineListener&) = delete;
  LineListener& operator=(const LineListener&) = delete;

  void start();
  void stop();
  int port() const { return bound_port_; }

 private:
  void run();
  void serve_client(int fd);

  Gateway& gateway_;
  std::string host_;
  int port_;
  int bound_port_ = 0;
  int listen_fd_ = -1;
  std::atomic<bool> running_{false};
  std::thread thread_;
};

/// Periodically polls a drop directory on a background thread.
class DropDirectoryWatcher {
 public:
  DropDirectoryWatcher(Gateway& gateway, std::filesystem::path dir, std::chrono::seconds period);
  ~DropDirectoryWatcher();
  void start();
  void stop();

 private:
  Gateway& gateway_;
  std::filesystem::path dir_;
  std::chrono::seconds period_;
  std::mutex mutex_;
  std::condition_variable_any cv_;
  bool stop_requested_ = false;
  std::thread thread_;
};

// ---------------------------------------------------------------------------
// Station simulator

struct SimChannel {
  int index = 1;
  std::string profile = "generic";  // temp, rhum, wspd, wdir, pm10, no2, so2, o3, generic
};

struct SimStation {
  std::string id;
  std::vector<SimChannel> channels;
};

struct Scenario {
  TimePoint start{};
  int batch_minutes = 30;
  int duration_minutes = 24 * 60;
  double drop_probability = 0.0;
  double duplicate_probability = 0.0;
  double offscan_probability = 0.0;
  double missing_probability = 0.0;
  std::vector<SimStation> stations;
};

/// Parses the JSON scenario description; throws Error(BadScenario).
Scenario parse_scenario(std::string_view json_text);
/// Four stations s001..s004 with a handful of channels each.
Scenario default_scenario(TimePoint start);

struct Simulation {
  std::vector<std::string> payloads;  // emission order, duplicates included
  std::map<store::StreamKey, std::map<TimePoint, MeasurementRecord>> truth;
};

/// Deterministic for a given (scenario, seed).
Simulation simulate_stations(const Scenario& scenario, std::uint64_t seed);

}  // namespace aqmeis::ingest
