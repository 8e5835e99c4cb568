#include "aqmeis/ingest.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "aqmeis/log.hpp"
#include "json.hpp"

namespace aqmeis::ingest {

namespace fs = std::filesystem;
using std::chrono::minutes;
using store::ValidityStatus;

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    std::string_view line = text.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = pos + 1;
  }
  return lines;
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

}  // namespace

StationBatch parse_batch(std::string_view payload) {
  if (payload.size() >= 3 && payload.substr(0, 3) == "\xEF\xBB\xBF") payload.remove_prefix(3);
  auto lines = split_lines(payload);
  if (lines.empty() || lines.front().empty()) fail(ErrorCode::BadHeader, "empty payload");

  auto header = split_fields(lines.front(), ';');
  if (header.size() != 4 || header[0] != kHeaderTag)
    fail(ErrorCode::BadHeader, "expected '#AQMEIS/1;<station>;<05|60>;<sent_at>'");

  StationBatch batch;
  batch.station_id = std::string(header[1]);
  if (batch.station_id.empty()) fail(ErrorCode::BadHeader, "empty station id");
  auto interval = store::parse_interval_code(header[2]);
  if (!interval) fail(ErrorCode::BadHeader, "interval must be 05 or 60");
  batch.interval = *interval;
  auto sent_at = parse_timestamp(header[3]);
  if (!sent_at) fail(ErrorCode::BadHeader, "bad sent_at '" + std::string(header[3]) + "'");
  batch.sent_at = *sent_at;

  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (line.empty()) continue;
    auto parsed = store::parse_record_line(line);
    if (auto* err = std::get_if<store::LineError>(&parsed)) {
      batch.rejected.push_back({i + 1, err->code, std::string(line)});
      continue;
    }
    auto& record = std::get<MeasurementRecord>(parsed);
    if (!store::aligned(record.timestamp, batch.interval)) {
      batch.rejected.push_back({i + 1, ErrorCode::MisalignedTimestamp, std::string(line)});
      continue;
    }
    batch.records.push_back(std::move(record));
  }
  return batch;
}

std::string serialize_batch(const StationBatch& batch) {
  std::string out;
  out += kHeaderTag;
  out += ';' + batch.station_id + ';' + std::string(store::interval_code(batch.interval)) + ';' +
         format_timestamp(batch.sent_at) + '\n';
  for (const auto& r : batch.records) out += store::format_record_line(r) + '\n';
  return out;
}

std::vector<std::string_view> split_batches(std::string_view stream) {
  std::vector<std::string_view> chunks;
  std::size_t chunk_start = 0;
  std::size_t pos = 0;
  while (pos < stream.size()) {
    std::size_t eol = stream.find('\n', pos);
    std::size_t next = eol == std::string_view::npos ? stream.size() : eol + 1;
    if (pos != chunk_start && stream.substr(pos).starts_with(kHeaderTag)) {
      chunks.push_back(stream.substr(chunk_start, pos - chunk_start));
      chunk_start = pos;
    }
    pos = next;
  }
  if (chunk_start < stream.size()) {
    std::string_view tail = stream.substr(chunk_start);
    if (tail.find_first_not_of(" \t\r\n") != std::string_view::npos || chunks.empty())
      chunks.push_back(tail);
  }
  if (chunks.empty()) chunks.push_back(stream);
  return chunks;
}

// ---------------------------------------------------------------------------

Gateway::Gateway(store::MeasurementStore& store) : store_(store) {}

std::mutex& Gateway::station_mutex(const std::string& station_id) {
  std::lock_guard lock(map_mutex_);
  auto& slot = station_mutexes_[station_id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

IngestReport Gateway::accept_batch(const StationBatch& batch) {
  if (!store_.is_known(batch.station_id)) fail(ErrorCode::UnknownStation, batch.station_id);

  std::lock_guard lock(station_mutex(batch.station_id));
  IngestReport report;
  report.station_id = batch.station_id;
  report.rejected = batch.rejected;
  report.accepted = store_.put_records({batch.station_id, batch.interval}, batch.records);

  if (batch.interval == Interval::FiveMin) {
    // An hour is complete once the batch was sent at or after its end.
    std::set<TimePoint> hours;
    for (const auto& r : batch.records) hours.insert(store::floor_to_grid(r.timestamp, Interval::SixtyMin));
    for (TimePoint h : hours) {
      if (h + minutes{60} > batch.sent_at) continue;
      store_.refresh_hour(batch.station_id, h);
      report.refreshed_hours.push_back(h);
    }
  }
  return report;
}

std::vector<IngestReport> Gateway::ingest_stream(std::string_view stream) {
  std::vector<IngestReport> reports;
  for (std::string_view chunk : split_batches(stream)) reports.push_back(accept_batch(parse_batch(chunk)));
  return reports;
}

std::vector<IngestReport> Gateway::ingest_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot read " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return ingest_stream(buf.str());
}

std::size_t Gateway::import_drop_directory(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorCode::DataDirError, "no drop directory " + dir.string());
  std::vector<fs::path> pending;
  for (const auto& entry : fs::directory_iterator(dir, ec))
    if (entry.is_regular_file() && entry.path().filename().string().front() != '.')
      pending.push_back(entry.path());
  std::sort(pending.begin(), pending.end());

  std::size_t handled = 0;
  for (const auto& file : pending) {
    fs::path dest_dir = dir / "processed";
    try {
      auto reports = ingest_file(file);
      std::size_t accepted = 0, rejected = 0;
      for (const auto& r : reports) accepted += r.accepted, rejected += r.rejected.size();
      log::info("ingest", file.filename().string() + ": accepted " + std::to_string(accepted) +
                              ", rejected " + std::to_string(rejected));
    } catch (const Error& e) {
      log::warn("ingest", file.filename().string() + ": " + std::string(error_name(e.code())) +
                              " " + e.what());
      dest_dir = dir / "failed";
    }
    fs::create_directories(dest_dir, ec);
    fs::rename(file, dest_dir / file.filename(), ec);
    if (ec) log::error("ingest", "cannot move " + file.string() + ": " + ec.message());
    ++handled;
  }
  return handled;
}

// ---------------------------------------------------------------------------

LineListener::LineListener(Gateway& gateway, std::string host, int port)
    : gateway_(gateway), host_(std::move(host)), port_(port) {}

LineListener::~LineListener() { stop(); }

void LineListener::start() {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(port_);
  if (getaddrinfo(host_.empty() ? nullptr : host_.c_str(), port.c_str(), &hints, &res) != 0)
    fail(ErrorCode::ConfigError, "cannot resolve ingest address " + host_);

  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    int yes = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 16) == 0) {
      listen_fd_ = fd;
      break;
    }
    ::close(fd);
  }
  freeaddrinfo(res);
  if (listen_fd_ < 0) fail(ErrorCode::ConfigError, "cannot listen on " + host_ + ":" + port);

  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  bound_port_ = addr.ss_family == AF_INET6
                    ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
                    : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  running_ = true;
  thread_ = std::thread([this] { run(); });
}

void LineListener::stop() {
  if (!running_.exchange(false)) return;
  if (thread_.joinable()) thread_.join();
  ::close(listen_fd_);
  listen_fd_ = -1;
}

void LineListener::run() {
  std::vector<std::thread> clients;
  while (running_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    if (::poll(&pfd, 1, 100) <= 0) continue;
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    clients.emplace_back([this, fd] { serve_client(fd); });
  }
  for (auto& t : clients) t.join();
}

void LineListener::serve_client(int fd) {
  std::string data;
  char buf[8192];
  while (running_) {
    pollfd pfd{fd, POLLIN, 0};
    int ready = ::poll(&pfd, 1, 100);
    if (ready < 0) break;
    if (ready == 0) continue;
    ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    if (n <= 0) break;
    data.append(buf, static_cast<std::size_t>(n));
  }

  std::string reply;
  if (!data.empty()) {
    for (std::string_view chunk : split_batches(data)) {
      try {
        IngestReport r = gateway_.accept_batch(parse_batch(chunk));
        reply += "OK " + r.station_id + " accepted=" + std::to_string(r.accepted) +
                 " rejected=" + std::to_string(r.rejected.size()) + "\n";
      } catch (const Error& e) {
        reply += "ERR " + std::string(error_name(e.code())) + " " + e.what() + "\n";
      }
    }
  }
  std::size_t off = 0;
  while (off < reply.size()) {
    ssize_t n = ::send(fd, reply.data() + off, reply.size() - off, MSG_NOSIGNAL);
    if (n <= 0) break;
    off += static_cast<std::size_t>(n);
  }
  ::close(fd);
}

// ---------------------------------------------------------------------------

DropDirectoryWatcher::DropDirectoryWatcher(Gateway& gateway, fs::path dir,
                                           std::chrono::seconds period)
    : gateway_(gateway), dir_(std::move(dir)), period_(period) {}

DropDirectoryWatcher::~DropDirectoryWatcher() { stop(); }

void DropDirectoryWatcher::start() {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  stop_requested_ = false;
  thread_ = std::thread([this] {
    std::unique_lock lock(mutex_);
    while (!stop_requested_) {
      lock.unlock();
      try {
        gateway_.import_drop_directory(dir_);
      } catch (const std::exception& e) {
        log::error("ingest", e.what());
      }
      lock.lock();
      cv_.wait_for(lock, period_, [this] { return stop_requested_; });
    }
  });
}

void DropDirectoryWatcher::stop() {
  {
    std::lock_guard lock(mutex_);
    stop_requested_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

// ---------------------------------------------------------------------------

namespace {

double prob(const nlohmann::json& j, const char* key) {
  double p = j.value(key, 0.0);
  if (!(p >= 0.0 && p <= 1.0))
    fail(ErrorCode::BadScenario, std::string(key) + " must lie in [0, 1]");
  return p;
}

const std::set<std::string> kProfiles{"temp", "rhum", "wspd", "wdir", "pm10",
                                      "no2",  "so2",  "o3",   "generic"};

// splitmix-style hash so each station gets a stable personality.
double station_offset(const std::string& id) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : id) h = (h ^ c) * 1099511628211ULL;
  return static_cast<double>(h % 1000) / 1000.0;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double noise() { return unit() + unit() + unit() - 1.5; }

 private:
  std::mt19937_64 engine_;
};

double synth(const std::string& profile, double hour, double offset, Rng& rng) {
  constexpr double tau = 2.0 * std::numbers::pi;
  const double diurnal = std::sin(tau * (hour - 9.0) / 24.0);
  double v;
  if (profile == "temp") v = 15.0 + 4.0 * offset + 8.0 * diurnal + 0.6 * rng.noise();
  else if (profile == "rhum") v = std::clamp(60.0 - 20.0 * diurnal + 3.0 * rng.noise(), 0.0, 100.0);
  else if (profile == "wspd") v = std::max(0.0, 2.0 + 1.5 * std::abs(diurnal) + rng.noise());
  else if (profile == "wdir") v = std::fmod(360.0 + 200.0 + 90.0 * offset + 60.0 * diurnal + 20.0 * rng.noise(), 360.0);
  else if (profile == "pm10") {
    const double rush = std::sin(tau * (hour - 8.0) / 24.0);
    v = std::max(0.0, 30.0 + 30.0 * offset + 25.0 * rush * rush + 6.0 * rng.noise());
  } else if (profile == "no2") v = std::max(0.0, 25.0 + 15.0 * diurnal + 4.0 * rng.noise());
  else if (profile == "so2") v = std::max(0.0, 8.0 + 40.0 * offset + 3.0 * rng.noise());
  else if (profile == "o3") v = std::max(0.0, 60.0 + 30.0 * diurnal + 5.0 * rng.noise());
  else v = 10.0 + rng.noise();
  return std::round(v * 10.0) / 10.0;
}

}  // namespace

Scenario parse_scenario(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::BadScenario, e.what());
  }
  if (!j.is_object()) fail(ErrorCode::BadScenario, "scenario must be a JSON object");

  Scenario s;
  try {
    auto start = parse_timestamp(j.value("start", std::string{}));
    if (!start || !store::aligned(*start, Interval::FiveMin))
      fail(ErrorCode::BadScenario, "start must be a 5-minute aligned YYYY-MM-DDTHH:MM");
    s.start = *start;
    s.batch_minutes = j.value("batch_minutes", 30);
    s.duration_minutes = j.value("duration_minutes", 24 * 60);
    s.drop_probability = prob(j, "drop_probability");
    s.duplicate_probability = prob(j, "duplicate_probability");
    s.offscan_probability = prob(j, "offscan_probability");
    s.missing_probability = prob(j, "missing_probability");
    if (s.offscan_probability + s.missing_probability > 1.0)
      fail(ErrorCode::BadScenario, "offscan + missing probability exceeds 1");

    if (!j.contains("stations") || !j["stations"].is_array() || j["stations"].empty())
      fail(ErrorCode::BadScenario, "stations must be a non-empty array");
    std::set<std::string> ids;
    for (const auto& js : j["stations"]) {
      SimStation st;
      st.id = js.at("id").get<std::string>();
      if (st.id.empty() || !ids.insert(st.id).second)
        fail(ErrorCode::BadScenario, "station ids must be unique and non-empty");
      std::set<int> seen;
      for (const auto& jc : js.at("channels")) {
        SimChannel ch;
        ch.index = jc.at("index").get<int>();
        ch.profile = jc.value("profile", std::string("generic"));
        if (ch.index < 1 || ch.index > store::kMaxChannels || !seen.insert(ch.index).second)
          fail(ErrorCode::BadScenario, "channel indices must be unique within 1..32");
        if (!kProfiles.contains(ch.profile))
          fail(ErrorCode::BadScenario, "unknown channel profile '" + ch.profile + "'");
        st.channels.push_back(ch);
      }
      if (st.channels.empty()) fail(ErrorCode::BadScenario, "station " + st.id + " has no channels");
      s.stations.push_back(std::move(st));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::BadScenario, e.what());
  }
  if (s.batch_minutes <= 0 || s.batch_minutes % 5 != 0)
    fail(ErrorCode::BadScenario, "batch_minutes must be a positive multiple of 5");
  if (s.duration_minutes <= 0) fail(ErrorCode::BadScenario, "duration_minutes must be positive");
  return s;
}

Scenario default_scenario(TimePoint start) {
  Scenario s;
  s.start = start;
  for (const char* id : {"s001", "s002", "s003", "s004"})
    s.stations.push_back({id,
                          {{1, "temp"}, {2, "rhum"}, {3, "wspd"}, {4, "wdir"}, {5, "pm10"},
                           {6, "no2"}, {7, "so2"}, {8, "o3"}}});
  return s;
}

Simulation simulate_stations(const Scenario& scenario, std::uint64_t seed) {
  if (scenario.stations.empty() || scenario.batch_minutes <= 0 || scenario.batch_minutes % 5 != 0 ||
      scenario.duration_minutes <= 0 || !store::aligned(scenario.start, Interval::FiveMin))
    fail(ErrorCode::BadScenario, "invalid scenario");

  Rng rng(seed);
  Simulation sim;
  const TimePoint end = scenario.start + minutes{scenario.duration_minutes};
  for (TimePoint window = scenario.start; window < end; window += minutes{scenario.batch_minutes}) {
    const TimePoint window_end = std::min(end, window + minutes{scenario.batch_minutes});
    for (const auto& station : scenario.stations) {
      StationBatch batch{station.id, Interval::FiveMin, window_end, {}, {}};
      const double offset = station_offset(station.id);
      for (TimePoint t = window; t < window_end; t += minutes{5}) {
        MeasurementRecord r{t, {}};
        const double hour = hour_of_day(t) + minute_of_hour(t) / 60.0;
        for (const auto& ch : station.channels) {
          const double value = synth(ch.profile, hour, offset, rng);
          const double u = rng.unit();
          if (u < scenario.missing_probability)
            r.channels[ch.index] = {0.0, ValidityStatus::Missing};
          else if (u < scenario.missing_probability + scenario.offscan_probability)
            r.channels[ch.index] = {value, ValidityStatus::Offscan};
          else
            r.channels[ch.index] = {value, ValidityStatus::Valid};
        }
        sim.truth[{station.id, Interval::FiveMin}][t] = r;
        batch.records.push_back(std::move(r));
      }
      if (rng.unit() < scenario.drop_probability) continue;
      std::string payload = serialize_batch(batch);
      if (rng.unit() < scenario.duplicate_probability) sim.payloads.push_back(payload);
      sim.payloads.push_back(std::move(payload));
    }
  }
  return sim;
}

}  // namespace aqmeis::ingest
