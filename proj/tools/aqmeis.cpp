// Operator command line for the air-quality service.
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aqmeis/aqmeis.h"
#include "json.hpp"

namespace {

using nlohmann::json;

enum Exit { kOk = 0, kConfigError = 1, kDataDirError = 2, kFailure = 3 };

struct Common {
  std::string config;
  std::string data_dir;
  std::string timezone;
};

struct OwnedString {
  char* p = nullptr;
  ~OwnedString() { aqmeis_free(p); }
};

int report_failure(int status, const std::string& context) {
  std::cerr << "aqmeis: " << context << ": " << aqmeis_status_name(status) << ": " << aqmeis_last_error() << "\n";
  if (status == AQMEIS_E_CONFIG) return kConfigError;
  if (status == AQMEIS_E_DATA_DIR) return kDataDirError;
  return kFailure;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "JSON config file");
  cmd->add_option("--data-dir", c.data_dir, "Override data_dir");
  cmd->add_option("--timezone", c.timezone, "Override timezone");
}

json overrides_of(const Common& c) {
  json o = json::object();
  if (!c.data_dir.empty()) o["data_dir"] = c.data_dir;
  if (!c.timezone.empty()) o["timezone"] = c.timezone;
  return o;
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

int open_system(const Common& c, const json& overrides, aqmeis_system** sys) {
  const std::string o = overrides.dump();
  int rc = aqmeis_open(opt(c.config), o.c_str(), sys);
  if (rc != AQMEIS_OK) return report_failure(rc, "startup");
  rc = aqmeis_apply_timezone(*sys);
  if (rc != AQMEIS_OK) {
    aqmeis_close(*sys);
    return report_failure(rc, "timezone");
  }
  return kOk;
}

bool write_output(const std::string& path, const char* text) {
  if (path.empty() || path == "-") {
    std::fputs(text, stdout);
    return std::fflush(stdout) == 0;
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  return static_cast<bool>(out);
}

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  return std::string(std::istreambuf_iterator<char>(in), {});
}

int cmd_serve(const Common& c, const std::string& host, int port, int line_port) {
  json o = overrides_of(c);
  if (!host.empty()) o["listen"]["host"] = host;
  if (port >= 0) o["listen"]["port"] = port;
  if (line_port >= 0) o["line_listener"]["port"] = line_port;

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  aqmeis_system* sys = nullptr;
  if (int e = open_system(c, o, &sys); e != kOk) return e;
  int bound = 0;
  int rc = aqmeis_serve_start(sys, nullptr, -1, &bound);
  if (rc != AQMEIS_OK) {
    aqmeis_close(sys);
    return report_failure(rc, "serve");
  }
  std::cerr << "aqmeis: listening on port " << bound << "\n";

  int sig = 0;
  sigwait(&set, &sig);
  std::cerr << "aqmeis: shutting down\n";
  rc = aqmeis_serve_stop(sys);
  aqmeis_close(sys);
  return rc == AQMEIS_OK ? kOk : report_failure(rc, "shutdown");
}

int cmd_ingest(const Common& c, const std::vector<std::string>& files) {
  aqmeis_system* sys = nullptr;
  if (int e = open_system(c, overrides_of(c), &sys); e != kOk) return e;
  int result = kOk;
  for (const auto& f : files) {
    OwnedString out;
    const int rc = aqmeis_ingest_file(sys, f.c_str(), &out.p);
    if (rc != AQMEIS_OK) {
      result = report_failure(rc, f);
      continue;
    }
    const auto batches = json::parse(out.p)["batches"];
    std::size_t accepted = 0, rejected = 0, failed = 0;
    for (const auto& b : batches) {
      if (b.contains("error")) {
        ++failed;
        std::cerr << f << ": batch rejected: " << b["error"]["code"].get<std::string>() << ": "
                  << b["error"]["message"].get<std::string>() << "\n";
        continue;
      }
      accepted += b["accepted"].get<std::size_t>();
      rejected += b["rejected"].size();
    }
    std::cout << f << ": " << batches.size() << " batches, " << accepted << " lines accepted, " << rejected
              << " lines rejected, " << failed << " batches failed\n";
  }
  aqmeis_close(sys);
  return result;
}

int cmd_simulate(const std::string& scenario_path, const std::string& start, std::uint64_t seed,
                 const std::string& output) {
  std::optional<std::string> scenario;
  if (!scenario_path.empty()) {
    scenario = read_file(scenario_path);
    if (!scenario) {
      std::cerr << "aqmeis: cannot read scenario " << scenario_path << "\n";
      return kFailure;
    }
  }
  OwnedString out;
  const int rc = aqmeis_simulate(scenario ? scenario->c_str() : nullptr, start.c_str(), seed, &out.p);
  if (rc != AQMEIS_OK) return report_failure(rc, "simulate");
  if (!write_output(output, out.p)) {
    std::cerr << "aqmeis: cannot write " << output << "\n";
    return kFailure;
  }
  return kOk;
}

struct ReportArgs {
  std::string station;
  std::vector<int> channels;
  std::string interval = "60";
  std::string category = "daily";
  std::string from, to, format = "csv", output, today;
  int page = 1;
};

int cmd_export_report(const Common& c, const ReportArgs& a) {
  aqmeis_system* sys = nullptr;
  if (int e = open_system(c, overrides_of(c), &sys); e != kOk) return e;
  int rc = a.today.empty() ? AQMEIS_OK : aqmeis_set_today(sys, a.today.c_str());
  if (rc != AQMEIS_OK) {
    aqmeis_close(sys);
    return report_failure(rc, "--today");
  }
  json req = {{"station", a.station}, {"channels", a.channels}, {"interval", a.interval},
              {"category", a.category}, {"page", a.page}};
  if (!a.from.empty()) req["from"] = a.from;
  if (!a.to.empty()) req["to"] = a.to;
  const std::string body = req.dump();

  OwnedString out;
  rc = a.format == "json" ? aqmeis_report_json(sys, body.c_str(), &out.p) : aqmeis_report_csv(sys, body.c_str(), &out.p);
  aqmeis_close(sys);
  if (rc != AQMEIS_OK) return report_failure(rc, "export-report");
  if (!write_output(a.output, out.p)) {
    std::cerr << "aqmeis: cannot write " << a.output << "\n";
    return kFailure;
  }
  return kOk;
}

int cmd_check_config(const Common& c) {
  OwnedString out;
  const std::string o = overrides_of(c).dump();
  const int rc = aqmeis_check_config(opt(c.config), o.c_str(), &out.p);
  if (rc != AQMEIS_OK) return report_failure(rc, "check-config");
  std::cout << out.p << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Air-quality measurement and information service"};
  app.set_version_flag("--version", std::string(aqmeis_version()));
  app.require_subcommand(1);

  Common common;

  auto* serve = app.add_subcommand("serve", "Run the HTTP API with background ingestion");
  add_common(serve, common);
  std::string host;
  int port = -1, line_port = -1;
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--port", port, "Listen port (0 picks a free port)")->check(CLI::Range(0, 65535));
  serve->add_option("--line-port", line_port, "TCP line-protocol port (0 disables)")->check(CLI::Range(0, 65535));

  auto* ingest = app.add_subcommand("ingest", "Ingest line-protocol files into the data directory");
  add_common(ingest, common);
  std::vector<std::string> files;
  ingest->add_option("files", files, "Payload files")->required()->check(CLI::ExistingFile);

  auto* simulate = app.add_subcommand("simulate", "Emit simulated station payloads");
  std::string scenario, start = "2024-01-01T00:00", sim_output;
  std::uint64_t seed = 1;
  simulate->add_option("--scenario", scenario, "Scenario JSON file")->check(CLI::ExistingFile);
  simulate->add_option("--seed", seed, "Random seed");
  simulate->add_option("--start", start, "Start time for the default scenario (YYYY-MM-DDTHH:MM)");
  simulate->add_option("-o,--output", sim_output, "Output file (stdout if omitted)");

  auto* report = app.add_subcommand("export-report", "Build a report and write CSV or JSON");
  add_common(report, common);
  ReportArgs ra;
  report->add_option("--station", ra.station, "Station id")->required();
  report->add_option("--channels", ra.channels, "Channel indices")->delimiter(',')->required();
  report->add_option("--interval", ra.interval, "05 or 60")->check(CLI::IsMember({"05", "5", "60"}));
  report->add_option("--category", ra.category, "daily, weekly, monthly or custom")
      ->check(CLI::IsMember({"daily", "weekly", "monthly", "custom"}));
  report->add_option("--from", ra.from, "First day for custom reports (YYYY-MM-DD)");
  report->add_option("--to", ra.to, "Last day for custom reports (YYYY-MM-DD)");
  report->add_option("--today", ra.today, "Reference day for daily/weekly/monthly (YYYY-MM-DD)");
  report->add_option("--page", ra.page, "Page for JSON output")->check(CLI::PositiveNumber);
  report->add_option("--format", ra.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  report->add_option("-o,--output", ra.output, "Output file (stdout if omitted)");

  auto* check = app.add_subcommand("check-config", "Validate configuration and print the effective values");
  add_common(check, common);

  CLI11_PARSE(app, argc, argv);

  if (*serve) return cmd_serve(common, host, port, line_port);
  if (*ingest) return cmd_ingest(common, files);
  if (*simulate) return cmd_simulate(scenario, start, seed, sim_output);
  if (*report) return cmd_export_report(common, ra);
  return cmd_check_config(common);
}
