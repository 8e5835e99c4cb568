#pragma once

#include <chrono>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "aqmeis/config.hpp"

namespace aqmeis::auth {

enum class AccessLevel { Public = 0, Member = 1, Admin = 2 };

std::string_view level_name(AccessLevel level);  // "public" | "member" | "admin"
std::optional<AccessLevel> parse_level(std::string_view name);

/// Lowercase hex SHA-256 of `text`.
std::string sha256_hex(std::string_view text);

using WallClock = std::chrono::system_clock;
using Clock = std::function<WallClock::time_point()>;

struct SessionToken {
  std::string token;
  AccessLevel level = AccessLevel::Public;
  WallClock::time_point expires_at{};
};

/// Bearer tokens for the shared member and admin credentials.
class Authenticator {
 public:
  Authenticator(Credentials credentials, std::chrono::minutes ttl, Clock clock = WallClock::now);

  /// Throws BadCredentials for any password that matches neither digest.
  SessionToken login(std::string_view password);
  void logout(std::string_view token);

  /// Passes when `required` is Public or the token is live and high enough.
  /// Throws DeniedMissing, DeniedExpired or DeniedInsufficient.
  void authorize(std::optional<std::string_view> token, AccessLevel required) const;
  /// Level a request carrying `token` holds; Public for none or expired.
  AccessLevel level_of(std::optional<std::string_view> token) const;

  bool ingest_key_matches(std::string_view key) const;

 private:
  Credentials credentials_;
  std::chrono::minutes ttl_;
  Clock clock_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, SessionToken> sessions_;
};

}  // namespace aqmeis::auth
