#include "aqmeis/auth.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/rand.h>

#include <array>

namespace aqmeis::auth {

std::string_view level_name(AccessLevel level) {
  switch (level) {
    case AccessLevel::Public: return "public";
    case AccessLevel::Member: return "member";
    case AccessLevel::Admin: return "admin";
  }
  return "public";
}

std::optional<AccessLevel> parse_level(std::string_view name) {
  for (auto l : {AccessLevel::Public, AccessLevel::Member, AccessLevel::Admin})
    if (level_name(l) == name) return l;
  return std::nullopt;
}

namespace {

using Digest = std::array<unsigned char, 32>;

Digest sha256(std::string_view text) {
  Digest d{};
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), d.data(), &len, EVP_sha256(), nullptr) != 1 || len != d.size())
    fail(ErrorCode::Internal, "SHA-256 failed");
  return d;
}

std::string to_hex(const unsigned char* p, std::size_t n) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    out += kHex[p[i] >> 4];
    out += kHex[p[i] & 0xF];
  }
  return out;
}

std::optional<Digest> from_hex(std::string_view hex) {
  if (hex.size() != 64) return std::nullopt;
  Digest d{};
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  for (std::size_t i = 0; i < 32; ++i) {
    int hi = nibble(hex[2 * i]), lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    d[i] = static_cast<unsigned char>(hi << 4 | lo);
  }
  return d;
}

// Runs the full comparison even when the configured digest is absent.
bool digest_matches(const Digest& candidate, std::string_view configured_hex) {
  auto want = from_hex(configured_hex);
  Digest target = want.value_or(Digest{});
  const bool equal = CRYPTO_memcmp(candidate.data(), target.data(), target.size()) == 0;
  return equal && want.has_value();
}

}  // namespace

std::string sha256_hex(std::string_view text) {
  auto d = sha256(text);
  return to_hex(d.data(), d.size());
}

Authenticator::Authenticator(Credentials credentials, std::chrono::minutes ttl, Clock clock)
    : credentials_(std::move(credentials)), ttl_(ttl), clock_(std::move(clock)) {}

SessionToken Authenticator::login(std::string_view password) {
  const Digest d = sha256(password);
  const bool admin = digest_matches(d, credentials_.admin_sha256);
  const bool member = digest_matches(d, credentials_.member_sha256);
  if (!admin && !member) fail(ErrorCode::BadCredentials, "invalid password");

  std::array<unsigned char, 32> raw{};
  if (RAND_bytes(raw.data(), static_cast<int>(raw.size())) != 1) fail(ErrorCode::Internal, "no randomness");
  SessionToken t{to_hex(raw.data(), raw.size()), admin ? AccessLevel::Admin : AccessLevel::Member,
                 clock_() + ttl_};

  std::lock_guard lock(mutex_);
  const auto now = clock_();
  std::erase_if(sessions_, [&](const auto& kv) { return kv.second.expires_at + ttl_ <= now; });
  sessions_.emplace(t.token, t);
  return t;
}

void Authenticator::logout(std::string_view token) {
  std::lock_guard lock(mutex_);
  sessions_.erase(std::string(token));
}

void Authenticator::authorize(std::optional<std::string_view> token, AccessLevel required) const {
  if (required == AccessLevel::Public) return;
  if (!token || token->empty()) fail(ErrorCode::DeniedMissing, "authentication required");
  SessionToken s;
  {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(std::string(*token));
    if (it == sessions_.end()) fail(ErrorCode::DeniedMissing, "unknown or revoked token");
    s = it->second;
  }
  if (clock_() >= s.expires_at) fail(ErrorCode::DeniedExpired, "token expired");
  if (s.level < required)
    fail(ErrorCode::DeniedInsufficient, std::string(level_name(required)) + " access required");
}

AccessLevel Authenticator::level_of(std::optional<std::string_view> token) const {
  for (auto l : {AccessLevel::Admin, AccessLevel::Member}) {
    try {
      authorize(token, l);
      return l;
    } catch (const Error&) {
    }
  }
  return AccessLevel::Public;
}

bool Authenticator::ingest_key_matches(std::string_view key) const {
  return !key.empty() && digest_matches(sha256(key), credentials_.ingest_sha256);
}

}  // namespace aqmeis::auth
