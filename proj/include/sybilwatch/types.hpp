#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>

namespace sybilwatch {

// Seconds since the Unix epoch.
using Timestamp = std::int64_t;

inline constexpr Timestamp kSecondsPerHour = 3600;

// Opaque account identifier: 1..64 bytes, compared bytewise.
class AccountId {
 public:
  static constexpr std::size_t kMaxBytes = 64;

  explicit AccountId(std::string value);
  explicit AccountId(std::string_view value) : AccountId(std::string(value)) {}
  explicit AccountId(const char* value) : AccountId(std::string(value)) {}

  static bool is_valid(std::string_view value) noexcept {
    return !value.empty() && value.size() <= kMaxBytes;
  }

  const std::string& str() const noexcept { return value_; }

  friend bool operator==(const AccountId&, const AccountId&) = default;
  friend std::strong_ordering operator<=>(const AccountId& a, const AccountId& b) {
    return a.value_.compare(b.value_) <=> 0;
  }

 private:
  std::string value_;
};

enum class Label : std::uint8_t { sybil, normal, unknown };

std::string_view to_string(Label label) noexcept;
std::optional<Label> parse_label(std::string_view text) noexcept;

struct AccountRecord {
  AccountId id;
  Timestamp created_at = 0;
  Label label = Label::unknown;

  friend bool operator==(const AccountRecord&, const AccountRecord&) = default;
};

// Unordered pair stored with first < second.
struct AccountPair {
  AccountId first;
  AccountId second;

  AccountPair(AccountId a, AccountId b);

  friend bool operator==(const AccountPair&, const AccountPair&) = default;
  friend auto operator<=>(const AccountPair&, const AccountPair&) = default;
};

enum class EventType : std::uint8_t {
  account_created,
  request_sent,
  request_accepted,
  request_rejected,
};

std::string_view to_string(EventType type) noexcept;
std::optional<EventType> parse_event_type(std::string_view text) noexcept;

// One social action. For account_created, `actor` is the new account and
// `target` is empty. For the request_* kinds, `actor` is the requester
// ("from") and `target` the recipient ("to"); request_accepted means the
// target accepted a request the actor initiated.
struct Event {
  EventType type = EventType::account_created;
  Timestamp ts = 0;
  AccountId actor;
  std::optional<AccountId> target;
  std::optional<Label> label;

  static Event account_created(Timestamp ts, AccountId id,
                               std::optional<Label> label = std::nullopt);
  static Event request_sent(Timestamp ts, AccountId from, AccountId to);
  static Event request_accepted(Timestamp ts, AccountId from, AccountId to);
  static Event request_rejected(Timestamp ts, AccountId from, AccountId to);

  friend bool operator==(const Event&, const Event&) = default;
};

}  // namespace sybilwatch

template <>
struct std::hash<sybilwatch::AccountId> {
  std::size_t operator()(const sybilwatch::AccountId& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};

namespace sybilwatch {
using LabelMap = std::unordered_map<AccountId, Label>;
}  // namespace sybilwatch
