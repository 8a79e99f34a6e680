#include "sybilwatch/types.hpp"

#include "sybilwatch/error.hpp"

namespace sybilwatch {

AccountId::AccountId(std::string value) : value_(std::move(value)) {
  if (!is_valid(value_)) {
    throw Error(Errc::invalid_account_id,
                "account id must be 1.." + std::to_string(kMaxBytes) + " bytes, got " +
                    std::to_string(value_.size()));
  }
}

std::string_view to_string(Label label) noexcept {
  switch (label) {
    case Label::sybil: return "sybil";
    case Label::normal: return "normal";
    case Label::unknown: return "unknown";
  }
  return "unknown";
}

std::optional<Label> parse_label(std::string_view text) noexcept {
  if (text == "sybil") return Label::sybil;
  if (text == "normal") return Label::normal;
  if (text == "unknown") return Label::unknown;
  return std::nullopt;
}

AccountPair::AccountPair(AccountId a, AccountId b)
    : first(std::move(a)), second(std::move(b)) {
  if (second < first) std::swap(first, second);
}

std::string_view to_string(EventType type) noexcept {
  switch (type) {
    case EventType::account_created: return "account_created";
    case EventType::request_sent: return "request_sent";
    case EventType::request_accepted: return "request_accepted";
    case EventType::request_rejected: return "request_rejected";
  }
  return "account_created";
}

std::optional<EventType> parse_event_type(std::string_view text) noexcept {
  if (text == "account_created") return EventType::account_created;
  if (text == "request_sent") return EventType::request_sent;
  if (text == "request_accepted") return EventType::request_accepted;
  if (text == "request_rejected") return EventType::request_rejected;
  return std::nullopt;
}

Event Event::account_created(Timestamp ts, AccountId id, std::optional<Label> label) {
  return Event{EventType::account_created, ts, std::move(id), std::nullopt, label};
}

Event Event::request_sent(Timestamp ts, AccountId from, AccountId to) {
  return Event{EventType::request_sent, ts, std::move(from), std::move(to), std::nullopt};
}

Event Event::request_accepted(Timestamp ts, AccountId from, AccountId to) {
  return Event{EventType::request_accepted, ts, std::move(from), std::move(to), std::nullopt};
}

Event Event::request_rejected(Timestamp ts, AccountId from, AccountId to) {
  return Event{EventType::request_rejected, ts, std::move(from), std::move(to), std::nullopt};
}

}  // namespace sybilwatch
