#pragma once

#include <compare>
#include <optional>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dagor/time.hpp"

namespace dagor {

// Business priority of a task, inherited by every request on its call path.
// Smaller value means higher priority; 0 is the highest.
struct BusinessPriority {
  std::uint16_t value = 0;
  friend constexpr auto operator<=>(BusinessPriority, BusinessPriority) = default;
};

// Per-user priority in [0, 127], derived from the user identity.
struct UserPriority {
  std::uint8_t value = 0;
  friend constexpr auto operator<=>(UserPriority, UserPriority) = default;
};

inline constexpr std::uint16_t kDefaultBusinessMax = 31;
inline constexpr std::uint8_t kUserPriorityMax = 127;
inline constexpr int kUserLevels = kUserPriorityMax + 1;

// Compound admission level (B, U), ordered lexicographically: B dominates,
// U breaks ties.
struct AdmissionLevel {
  BusinessPriority b;
  UserPriority u;
  friend constexpr auto operator<=>(const AdmissionLevel&, const AdmissionLevel&) = default;
};

// Range of business priorities in use. User priorities always span [0, 127].
class PriorityDomain {
 public:
  constexpr PriorityDomain() = default;
  explicit PriorityDomain(std::uint16_t b_max);

  constexpr std::uint16_t b_max() const { return b_max_; }
  constexpr int business_levels() const { return b_max_ + 1; }
  constexpr int level_count() const { return business_levels() * kUserLevels; }

  constexpr AdmissionLevel lowest() const { return {{0}, {0}}; }
  constexpr AdmissionLevel highest() const { return {{b_max_}, {kUserPriorityMax}}; }

  bool contains(AdmissionLevel level) const {
    return level.b.value <= b_max_ && level.u.value <= kUserPriorityMax;
  }

  // Position of a level in the total order, 0 .. level_count() - 1.
  constexpr int index_of(AdmissionLevel level) const {
    return level.b.value * kUserLevels + level.u.value;
  }
  constexpr AdmissionLevel level_at(int index) const {
    return {{static_cast<std::uint16_t>(index / kUserLevels)},
            {static_cast<std::uint8_t>(index % kUserLevels)}};
  }

 private:
  std::uint16_t b_max_ = kDefaultBusinessMax;
};

std::strong_ordering compare_levels(AdmissionLevel a, AdmissionLevel b);

// Maps entry-service actions to business priorities. Actions absent from the
// table get the lowest priority, B_max.
class ActionPriorityTable {
 public:
  explicit ActionPriorityTable(PriorityDomain domain = {});
  ActionPriorityTable(PriorityDomain domain,
                      std::span<const std::pair<std::string, std::uint16_t>> entries);

  BusinessPriority lookup(std::string_view action) const;
  std::size_t size() const { return entries_.size(); }
  const PriorityDomain& domain() const { return domain_; }

 private:
  PriorityDomain domain_;
  std::unordered_map<std::string, BusinessPriority> entries_;
};

BusinessPriority assign_business_priority(const ActionPriorityTable& table,
                                          std::string_view action_id);

// Hour-rotating user priority. The hash is salted with the epoch, so one user
// keeps its priority within an epoch and is reshuffled across epochs.
UserPriority derive_user_priority(std::string_view user_id, std::int64_t epoch);

inline constexpr Duration kDefaultRotationPeriod = std::chrono::hours{1};

std::int64_t rotation_epoch(Timestamp now, Duration period = kDefaultRotationPeriod);

struct Hop {
  int origin = -1;  // server id; -1 for external clients
  int target = -1;
};

// One (b, u) cell and a request count. Upstream servers use it to report
// requests they shed locally on behalf of a downstream server.
struct ShedTally {
  AdmissionLevel cell;
  std::uint32_t count = 0;
};

struct RequestEnvelope {
  std::uint64_t task_id = 0;
  std::string action_id;
  std::string user_id;
  BusinessPriority b;
  UserPriority u;
  Hop hop;
  Timestamp arrival_time{};
  Timestamp start_time{};
  std::vector<ShedTally> shed_report;

  AdmissionLevel level() const { return {b, u}; }
};

// True iff the request is at or below the cursor in the compound order.
constexpr bool admits(AdmissionLevel level, BusinessPriority b, UserPriority u) {
  return b < level.b || (b == level.b && u <= level.u);
}

inline bool admits(AdmissionLevel level, const RequestEnvelope& req) {
  return admits(level, req.b, req.u);
}

}  // namespace dagor

namespace dagor {

// kFailed: the request was processed but one of its own downstream calls
// failed. Callers retry only kRejectedBusy.
enum class Outcome { kSuccess, kRejectedBusy, kTimeout, kFailed };

struct ResponseEnvelope {
  std::uint64_t task_id = 0;
  Hop hop;
  Outcome outcome = Outcome::kSuccess;
  // Responder's admission level at send time; absent for policies that
  // have no level to share.
  std::optional<AdmissionLevel> piggyback;
};

}  // namespace dagor
