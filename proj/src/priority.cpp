#include "dagor/priority.hpp"

#include <stdexcept>

namespace dagor {

PriorityDomain::PriorityDomain(std::uint16_t b_max) : b_max_(b_max) {}

std::strong_ordering compare_levels(AdmissionLevel a, AdmissionLevel b) { return a <=> b; }

ActionPriorityTable::ActionPriorityTable(PriorityDomain domain) : domain_(domain) {}

ActionPriorityTable::ActionPriorityTable(
    PriorityDomain domain, std::span<const std::pair<std::string, std::uint16_t>> entries)
    : domain_(domain) {
  for (const auto& [action, priority] : entries) {
    if (priority > domain_.b_max()) {
      throw std::invalid_argument("business priority of action '" + action +
                                  "' exceeds b_max");
    }
    entries_.insert_or_assign(action, BusinessPriority{priority});
  }
}

BusinessPriority ActionPriorityTable::lookup(std::string_view action) const {
  // Heterogeneous lookup would need a transparent hasher; tables are tiny.
  auto it = entries_.find(std::string{action});
  if (it == entries_.end()) return BusinessPriority{domain_.b_max()};
  return it->second;
}

BusinessPriority assign_business_priority(const ActionPriorityTable& table,
                                          std::string_view action_id) {
  return table.lookup(action_id);
}

namespace {

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

UserPriority derive_user_priority(std::string_view user_id, std::int64_t epoch) {
  const std::uint64_t salt = splitmix64(static_cast<std::uint64_t>(epoch));
  const std::uint64_t h = splitmix64(fnv1a(user_id) ^ salt);
  return UserPriority{static_cast<std::uint8_t>(h % kUserLevels)};
}

std::int64_t rotation_epoch(Timestamp now, Duration period) {
  if (period <= Duration::zero()) throw std::invalid_argument("rotation period must be positive");
  return now.time_since_epoch() / period;
}

}  // namespace dagor
