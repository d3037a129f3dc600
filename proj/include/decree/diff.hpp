#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "decree/app_model.hpp"

namespace decree {

// Callback-granularity classification of two app versions. Each list is
// sorted by name and the four lists partition the union of callback names.
struct CallbackDiff {
  std::vector<std::string> modified;
  std::vector<std::string> added;
  std::vector<std::string> removed;
  std::vector<std::string> unchanged;

  bool operator==(const CallbackDiff&) const = default;
};

inline CallbackDiff diff_apps(const AppModel& original, const AppModel& instrumented) {
  CallbackDiff d;
  for (const auto& cb : original.callbacks) {
    const Callback* other = instrumented.find(cb.name);
    if (!other) d.removed.push_back(cb.name);
    else if (canonical_hash(cb) != canonical_hash(*other)) d.modified.push_back(cb.name);
    else d.unchanged.push_back(cb.name);
  }
  for (const auto& cb : instrumented.callbacks)
    if (!original.find(cb.name)) d.added.push_back(cb.name);
  for (auto* list : {&d.modified, &d.added, &d.removed, &d.unchanged}) std::sort(list->begin(), list->end());
  return d;
}

// Every shared callback treated as modified; used to force testing of
// structurally identical versions.
inline CallbackDiff force_all_modified(CallbackDiff d) {
  d.modified.insert(d.modified.end(), d.unchanged.begin(), d.unchanged.end());
  d.unchanged.clear();
  std::sort(d.modified.begin(), d.modified.end());
  return d;
}

inline Json to_json(const CallbackDiff& d) {
  Json j = Json::object();
  j["modified"] = d.modified;
  j["added"] = d.added;
  j["removed"] = d.removed;
  j["unchanged"] = d.unchanged;
  return j;
}

}  // namespace decree
