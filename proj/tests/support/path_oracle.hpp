#pragma once

// Brute-force references for path generation: run a callback on every input
// vector of a small domain and collect the paths that actually occur.

#include <functional>
#include <set>
#include <string>

#include "decree/executor.hpp"

namespace support {

// Calls `f` for every assignment of params to values in [lo, hi].
inline void for_each_input(const std::vector<std::string>& params, std::int64_t lo, std::int64_t hi,
                           const std::function<void(const decree::Inputs&)>& f) {
  decree::Inputs in;
  for (const auto& p : params) in[p] = lo;
  for (;;) {
    f(in);
    std::size_t k = 0;
    for (; k < params.size(); ++k) {
      auto& v = in[params[k]];
      if (v < hi) {
        ++v;
        break;
      }
      v = lo;
    }
    if (k == params.size()) return;
  }
}

// Path ids of all normally terminating runs over the domain.
inline std::set<decree::Digest64> exhaustive_path_ids(const decree::AppModel& model, const decree::Callback& cb,
                                                      std::int64_t lo, std::int64_t hi) {
  std::set<decree::Digest64> ids;
  decree::DeviceProfile profile;
  for_each_input(cb.params, lo, hi, [&](const decree::Inputs& in) {
    auto t = decree::execute_callback(model, cb.name, in, profile);
    if (t.termination.normal) ids.insert(t.path_id);
  });
  return ids;
}

}  // namespace support
