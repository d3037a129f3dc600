#pragma once

// Seeded generator of valid app models.
//
// Callbacks are built over nodes n00..nNN in topological order: every node's
// forward successor has a larger index and the last node is the only exit, so
// the exit is reachable from everywhere. With loops enabled, one branch may
// jump back to an earlier node.

#include <random>
#include <string>
#include <vector>

#include "decree/app_model.hpp"

namespace support {

struct ModelShape {
  int max_callbacks = 5;
  int max_branches = 4;
  int max_plain = 6;   // non-branch, non-exit nodes
  int max_params = 3;
  std::int64_t const_lo = 0;
  std::int64_t const_hi = 20;
  bool loops = true;
  bool resp_values = false;  // ui values that read a response (may fail at run time)
  bool prefetch_nodes = false;
};

class ModelGenerator {
 public:
  explicit ModelGenerator(std::uint64_t seed, ModelShape shape = {}) : rng_(seed), shape_(shape) {}

  decree::AppModel model() {
    decree::AppModel m;
    m.app_id = "app" + std::to_string(pick(0, 999));
    m.version = std::to_string(pick(1, 9)) + "." + std::to_string(pick(0, 9));
    int n = pick(1, shape_.max_callbacks);
    for (int i = 0; i < n; ++i) m.callbacks.push_back(callback("cb" + std::to_string(i) + "#on" + kEvents[pick(0, 3)]));
    return m;
  }

  decree::Callback callback(std::string name) {
    using namespace decree;
    Callback cb;
    cb.name = std::move(name);
    int nparams = pick(1, shape_.max_params);
    for (int i = 0; i < nparams; ++i) cb.params.push_back(std::string(1, static_cast<char>('a' + i)));

    int branches = pick(0, shape_.max_branches);
    int plain = pick(1, shape_.max_plain);
    std::vector<bool> is_branch(static_cast<std::size_t>(branches + plain), false);
    for (int b = 0; b < branches; ++b) is_branch[static_cast<std::size_t>(b)] = true;
    std::shuffle(is_branch.begin(), is_branch.end(), rng_);
    int total = branches + plain + 1;  // plus exit
    auto id = [](int i) { return std::string(i < 10 ? "n0" : "n") + std::to_string(i); };
    bool loop_placed = !shape_.loops || !chance(2);

    for (int i = 0; i < total; ++i) {
      Node n;
      n.id = id(i);
      if (i == total - 1) {
        n.op = op::Exit{};
      } else if (is_branch[static_cast<std::size_t>(i)]) {
        op::Branch b;
        b.var = cb.params[static_cast<std::size_t>(pick(0, nparams - 1))];
        b.cmp = static_cast<Cmp>(pick(0, 5));
        b.value = pick64(shape_.const_lo, shape_.const_hi);
        n.op = b;
        n.else_target = id(pick(i + 1, total - 1));
        if (!loop_placed && i > 0) {
          n.then_target = id(pick(0, i - 1));
          loop_placed = true;
        } else {
          n.then_target = id(pick(i + 1, total - 1));
        }
        if (chance(2)) std::swap(n.then_target, n.else_target);
      } else {
        n.op = plain_op(cb);
        n.next = chance(3) ? id(pick(i + 1, total - 1)) : id(i + 1);
      }
      cb.nodes.push_back(std::move(n));
    }
    cb.entry = id(0);
    cb.sort_nodes();
    return cb;
  }

  std::int64_t pick64(std::int64_t lo, std::int64_t hi) { return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng_); }
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool chance(int one_in) { return pick(1, one_in) == 1; }
  std::mt19937_64& rng() { return rng_; }

 private:
  static constexpr const char* kEvents[] = {"Click", "Scroll", "Create", "Resume"};
  static constexpr const char* kUrls[] = {"https://api/a", "https://api/b", "https://cdn/img"};
  static constexpr const char* kWidgets[] = {"title", "label1", "status"};
  static constexpr const char* kActions[] = {"android.intent.action.SEND", "android.intent.action.VIEW"};

  decree::Op plain_op(const decree::Callback& cb) {
    using namespace decree;
    const auto& var = cb.params[static_cast<std::size_t>(pick(0, static_cast<int>(cb.params.size()) - 1))];
    int kinds = shape_.prefetch_nodes ? 6 : 5;
    switch (pick(0, kinds - 1)) {
      case 0: return op::Compute{pick64(0, 20)};
      case 1: {
        op::UiUpdate u;
        u.widget = kWidgets[pick(0, 2)];
        int k = pick(0, shape_.resp_values ? 2 : 1);
        if (k == 0) u.value = ValueExpr{ValueExpr::Kind::Literal, "v" + std::to_string(pick(0, 9))};
        else if (k == 1) u.value = ValueExpr{ValueExpr::Kind::Var, var};
        else u.value = ValueExpr{ValueExpr::Kind::Resp, kUrls[pick(0, 2)]};
        return u;
      }
      case 2: {
        op::NetRequest r;
        r.url.parts.push_back({UrlPart::Kind::Literal, kUrls[pick(0, 2)]});
        if (chance(3)) {
          r.url.parts.push_back({UrlPart::Kind::Literal, "?q="});
          r.url.parts.push_back({UrlPart::Kind::Var, var});
        }
        r.resp_bytes = pick64(0, 4096);
        r.cacheable = chance(2);
        return r;
      }
      case 3: return op::Log{"t" + std::to_string(pick(0, 9))};
      case 4: return op::SendIntent{kActions[pick(0, 1)]};
      default: return op::Prefetch{kUrls[pick(0, 2)]};
    }
  }

  std::mt19937_64 rng_;
  ModelShape shape_;
};

}  // namespace support
