#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include <json.hpp>

#include "decree/error.hpp"

namespace decree {

// Insertion-ordered JSON; every serializer in the library emits keys in a
// fixed order, so documents are byte-stable.
using Json = nlohmann::ordered_json;

// Pretty form used for every file the library writes.
inline std::string dump_document(const Json& j) { return j.dump(2) + "\n"; }

inline Json parse_json(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    std::size_t offset = e.byte == 0 ? 0 : e.byte - 1;
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError("JSON syntax error", line, column);
  }
}

}  // namespace decree
