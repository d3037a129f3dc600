#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace decree {

// 64-bit digest used for content addressing, UI-state digests and path ids.
// Always rendered as 16 lowercase hex characters with no prefix.
struct Digest64 {
  std::uint64_t value = 0;

  std::string hex() const {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
      out[static_cast<std::size_t>(i)] = kHex[(value >> ((15 - i) * 4)) & 0xF];
    }
    return out;
  }

  static std::optional<Digest64> from_hex(std::string_view text) {
    if (text.size() != 16) return std::nullopt;
    std::uint64_t v = 0;
    for (char c : text) {
      v <<= 4;
      if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
      else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
      else return std::nullopt;
    }
    return Digest64{v};
  }

  auto operator<=>(const Digest64&) const = default;
};

inline constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

// FNV-1a, 64-bit.
inline Digest64 fnv1a64(std::span<const std::byte> bytes) {
  std::uint64_t h = kFnvOffsetBasis;
  for (std::byte b : bytes) {
    h ^= static_cast<std::uint64_t>(b);
    h *= kFnvPrime;
  }
  return Digest64{h};
}

inline Digest64 fnv1a64(std::string_view text) {
  return fnv1a64(std::as_bytes(std::span<const char>(text.data(), text.size())));
}

}  // namespace decree
