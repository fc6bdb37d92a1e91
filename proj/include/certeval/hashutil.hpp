#ifndef CERTEVAL_HASHUTIL_HPP_
#define CERTEVAL_HASHUTIL_HPP_

#include <cstdint>
#include <string>
#include <string_view>

namespace certeval {

inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string to_hex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xf];
  return s;
}

}  // namespace certeval

#endif  // CERTEVAL_HASHUTIL_HPP_
