#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "leanmon/error.hpp"

namespace leanmon::binio {

template <typename T>
  requires std::is_integral_v<T>
void put(std::ostream& out, T value) {
  using U = std::make_unsigned_t<T>;
  U v = static_cast<U>(value);
  char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<char>(v & 0xFF);
    v = static_cast<U>(v >> 8);
  }
  out.write(buf, sizeof(T));
}

template <typename T>
  requires std::is_integral_v<T>
T get(std::istream& in, const char* what) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw DataError(std::string("truncated input reading ") + what);
  }
  using U = std::make_unsigned_t<T>;
  U v = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) v = static_cast<U>((v << 8) | buf[i]);
  return static_cast<T>(v);
}

}  // namespace leanmon::binio
