#pragma once

#include <array>
#include <charconv>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "echeat/error.hpp"

namespace echeat {

/// IPv4 address as four octets.
struct IpAddress {
  std::array<std::uint8_t, 4> octets{};

  static IpAddress parse(std::string_view text) {
    IpAddress ip;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      const std::size_t end = i < 3 ? text.find('.', pos) : text.size();
      if (end == std::string_view::npos || end == pos || end - pos > 3) {
        throw ValidationError("invalid IPv4 address '" + std::string(text) + "'");
      }
      unsigned value = 0;
      const auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + end, value);
      if (ec != std::errc{} || ptr != text.data() + end || value > 255) {
        throw ValidationError("invalid IPv4 address '" + std::string(text) + "'");
      }
      ip.octets[i] = static_cast<std::uint8_t>(value);
      pos = end + 1;
    }
    return ip;
  }

  std::string str() const {
    return std::to_string(octets[0]) + "." + std::to_string(octets[1]) + "." + std::to_string(octets[2]) + "." +
           std::to_string(octets[3]);
  }

  bool same_subnet24(const IpAddress& other) const {
    return octets[0] == other.octets[0] && octets[1] == other.octets[1] && octets[2] == other.octets[2];
  }

  friend auto operator<=>(const IpAddress&, const IpAddress&) = default;
};

}  // namespace echeat
