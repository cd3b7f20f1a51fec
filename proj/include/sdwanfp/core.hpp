#ifndef SDWANFP_CORE_HPP
#define SDWANFP_CORE_HPP

#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sdwanfp {

// Raised when an input violates a documented precondition (unsorted trace,
// unknown node, malformed config). The CLI maps it to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Tensor or vector dimensions do not line up with the model.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// IPv4 address held in host order, so integer order equals byte order.
class Ipv4 {
 public:
  constexpr Ipv4() = default;
  constexpr explicit Ipv4(std::uint32_t v) : value_(v) {}
  constexpr Ipv4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
      : value_((std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) |
               (std::uint32_t{c} << 8) | std::uint32_t{d}) {}

  static Ipv4 parse(std::string_view text);
  std::string str() const;

  constexpr std::uint32_t value() const { return value_; }
  constexpr bool unspecified() const { return value_ == 0; }

  friend constexpr auto operator<=>(Ipv4, Ipv4) = default;

 private:
  std::uint32_t value_ = 0;
};

enum class Proto : std::uint8_t { TCP = 6, UDP = 17 };

// Ground-truth traffic class. UNKNOWN marks imported captures.
enum class Label : std::uint8_t { RAFT, SWIM, OPENFLOW, DATA, UNKNOWN };

inline constexpr bool is_control(Label l) {
  return l == Label::RAFT || l == Label::SWIM || l == Label::OPENFLOW;
}

std::string_view to_string(Proto p);
std::string_view to_string(Label l);
Proto proto_from_string(std::string_view s);
Label label_from_string(std::string_view s);

struct PacketRecord {
  double ts = 0.0;
  Ipv4 src_ip;
  Ipv4 dst_ip;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  Proto proto = Proto::TCP;
  std::uint32_t total_len = 0;
  std::uint32_t payload_len = 0;
  Label label = Label::UNKNOWN;

  friend bool operator==(const PacketRecord&, const PacketRecord&) = default;
};

using Trace = std::vector<PacketRecord>;

/// Throws ValidationError unless timestamps are non-decreasing.
void require_sorted(const Trace& trace, std::string_view what);

}  // namespace sdwanfp

template <>
struct std::hash<sdwanfp::Ipv4> {
  std::size_t operator()(sdwanfp::Ipv4 ip) const noexcept {
    return std::hash<std::uint32_t>{}(ip.value());
  }
};

#endif  // SDWANFP_CORE_HPP
