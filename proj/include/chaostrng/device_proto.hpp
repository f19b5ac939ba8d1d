#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "chaostrng/bitstream.hpp"
#include "chaostrng/quality_suite.hpp"
#include "chaostrng/settings.hpp"

namespace chaostrng {

// Wire format, all frames:
//   0x7E | cmd | length (u16 LE) | payload[length] | CRC-16/CCITT-FALSE (u16 BE)
// The CRC covers cmd, length and payload.
inline constexpr std::uint8_t kSof = 0x7E;
inline constexpr std::size_t kMaxPayload = 4096;
inline constexpr std::size_t kFrameOverhead = 6;

enum class Command : std::uint8_t {
  get_random = 0x01,
  get_status = 0x02,
  get_raw = 0x03,
  set_config = 0x04,
  diag = 0x05,
  error = 0xFF,
};

enum class ErrorCode : std::uint8_t {
  unknown_command = 0x01,
  bad_params = 0x02,
  tamper_lockout = 0x03,
};

struct Frame {
  std::uint8_t cmd = 0;
  std::vector<std::uint8_t> payload;

  bool operator==(const Frame&) const = default;
};

enum class FrameError { bad_sof, bad_length, bad_crc, truncated };

std::string to_string(FrameError e);

using DecodeResult = std::variant<Frame, FrameError>;

/// Poly 0x1021, init 0xFFFF, no reflection, no final xor.
std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> data);

/// Throws std::length_error for payloads above kMaxPayload.
std::vector<std::uint8_t> encode_frame(const Frame& frame);
inline std::vector<std::uint8_t> encode_frame(Command cmd, std::vector<std::uint8_t> payload = {}) {
  return encode_frame(Frame{static_cast<std::uint8_t>(cmd), std::move(payload)});
}

/// Decodes one frame that must start at data[0]. Trailing bytes are ignored.
DecodeResult decode_frame(std::span<const std::uint8_t> data);

/// Incremental decoder for a byte stream. Bytes before a start-of-frame
/// marker are skipped; after a bad frame the decoder drops that marker and
/// rescans from the next byte, so a valid frame following garbage is found.
class FrameDecoder {
 public:
  void feed(std::span<const std::uint8_t> data);
  /// Next frame or error, or nothing when more bytes are needed.
  std::optional<DecodeResult> next();
  /// Drains the buffer at end of stream: remaining frames, then a
  /// `truncated` error for any incomplete tail.
  std::vector<DecodeResult> finish();

  std::size_t skipped_bytes() const { return skipped_; }
  std::size_t buffered() const { return buffer_.size(); }

 private:
  std::deque<std::uint8_t> buffer_;
  std::size_t skipped_ = 0;
};

/// GET_STATUS payload (little-endian, 44 octets).
struct DeviceStatus {
  CircuitConfig circuit;
  std::uint64_t seed = 0;
  PostProcess post = PostProcess::none;
  std::uint64_t cycle = 0;
  std::uint32_t buffered_bits = 0;
  std::uint8_t tamper_flags = 0;

  std::vector<std::uint8_t> serialize() const;
  static std::optional<DeviceStatus> parse(std::span<const std::uint8_t> payload);
};

/// DIAG payload (little-endian, 21 octets).
struct DiagResult {
  std::uint8_t flags = 0;
  double branch_score = 0.0;
  double max_state_occupancy = 0.0;
  std::uint32_t out_of_range = 0;

  std::vector<std::uint8_t> serialize() const;
  static std::optional<DiagResult> parse(std::span<const std::uint8_t> payload);
};

/// Simulated entropy peripheral answering protocol requests.
///
/// Random output is released only after tamper_check passes on every loop
/// cycle run since the previous release (at least kMinHealthCycles of
/// them). A failing check discards the buffered bits and answers ERROR 0x03.
class VirtualDevice {
 public:
  static constexpr std::size_t kMinHealthCycles = 1024;
  static constexpr std::size_t kMaxHealthCycles = std::size_t{1} << 20;
  static constexpr std::size_t kDiagCycles = 10000;

  /// Throws ConfigError / std::invalid_argument for invalid settings.
  explicit VirtualDevice(RunSettings settings);
  // The entropy source observer captures `this`.
  VirtualDevice(const VirtualDevice&) = delete;
  VirtualDevice& operator=(const VirtualDevice&) = delete;

  Frame handle(const Frame& request);

  /// Applies a fault to the running loop (test hook).
  void inject_fault(const FaultInjection& fault);
  std::uint8_t tamper_flags() const { return flags_; }
  const RunSettings& settings() const { return settings_; }
  DeviceStatus status() const;

 private:
  void restart();
  void observe(const TraceRecord& rec);

  Frame on_get_random(const Frame& request);
  Frame on_get_raw(const Frame& request);
  Frame on_set_config(const Frame& request);
  Frame on_diag();

  RunSettings settings_;
  FaultInjection fault_;
  std::unique_ptr<EntropySource> source_;
  std::vector<TraceRecord> recent_;   // cycles since the last release
  std::uint64_t recent_saturation_ = 0;
  std::uint64_t saturation_seen_ = 0;
  std::uint8_t flags_ = 0;
};

Frame error_frame(ErrorCode code);

/// Blocking byte transport.
class ByteStream {
 public:
  virtual ~ByteStream() = default;
  /// Returns 0 at end of stream.
  virtual std::size_t read_some(std::span<std::uint8_t> buffer) = 0;
  virtual void write_all(std::span<const std::uint8_t> data) = 0;
};

/// Stream over POSIX file descriptors (pipes, sockets, stdio).
class FdStream : public ByteStream {
 public:
  FdStream(int read_fd, int write_fd, bool owns = false);
  ~FdStream() override;
  FdStream(const FdStream&) = delete;
  FdStream& operator=(const FdStream&) = delete;

  std::size_t read_some(std::span<std::uint8_t> buffer) override;
  void write_all(std::span<const std::uint8_t> data) override;

 private:
  int read_fd_;
  int write_fd_;
  bool owns_;
};

struct ServeStats {
  std::size_t requests = 0;
  std::size_t decode_errors = 0;
};

/// Request/response loop until end of stream. Corrupt frames are dropped
/// without a reply; the host is expected to retry.
ServeStats serve(VirtualDevice& device, ByteStream& stream);

/// Listens on `host:port` (TCP) or `unix:/path` and serves clients one at a
/// time. Returns after `max_sessions` sessions when given. `on_ready`, if
/// set, is called with the bound port (0 for unix sockets) once listening.
void serve_address(VirtualDevice& device, const std::string& address,
                   std::optional<std::size_t> max_sessions = std::nullopt,
                   const std::function<void(int)>& on_ready = {});

/// Opens a client connection to an address accepted by serve_address.
std::unique_ptr<FdStream> connect_address(const std::string& address);

/// Sends one request and waits for the reply frame.
/// Throws std::runtime_error if the stream ends first.
Frame transact(ByteStream& stream, const Frame& request);

}  // namespace chaostrng
