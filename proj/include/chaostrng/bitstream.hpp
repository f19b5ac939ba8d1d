#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chaostrng/mixed_signal_sim.hpp"

namespace chaostrng {

/// One bit per element, values 0 or 1.
using Bits = std::vector<std::uint8_t>;

/// Symbols packed LSB-first: symbol i occupies bits [i*w, (i+1)*w) of the
/// buffer, bit j of the buffer lives in bytes[j / 8] at position j % 8.
struct BitBuffer {
  std::vector<std::uint8_t> bytes;
  std::size_t bit_count = 0;
  int symbol_width = 1;

  std::uint8_t bit(std::size_t i) const { return (bytes[i / 8] >> (i % 8)) & 1u; }
};

/// m mod 2^m_bits.
inline std::uint32_t extract_symbol(std::uint32_t m, int m_bits) {
  return m & ((1u << m_bits) - 1u);
}

/// Throws std::invalid_argument if a symbol does not fit in m_bits.
BitBuffer pack(std::span<const std::uint32_t> symbols, int m_bits);
std::vector<std::uint32_t> unpack(const BitBuffer& buffer);

/// Each symbol expanded LSB first.
Bits symbols_to_bits(std::span<const std::uint32_t> symbols, int m_bits);

/// Whole bytes only; a trailing partial byte is dropped.
std::vector<std::uint8_t> bits_to_bytes(std::span<const std::uint8_t> bits);
Bits bytes_to_bits(std::span<const std::uint8_t> bytes);

/// Non-overlapping pairs: 01 -> 0, 10 -> 1, 00 and 11 discarded.
Bits von_neumann(std::span<const std::uint8_t> bits);
/// Non-overlapping pairs b0^b1, b2^b3, ...
Bits xor_decimate(std::span<const std::uint8_t> bits);

enum class PostProcess { none, von_neumann, xor_decimate };

/// Accepts "none", "vn" and "xor"; throws std::invalid_argument otherwise.
PostProcess parse_post_process(std::string_view name);
std::string to_string(PostProcess mode);

Bits post_process(std::span<const std::uint8_t> bits, PostProcess mode);

/// Bit-at-a-time version of the correctors for streaming use.
class StreamCorrector {
 public:
  explicit StreamCorrector(PostProcess mode) : mode_(mode) {}

  std::optional<std::uint8_t> push(std::uint8_t bit) {
    if (mode_ == PostProcess::none) return bit;
    if (!pending_) {
      pending_ = bit;
      return std::nullopt;
    }
    const std::uint8_t first = *pending_;
    pending_.reset();
    if (mode_ == PostProcess::xor_decimate) return static_cast<std::uint8_t>(first ^ bit);
    if (first == bit) return std::nullopt;
    return first;
  }
  PostProcess mode() const { return mode_; }

 private:
  PostProcess mode_;
  std::optional<std::uint8_t> pending_;
};

/// Loop simulator followed by symbol extraction and an optional corrector.
class EntropySource {
 public:
  using CycleObserver = std::function<void(const TraceRecord&)>;

  EntropySource(const CircuitConfig& cfg, const NonIdealities& ni, PostProcess mode,
                std::optional<double> initial = std::nullopt, FaultInjection fault = {});

  /// Runs the loop until `count` output bits are available and returns them.
  Bits next_bits(std::size_t count);
  /// 8 * count output bits packed LSB-first.
  std::vector<std::uint8_t> next_bytes(std::size_t count);
  /// Raw symbols straight from m, no correction.
  std::vector<std::uint32_t> next_symbols(std::size_t count);

  /// One loop cycle whose symbol goes through the corrector into the buffer.
  void pump();
  /// One loop cycle whose symbol is not used for output (diagnostics).
  TraceRecord raw_cycle();
  /// Removes and returns `count` buffered bits; throws std::out_of_range
  /// if fewer are buffered.
  Bits take(std::size_t count);
  /// Drops all buffered output bits.
  void discard() { pending_.clear(); }

  void set_observer(CycleObserver observer) { observer_ = std::move(observer); }
  LoopSimulator& simulator() { return sim_; }
  const LoopSimulator& simulator() const { return sim_; }
  std::size_t buffered_bits() const { return pending_.size(); }

 private:
  LoopSimulator sim_;
  StreamCorrector corrector_;
  Bits pending_;
  CycleObserver observer_;
};

}  // namespace chaostrng
