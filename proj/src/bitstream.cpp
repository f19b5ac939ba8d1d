#include "chaostrng/bitstream.hpp"

#include <stdexcept>

namespace chaostrng {

BitBuffer pack(std::span<const std::uint32_t> symbols, int m_bits) {
  if (m_bits < 1 || m_bits > 32) throw std::invalid_argument("symbol width must be in [1, 32]");
  BitBuffer buf;
  buf.symbol_width = m_bits;
  buf.bit_count = symbols.size() * static_cast<std::size_t>(m_bits);
  buf.bytes.assign((buf.bit_count + 7) / 8, 0);
  std::size_t pos = 0;
  for (const auto s : symbols) {
    if (m_bits < 32 && (s >> m_bits) != 0)
      throw std::invalid_argument("symbol " + std::to_string(s) + " does not fit in " +
                                  std::to_string(m_bits) + " bits");
    for (int b = 0; b < m_bits; ++b, ++pos)
      buf.bytes[pos / 8] |= static_cast<std::uint8_t>(((s >> b) & 1u) << (pos % 8));
  }
  return buf;
}

std::vector<std::uint32_t> unpack(const BitBuffer& buffer) {
  const auto w = static_cast<std::size_t>(buffer.symbol_width);
  std::vector<std::uint32_t> out(buffer.bit_count / w);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t s = 0;
    for (std::size_t b = 0; b < w; ++b) s |= static_cast<std::uint32_t>(buffer.bit(i * w + b)) << b;
    out[i] = s;
  }
  return out;
}

Bits symbols_to_bits(std::span<const std::uint32_t> symbols, int m_bits) {
  Bits bits;
  bits.reserve(symbols.size() * static_cast<std::size_t>(m_bits));
  for (const auto s : symbols)
    for (int b = 0; b < m_bits; ++b) bits.push_back(static_cast<std::uint8_t>((s >> b) & 1u));
  return bits;
}

std::vector<std::uint8_t> bits_to_bytes(std::span<const std::uint8_t> bits) {
  std::vector<std::uint8_t> bytes(bits.size() / 8, 0);
  for (std::size_t i = 0; i < bytes.size() * 8; ++i)
    bytes[i / 8] |= static_cast<std::uint8_t>((bits[i] & 1u) << (i % 8));
  return bytes;
}

Bits bytes_to_bits(std::span<const std::uint8_t> bytes) {
  Bits bits(bytes.size() * 8);
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = (bytes[i / 8] >> (i % 8)) & 1u;
  return bits;
}

Bits von_neumann(std::span<const std::uint8_t> bits) {
  Bits out;
  out.reserve(bits.size() / 4);
  for (std::size_t i = 0; i + 1 < bits.size(); i += 2)
    if (bits[i] != bits[i + 1]) out.push_back(bits[i]);
  return out;
}

Bits xor_decimate(std::span<const std::uint8_t> bits) {
  Bits out(bits.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(bits[2 * i] ^ bits[2 * i + 1]);
  return out;
}

PostProcess parse_post_process(std::string_view name) {
  if (name == "none") return PostProcess::none;
  if (name == "vn") return PostProcess::von_neumann;
  if (name == "xor") return PostProcess::xor_decimate;
  throw std::invalid_argument("unknown post-processing mode '" + std::string(name) +
                              "' (expected none, vn or xor)");
}

std::string to_string(PostProcess mode) {
  switch (mode) {
    case PostProcess::none: return "none";
    case PostProcess::von_neumann: return "vn";
    case PostProcess::xor_decimate: return "xor";
  }
  return "none";
}

Bits post_process(std::span<const std::uint8_t> bits, PostProcess mode) {
  switch (mode) {
    case PostProcess::von_neumann: return von_neumann(bits);
    case PostProcess::xor_decimate: return xor_decimate(bits);
    case PostProcess::none: break;
  }
  return Bits(bits.begin(), bits.end());
}

EntropySource::EntropySource(const CircuitConfig& cfg, const NonIdealities& ni, PostProcess mode,
                             std::optional<double> initial, FaultInjection fault)
    : sim_(cfg, ni, initial, fault), corrector_(mode) {}

TraceRecord EntropySource::raw_cycle() {
  const TraceRecord rec = sim_.step();
  if (observer_) observer_(rec);
  return rec;
}

void EntropySource::pump() {
  const int width = sim_.config().m_bits;
  const std::uint32_t s = extract_symbol(raw_cycle().m, width);
  for (int b = 0; b < width; ++b)
    if (auto out = corrector_.push(static_cast<std::uint8_t>((s >> b) & 1u))) pending_.push_back(*out);
}

Bits EntropySource::take(std::size_t count) {
  if (count > pending_.size()) throw std::out_of_range("not enough buffered bits");
  Bits result(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(count));
  pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(count));
  return result;
}

Bits EntropySource::next_bits(std::size_t count) {
  while (pending_.size() < count) pump();
  return take(count);
}

std::vector<std::uint8_t> EntropySource::next_bytes(std::size_t count) {
  return bits_to_bytes(next_bits(count * 8));
}

std::vector<std::uint32_t> EntropySource::next_symbols(std::size_t count) {
  std::vector<std::uint32_t> out(count);
  const int width = sim_.config().m_bits;
  for (auto& s : out) s = extract_symbol(raw_cycle().m, width);
  return out;
}

}  // namespace chaostrng
