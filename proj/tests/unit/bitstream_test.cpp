#include "chaostrng/bitstream.hpp"

#include <numeric>
#include <random>

#include <gtest/gtest.h>

namespace chaostrng {
namespace {

TEST(SymbolTest, LowBitsOfCode) {
  EXPECT_EQ(extract_symbol(5, 2), 1u);
  EXPECT_EQ(extract_symbol(4, 2), 0u);
  EXPECT_EQ(extract_symbol(7, 3), 7u);
  EXPECT_EQ(extract_symbol(13, 1), 1u);
}

TEST(PackTest, LsbFirstLayout) {
  const std::vector<std::uint32_t> symbols = {1, 2, 3, 0};
  const auto buf = pack(symbols, 2);
  EXPECT_EQ(buf.bit_count, 8u);
  ASSERT_EQ(buf.bytes.size(), 1u);
  EXPECT_EQ(buf.bytes[0], 0x39);  // 00 11 10 01
  EXPECT_EQ(unpack(buf), symbols);
}

TEST(PackTest, PartialByte) {
  const std::vector<std::uint32_t> symbols = {5, 6, 7};
  const auto buf = pack(symbols, 3);
  EXPECT_EQ(buf.bit_count, 9u);
  ASSERT_EQ(buf.bytes.size(), 2u);
  EXPECT_EQ(buf.bytes[0], 0xF5);  // 101, 011 then the low bits of 111
  EXPECT_EQ(buf.bytes[1], 0x01);
  EXPECT_EQ(unpack(buf), symbols);
}

TEST(PackTest, RoundTripProperty) {
  std::mt19937 rng(1);
  for (int w = 1; w <= 16; ++w) {
    std::vector<std::uint32_t> symbols(257);
    for (auto& s : symbols) s = rng() & ((1u << w) - 1u);
    const auto buf = pack(symbols, w);
    EXPECT_EQ(unpack(buf), symbols) << w;
    EXPECT_EQ(bits_to_bytes(symbols_to_bits(symbols, w)),
              std::vector<std::uint8_t>(buf.bytes.begin(), buf.bytes.begin() + buf.bit_count / 8));
  }
}

TEST(PackTest, RejectsOversizeSymbol) {
  const std::vector<std::uint32_t> symbols = {4};
  EXPECT_THROW(pack(symbols, 2), std::invalid_argument);
  EXPECT_THROW(pack(symbols, 0), std::invalid_argument);
}

TEST(BytesTest, RoundTrip) {
  const std::vector<std::uint8_t> bytes = {0x00, 0xA5, 0xFF, 0x01};
  const auto bits = bytes_to_bits(bytes);
  EXPECT_EQ(bits[8], 1);
  EXPECT_EQ(bits[9], 0);
  EXPECT_EQ(bits[24], 1);
  EXPECT_EQ(bits_to_bytes(bits), bytes);
  Bits partial(11, 1);
  EXPECT_EQ(bits_to_bytes(partial), std::vector<std::uint8_t>{0xFF});
}

TEST(VonNeumannTest, Examples) {
  EXPECT_EQ(von_neumann(Bits{0, 1, 1, 0, 0, 0, 1, 1}), (Bits{0, 1}));
  EXPECT_EQ(von_neumann(Bits{1, 0, 1}), (Bits{1}));  // odd tail dropped
  EXPECT_TRUE(von_neumann(Bits{}).empty());
}

TEST(VonNeumannTest, RemovesBias) {
  std::mt19937_64 rng(10);
  std::bernoulli_distribution biased(0.8);
  Bits in(400000);
  for (auto& b : in) b = biased(rng);
  const auto out = von_neumann(in);
  // Expected yield is 2 p (1 - p) per pair: 0.32 * 200000 = 64000.
  EXPECT_NEAR(static_cast<double>(out.size()), 64000.0, 1000.0);
  const double ones = std::accumulate(out.begin(), out.end(), 0.0);
  EXPECT_NEAR(ones / out.size(), 0.5, 0.01);
}

TEST(XorTest, Examples) {
  EXPECT_EQ(xor_decimate(Bits{0, 1, 1, 1, 0, 0, 1}), (Bits{1, 0, 0}));
}

TEST(XorTest, ReducesBias) {
  std::mt19937_64 rng(11);
  std::bernoulli_distribution biased(0.6);
  Bits in(400000);
  for (auto& b : in) b = biased(rng);
  const auto out = xor_decimate(in);
  ASSERT_EQ(out.size(), 200000u);
  const double ones = std::accumulate(out.begin(), out.end(), 0.0) / out.size();
  EXPECT_NEAR(ones, 0.48, 0.005);  // 2 p (1 - p)
}

TEST(PostProcessTest, NamesAndDispatch) {
  EXPECT_EQ(parse_post_process("vn"), PostProcess::von_neumann);
  EXPECT_EQ(parse_post_process("xor"), PostProcess::xor_decimate);
  EXPECT_EQ(parse_post_process("none"), PostProcess::none);
  EXPECT_THROW(parse_post_process("sha"), std::invalid_argument);
  for (const auto mode : {PostProcess::none, PostProcess::von_neumann, PostProcess::xor_decimate})
    EXPECT_EQ(parse_post_process(to_string(mode)), mode);
  const Bits in = {1, 1, 0, 1, 1, 0};
  EXPECT_EQ(post_process(in, PostProcess::none), in);
  EXPECT_EQ(post_process(in, PostProcess::von_neumann), (Bits{0, 1}));
  EXPECT_EQ(post_process(in, PostProcess::xor_decimate), (Bits{0, 1, 1}));
}

TEST(StreamCorrectorTest, MatchesBatchCorrectors) {
  std::mt19937 rng(3);
  Bits in(10001);
  for (auto& b : in) b = rng() & 1u;
  for (const auto mode : {PostProcess::none, PostProcess::von_neumann, PostProcess::xor_decimate}) {
    StreamCorrector c(mode);
    Bits out;
    for (const auto b : in)
      if (auto o = c.push(b)) out.push_back(*o);
    EXPECT_EQ(out, post_process(in, mode)) << to_string(mode);
  }
}

TEST(EntropySourceTest, RawBitsFollowSymbols) {
  const auto cfg = prototype_config();
  const auto ni = NonIdealities::defaults(cfg, 21);
  EntropySource a(cfg, ni, PostProcess::none);
  EntropySource b(cfg, ni, PostProcess::none);
  const auto symbols = a.next_symbols(1000);
  EXPECT_EQ(b.next_bits(2000), symbols_to_bits(symbols, 2));
}

TEST(EntropySourceTest, CorrectedStreamMatchesBatch) {
  const auto cfg = prototype_config();
  const auto ni = NonIdealities::defaults(cfg, 22);
  EntropySource raw(cfg, ni, PostProcess::none);
  EntropySource vn(cfg, ni, PostProcess::von_neumann);
  const auto bits = raw.next_bits(20000);
  const auto expected = von_neumann(bits);
  const auto got = vn.next_bits(expected.size());
  EXPECT_EQ(got, expected);
}

TEST(EntropySourceTest, BytesAndBuffer) {
  const auto cfg = prototype_config();
  EntropySource src(cfg, NonIdealities::defaults(cfg, 23), PostProcess::xor_decimate);
  EXPECT_EQ(src.next_bytes(16).size(), 16u);
  src.pump();
  src.pump();
  EXPECT_EQ(src.buffered_bits(), 2u);
  EXPECT_THROW(src.take(3), std::out_of_range);
  src.discard();
  EXPECT_EQ(src.buffered_bits(), 0u);
}

TEST(EntropySourceTest, ObserverSeesEveryCycle) {
  const auto cfg = prototype_config();
  EntropySource src(cfg, NonIdealities::defaults(cfg, 24), PostProcess::von_neumann);
  std::uint64_t seen = 0;
  src.set_observer([&](const TraceRecord& r) { EXPECT_EQ(r.cycle, seen++); });
  src.next_bits(100);
  src.raw_cycle();
  EXPECT_EQ(seen, src.simulator().state().cycle);
}

}  // namespace
}  // namespace chaostrng
