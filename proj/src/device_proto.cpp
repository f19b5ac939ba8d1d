#include "chaostrng/device_proto.hpp"

#include <bit>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <stdexcept>
#include <string_view>
#include <system_error>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

namespace chaostrng {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}
  std::uint64_t uint(int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint(8)); }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::uint16_t read_u16(std::span<const std::uint8_t> p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

[[noreturn]] void throw_errno(const std::string& what) {
  throw std::system_error(errno, std::generic_category(), what);
}

struct Endpoint {
  bool unix_socket = false;
  std::string path;
  std::string host;
  std::string port;
};

Endpoint parse_address(const std::string& address) {
  Endpoint ep;
  constexpr std::string_view kUnix = "unix:";
  if (address.rfind(kUnix, 0) == 0) {
    ep.unix_socket = true;
    ep.path = address.substr(kUnix.size());
    if (ep.path.empty() || ep.path.size() >= sizeof(sockaddr_un::sun_path))
      throw std::invalid_argument("bad unix socket path in '" + address + "'");
    return ep;
  }
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon + 1 == address.size())
    throw std::invalid_argument("address must be host:port or unix:/path, got '" + address + "'");
  ep.host = address.substr(0, colon);
  ep.port = address.substr(colon + 1);
  if (ep.host.empty()) ep.host = "127.0.0.1";
  return ep;
}

addrinfo* resolve(const Endpoint& ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  if (const int rc = getaddrinfo(ep.host.c_str(), ep.port.c_str(), &hints, &res); rc != 0)
    throw std::runtime_error("cannot resolve " + ep.host + ":" + ep.port + ": " + gai_strerror(rc));
  return res;
}

}  // namespace

std::string to_string(FrameError e) {
  switch (e) {
    case FrameError::bad_sof: return "BAD_SOF";
    case FrameError::bad_length: return "BAD_LENGTH";
    case FrameError::bad_crc: return "BAD_CRC";
    case FrameError::truncated: return "TRUNCATED";
  }
  return "UNKNOWN";
}

std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> data) {
  std::uint16_t crc = 0xFFFF;
  for (const auto byte : data) {
    crc ^= static_cast<std::uint16_t>(byte << 8);
    for (int i = 0; i < 8; ++i)
      crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021)
                           : static_cast<std::uint16_t>(crc << 1);
  }
  return crc;
}

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
  if (frame.payload.size() > kMaxPayload)
    throw std::length_error("frame payload of " + std::to_string(frame.payload.size()) +
                            " octets exceeds 4096");
  std::vector<std::uint8_t> out;
  out.reserve(frame.payload.size() + kFrameOverhead);
  out.push_back(kSof);
  out.push_back(frame.cmd);
  put_u16(out, static_cast<std::uint16_t>(frame.payload.size()));
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
  const auto crc = crc16_ccitt_false(std::span(out).subspan(1));
  out.push_back(static_cast<std::uint8_t>(crc >> 8));
  out.push_back(static_cast<std::uint8_t>(crc & 0xFF));
  return out;
}

DecodeResult decode_frame(std::span<const std::uint8_t> data) {
  if (data.empty()) return FrameError::truncated;
  if (data[0] != kSof) return FrameError::bad_sof;
  if (data.size() < 4) return FrameError::truncated;
  const std::size_t len = read_u16(data.subspan(2, 2));
  if (len > kMaxPayload) return FrameError::bad_length;
  if (data.size() < len + kFrameOverhead) return FrameError::truncated;
  const auto crc = crc16_ccitt_false(data.subspan(1, len + 3));
  const auto wire = static_cast<std::uint16_t>((data[len + 4] << 8) | data[len + 5]);
  if (crc != wire) return FrameError::bad_crc;
  return Frame{data[1], {data.begin() + 4, data.begin() + 4 + static_cast<std::ptrdiff_t>(len)}};
}

void FrameDecoder::feed(std::span<const std::uint8_t> data) {
  buffer_.insert(buffer_.end(), data.begin(), data.end());
}

std::optional<DecodeResult> FrameDecoder::next() {
  while (!buffer_.empty() && buffer_.front() != kSof) {
    buffer_.pop_front();
    ++skipped_;
  }
  if (buffer_.size() < 4) return std::nullopt;
  const std::size_t len = buffer_[2] | (buffer_[3] << 8);
  if (len > kMaxPayload) {
    buffer_.pop_front();
    return FrameError::bad_length;
  }
  if (buffer_.size() < len + kFrameOverhead) return std::nullopt;
  const std::vector<std::uint8_t> candidate(
      buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(len + kFrameOverhead));
  auto result = decode_frame(candidate);
  if (std::holds_alternative<Frame>(result))
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(len + kFrameOverhead));
  else
    buffer_.pop_front();
  return result;
}

std::vector<DecodeResult> FrameDecoder::finish() {
  std::vector<DecodeResult> out;
  bool reported_truncation = false;
  for (;;) {
    while (auto r = next()) out.push_back(std::move(*r));
    if (buffer_.empty()) break;
    if (!reported_truncation) {
      out.push_back(FrameError::truncated);
      reported_truncation = true;
    }
    buffer_.pop_front();
  }
  return out;
}

std::vector<std::uint8_t> DeviceStatus::serialize() const {
  std::vector<std::uint8_t> out;
  out.push_back(static_cast<std::uint8_t>(circuit.n_hat));
  out.push_back(static_cast<std::uint8_t>(circuit.n));
  out.push_back(static_cast<std::uint8_t>(circuit.m_bits));
  out.push_back(static_cast<std::uint8_t>(circuit.n_tilde));
  put_u16(out, static_cast<std::uint16_t>(circuit.k));
  put_f64(out, circuit.v_ref);
  put_f64(out, circuit.v_b);
  put_u64(out, seed);
  out.push_back(static_cast<std::uint8_t>(post));
  put_u64(out, cycle);
  put_u32(out, buffered_bits);
  out.push_back(tamper_flags);
  return out;
}

std::optional<DeviceStatus> DeviceStatus::parse(std::span<const std::uint8_t> payload) {
  if (payload.size() != 44) return std::nullopt;
  Reader r(payload);
  DeviceStatus s;
  s.circuit.n_hat = static_cast<int>(r.uint(1));
  s.circuit.n = static_cast<int>(r.uint(1));
  s.circuit.m_bits = static_cast<int>(r.uint(1));
  s.circuit.n_tilde = static_cast<int>(r.uint(1));
  s.circuit.k = static_cast<int>(r.uint(2));
  s.circuit.v_ref = r.f64();
  s.circuit.v_b = r.f64();
  s.seed = r.uint(8);
  const auto post = r.uint(1);
  if (post > 2) return std::nullopt;
  s.post = static_cast<PostProcess>(post);
  s.cycle = r.uint(8);
  s.buffered_bits = static_cast<std::uint32_t>(r.uint(4));
  s.tamper_flags = static_cast<std::uint8_t>(r.uint(1));
  return s;
}

std::vector<std::uint8_t> DiagResult::serialize() const {
  std::vector<std::uint8_t> out;
  out.push_back(flags);
  put_f64(out, branch_score);
  put_f64(out, max_state_occupancy);
  put_u32(out, out_of_range);
  return out;
}

std::optional<DiagResult> DiagResult::parse(std::span<const std::uint8_t> payload) {
  if (payload.size() != 21) return std::nullopt;
  Reader r(payload);
  DiagResult d;
  d.flags = static_cast<std::uint8_t>(r.uint(1));
  d.branch_score = r.f64();
  d.max_state_occupancy = r.f64();
  d.out_of_range = static_cast<std::uint32_t>(r.uint(4));
  return d;
}

Frame error_frame(ErrorCode code) {
  return Frame{static_cast<std::uint8_t>(Command::error), {static_cast<std::uint8_t>(code)}};
}

VirtualDevice::VirtualDevice(RunSettings settings) : settings_(std::move(settings)) { restart(); }

void VirtualDevice::restart() {
  source_ = std::make_unique<EntropySource>(settings_.circuit, settings_.noise, settings_.post,
                                            std::nullopt, fault_);
  source_->set_observer([this](const TraceRecord& rec) { observe(rec); });
  recent_.clear();
  recent_saturation_ = 0;
  saturation_seen_ = 0;
  flags_ = 0;
}

void VirtualDevice::observe(const TraceRecord& rec) {
  const auto sat = source_->simulator().state().saturation_events;
  if (recent_.size() == kMaxHealthCycles) recent_.erase(recent_.begin(), recent_.begin() + kMaxHealthCycles / 2);
  recent_.push_back(rec);
  recent_saturation_ += sat - saturation_seen_;
  saturation_seen_ = sat;
}

void VirtualDevice::inject_fault(const FaultInjection& fault) {
  fault_ = fault;
  source_->simulator().set_fault(fault);
}

DeviceStatus VirtualDevice::status() const {
  DeviceStatus s;
  s.circuit = settings_.circuit;
  s.seed = settings_.noise.seed;
  s.post = settings_.post;
  s.cycle = source_->simulator().state().cycle;
  s.buffered_bits = static_cast<std::uint32_t>(source_->buffered_bits());
  s.tamper_flags = flags_;
  return s;
}

Frame VirtualDevice::handle(const Frame& request) {
  switch (static_cast<Command>(request.cmd)) {
    case Command::get_random: return on_get_random(request);
    case Command::get_status:
      return Frame{request.cmd, status().serialize()};
    case Command::get_raw: return on_get_raw(request);
    case Command::set_config: return on_set_config(request);
    case Command::diag: return on_diag();
    case Command::error: break;
  }
  return error_frame(ErrorCode::unknown_command);
}

Frame VirtualDevice::on_get_random(const Frame& request) {
  if (request.payload.size() != 2) return error_frame(ErrorCode::bad_params);
  const std::size_t count = read_u16(request.payload);
  if (count > kMaxPayload) return error_frame(ErrorCode::bad_params);
  const std::size_t bits = count * 8;
  while (source_->buffered_bits() < bits || recent_.size() < kMinHealthCycles) source_->pump();
  flags_ = tamper_check(recent_, settings_.circuit, recent_saturation_).flags;
  recent_.clear();
  recent_saturation_ = 0;
  if (flags_ != 0) {
    source_->discard();
    return error_frame(ErrorCode::tamper_lockout);
  }
  return Frame{request.cmd, bits_to_bytes(source_->take(bits))};
}

Frame VirtualDevice::on_get_raw(const Frame& request) {
  if (request.payload.size() != 2) return error_frame(ErrorCode::bad_params);
  const std::size_t count = read_u16(request.payload);
  if (count * 2 > kMaxPayload) return error_frame(ErrorCode::bad_params);
  std::vector<std::uint8_t> out;
  out.reserve(count * 2);
  for (std::size_t i = 0; i < count; ++i)
    put_u16(out, static_cast<std::uint16_t>(source_->raw_cycle().m_hat));
  return Frame{request.cmd, std::move(out)};
}

Frame VirtualDevice::on_set_config(const Frame& request) {
  RunSettings next;
  try {
    next = parse_settings(
        std::string_view(reinterpret_cast<const char*>(request.payload.data()), request.payload.size()));
    if (!validate_config(next.circuit, next.validation).ok()) return error_frame(ErrorCode::bad_params);
    validate(next.noise);
  } catch (const std::exception&) {
    return error_frame(ErrorCode::bad_params);
  }
  settings_ = std::move(next);
  restart();
  return Frame{request.cmd, {}};
}

Frame VirtualDevice::on_diag() {
  std::vector<TraceRecord> trace;
  trace.reserve(kDiagCycles);
  const auto sat_before = source_->simulator().state().saturation_events;
  for (std::size_t i = 0; i < kDiagCycles; ++i) trace.push_back(source_->raw_cycle());
  const auto sat = source_->simulator().state().saturation_events - sat_before;
  const auto report = tamper_check(trace, settings_.circuit, sat);
  flags_ = report.flags;
  DiagResult d{report.flags, report.branch_score, report.max_state_occupancy,
               static_cast<std::uint32_t>(report.out_of_range)};
  return Frame{static_cast<std::uint8_t>(Command::diag), d.serialize()};
}

FdStream::FdStream(int read_fd, int write_fd, bool owns)
    : read_fd_(read_fd), write_fd_(write_fd), owns_(owns) {}

FdStream::~FdStream() {
  if (!owns_) return;
  ::close(read_fd_);
  if (write_fd_ != read_fd_) ::close(write_fd_);
}

std::size_t FdStream::read_some(std::span<std::uint8_t> buffer) {
  for (;;) {
    const auto n = ::read(read_fd_, buffer.data(), buffer.size());
    if (n >= 0) return static_cast<std::size_t>(n);
    if (errno == EINTR) continue;
    if (errno == ECONNRESET) return 0;
    throw_errno("read");
  }
}

void FdStream::write_all(std::span<const std::uint8_t> data) {
  while (!data.empty()) {
    const auto n = ::write(write_fd_, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("write");
    }
    data = data.subspan(static_cast<std::size_t>(n));
  }
}

ServeStats serve(VirtualDevice& device, ByteStream& stream) {
  ServeStats stats;
  FrameDecoder decoder;
  std::vector<std::uint8_t> chunk(4096);
  for (;;) {
    const auto n = stream.read_some(chunk);
    if (n == 0) break;
    decoder.feed(std::span(chunk).first(n));
    while (auto result = decoder.next()) {
      if (const auto* frame = std::get_if<Frame>(&*result)) {
        ++stats.requests;
        stream.write_all(encode_frame(device.handle(*frame)));
      } else {
        ++stats.decode_errors;
      }
    }
  }
  return stats;
}

void serve_address(VirtualDevice& device, const std::string& address,
                   std::optional<std::size_t> max_sessions, const std::function<void(int)>& on_ready) {
  std::signal(SIGPIPE, SIG_IGN);
  const Endpoint ep = parse_address(address);
  int fd = -1;
  int bound_port = 0;
  if (ep.unix_socket) {
    fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (fd < 0) throw_errno("socket");
    sockaddr_un sa{};
    sa.sun_family = AF_UNIX;
    std::strncpy(sa.sun_path, ep.path.c_str(), sizeof(sa.sun_path) - 1);
    ::unlink(ep.path.c_str());
    if (::bind(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) < 0) {
      ::close(fd);
      throw_errno("bind " + ep.path);
    }
  } else {
    addrinfo* res = resolve(ep, true);
    fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd < 0) {
      freeaddrinfo(res);
      throw_errno("socket");
    }
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    const int rc = ::bind(fd, res->ai_addr, res->ai_addrlen);
    freeaddrinfo(res);
    if (rc < 0) {
      ::close(fd);
      throw_errno("bind " + address);
    }
    sockaddr_storage ss{};
    socklen_t len = sizeof(ss);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&ss), &len);
    bound_port = ss.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&ss)->sin6_port)
                                          : ntohs(reinterpret_cast<sockaddr_in*>(&ss)->sin_port);
  }
  if (::listen(fd, 4) < 0) {
    ::close(fd);
    throw_errno("listen");
  }
  if (on_ready) on_ready(bound_port);

  for (std::size_t sessions = 0; !max_sessions || sessions < *max_sessions; ++sessions) {
    const int client = ::accept(fd, nullptr, nullptr);
    if (client < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw_errno("accept");
    }
    FdStream stream(client, client, true);
    try {
      serve(device, stream);
    } catch (const std::system_error&) {
      // client went away mid-reply; keep serving the next one
    }
  }
  ::close(fd);
  if (ep.unix_socket) ::unlink(ep.path.c_str());
}

std::unique_ptr<FdStream> connect_address(const std::string& address) {
  const Endpoint ep = parse_address(address);
  int fd = -1;
  if (ep.unix_socket) {
    fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (fd < 0) throw_errno("socket");
    sockaddr_un sa{};
    sa.sun_family = AF_UNIX;
    std::strncpy(sa.sun_path, ep.path.c_str(), sizeof(sa.sun_path) - 1);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) < 0) {
      ::close(fd);
      throw_errno("connect " + ep.path);
    }
  } else {
    addrinfo* res = resolve(ep, false);
    fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd < 0 || ::connect(fd, res->ai_addr, res->ai_addrlen) < 0) {
      freeaddrinfo(res);
      if (fd >= 0) ::close(fd);
      throw_errno("connect " + address);
    }
    freeaddrinfo(res);
  }
  return std::make_unique<FdStream>(fd, fd, true);
}

Frame transact(ByteStream& stream, const Frame& request) {
  stream.write_all(encode_frame(request));
  FrameDecoder decoder;
  std::vector<std::uint8_t> chunk(4096);
  for (;;) {
    const auto n = stream.read_some(chunk);
    if (n == 0) throw std::runtime_error("device closed the stream before replying");
    decoder.feed(std::span(chunk).first(n));
    while (auto result = decoder.next())
      if (auto* frame = std::get_if<Frame>(&*result)) return std::move(*frame);
  }
}

}  // namespace chaostrng
