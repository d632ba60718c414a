// Copyright 2026 The vnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Two-process interactive mode over TCP. Every protocol turn is one frame: a u32
// little-endian length, then a tag byte and the body. The verifier drives: it sends every
// challenge, and the prover never learns a challenge before committing to the message
// that precedes it.

#pragma once

#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "vnn/errors.hpp"
#include "vnn/session.hpp"

namespace vnn::tcp {

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      close();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }

  void close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

  void write_all(const std::uint8_t* p, std::size_t n) const {
    while (n > 0) {
      const ssize_t w = ::send(fd_, p, n, MSG_NOSIGNAL);
      if (w < 0 && errno == EINTR) continue;
      if (w <= 0) throw ChannelClosed(std::string("send failed: ") + std::strerror(errno));
      p += w;
      n -= static_cast<std::size_t>(w);
    }
  }

  void read_all(std::uint8_t* p, std::size_t n) const {
    while (n > 0) {
      const ssize_t r = ::recv(fd_, p, n, 0);
      if (r < 0 && errno == EINTR) continue;
      if (r == 0) throw ChannelClosed("peer closed the connection");
      if (r < 0) throw ChannelClosed(std::string("recv failed: ") + std::strerror(errno));
      p += r;
      n -= static_cast<std::size_t>(r);
    }
  }

 private:
  int fd_ = -1;
};

/// "host:port" split at the last colon.
inline std::pair<std::string, std::string> split_address(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon + 1 == addr.size()) throw FormatError("address must be host:port");
  return {addr.substr(0, colon), addr.substr(colon + 1)};
}

namespace detail {

struct AddrInfo {
  addrinfo* list = nullptr;
  AddrInfo(const std::string& host, const std::string& port, bool passive) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    if (passive) hints.ai_flags = AI_PASSIVE;
    if (int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), port.c_str(), &hints, &list); rc != 0)
      throw ChannelClosed(std::string("cannot resolve address: ") + ::gai_strerror(rc));
  }
  ~AddrInfo() { ::freeaddrinfo(list); }
  AddrInfo(const AddrInfo&) = delete;
  AddrInfo& operator=(const AddrInfo&) = delete;
};

}  // namespace detail

class Listener {
 public:
  /// Port "0" picks a free port; see port().
  explicit Listener(const std::string& address) {
    const auto [host, port] = split_address(address);
    detail::AddrInfo ai(host, port, true);
    for (addrinfo* a = ai.list; a != nullptr; a = a->ai_next) {
      Socket s(::socket(a->ai_family, a->ai_socktype, a->ai_protocol));
      if (!s.valid()) continue;
      const int one = 1;
      ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
      if (::bind(s.fd(), a->ai_addr, a->ai_addrlen) == 0 && ::listen(s.fd(), 1) == 0) {
        sock_ = std::move(s);
        return;
      }
    }
    throw ChannelClosed("cannot listen on " + address);
  }

  int port() const {
    sockaddr_storage ss{};
    socklen_t len = sizeof ss;
    ::getsockname(sock_.fd(), reinterpret_cast<sockaddr*>(&ss), &len);
    char serv[NI_MAXSERV];
    ::getnameinfo(reinterpret_cast<sockaddr*>(&ss), len, nullptr, 0, serv, sizeof serv, NI_NUMERICSERV);
    return std::stoi(serv);
  }

  Socket accept() const {
    for (;;) {
      const int fd = ::accept(sock_.fd(), nullptr, nullptr);
      if (fd >= 0) return Socket(fd);
      if (errno != EINTR) throw ChannelClosed(std::string("accept failed: ") + std::strerror(errno));
    }
  }

 private:
  Socket sock_;
};

inline Socket connect(const std::string& address) {
  const auto [host, port] = split_address(address);
  detail::AddrInfo ai(host, port, false);
  for (addrinfo* a = ai.list; a != nullptr; a = a->ai_next) {
    Socket s(::socket(a->ai_family, a->ai_socktype, a->ai_protocol));
    if (s.valid() && ::connect(s.fd(), a->ai_addr, a->ai_addrlen) == 0) return s;
  }
  throw ChannelClosed("cannot connect to " + address);
}

enum class Tag : std::uint8_t { kHello = 'H', kBegin = 'B', kMessage = 'M', kChallenge = 'C', kEnd = 'E', kVerdict = 'V' };

/// The verifier stopped early and sent its verdict instead of a challenge.
struct VerdictArrived {
  std::vector<std::uint8_t> body;
};

inline constexpr std::uint32_t kMaxFrame = 1u << 26;

/// Framed connection that counts the bytes it moves.
class FramedStream {
 public:
  explicit FramedStream(Socket sock) : sock_(std::move(sock)) {}

  void send(Tag tag, std::span<const std::uint8_t> body) {
    std::vector<std::uint8_t> frame(5);
    const auto len = static_cast<std::uint32_t>(body.size() + 1);
    for (int i = 0; i < 4; ++i) frame[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(len >> (8 * i));
    frame[4] = static_cast<std::uint8_t>(tag);
    frame.insert(frame.end(), body.begin(), body.end());
    sock_.write_all(frame.data(), frame.size());
    bytes_sent_ += frame.size();
  }

  /// Next frame body; throws MalformedTranscript when the tag is not `expected`.
  std::vector<std::uint8_t> receive(Tag expected) {
    auto [tag, body] = receive_any();
    if (tag != static_cast<std::uint8_t>(expected)) throw MalformedTranscript("unexpected frame type");
    return std::move(body);
  }

  std::pair<std::uint8_t, std::vector<std::uint8_t>> receive_any() {
    std::uint8_t hdr[4];
    sock_.read_all(hdr, 4);
    const std::uint32_t len = hdr[0] | (hdr[1] << 8) | (hdr[2] << 16) | (std::uint32_t{hdr[3]} << 24);
    if (len == 0 || len > kMaxFrame) throw MalformedTranscript("bad frame length");
    std::vector<std::uint8_t> body(len);
    sock_.read_all(body.data(), len);
    bytes_received_ += 4 + len;
    const std::uint8_t tag = body[0];
    body.erase(body.begin());
    return {tag, std::move(body)};
  }

  /// Half-closes and waits for the peer to hang up, so a final frame is not lost to a
  /// reset when unread data is still in flight.
  void drain() {
    ::shutdown(sock_.fd(), SHUT_WR);
    std::uint8_t buf[4096];
    while (::recv(sock_.fd(), buf, sizeof buf, 0) > 0) {
    }
  }

  std::size_t bytes_sent() const { return bytes_sent_; }
  std::size_t bytes_received() const { return bytes_received_; }

 private:
  Socket sock_;
  std::size_t bytes_sent_ = 0;
  std::size_t bytes_received_ = 0;
};

template <PrimeField F>
F decode_element(std::span<const std::uint8_t> body) {
  if (body.size() != F::kBytes) throw MalformedTranscript("challenge frame has the wrong size");
  return F::from_bytes(std::span<const std::uint8_t, F::kBytes>(body.data(), F::kBytes));
}

template <PrimeField F>
std::vector<F> decode_elements(std::span<const std::uint8_t> body) {
  if (body.size() % F::kBytes != 0) throw MalformedTranscript("message is not a whole number of elements");
  std::vector<F> out;
  for (std::size_t i = 0; i < body.size(); i += F::kBytes)
    out.push_back(F::from_bytes(std::span<const std::uint8_t, F::kBytes>(body.data() + i, F::kBytes)));
  return out;
}

template <PrimeField F>
class ProverChannelTcp {
 public:
  explicit ProverChannelTcp(FramedStream& stream) : stream_(stream) {}

  void begin_phase(PhaseKind kind) {
    const std::uint8_t k = static_cast<std::uint8_t>(kind);
    stream_.send(Tag::kBegin, std::span(&k, 1));
  }
  void send(std::span<const F> msg) { stream_.send(Tag::kMessage, element_bytes_of<F>(msg)); }
  F challenge() {
    auto [tag, body] = stream_.receive_any();
    if (tag == static_cast<std::uint8_t>(Tag::kVerdict)) throw VerdictArrived{std::move(body)};
    if (tag != static_cast<std::uint8_t>(Tag::kChallenge)) throw MalformedTranscript("unexpected frame type");
    return decode_element<F>(body);
  }
  void end_phase() { stream_.send(Tag::kEnd, {}); }

 private:
  FramedStream& stream_;
};

template <PrimeField F>
class VerifierChannelTcp {
 public:
  VerifierChannelTcp(FramedStream& stream, ChallengeSource& source) : stream_(stream), source_(source) {}

  void begin_phase(PhaseKind kind) {
    const auto body = stream_.receive(Tag::kBegin);
    if (body.size() != 1 || body[0] != static_cast<std::uint8_t>(kind)) throw MalformedTranscript("unexpected phase kind");
  }
  std::vector<F> receive(std::size_t n) {
    auto elems = decode_elements<F>(stream_.receive(Tag::kMessage));
    if (elems.size() != n) throw MalformedTranscript("message has the wrong number of elements");
    return elems;
  }
  F challenge() {
    const F c = source_.template challenge<F>();
    const auto b = c.to_bytes();
    stream_.send(Tag::kChallenge, b);
    return c;
  }
  void end_phase() {
    if (!stream_.receive(Tag::kEnd).empty()) throw MalformedTranscript("end frame has a body");
  }

 private:
  FramedStream& stream_;
  ChallengeSource& source_;
};

namespace detail {

inline std::vector<std::uint8_t> encode_verdict(const VerifyResult& r) {
  std::vector<std::uint8_t> out{static_cast<std::uint8_t>(r.accepted), static_cast<std::uint8_t>(r.phase)};
  out.insert(out.end(), r.reason.begin(), r.reason.end());
  return out;
}

inline VerifyResult decode_verdict(std::span<const std::uint8_t> b) {
  if (b.size() < 2 || b[1] > static_cast<std::uint8_t>(RejectPhase::kInputCheck)) throw MalformedTranscript("bad verdict frame");
  return {b[0] != 0, static_cast<RejectPhase>(b[1]), std::string(b.begin() + 2, b.end())};
}

}  // namespace detail

/// Prover side: announces the shape digest and z_last, answers every challenge, and
/// returns the verifier's verdict.
template <PrimeField F>
VerifyResult prove_remote(FramedStream& stream, const FieldModel<F>& model, const LayerTrace<F>& trace) {
  std::vector<std::uint8_t> hello{static_cast<std::uint8_t>(F::kId)};
  const auto digest = proof_shape(model, trace.input().cols()).digest();
  hello.insert(hello.end(), digest.begin(), digest.end());
  append_elements<F>(hello, trace.output().values());
  stream.send(Tag::kHello, hello);
  ProverChannelTcp<F> ch(stream);
  try {
    prove_layers<F>(model, trace, ch);
  } catch (const VerdictArrived& v) {
    return detail::decode_verdict(v.body);
  }
  return detail::decode_verdict(stream.receive(Tag::kVerdict));
}

struct RemoteVerdict {
  VerifyResult result;
  std::vector<std::uint8_t> z_last_bytes;
};

/// Verifier side: reads the claimed output, runs the protocol with fresh randomness and
/// sends the verdict back before returning it.
template <PrimeField F>
RemoteVerdict verify_remote(FramedStream& stream, const FieldModel<F>& model, const Matrix<F>& x,
                            ChallengeSource source = ChallengeSource::interactive(std::random_device{}())) {
  RemoteVerdict out;
  auto finish = [&](VerifyResult r) {
    stream.send(Tag::kVerdict, detail::encode_verdict(r));
    stream.drain();
    out.result = std::move(r);
    return out;
  };
  const auto hello = stream.receive(Tag::kHello);
  const std::size_t rows = model.output_dim(), cols = x.cols();
  if (hello.size() != 1 + 32 + rows * cols * F::kBytes)
    return finish(VerifyResult::reject(RejectPhase::kMalformed, "hello frame has the wrong size"));
  if (hello[0] != static_cast<std::uint8_t>(F::kId))
    return finish(VerifyResult::reject(RejectPhase::kMalformed, "prover uses a different modulus"));
  const auto digest = proof_shape(model, cols).digest();
  if (!std::equal(digest.begin(), digest.end(), hello.begin() + 1))
    return finish(VerifyResult::reject(RejectPhase::kMalformed, "shape digest does not match the model and batch"));
  out.z_last_bytes.assign(hello.begin() + 33, hello.end());
  Matrix<F> z_last;
  try {
    z_last = Matrix<F>(rows, cols, decode_elements<F>(out.z_last_bytes));
  } catch (const MalformedTranscript& e) {
    return finish(VerifyResult::reject(RejectPhase::kMalformed, e.what()));
  }
  VerifierChannelTcp<F> ch(stream, source);
  return finish(verify_layers<F>(model, x, z_last, ch));
}

}  // namespace vnn::tcp
