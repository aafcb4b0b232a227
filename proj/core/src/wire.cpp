/*
 * Copyright (C) 2026 Codecap Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "codecap/wire.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cstring>

#include "codecap/error.hpp"

namespace codecap {

namespace {

constexpr std::string_view kFramePrefix = "CODECAP/1 ";
constexpr std::string_view kAuthScheme = "Codecaps ";
constexpr std::string_view kEndMarker = "-----END CODECAP CERT-----";
constexpr std::string_view kBeginFolded = "-----BEGIN CODECAP CERT-----";
constexpr std::string_view kBeginSpaced = "-----BEGIN\nCODECAP\nCERT-----";
constexpr std::string_view kEndSpaced = "-----END\nCODECAP\nCERT-----";
constexpr std::size_t kMaxLineBytes = 64 * 1024;
constexpr std::size_t kSessionTokenBytes = 16;

constexpr std::string_view kServerTranscriptLabel = "codecap-handshake-server";
constexpr std::string_view kClientTranscriptLabel = "codecap-handshake-client";

void replace_all(std::string& text, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
}

std::string sanitize_header_value(std::string_view value) {
    std::string out(value);
    for (char& c : out) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return out;
}

// Line-oriented cursor over a complete frame; every line must end in '\n'.
class Cursor {
public:
    explicit Cursor(std::string_view text) : text_(text) {}

    std::string_view line() {
        auto nl = text_.find('\n', pos_);
        if (nl == std::string_view::npos) throw Error("truncated frame");
        auto out = text_.substr(pos_, nl - pos_);
        pos_ = nl + 1;
        return out;
    }

    bool at_end() const { return pos_ >= text_.size(); }
    std::string_view rest() const { return text_.substr(pos_); }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

std::map<std::string, std::string> decode_headers(Cursor& cursor) {
    std::map<std::string, std::string> headers;
    for (;;) {
        std::string_view line = cursor.line();
        if (line.empty()) return headers;
        auto colon = line.find(": ");
        if (colon == std::string_view::npos) throw Error("malformed header line");
        headers.emplace(std::string(line.substr(0, colon)), std::string(line.substr(colon + 2)));
    }
}

void encode_headers(std::string& out, const std::map<std::string, std::string>& headers,
                    std::size_t payload_size) {
    for (const auto& [name, value] : headers) {
        if (name == "Content-Length") continue;
        out += name;
        out += ": ";
        out += sanitize_header_value(value);
        out.push_back('\n');
    }
    if (payload_size > 0) {
        out += "Content-Length: ";
        out += std::to_string(payload_size);
        out.push_back('\n');
    }
    out.push_back('\n');
}

Bytes decode_payload(Cursor& cursor, const std::map<std::string, std::string>& headers) {
    std::size_t expected = 0;
    if (auto it = headers.find("Content-Length"); it != headers.end()) {
        auto [ptr, ec] = std::from_chars(it->second.data(),
                                         it->second.data() + it->second.size(), expected);
        if (ec != std::errc() || ptr != it->second.data() + it->second.size()) {
            throw Error("bad Content-Length");
        }
    }
    std::string_view rest = cursor.rest();
    if (rest.size() != expected) throw Error("payload length mismatch");
    return Bytes(rest.begin(), rest.end());
}

std::string transcript(std::string_view label, std::string_view client_pub,
                       std::string_view client_nonce, std::string_view server_pub,
                       std::string_view server_nonce) {
    std::string out(label);
    for (auto part : {client_pub, client_nonce, server_pub, server_nonce}) {
        out.push_back('\n');
        out.append(part);
    }
    return out;
}

Bytes to_bytes(std::string_view text) { return Bytes(text.begin(), text.end()); }

std::vector<std::string> split_words(std::string_view line) {
    std::vector<std::string> words;
    std::size_t start = 0;
    while (start < line.size()) {
        auto space = line.find(' ', start);
        if (space == std::string_view::npos) space = line.size();
        if (space > start) words.emplace_back(line.substr(start, space - start));
        start = space + 1;
    }
    return words;
}

// Blocking-socket helpers; all throw Error on I/O failure.

void write_all(int fd, std::string_view data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
        ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n <= 0) throw Error("socket write failed");
        sent += static_cast<std::size_t>(n);
    }
}

std::string read_line_fd(int fd) {
    std::string line;
    for (;;) {
        char c = 0;
        ssize_t n = ::recv(fd, &c, 1, 0);
        if (n <= 0) throw Error("connection closed during handshake");
        if (c == '\n') return line;
        line.push_back(c);
        if (line.size() > kMaxLineBytes) throw Error("handshake line too long");
    }
}

std::string read_to_eof(int fd) {
    std::string data;
    char buffer[4096];
    for (;;) {
        ssize_t n = ::recv(fd, buffer, sizeof(buffer), 0);
        if (n < 0) throw Error("socket read failed");
        if (n == 0) return data;
        data.append(buffer, static_cast<std::size_t>(n));
    }
}

class FdGuard {
public:
    explicit FdGuard(int fd) : fd_(fd) {}
    ~FdGuard() {
        if (fd_ >= 0) ::close(fd_);
    }
    FdGuard(const FdGuard&) = delete;
    FdGuard& operator=(const FdGuard&) = delete;
    int get() const { return fd_; }

private:
    int fd_;
};

} // namespace

std::string fold_armor(std::string_view armor) {
    std::string out(armor);
    std::replace(out.begin(), out.end(), '\n', ' ');
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::string unfold_armor(std::string_view folded) {
    std::string out(folded);
    std::replace(out.begin(), out.end(), ' ', '\n');
    replace_all(out, kBeginSpaced, kBeginFolded);
    replace_all(out, kEndSpaced, kEndMarker);
    out.push_back('\n');
    return out;
}

std::string encode_auth_header(const Heritage& h) {
    if (h.certs.size() > kMaxWireCerts) {
        throw Error("heritage exceeds the wire limit of " + std::to_string(kMaxWireCerts) +
                    " certificates");
    }
    return std::string(kAuthScheme) + fold_armor(encode_heritage(h));
}

Heritage parse_auth_header(std::string_view value) {
    while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
    if (!value.starts_with(kAuthScheme)) throw Error("unsupported authentication scheme");
    Heritage h = decode_heritage(unfold_armor(value.substr(kAuthScheme.size())));
    if (h.certs.size() > kMaxWireCerts) {
        throw Error("heritage exceeds the wire limit of " + std::to_string(kMaxWireCerts) +
                    " certificates");
    }
    return h;
}

std::string WireResponse::message() const {
    auto it = headers.find("X-Message");
    return it == headers.end() ? std::string() : it->second;
}

std::optional<std::string> WireResponse::session() const {
    auto it = headers.find("Session");
    if (it == headers.end()) return std::nullopt;
    return it->second;
}

std::optional<std::string> WireResponse::realm() const {
    auto it = headers.find("WWW-Authenticate");
    if (it == headers.end()) return std::nullopt;
    std::string_view value = it->second;
    constexpr std::string_view prefix = "Codecaps realm=";
    if (!value.starts_with(prefix)) return std::nullopt;
    return std::string(value.substr(prefix.size()));
}

std::string encode_frame(const Frame& frame) {
    std::string out(kFramePrefix);
    out += frame.verb;
    out.push_back('\n');
    encode_headers(out, frame.headers, frame.payload.size());
    out += frame.request_armor;
    if (out.empty() || out.back() != '\n') out.push_back('\n');
    out.push_back('\n');
    out.append(frame.payload.begin(), frame.payload.end());
    return out;
}

Frame decode_frame(std::string_view text) {
    Cursor cursor(text);
    std::string_view start = cursor.line();
    if (!start.starts_with(kFramePrefix)) throw Error("frame does not start with CODECAP/1");
    Frame frame;
    frame.verb = std::string(start.substr(kFramePrefix.size()));
    if (frame.verb.empty()) throw Error("frame has no verb");
    frame.headers = decode_headers(cursor);
    for (;;) {
        std::string_view line = cursor.line();
        frame.request_armor += line;
        frame.request_armor.push_back('\n');
        if (line == kEndMarker) break;
        if (frame.request_armor.size() > 2 * 1024 * 1024) {
            throw Error("request certificate too large");
        }
    }
    if (!cursor.at_end()) {
        if (!cursor.line().empty()) throw Error("expected blank line after request certificate");
        frame.payload = decode_payload(cursor, frame.headers);
    }
    return frame;
}

std::string encode_wire_response(const WireResponse& response) {
    std::string out(kFramePrefix);
    out += std::to_string(response.status);
    out.push_back('\n');
    encode_headers(out, response.headers, response.payload.size());
    out.append(response.payload.begin(), response.payload.end());
    return out;
}

WireResponse decode_wire_response(std::string_view text) {
    Cursor cursor(text);
    std::string_view start = cursor.line();
    if (!start.starts_with(kFramePrefix)) throw Error("response does not start with CODECAP/1");
    WireResponse response;
    auto status_text = start.substr(kFramePrefix.size());
    auto [ptr, ec] = std::from_chars(status_text.data(), status_text.data() + status_text.size(),
                                     response.status);
    if (ec != std::errc() || ptr != status_text.data() + status_text.size()) {
        throw Error("bad response status");
    }
    response.headers = decode_headers(cursor);
    response.payload = decode_payload(cursor, response.headers);
    return response;
}

std::string SessionCache::issue(const Heritage& h, const PublicKey& transport_pub,
                                std::int64_t now, std::int64_t ttl) {
    std::lock_guard lock(mu_);
    std::string token = random_hex(kSessionTokenBytes);
    entries_.emplace(token, Entry{h, transport_pub, now + ttl});
    return token;
}

std::optional<SessionCache::Entry> SessionCache::find(const std::string& token,
                                                      std::int64_t now) {
    std::lock_guard lock(mu_);
    std::erase_if(entries_, [&](const auto& e) { return e.second.expiry <= now; });
    auto it = entries_.find(token);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::size_t SessionCache::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

FramedServer::FramedServer(ObjectService& service) : service_(service) {}

WireResponse FramedServer::challenge(std::string message) const {
    WireResponse out;
    out.status = 401;
    const std::string& realm = service_.config().subject;
    out.headers["WWW-Authenticate"] = "Codecaps realm=" + realm;
    out.headers["Realm"] = realm;
    out.headers["X-Message"] = std::move(message);
    return out;
}

WireResponse FramedServer::handle(const Frame& frame, std::optional<PublicKey> transport_pub) {
    const std::string& realm = service_.config().subject;
    if (frame.verb != "CALL") {
        WireResponse out;
        out.status = 400;
        out.headers["Realm"] = realm;
        out.headers["X-Message"] = "unsupported verb '" + frame.verb + "'";
        return out;
    }
    std::int64_t now = service_.now();

    Heritage h;
    bool via_session = false;
    if (auto session = frame.headers.find("Session"); session != frame.headers.end()) {
        auto entry = sessions_.find(session->second, now);
        if (!entry || !transport_pub || entry->transport_pub != *transport_pub) {
            return challenge("unknown or expired session");
        }
        h = std::move(entry->heritage);
        via_session = true;
    } else {
        auto auth = frame.headers.find("Authentication");
        if (auth == frame.headers.end()) auth = frame.headers.find("Authorization");
        if (auth == frame.headers.end()) return challenge("missing Authentication header");
        try {
            h = parse_auth_header(auth->second);
        } catch (const Error& e) {
            return challenge(e.what());
        }
        auto report = validate_heritage(service_.public_key(), h, now);
        if (!report.ok()) {
            return challenge("heritage does not validate: " + report.detail);
        }
    }

    RequestCert r;
    try {
        r = decode_request_armor(frame.request_armor);
    } catch (const Error& e) {
        WireResponse out;
        out.status = 400;
        out.headers["Realm"] = realm;
        out.headers["X-Message"] = std::string("request certificate does not decode: ") + e.what();
        return out;
    }

    Response response = service_.handle_request(h, r, transport_pub);
    WireResponse out;
    out.status = static_cast<int>(response.status);
    out.payload = std::move(response.payload);
    out.headers["Realm"] = realm;
    if (!response.message.empty()) out.headers["X-Message"] = response.message;
    if (response.ok() && !via_session && transport_pub) {
        out.headers["Session"] = sessions_.issue(h, *transport_pub, now);
    }
    return out;
}

TcpServer::TcpServer(ObjectService& service, const std::string& host, int port)
    : framed_(service), server_key_(service.config().service_key) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* result = nullptr;
    std::string port_text = std::to_string(port);
    if (::getaddrinfo(host.empty() ? nullptr : host.c_str(), port_text.c_str(), &hints,
                      &result) != 0) {
        throw Error("cannot resolve listen address '" + host + "'");
    }
    int fd = -1;
    for (addrinfo* ai = result; ai != nullptr; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        int one = 1;
        ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 16) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(result);
    if (fd < 0) throw Error("cannot listen on " + host + ":" + port_text);
    listen_fd_ = fd;

    sockaddr_storage bound{};
    socklen_t bound_len = sizeof(bound);
    if (::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &bound_len) == 0) {
        if (bound.ss_family == AF_INET) {
            port_ = ntohs(reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
        } else if (bound.ss_family == AF_INET6) {
            port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port);
        }
    }
    accept_thread_ = std::thread([this] { accept_loop(); });
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::stop() {
    bool expected = false;
    if (!stopping_.compare_exchange_strong(expected, true)) {
        return;
    }
    if (listen_fd_ >= 0) {
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    std::lock_guard lock(workers_mu_);
    for (auto& worker : workers_) {
        if (worker.joinable()) worker.join();
    }
    workers_.clear();
}

void TcpServer::accept_loop() {
    while (!stopping_) {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (stopping_) return;
            continue;
        }
        std::lock_guard lock(workers_mu_);
        workers_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void TcpServer::serve_connection(int fd) {
    FdGuard guard(fd);
    std::optional<PublicKey> client_pub;
    try {
        std::string hello = read_line_fd(fd);
        auto words = split_words(hello);
        if (words.size() != 4 || words[0] != "CODECAP/1" || words[1] != "HELLO") {
            throw Error("bad HELLO");
        }
        auto claimed = PublicKey::try_from_hex(words[2]);
        if (!claimed) throw Error("bad client key in HELLO");
        const std::string& client_nonce = words[3];

        std::string server_nonce = random_hex(16);
        std::string server_pub_hex = server_key_.public_key().hex();
        Bytes server_proof = server_key_.sign(to_bytes(transcript(
            kServerTranscriptLabel, words[2], client_nonce, server_pub_hex, server_nonce)));
        write_all(fd, "CODECAP/1 WELCOME " + server_pub_hex + " " + server_nonce + " " +
                          to_hex(server_proof) + "\n");

        std::string auth = read_line_fd(fd);
        auto auth_words = split_words(auth);
        if (auth_words.size() != 3 || auth_words[0] != "CODECAP/1" || auth_words[1] != "AUTH") {
            throw Error("bad AUTH");
        }
        Bytes client_proof = from_hex(auth_words[2]);
        Bytes expected = to_bytes(transcript(kClientTranscriptLabel, words[2], client_nonce,
                                             server_pub_hex, server_nonce));
        if (!verify_signature(*claimed, expected, client_proof)) {
            throw Error("client proof does not verify");
        }
        client_pub = *claimed;
    } catch (const Error& e) {
        WireResponse out;
        out.status = 400;
        out.headers["X-Message"] = std::string("handshake failed: ") + e.what();
        try {
            write_all(fd, encode_wire_response(out));
        } catch (const Error&) {
        }
        return;
    }

    WireResponse out;
    try {
        Frame frame = decode_frame(read_to_eof(fd));
        out = framed_.handle(frame, client_pub);
    } catch (const Error& e) {
        out = WireResponse{};
        out.status = 400;
        out.headers["X-Message"] = e.what();
    }
    try {
        write_all(fd, encode_wire_response(out));
    } catch (const Error&) {
    }
}

WireResponse tcp_call(const std::string& host, int port, const PublicKey& server_pub,
                      const Codecap& cap, const AttrMap& request_attrs,
                      const CallOptions& options) {
    return tcp_call_signed(host, port, server_pub, cap.key, cap.heritage,
                           sign_request(cap, request_attrs, options.now), options);
}

WireResponse tcp_call_signed(const std::string& host, int port, const PublicKey& server_pub,
                             const KeyPair& client_key, const Heritage& h, const RequestCert& r,
                             const CallOptions& options) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* result = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &result) != 0) {
        throw Error("cannot resolve '" + host + "'");
    }
    int fd = -1;
    for (addrinfo* ai = result; ai != nullptr; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(result);
    if (fd < 0) throw Error("cannot connect to " + host + ":" + std::to_string(port));
    FdGuard guard(fd);

    std::string client_pub_hex = client_key.public_key().hex();
    std::string client_nonce = random_hex(16);
    write_all(fd, "CODECAP/1 HELLO " + client_pub_hex + " " + client_nonce + "\n");

    std::string welcome = read_line_fd(fd);
    auto words = split_words(welcome);
    if (words.size() != 5 || words[0] != "CODECAP/1" || words[1] != "WELCOME") {
        throw Error("transport authentication failure: bad WELCOME");
    }
    if (words[2] != server_pub.hex()) {
        throw Error("transport authentication failure: unexpected server key");
    }
    Bytes server_proof = from_hex(words[4]);
    Bytes expected = to_bytes(
        transcript(kServerTranscriptLabel, client_pub_hex, client_nonce, words[2], words[3]));
    if (!verify_signature(server_pub, expected, server_proof)) {
        throw Error("transport authentication failure: bad server proof");
    }
    Bytes client_proof = client_key.sign(to_bytes(
        transcript(kClientTranscriptLabel, client_pub_hex, client_nonce, words[2], words[3])));
    write_all(fd, "CODECAP/1 AUTH " + to_hex(client_proof) + "\n");

    Frame frame;
    if (options.session) {
        frame.headers["Session"] = *options.session;
    } else {
        frame.headers["Authentication"] = encode_auth_header(h);
    }
    frame.request_armor = encode_request_armor(r);
    frame.payload = options.payload;
    write_all(fd, encode_frame(frame));
    ::shutdown(fd, SHUT_WR);

    return decode_wire_response(read_to_eof(fd));
}

Network tcp_network(std::string host, int port, KeyPair client_key) {
    return [host = std::move(host), port, client_key](const PublicKey& root, const Heritage& h,
                                                      const RequestCert& r) -> Response {
        WireResponse wire = tcp_call_signed(host, port, root, client_key, h, r);
        Response out;
        out.status = static_cast<Status>(wire.status);
        out.payload = std::move(wire.payload);
        out.message = wire.message();
        return out;
    };
}

void LoopbackNetwork::add_service(ObjectService& service) {
    services_.insert_or_assign(service.public_key(),
                               Entry{&service, std::make_shared<FramedServer>(service)});
}

WireResponse LoopbackNetwork::call(const PublicKey& root, const KeyPair& client,
                                   const Frame& frame) {
    auto it = services_.find(root);
    if (it == services_.end()) {
        WireResponse out;
        out.status = 500;
        out.headers["X-Message"] = "no route to service";
        return out;
    }
    return it->second.framed->handle(frame, client.public_key());
}

WireResponse LoopbackNetwork::call(const PublicKey& root, const Codecap& cap,
                                   const AttrMap& request_attrs, const CallOptions& options) {
    Frame frame;
    if (options.session) {
        frame.headers["Session"] = *options.session;
    } else {
        frame.headers["Authentication"] = encode_auth_header(cap.heritage);
    }
    RequestCert request = sign_request(cap, request_attrs, options.now);
    frame.request_armor = encode_request_armor(request);
    frame.payload = options.payload;
    return call(root, cap.key, frame);
}

Network LoopbackNetwork::network_for(const KeyPair& client) {
    return [this, client](const PublicKey& root, const Heritage& h,
                          const RequestCert& r) -> Response {
        auto it = services_.find(root);
        if (it == services_.end()) {
            return Response::failure(Status::error, "no route to service");
        }
        return it->second.service->handle_request(h, r, client.public_key());
    };
}

} // namespace codecap
