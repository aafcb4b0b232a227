/*
 * Copyright (C) 2026 Codecap Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef CODECAP_WIRE_HPP
#define CODECAP_WIRE_HPP

/*
 * The transport layer: CODECAP/1 text frames, the `Authentication: Codecaps`
 * header, 401 challenges, session-token caching, and two transports that
 * satisfy the authenticated-peer-key contract (a TCP channel with a mutual
 * key-possession handshake, and an in-process loopback).
 */

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "codecap/cert.hpp"
#include "codecap/codecap.hpp"
#include "codecap/dir_client.hpp"
#include "codecap/keys.hpp"
#include "codecap/object_service.hpp"

namespace codecap {

inline constexpr std::size_t kMaxWireCerts = 16;
inline constexpr std::int64_t kSessionTtlSeconds = 15 * 60;

// Armor text folded onto one header line and back. The only spaces in
// armored text are inside the BEGIN/END marker lines, so newline<->space
// substitution plus marker repair is an exact inverse.
std::string fold_armor(std::string_view armor);
std::string unfold_armor(std::string_view folded);

// Header value "Codecaps <folded heritage>". parse accepts only that scheme
// word and rejects chains longer than kMaxWireCerts.
std::string encode_auth_header(const Heritage& h);
Heritage parse_auth_header(std::string_view value);

struct Frame {
    std::string verb = "CALL";
    std::map<std::string, std::string> headers;
    std::string request_armor;
    Bytes payload;
};

struct WireResponse {
    int status = 0;
    std::map<std::string, std::string> headers;
    Bytes payload;

    bool ok() const { return status == 200; }
    std::string payload_text() const { return std::string(payload.begin(), payload.end()); }
    std::string message() const;
    std::optional<std::string> session() const;
    // The realm carried by a WWW-Authenticate challenge.
    std::optional<std::string> realm() const;
};

std::string encode_frame(const Frame& frame);
Frame decode_frame(std::string_view text);
std::string encode_wire_response(const WireResponse& response);
WireResponse decode_wire_response(std::string_view text);

// Session tokens stand in for the heritage on later requests. A token is
// bound to the transport identity it was issued to and expires.
class SessionCache {
public:
    struct Entry {
        Heritage heritage;
        PublicKey transport_pub;
        std::int64_t expiry = 0;
    };

    std::string issue(const Heritage& h, const PublicKey& transport_pub, std::int64_t now,
                      std::int64_t ttl = kSessionTtlSeconds);
    std::optional<Entry> find(const std::string& token, std::int64_t now);
    std::size_t size() const;

private:
    mutable std::mutex mu_;
    std::map<std::string, Entry> entries_;
};

// Transport-independent server: resolves the heritage (inline header or
// session token), challenges with the service realm when it is missing or
// invalid, dispatches through the service, and issues session tokens.
class FramedServer {
public:
    explicit FramedServer(ObjectService& service);
    WireResponse handle(const Frame& frame, std::optional<PublicKey> transport_pub);
    SessionCache& sessions() { return sessions_; }

private:
    ObjectService& service_;
    SessionCache sessions_;

    WireResponse challenge(std::string message) const;
};

// TCP transport. Connection setup is a three-message handshake in which both
// ends sign the connection transcript, proving possession of their keys;
// afterwards one frame is exchanged per connection.
class TcpServer {
public:
    TcpServer(ObjectService& service, const std::string& host, int port);
    ~TcpServer();

    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    int port() const { return port_; }
    void stop();

private:
    FramedServer framed_;
    KeyPair server_key_;
    int listen_fd_ = -1;
    int port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread accept_thread_;
    std::mutex workers_mu_;
    std::vector<std::thread> workers_;

    void accept_loop();
    void serve_connection(int fd);
};

struct CallOptions {
    // Send this session token instead of the inline heritage.
    std::optional<std::string> session;
    Bytes payload;
    std::optional<std::int64_t> now;
};

// Signs the request with the cap's key, performs the handshake as that key,
// and exchanges one frame. Throws Error on transport or handshake failure;
// challenges come back as ordinary 401 responses.
WireResponse tcp_call(const std::string& host, int port, const PublicKey& server_pub,
                      const Codecap& cap, const AttrMap& request_attrs,
                      const CallOptions& options = {});

// Same exchange with an already-signed request certificate.
WireResponse tcp_call_signed(const std::string& host, int port, const PublicKey& server_pub,
                             const KeyPair& client_key, const Heritage& h, const RequestCert& r,
                             const CallOptions& options = {});

// A Network whose calls go over TCP as `client_key`, verifying each service
// against the heritage root it is called with.
Network tcp_network(std::string host, int port, KeyPair client_key);

// In-process transport: the peer key is authentic by construction.
class LoopbackNetwork {
public:
    void add_service(ObjectService& service);

    // The full wire path (frames, headers, challenges, sessions).
    WireResponse call(const PublicKey& root, const KeyPair& client, const Frame& frame);

    // Convenience wrapper building the frame from a codecap and attributes.
    WireResponse call(const PublicKey& root, const Codecap& cap, const AttrMap& request_attrs,
                      const CallOptions& options = {});

    // An authenticated channel for dir_client operations, bound to `client`.
    Network network_for(const KeyPair& client);

private:
    struct Entry {
        ObjectService* service;
        std::shared_ptr<FramedServer> framed;
    };
    std::map<PublicKey, Entry> services_;
};

} // namespace codecap

#endif
