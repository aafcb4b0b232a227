/*
 * Copyright (C) 2026 Codecap Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef CODECAP_ATTRS_HPP_
#define CODECAP_ATTRS_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace codecap {

using Bytes = std::vector<std::uint8_t>;

/// Attribute values come in exactly four kinds. Strings are uninterpreted
/// byte sequences at the codec level; names must be valid UTF-8.
using AttrValue = std::variant<std::string, std::int64_t, bool, Bytes>;

/// std::map keeps names bytewise sorted, which is the canonical order.
using AttrMap = std::map<std::string, AttrValue>;

/// Deterministic encoding of an attribute map. Entries are emitted in
/// bytewise-ascending name order as:
///   tag (1 byte: 0x01 string, 0x02 int, 0x03 bool, 0x04 bytes)
///   big-endian u32 name length, name bytes
///   value: string/bytes length-prefixed with big-endian u32; integers as
///   8 bytes big-endian two's complement; booleans as one byte 0x00/0x01.
/// Throws Error on a non-UTF-8 name.
Bytes canonical_encode(const AttrMap& attrs);

/// Strict inverse of canonical_encode: rejects unknown tags, out-of-order or
/// duplicate names, bad bool bytes, truncation, and trailing garbage, so
/// decode-then-encode is the identity. Throws Error.
AttrMap canonical_decode(std::span<const std::uint8_t> data);

/// A canonical attribute block followed by a big-endian u32 signature length
/// and the signature bytes. This is the body of an armored certificate.
struct SignedBody {
    AttrMap attrs;
    Bytes signature;
};

Bytes encode_signed_body(const AttrMap& attrs, const Bytes& signature);
SignedBody decode_signed_body(std::span<const std::uint8_t> data);

bool is_valid_utf8(std::string_view s);

std::string to_hex(std::span<const std::uint8_t> data);
/// Throws Error on odd length or non-hex characters. Accepts both cases.
Bytes from_hex(std::string_view hex);

} // namespace codecap

#endif // CODECAP_ATTRS_HPP_
