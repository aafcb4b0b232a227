/*
 * Copyright (C) 2026 Codecap Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "codecap/attrs.hpp"

#include <cstring>

#include "codecap/error.hpp"

namespace codecap {

namespace {

constexpr std::uint8_t kTagString = 0x01;
constexpr std::uint8_t kTagInt = 0x02;
constexpr std::uint8_t kTagBool = 0x03;
constexpr std::uint8_t kTagBytes = 0x04;

void put_u32(Bytes& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_i64(Bytes& out, std::int64_t v) {
    auto u = static_cast<std::uint64_t>(v);
    for (int shift = 56; shift >= 0; shift -= 8) {
        out.push_back(static_cast<std::uint8_t>(u >> shift));
    }
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

    bool done() const { return pos_ == data_.size(); }
    std::size_t remaining() const { return data_.size() - pos_; }

    std::uint8_t peek() const {
        if (done()) throw Error("canonical decode: truncated input");
        return data_[pos_];
    }

    std::uint8_t u8() {
        auto b = peek();
        ++pos_;
        return b;
    }

    std::uint32_t u32() {
        if (remaining() < 4) throw Error("canonical decode: truncated length");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_ + i];
        pos_ += 4;
        return v;
    }

    std::int64_t i64() {
        if (remaining() < 8) throw Error("canonical decode: truncated integer");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | data_[pos_ + i];
        pos_ += 8;
        return static_cast<std::int64_t>(v);
    }

    std::span<const std::uint8_t> take(std::size_t n) {
        if (remaining() < n) throw Error("canonical decode: truncated value");
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

void encode_entry(Bytes& out, const std::string& name, const AttrValue& value) {
    if (!is_valid_utf8(name)) {
        throw Error("canonical encode: attribute name is not valid UTF-8");
    }
    struct Tagger {
        std::uint8_t operator()(const std::string&) const { return kTagString; }
        std::uint8_t operator()(std::int64_t) const { return kTagInt; }
        std::uint8_t operator()(bool) const { return kTagBool; }
        std::uint8_t operator()(const Bytes&) const { return kTagBytes; }
    };
    out.push_back(std::visit(Tagger{}, value));
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    if (const auto* s = std::get_if<std::string>(&value)) {
        put_u32(out, static_cast<std::uint32_t>(s->size()));
        out.insert(out.end(), s->begin(), s->end());
    } else if (const auto* i = std::get_if<std::int64_t>(&value)) {
        put_i64(out, *i);
    } else if (const auto* b = std::get_if<bool>(&value)) {
        out.push_back(*b ? 0x01 : 0x00);
    } else {
        const auto& raw = std::get<Bytes>(value);
        put_u32(out, static_cast<std::uint32_t>(raw.size()));
        out.insert(out.end(), raw.begin(), raw.end());
    }
}

// Decodes one entry; `last_name` enforces strict ascending order.
std::pair<std::string, AttrValue> decode_entry(Reader& r, const std::string* last_name) {
    auto tag = r.u8();
    auto name_len = r.u32();
    auto name_bytes = r.take(name_len);
    std::string name(name_bytes.begin(), name_bytes.end());
    if (!is_valid_utf8(name)) throw Error("canonical decode: attribute name is not valid UTF-8");
    if (last_name != nullptr && !(*last_name < name)) {
        throw Error("canonical decode: attribute names out of canonical order");
    }
    switch (tag) {
        case kTagString: {
            auto len = r.u32();
            auto v = r.take(len);
            return {std::move(name), std::string(v.begin(), v.end())};
        }
        case kTagInt:
            return {std::move(name), r.i64()};
        case kTagBool: {
            auto b = r.u8();
            if (b > 1) throw Error("canonical decode: bad boolean byte");
            return {std::move(name), b == 1};
        }
        case kTagBytes: {
            auto len = r.u32();
            auto v = r.take(len);
            return {std::move(name), Bytes(v.begin(), v.end())};
        }
        default:
            throw Error("canonical decode: unknown value tag");
    }
}

} // namespace

bool is_valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        auto b0 = static_cast<std::uint8_t>(s[i]);
        std::size_t len;
        std::uint32_t cp;
        if (b0 < 0x80) {
            ++i;
            continue;
        } else if ((b0 & 0xE0) == 0xC0) {
            len = 2;
            cp = b0 & 0x1F;
        } else if ((b0 & 0xF0) == 0xE0) {
            len = 3;
            cp = b0 & 0x0F;
        } else if ((b0 & 0xF8) == 0xF0) {
            len = 4;
            cp = b0 & 0x07;
        } else {
            return false;
        }
        if (i + len > s.size()) return false;
        for (std::size_t k = 1; k < len; ++k) {
            auto b = static_cast<std::uint8_t>(s[i + k]);
            if ((b & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (b & 0x3F);
        }
        // Reject overlong forms, surrogates, and out-of-range code points.
        if (len == 2 && cp < 0x80) return false;
        if (len == 3 && cp < 0x800) return false;
        if (len == 4 && cp < 0x10000) return false;
        if (cp >= 0xD800 && cp <= 0xDFFF) return false;
        if (cp > 0x10FFFF) return false;
        i += len;
    }
    return true;
}

Bytes canonical_encode(const AttrMap& attrs) {
    Bytes out;
    for (const auto& [name, value] : attrs) {
        encode_entry(out, name, value);
    }
    return out;
}

AttrMap canonical_decode(std::span<const std::uint8_t> data) {
    Reader r(data);
    AttrMap attrs;
    const std::string* last = nullptr;
    while (!r.done()) {
        auto [name, value] = decode_entry(r, last);
        auto [it, inserted] = attrs.emplace(std::move(name), std::move(value));
        if (!inserted) throw Error("canonical decode: duplicate attribute name");
        last = &it->first;
    }
    return attrs;
}

Bytes encode_signed_body(const AttrMap& attrs, const Bytes& signature) {
    Bytes out = canonical_encode(attrs);
    put_u32(out, static_cast<std::uint32_t>(signature.size()));
    out.insert(out.end(), signature.begin(), signature.end());
    return out;
}

SignedBody decode_signed_body(std::span<const std::uint8_t> data) {
    Reader r(data);
    SignedBody body;
    const std::string* last = nullptr;
    while (true) {
        if (r.done()) throw Error("signed body: missing signature section");
        // Entry tags are 0x01..0x04; the signature-length marker starts with
        // 0x00 for any signature shorter than 16 MiB, so the first byte
        // disambiguates.
        if (r.peek() == 0x00) {
            auto len = r.u32();
            if (len != r.remaining()) throw Error("signed body: bad signature length");
            auto sig = r.take(len);
            body.signature.assign(sig.begin(), sig.end());
            return body;
        }
        auto [name, value] = decode_entry(r, last);
        auto [it, inserted] = body.attrs.emplace(std::move(name), std::move(value));
        if (!inserted) throw Error("signed body: duplicate attribute name");
        last = &it->first;
    }
}

std::string to_hex(std::span<const std::uint8_t> data) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0x0F]);
    }
    return out;
}

Bytes from_hex(std::string_view hex) {
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    if (hex.size() % 2 != 0) throw Error("hex: odd length");
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = nibble(hex[i]);
        int lo = nibble(hex[i + 1]);
        if (hi < 0 || lo < 0) throw Error("hex: invalid character");
        out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    return out;
}

} // namespace codecap
