/*
 * Copyright (C) 2026 Codecap Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include <benchmark/benchmark.h>

#include <numeric>
#include <string>
#include <vector>

#include "codecap/attrs.hpp"
#include "codecap/cert.hpp"
#include "codecap/codecap.hpp"
#include "codecap/keys.hpp"
#include "codecap/rfl.hpp"

namespace {

using namespace codecap;

const std::int64_t kNow = 1'700'000'000;

KeyPair seeded_key(std::uint8_t first) {
    Bytes seed(32);
    std::iota(seed.begin(), seed.end(), first);
    return KeyPair::from_seed(seed);
}

AttrMap sample_attrs() {
    return AttrMap{
        {"issuerPubkey", seeded_key(0).public_key().hex()},
        {"pubkey", seeded_key(8).public_key().hex()},
        {"rights", std::string("request.type == \"READ\" && request.offset >= 256")},
        {"pLength", std::int64_t{4}},
        {"serial", std::string("bench-serial")},
        {"objectId", std::string("doc-1")},
        {"version", std::int64_t{0}},
    };
}

struct ChainFixture {
    KeyPair service = seeded_key(0);
    std::vector<KeyPair> holders;
    Heritage heritage;

    explicit ChainFixture(std::int64_t length) {
        holders.push_back(seeded_key(8));
        heritage = mint_root(service, holders[0].public_key(), "1", length + 1, "doc-1", 0);
        for (std::int64_t i = 1; i < length; ++i) {
            holders.push_back(seeded_key(static_cast<std::uint8_t>(8 * (i + 1))));
            heritage = delegate(Codecap{heritage, holders[i - 1]}, holders[i].public_key(),
                                "request.offset >= 0", length + 1 - i);
        }
    }
};

void canonical_encode_attrs(benchmark::State& state) {
    AttrMap attrs = sample_attrs();
    for (auto _ : state) {
        benchmark::DoNotOptimize(canonical_encode(attrs));
    }
}
BENCHMARK(canonical_encode_attrs);

void sign_detached(benchmark::State& state) {
    KeyPair key = seeded_key(0);
    Bytes body = canonical_encode(sample_attrs());
    for (auto _ : state) {
        benchmark::DoNotOptimize(key.sign(body));
    }
}
BENCHMARK(sign_detached);

void sign_certificate_full(benchmark::State& state) {
    KeyPair issuer = seeded_key(0);
    AttrMap attrs = sample_attrs();
    for (auto _ : state) {
        benchmark::DoNotOptimize(sign_certificate(attrs, issuer));
    }
}
BENCHMARK(sign_certificate_full);

void validate_chain(benchmark::State& state) {
    ChainFixture fixture(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            validate_heritage(fixture.service.public_key(), fixture.heritage, kNow));
    }
}
BENCHMARK(validate_chain)->Arg(1)->Arg(2)->Arg(4)->Arg(8);

void evaluate_rights_source(benchmark::State& state) {
    rfl::EvalContext ctx;
    ctx.request = rfl::Value::record(
        {{"type", rfl::Value("READ")}, {"offset", rfl::Value(std::int64_t{300})}});
    ctx.now = kNow;
    const std::string src = "request.type == \"READ\" && request.offset >= 256";
    for (auto _ : state) {
        benchmark::DoNotOptimize(rfl::evaluate_source(src, ctx));
    }
}
BENCHMARK(evaluate_rights_source);

void authorize_request(benchmark::State& state) {
    ChainFixture fixture(state.range(0));
    const KeyPair& tail = fixture.holders.back();
    Codecap cap{fixture.heritage, tail};
    RequestCert request = sign_request(
        cap, AttrMap{{"type", std::string("READ")}, {"offset", std::int64_t{300}}}, kNow);
    AuthzOptions options;
    options.transport_pub = tail.public_key();
    options.now = kNow;
    options.version_of = [](std::string_view) { return std::optional<std::int64_t>(0); };
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            authorize(fixture.service.public_key(), fixture.heritage, request, options));
    }
}
BENCHMARK(authorize_request)->Arg(1)->Arg(2)->Arg(4)->Arg(8);

void heritage_armor_round_trip(benchmark::State& state) {
    ChainFixture fixture(4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(decode_heritage(encode_heritage(fixture.heritage)));
    }
}
BENCHMARK(heritage_armor_round_trip);

} // namespace

BENCHMARK_MAIN();
