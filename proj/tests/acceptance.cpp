/*
 * Copyright (C) 2026 Codecap Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

/*
 * The acceptance gate. Each check prints one PASS/FAIL line; the process
 * exits nonzero if any check fails. Expected values are either computed by
 * hand (the allow masks below) or frozen from the documented behavior.
 */

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "codecap/codecap.hpp"
#include "codecap/directory.hpp"
#include "codecap/error.hpp"
#include "codecap/object_service.hpp"
#include "codecap/wire.hpp"

using namespace codecap;

namespace {

const std::int64_t kNow = 1'700'000'000;
constexpr double kOracleSecondsLimit = 10.0;
constexpr double kScenarioSecondsLimit = 5.0;

KeyPair seeded_key(std::uint8_t first) {
    Bytes seed(32);
    std::iota(seed.begin(), seed.end(), first);
    return KeyPair::from_seed(seed);
}

Bytes bytes_of(std::string_view text) { return Bytes(text.begin(), text.end()); }

// The request universe: bit i of a mask refers to kUniverse[i].
struct Probe {
    const char* type;
    std::int64_t offset;
};

constexpr Probe kUniverse[8] = {
    {"READ", 0},  {"READ", 100},  {"READ", 256},  {"READ", 300},
    {"WRITE", 0}, {"WRITE", 100}, {"WRITE", 256}, {"WRITE", 300},
};

// Six rights functions with hand-computed allow masks over kUniverse. The
// masks are the independent oracle: a chain's allow set must equal the
// bitwise AND of its certificates' masks.
struct TableRights {
    const char* src;
    unsigned mask;
};

constexpr TableRights kPool[6] = {
    {"1", 0xFF},
    {"request.type == \"READ\"", 0x0F},
    {"request.offset >= 256", 0xCC},
    {"request.type == \"READ\" && request.offset >= 256", 0x0C},
    {"request.offset <= 100", 0x33},
    {"request.type == \"WRITE\" || request.offset == 300", 0xF8},
};

const KeyPair& oracle_service() {
    static KeyPair key = seeded_key(0);
    return key;
}

const std::vector<KeyPair>& oracle_holders() {
    static std::vector<KeyPair> keys = {seeded_key(16), seeded_key(48), seeded_key(80)};
    return keys;
}

Decision decide(const PublicKey& root, const Heritage& h, const KeyPair& tail,
                const Probe& probe) {
    Codecap cap{h, tail};
    AttrMap attrs{{"type", std::string(probe.type)}, {"offset", probe.offset}};
    RequestCert r = sign_request(cap, attrs, kNow);
    AuthzOptions options;
    options.transport_pub = tail.public_key();
    options.now = kNow;
    options.version_of = [](std::string_view) { return std::optional<std::int64_t>(0); };
    return authorize(root, h, r, options);
}

struct ChainCase {
    std::vector<int> picks;
    Heritage heritage;
    unsigned expected_mask = 0xFF;
    unsigned observed_mask = 0;
};

std::vector<ChainCase>& chain_cases() {
    static std::vector<ChainCase> cases = [] {
        const KeyPair& svc = oracle_service();
        const auto& keys = oracle_holders();
        std::vector<ChainCase> out;
        std::vector<std::vector<int>> pick_sets;
        for (int a = 0; a < 6; ++a) {
            pick_sets.push_back({a});
            for (int b = 0; b < 6; ++b) {
                pick_sets.push_back({a, b});
                for (int c = 0; c < 6; ++c) pick_sets.push_back({a, b, c});
            }
        }
        for (const auto& picks : pick_sets) {
            ChainCase cc;
            cc.picks = picks;
            cc.heritage =
                mint_root(svc, keys[0].public_key(), kPool[picks[0]].src, 4, "doc-1", 0);
            for (std::size_t i = 1; i < picks.size(); ++i) {
                cc.heritage = delegate(Codecap{cc.heritage, keys[i - 1]},
                                       keys[i].public_key(), kPool[picks[i]].src,
                                       4 - static_cast<std::int64_t>(i));
            }
            for (int pick : picks) cc.expected_mask &= kPool[pick].mask;
            out.push_back(std::move(cc));
        }
        return out;
    }();
    return cases;
}

std::string seconds_text(double secs) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2fs", secs);
    return buf;
}

// 1. Exhaustive equivalence with the mask oracle over every chain of length
//    1..3 drawn from the pool, on the full request universe.
bool check_oracle_equivalence(std::string& note) {
    auto start = std::chrono::steady_clock::now();
    const KeyPair& svc = oracle_service();
    const auto& keys = oracle_holders();
    int mismatches = 0;
    int decisions = 0;
    for (auto& cc : chain_cases()) {
        const KeyPair& tail = keys[cc.picks.size() - 1];
        cc.observed_mask = 0;
        for (int i = 0; i < 8; ++i) {
            bool allowed = decide(svc.public_key(), cc.heritage, tail, kUniverse[i]).allowed;
            if (allowed) cc.observed_mask |= 1u << i;
            bool want = (cc.expected_mask >> i) & 1u;
            if (allowed != want) ++mismatches;
            ++decisions;
        }
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    note = std::to_string(chain_cases().size()) + " chains, " + std::to_string(decisions) +
           " decisions, " + std::to_string(mismatches) + " mismatches, " + seconds_text(secs);
    return chain_cases().size() == 258 && mismatches == 0 && secs < kOracleSecondsLimit;
}

// 2. The read-offset policy: allow (READ,300) and (READ,256); deny
//    (READ,100) and (WRITE,300), both at the delegated rights function.
bool check_offset_policy(std::string& note) {
    KeyPair svc = seeded_key(0), alice = seeded_key(32), bob = seeded_key(64);
    Heritage h = mint_root(svc, alice.public_key(), "1", 3, "player-7", 0);
    h = delegate(Codecap{h, alice}, bob.public_key(),
                 "request.type == \"READ\" && request.offset >= 256", 1);

    auto run = [&](const Probe& probe) { return decide(svc.public_key(), h, bob, probe); };
    bool ok = true;
    ok = ok && run({"READ", 300}).allowed;
    ok = ok && run({"READ", 256}).allowed;
    Decision low = run({"READ", 100});
    Decision wrong_type = run({"WRITE", 300});
    ok = ok && !low.allowed && low.stage_label() == "rights(2)";
    ok = ok && !wrong_type.allowed && wrong_type.stage_label() == "rights(2)";
    note = "allow 300/256, deny 100/WRITE at rights(2)";
    return ok;
}

// 3. A confined certificate: every randomized extension is denied at the
//    confined position, and unextended it behaves exactly like its twin.
bool check_confinement(std::string& note) {
    KeyPair svc = seeded_key(0), alice = seeded_key(32), bob = seeded_key(64);
    const std::string inner = "request.type == \"READ\"";
    Heritage root = mint_root(svc, alice.public_key(), "1", 6, "doc-1", 0);
    Heritage confined = delegate(Codecap{root, alice}, bob.public_key(), confine(inner), 4);
    Heritage twin = delegate(Codecap{root, alice}, bob.public_key(), inner, 4);

    for (int i = 0; i < 8; ++i) {
        bool a = decide(svc.public_key(), confined, bob, kUniverse[i]).allowed;
        bool b = decide(svc.public_key(), twin, bob, kUniverse[i]).allowed;
        if (a != b) {
            note = "unextended twin diverged";
            return false;
        }
    }

    std::mt19937 rng(7);
    auto random_key = [&] {
        Bytes seed(32);
        for (auto& byte : seed) byte = static_cast<std::uint8_t>(rng());
        return KeyPair::from_seed(seed);
    };
    int denied_at_confined = 0;
    const int kTrials = 1000;
    for (int t = 0; t < kTrials; ++t) {
        Heritage extended = confined;
        KeyPair holder = bob;
        int extra = 1 + static_cast<int>(rng() % 3);
        for (int j = 0; j < extra; ++j) {
            KeyPair next = random_key();
            extended = delegate(Codecap{extended, holder}, next.public_key(),
                                kPool[rng() % 6].src, 3 - j);
            holder = next;
        }
        Decision d = decide(svc.public_key(), extended, holder, kUniverse[rng() % 8]);
        if (!d.allowed && d.failing_stage == Stage::rights && d.rights_index == 2) {
            ++denied_at_confined;
        }
    }
    note = std::to_string(denied_at_confined) + "/" + std::to_string(kTrials) +
           " extensions denied at the confined certificate";
    return denied_at_confined == kTrials;
}

// 4. Amplification: the reconstructed prefix is byte-identical, everything
//    the full chain allows the prefix allows, and at least one fixture shows
//    the prefix strictly wider.
bool check_amplification(std::string& note) {
    const KeyPair& svc = oracle_service();
    const auto& keys = oracle_holders();
    int prefix_mismatches = 0;
    int implication_failures = 0;
    int checked_prefixes = 0;
    for (const auto& cc : chain_cases()) {
        for (std::size_t k = 1; k < cc.picks.size(); ++k) {
            Codecap amplified = amplify(cc.heritage, keys[k - 1]);
            Heritage prefix;
            prefix.certs.assign(cc.heritage.certs.begin(),
                                cc.heritage.certs.begin() + static_cast<long>(k));
            if (encode_heritage(amplified.heritage) != encode_heritage(prefix)) {
                ++prefix_mismatches;
            }
            ++checked_prefixes;
            for (int i = 0; i < 8; ++i) {
                if (!((cc.observed_mask >> i) & 1u)) continue;
                if (!decide(svc.public_key(), amplified.heritage, keys[k - 1], kUniverse[i])
                         .allowed) {
                    ++implication_failures;
                }
            }
        }
    }

    Heritage narrow = mint_root(svc, keys[0].public_key(), kPool[0].src, 4, "doc-1", 0);
    narrow = delegate(Codecap{narrow, keys[0]}, keys[1].public_key(), kPool[3].src, 2);
    bool full_denies = !decide(svc.public_key(), narrow, keys[1], {"READ", 100}).allowed;
    Codecap recovered = amplify(narrow, keys[0]);
    bool prefix_allows =
        decide(svc.public_key(), recovered.heritage, keys[0], {"READ", 100}).allowed;

    note = std::to_string(checked_prefixes) + " prefixes byte-checked, " +
           std::to_string(prefix_mismatches) + " mismatches, " +
           std::to_string(implication_failures) + " implication failures, widening " +
           ((full_denies && prefix_allows) ? "shown" : "missing");
    return prefix_mismatches == 0 && implication_failures == 0 && full_denies && prefix_allows;
}

// 5. One version bump kills all five outstanding caps; re-minting restores
//    exactly the re-minted two.
bool check_revocation(std::string& note) {
    ObjectService svc{ServiceConfig{.service_key = seeded_key(0), .subject = "objsvc"}};
    svc.set_clock([] { return kNow; });
    svc.create_object(bytes_of("secret"), "doc-5");

    std::vector<KeyPair> holders;
    for (int i = 0; i < 5; ++i) holders.push_back(seeded_key(static_cast<std::uint8_t>(40 + 8 * i)));
    std::vector<Heritage> caps;
    for (const auto& holder : holders) {
        caps.push_back(svc.mint_for(holder.public_key(), "1", 3, "doc-5"));
    }
    KeyPair admin = seeded_key(96);
    Heritage admin_cap = svc.mint_for(admin.public_key(), "1", 3, "doc-5");

    auto alive = [&](const Heritage& h, const KeyPair& holder) {
        RequestCert r =
            sign_request(Codecap{h, holder}, AttrMap{{"type", std::string("READ")}}, kNow);
        return svc.handle_request(h, r, holder.public_key()).ok();
    };
    auto alive_count = [&] {
        int n = 0;
        for (std::size_t i = 0; i < caps.size(); ++i) {
            if (alive(caps[i], holders[i])) ++n;
        }
        return n;
    };

    int before = alive_count();
    RequestCert bump = sign_request(Codecap{admin_cap, admin},
                                    AttrMap{{"type", std::string("BUMPVERSION")}}, kNow);
    Response bumped = svc.handle_request(admin_cap, bump, admin.public_key());
    int after_bump = alive_count();

    caps[1] = svc.mint_for(holders[1].public_key(), "1", 3, "doc-5");
    caps[3] = svc.mint_for(holders[3].public_key(), "1", 3, "doc-5");
    int restored = alive_count();
    bool exactly_restored = alive(caps[1], holders[1]) && alive(caps[3], holders[3]) &&
                            !alive(caps[0], holders[0]) && !alive(caps[2], holders[2]) &&
                            !alive(caps[4], holders[4]);

    note = "alive " + std::to_string(before) + "/5 before, " + std::to_string(after_bump) +
           "/5 after bump, " + std::to_string(restored) + "/5 after re-mint";
    return before == 5 && bumped.ok() && bumped.message == "1" && after_bump == 0 &&
           restored == 2 && exactly_restored;
}

// 6. Directory lookups: the delegated cap's allow set equals stored mask AND
//    group mask for every pool pairing; chmod only changes later lookups.
bool check_directory_bounds(std::string& note) {
    KeyPair svc = seeded_key(0), client = seeded_key(32);
    int mismatches = 0;
    for (int j = 0; j < 6; ++j) {
        for (int k = 0; k < 6; ++k) {
            DirectoryTable table;
            Heritage stored = mint_root(svc, svc.public_key(), kPool[j].src, 4, "doc-6", 0);
            table_insert(table, svc.public_key(), "row", stored, {{"g", kPool[k].src}});
            Heritage out = table_lookup(table, svc, client.public_key(), "row", "g");
            unsigned want = kPool[j].mask & kPool[k].mask;
            for (int i = 0; i < 8; ++i) {
                bool allowed = decide(svc.public_key(), out, client, kUniverse[i]).allowed;
                if (allowed != (((want >> i) & 1u) != 0)) ++mismatches;
            }
        }
    }

    DirectoryTable table;
    Heritage stored = mint_root(svc, svc.public_key(), kPool[1].src, 4, "doc-6", 0);
    table_insert(table, svc.public_key(), "row", stored, {{"g", kPool[4].src}});
    Heritage early = table_lookup(table, svc, client.public_key(), "row", "g");
    table_chmod(table, "row", "g", kPool[2].src);
    Heritage late = table_lookup(table, svc, client.public_key(), "row", "g");
    unsigned early_want = kPool[1].mask & kPool[4].mask;
    unsigned late_want = kPool[1].mask & kPool[2].mask;
    int chmod_mismatches = 0;
    for (int i = 0; i < 8; ++i) {
        if (decide(svc.public_key(), early, client, kUniverse[i]).allowed !=
            (((early_want >> i) & 1u) != 0)) {
            ++chmod_mismatches;
        }
        if (decide(svc.public_key(), late, client, kUniverse[i]).allowed !=
            (((late_want >> i) & 1u) != 0)) {
            ++chmod_mismatches;
        }
    }

    note = "36 pairings brute-forced, " + std::to_string(mismatches) + " mismatches, chmod " +
           std::to_string(chmod_mismatches) + " mismatches";
    return mismatches == 0 && chmod_mismatches == 0;
}

// 7. Three principals: the base service holds a player object, the coach
//    delegates a range-restricted cap to the club, and the coach's service
//    amplifies that cap to aggregate data the club cannot read directly.
bool check_layered_abstraction(std::string& note) {
    auto start = std::chrono::steady_clock::now();
    KeyPair p1 = seeded_key(32), p2 = seeded_key(64);
    ObjectService base{ServiceConfig{.service_key = seeded_key(0), .subject = "base"}};
    base.set_clock([] { return kNow; });

    Bytes state(320);
    for (int i = 0; i < 256; ++i) state[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>('0' + i % 10);
    for (int i = 256; i < 320; ++i) state[static_cast<std::size_t>(i)] = 'P';
    base.create_object(state, "player-7");
    const std::int64_t kExpectedAggregate = 1140;

    Heritage c1 = base.mint_for(p1.public_key(), "request.type == \"READ\"", 3, "player-7");
    Heritage c2 = delegate(Codecap{c1, p1}, p2.public_key(),
                           "request.type == \"READ\" && request.offset >= 256", 1);

    LoopbackNetwork loop;
    loop.add_service(base);
    CallOptions at_now;
    at_now.now = kNow;

    WireResponse open_read =
        loop.call(base.public_key(), Codecap{c2, p2},
                  AttrMap{{"type", std::string("READ")},
                          {"offset", std::int64_t{256}},
                          {"length", std::int64_t{64}}},
                  at_now);
    bool club_reads_public = open_read.ok() && open_read.payload == Bytes(64, 'P');

    WireResponse blocked =
        loop.call(base.public_key(), Codecap{c2, p2},
                  AttrMap{{"type", std::string("READ")},
                          {"offset", std::int64_t{0}},
                          {"length", std::int64_t{256}}},
                  at_now);
    bool club_blocked = blocked.status == 403;

    // The coach's service: verify the presented cap, reconstruct its own
    // broader cap, fetch the restricted range, and return the aggregate.
    bool reconstructed = false;
    auto aggregate = [&](const Heritage& presented) -> std::optional<std::int64_t> {
        if (!validate_heritage(base.public_key(), presented, kNow).ok()) return std::nullopt;
        Codecap mine = amplify(presented, p1);
        reconstructed = encode_heritage(mine.heritage) == encode_heritage(c1);
        WireResponse raw = loop.call(base.public_key(), mine,
                                     AttrMap{{"type", std::string("READ")},
                                             {"offset", std::int64_t{0}},
                                             {"length", std::int64_t{256}}},
                                     at_now);
        if (!raw.ok()) return std::nullopt;
        std::int64_t sum = 0;
        for (std::uint8_t byte : raw.payload) sum += byte - '0';
        return sum;
    };

    std::optional<std::int64_t> result = aggregate(c2);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    note = std::string("direct restricted read ") + (club_blocked ? "denied" : "allowed") +
           ", aggregate " + (result ? std::to_string(*result) : std::string("failed")) + ", " +
           seconds_text(secs);
    return club_reads_public && club_blocked && reconstructed && result &&
           *result == kExpectedAggregate && secs < kScenarioSecondsLimit;
}

// 8. Garbage collection: live link persists, removed link destroys, an
//    unreachable directory persists, a destroyed directory moves the object
//    to lost+found.
bool check_garbage_collection(std::string& note) {
    ObjectService svc{ServiceConfig{.service_key = seeded_key(0), .subject = "objsvc"}};
    svc.set_clock([] { return kNow; });
    KeyPair admin = seeded_key(32), foreign = seeded_key(64);

    svc.create_directory("dir-live");
    svc.create_directory("dir-doomed");
    for (const char* id : {"obj-a", "obj-b", "obj-c", "obj-d"}) {
        svc.create_object(bytes_of("payload"), id);
    }

    auto link_into = [&](const std::string& dir_id, const std::string& row,
                         const std::string& object_id) {
        DirectoryTable table = decode_table(svc.object(dir_id)->state);
        Heritage stored = svc.mint_for(svc.public_key(), "1", 4, object_id);
        table_insert(table, svc.public_key(), row, stored, {{"g", "1"}});
        svc.write_object_state(dir_id, encode_table(table));
        PrimaryLink link;
        link.directory_heritage = svc.mint_for(svc.public_key(), "1", 4, dir_id);
        link.row_name = row;
        link.group = "g";
        svc.register_link(object_id, link);
    };
    link_into("dir-live", "a", "obj-a");
    link_into("dir-live", "b", "obj-b");
    link_into("dir-doomed", "d", "obj-d");

    PrimaryLink foreign_link;
    foreign_link.directory_heritage =
        mint_root(foreign, svc.public_key(), "1", 4, "dir-elsewhere", 0);
    foreign_link.row_name = "c";
    foreign_link.group = "g";
    svc.register_link("obj-c", foreign_link);

    auto ids = [](std::vector<std::string> v) { return std::set<std::string>(v.begin(), v.end()); };

    SweepReport first = svc.gc_sweep();
    bool all_live = ids(first.persisted) ==
                        std::set<std::string>{"obj-a", "obj-b", "obj-c", "obj-d"} &&
                    first.destroyed.empty() && first.moved_to_lost_found.empty();

    DirectoryTable live = decode_table(svc.object("dir-live")->state);
    table_remove(live, "b");
    svc.write_object_state("dir-live", encode_table(live));

    Heritage doom_cap = svc.mint_for(admin.public_key(), "1", 3, "dir-doomed");
    RequestCert destroy = sign_request(Codecap{doom_cap, admin},
                                       AttrMap{{"type", std::string("DESTROY")}}, kNow);
    bool doomed = svc.handle_request(doom_cap, destroy, admin.public_key()).ok();

    SweepReport second = svc.gc_sweep();
    bool branches = ids(second.persisted) == std::set<std::string>{"obj-a", "obj-c"} &&
                    ids(second.destroyed) == std::set<std::string>{"obj-b"} &&
                    ids(second.moved_to_lost_found) == std::set<std::string>{"obj-d"};

    bool in_lost_found = false;
    if (auto lost = svc.object("lost+found")) {
        DirectoryTable table = decode_table(lost->state);
        for (const auto& row : table.rows) in_lost_found = in_lost_found || row.name == "obj-d";
    }
    SweepReport third = svc.gc_sweep();
    bool recovered = ids(third.persisted).contains("obj-d") && third.destroyed.empty() &&
                     third.moved_to_lost_found.empty();

    note = std::string("live persisted, removed destroyed, foreign persisted, doomed ") +
           (in_lost_found ? "rehomed" : "lost");
    return all_live && doomed && branches && in_lost_found && recovered &&
           svc.object("obj-b") == std::nullopt;
}

// 9. Wire fidelity: the verbatim challenge, bit-exact header round trips for
//    chains of length 1..8, and replay refusal.
bool check_wire_fidelity(std::string& note) {
    KeyPair svc_key = seeded_key(0), alice = seeded_key(32);

    bool headers_exact = true;
    for (std::size_t n = 1; n <= 8; ++n) {
        KeyPair service = seeded_key(0);
        KeyPair holder = seeded_key(8);
        Heritage h = mint_root(service, holder.public_key(), "1",
                               static_cast<std::int64_t>(n), "doc-1", 0);
        for (std::size_t i = 1; i < n; ++i) {
            KeyPair next = seeded_key(static_cast<std::uint8_t>(8 * (i + 1)));
            h = delegate(Codecap{h, holder}, next.public_key(), "1",
                         static_cast<std::int64_t>(n - i));
            holder = next;
        }
        std::string armor = encode_heritage(h);
        headers_exact = headers_exact &&
                        encode_heritage(parse_auth_header(encode_auth_header(h))) == armor &&
                        unfold_armor(fold_armor(armor)) == armor;
    }

    ObjectService svc{ServiceConfig{.service_key = svc_key, .subject = "objsvc"}};
    svc.set_clock([] { return kNow; });
    svc.create_object(bytes_of("hello world"), "doc-1");
    Codecap cap{svc.mint_for(alice.public_key(), "1", 3, "doc-1"), alice};
    FramedServer server(svc);

    Frame bare;
    bare.request_armor =
        encode_request_armor(sign_request(cap, AttrMap{{"type", std::string("READ")}}, kNow));
    WireResponse challenge = decode_wire_response(
        encode_wire_response(server.handle(decode_frame(encode_frame(bare)), alice.public_key())));
    bool challenged = challenge.status == 401 &&
                      challenge.headers.at("WWW-Authenticate") == "Codecaps realm=objsvc";

    Frame call;
    call.headers["Authentication"] = encode_auth_header(cap.heritage);
    call.request_armor =
        encode_request_armor(sign_request(cap, AttrMap{{"type", std::string("READ")}}, kNow));
    WireResponse once = server.handle(decode_frame(encode_frame(call)), alice.public_key());
    WireResponse twice = server.handle(decode_frame(encode_frame(call)), alice.public_key());
    bool replay_refused = once.status == 200 && twice.status == 409 &&
                          twice.message() == "replay";

    note = std::string("chains 1..8 ") + (headers_exact ? "exact" : "drifted") +
           ", challenge " + (challenged ? "verbatim" : "wrong") + ", replay " +
           (replay_refused ? "refused" : "accepted");
    return headers_exact && challenged && replay_refused;
}

// 10. Fuzzed programs: every evaluation terminates inside the step budget
//     with a defined outcome, throws nothing, and leaves the context intact.
bool check_sandbox(std::string& note) {
    std::mt19937 rng(42);

    rfl::EvalContext ctx;
    ctx.heritage = rfl::Value::list(
        {rfl::Value::record({{"subject", rfl::Value("alice")},
                             {"pLength", rfl::Value(std::int64_t{3})},
                             {"objectId", rfl::Value("doc-1")}}),
         rfl::Value::record({{"subject", rfl::Value("bob")},
                             {"pLength", rfl::Value(std::int64_t{1})}})});
    ctx.idx = 1;
    ctx.request = rfl::Value::record({{"type", rfl::Value("READ")},
                                      {"offset", rfl::Value(std::int64_t{300})},
                                      {"nonce", rfl::Value("n-1")}});
    ctx.now = kNow;
    ctx.state = rfl::Value::record(
        {{"length", rfl::Value(std::int64_t{5})}, {"body", rfl::Value("hello")}});
    const std::string snapshot = rfl::to_string(ctx.heritage) + "|" + rfl::to_string(ctx.request) +
                                 "|" + rfl::to_string(ctx.state);

    static const std::vector<std::string> kTokens = {
        "request", "heritage", "idx",  "now",   "state", "isLast", "len", "int",
        "str",     "startsWith", "var", "if",   "else",  "true",   "false", "null",
        "(",       ")",        "[",    "]",     "+",     "-",      "*",   "/",
        "%",       "==",       "!=",   "<",     "<=",    ">",      ">=",  "&&",
        "||",      "!",        ".",    ",",     ";",     "=",      "?",   ":",
        "0",       "1",        "42",   "\"x\"", "\"READ\"", "a",   "b",   "offset",
        "type",
    };

    std::function<std::string(int)> gen_expr = [&](int depth) -> std::string {
        if (depth <= 0) {
            static const std::vector<std::string> leaves = {
                "1", "0", "-7", "true", "false", "null", "\"abc\"",
                "request.offset", "request.type", "idx", "now", "isLast", "state",
                "heritage", "9223372036854775807",
            };
            return leaves[rng() % leaves.size()];
        }
        switch (rng() % 8) {
            case 0: return "(" + gen_expr(depth - 1) + ")";
            case 1: {
                static const std::vector<std::string> ops = {
                    "+", "-", "*", "/", "%", "==", "!=", "<", "<=", ">", ">=", "&&", "||"};
                return gen_expr(depth - 1) + " " + ops[rng() % ops.size()] + " " +
                       gen_expr(depth - 1);
            }
            case 2: return (rng() % 2 ? "!" : "-") + gen_expr(depth - 1);
            case 3: {
                static const std::vector<std::string> calls = {"len", "int", "str"};
                return calls[rng() % calls.size()] + "(" + gen_expr(depth - 1) + ")";
            }
            case 4:
                return "startsWith(" + gen_expr(depth - 1) + ", " + gen_expr(depth - 1) + ")";
            case 5: return "heritage[" + gen_expr(depth - 1) + "]";
            case 6: {
                static const std::vector<std::string> fields = {"subject", "offset", "type",
                                                                "ghost", "body"};
                return gen_expr(depth - 1) + "." + fields[rng() % fields.size()];
            }
            default:
                return gen_expr(depth - 1) + " ? " + gen_expr(depth - 1) + " : " +
                       gen_expr(depth - 1);
        }
    };

    auto gen_soup = [&] {
        std::string out;
        int n = 1 + static_cast<int>(rng() % 120);
        for (int i = 0; i < n && out.size() < 4000; ++i) {
            out += kTokens[rng() % kTokens.size()];
            out += ' ';
        }
        return out;
    };

    auto gen_program = [&] {
        unsigned kind = rng() % 10;
        if (kind < 3) {
            std::string out;
            int binds = 1 + static_cast<int>(rng() % 4);
            for (int i = 0; i < binds; ++i) {
                out += "var v" + std::to_string(i) + " = " + gen_expr(2) + ";\n";
            }
            return out + gen_expr(3);
        }
        if (kind < 5) {
            return "if (" + gen_expr(2) + ") " + gen_expr(2) + "; else " + gen_expr(2) + ";";
        }
        return gen_expr(4);
    };

    static const std::vector<std::string> kSeeds = {
        "1",
        "request.type == \"READ\"",
        "request.offset >= 256",
        "request.type == \"READ\" && request.offset >= 256",
        "var limit = 256; request.offset >= limit",
        "if (isLast) request.type == \"READ\"; else false;",
        "startsWith(request.type, \"RE\") && len(heritage) <= 3",
        "(isLast) && (request.type == \"READ\")",
    };

    auto gen_mutant = [&] {
        std::string out = kSeeds[rng() % kSeeds.size()];
        int edits = 1 + static_cast<int>(rng() % 8);
        for (int e = 0; e < edits && !out.empty(); ++e) {
            std::size_t pos = rng() % out.size();
            switch (rng() % 3) {
                case 0: out[pos] = static_cast<char>(' ' + rng() % 95); break;
                case 1: out.insert(pos, 1, static_cast<char>(' ' + rng() % 95)); break;
                default: out.erase(pos, 1); break;
            }
        }
        return out;
    };

    auto gen_pathological = [&] {
        switch (rng() % 4) {
            case 0: {
                std::size_t depth = 16u << (rng() % 8);
                return std::string(depth, '(') + "1" + std::string(depth, ')');
            }
            case 1: {
                int doublings = 4 + static_cast<int>(rng() % 36);
                std::string out = "var a0 = \"0123456789abcdef\";\n";
                for (int i = 0; i < doublings; ++i) {
                    out += "var a" + std::to_string(i + 1) + " = a" + std::to_string(i) +
                           " + a" + std::to_string(i) + ";\n";
                }
                return out + "len(a" + std::to_string(doublings) + ")";
            }
            case 2: {
                std::string out = "request";
                for (int i = 0; i < 400; ++i) out += ".f";
                return out;
            }
            default: {
                int steps = 4 + static_cast<int>(rng() % 28);
                std::string out = "var m0 = 65535;\n";
                for (int i = 0; i < steps; ++i) {
                    out += "var m" + std::to_string(i + 1) + " = m" + std::to_string(i) +
                           " * m" + std::to_string(i) + ";\n";
                }
                return out + "m" + std::to_string(steps);
            }
        }
    };

    const int kPrograms = 10000;
    int crashes = 0;
    int over_budget = 0;
    int counts[4] = {0, 0, 0, 0};
    for (int i = 0; i < kPrograms; ++i) {
        std::string src;
        switch (i % 4) {
            case 0: src = gen_soup(); break;
            case 1: src = gen_program(); break;
            case 2: src = gen_mutant(); break;
            default: src = gen_pathological(); break;
        }
        if (src.size() > 4096) src.resize(4096);
        try {
            rfl::EvalOutcome out = rfl::evaluate_source(src, ctx);
            if (out.steps_used > rfl::kDefaultStepBudget) ++over_budget;
            ++counts[static_cast<int>(out.cause)];
        } catch (...) {
            ++crashes;
        }
    }

    const std::string after = rfl::to_string(ctx.heritage) + "|" + rfl::to_string(ctx.request) +
                              "|" + rfl::to_string(ctx.state);
    bool intact = after == snapshot;

    note = std::to_string(kPrograms) + " programs: " + std::to_string(counts[0]) + " normal, " +
           std::to_string(counts[1]) + " parse, " + std::to_string(counts[2]) + " runtime, " +
           std::to_string(counts[3]) + " budget; " + std::to_string(crashes) + " crashes, " +
           std::to_string(over_budget) + " over budget, context " +
           (intact ? "intact" : "mutated");
    return crashes == 0 && over_budget == 0 && intact;
}

} // namespace

int main() {
    struct Check {
        int number;
        const char* name;
        bool (*fn)(std::string&);
    };
    const Check checks[] = {
        {1, "authorization equals the brute-force rights conjunction", check_oracle_equivalence},
        {2, "the read-offset policy allows and denies exactly", check_offset_policy},
        {3, "confined certificates cannot be extended", check_confinement},
        {4, "amplification reconstructs the issuing prefix", check_amplification},
        {5, "a version bump revokes and re-minting restores", check_revocation},
        {6, "directory lookups bound rights by the group column", check_directory_bounds},
        {7, "an intermediary aggregates data its client cannot read", check_layered_abstraction},
        {8, "garbage collection follows primary links", check_garbage_collection},
        {9, "challenges, header round trips, and replay refusal", check_wire_fidelity},
        {10, "fuzzed rights programs stay sandboxed", check_sandbox},
    };

    int failures = 0;
    for (const Check& check : checks) {
        std::string note;
        bool passed = false;
        try {
            passed = check.fn(note);
        } catch (const std::exception& e) {
            note = std::string("unexpected exception: ") + e.what();
        }
        if (!passed) ++failures;
        std::printf("%s criterion %d: %s%s%s%s\n", passed ? "PASS" : "FAIL", check.number,
                    check.name, note.empty() ? "" : " (", note.c_str(), note.empty() ? "" : ")");
    }
    return failures == 0 ? 0 : 1;
}
