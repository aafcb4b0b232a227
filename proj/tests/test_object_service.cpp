/*
 * Copyright (C) 2026 Codecap Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <numeric>
#include <thread>

#include "codecap/error.hpp"
#include "codecap/object_service.hpp"

using namespace codecap;

namespace {

KeyPair seeded_key(std::uint8_t first) {
    Bytes seed(32);
    std::iota(seed.begin(), seed.end(), first);
    return KeyPair::from_seed(seed);
}

const std::int64_t kNow = 1'700'000'000;

Bytes bytes_of(std::string_view text) { return Bytes(text.begin(), text.end()); }

std::atomic<std::uint64_t> g_nonce_counter{0};

struct Harness {
    KeyPair service_key = seeded_key(0);
    KeyPair alice = seeded_key(32);
    KeyPair bob = seeded_key(64);
    ObjectService svc;

    Harness() : svc(make_config(service_key)) {
        svc.set_clock([] { return kNow; });
    }

    static ServiceConfig make_config(const KeyPair& key) {
        ServiceConfig config{.service_key = key, .subject = "objsvc"};
        config.allow_unauthenticated_transport = true;
        return config;
    }

    // Distinct nonces keep independent calls out of each other's replay sets.
    RequestCert request(const Codecap& cap, std::string type, AttrMap extra = {},
                        std::optional<std::int64_t> timestamp = std::nullopt) {
        AttrMap attrs = std::move(extra);
        attrs["type"] = std::move(type);
        if (!attrs.contains(std::string(attr::kNonce))) {
            attrs[std::string(attr::kNonce)] =
                "n-" + std::to_string(g_nonce_counter.fetch_add(1));
        }
        attrs[std::string(attr::kTimestamp)] = timestamp.value_or(kNow);
        return sign_request(cap, std::move(attrs), kNow);
    }

    Response call(const Codecap& cap, std::string type, AttrMap extra = {}) {
        return svc.handle_request(cap.heritage, request(cap, std::move(type), std::move(extra)),
                                  std::nullopt);
    }
};

} // namespace

TEST_CASE("rights sources combine as a conjunction of expressions") {
    CHECK(conjoin_rights({"1"}) == "(1)");
    CHECK(conjoin_rights({"1", "request.offset >= 256"}) ==
          "(1) && (request.offset >= 256)");
    CHECK(conjoin_rights({"a == 1", "b == 2", "c == 3"}) ==
          "(a == 1) && (b == 2) && (c == 3)");
    CHECK_FALSE(conjoin_rights({"var x = 1; x"}).has_value());
    CHECK_FALSE(conjoin_rights({"1", "if (1) 2; else 3;"}).has_value());
}

TEST_CASE("request screening happens before authorization") {
    Harness h;
    std::string id = h.svc.create_object(bytes_of("hello world"));
    Codecap cap{h.svc.mint_for(h.alice.public_key(), "1", 3, id), h.alice};

    SUBCASE("a well-formed request is served") {
        Response r = h.call(cap, "READ");
        CHECK(r.ok());
        CHECK(r.payload_text() == "hello world");
    }
    SUBCASE("missing type") {
        RequestCert bare;
        bare.attrs[std::string(attr::kNonce)] = std::string("n");
        Response r = h.svc.handle_request(cap.heritage, bare, std::nullopt);
        CHECK(r.status == Status::bad_request);
        CHECK(r.message == "request has no type");
    }
    SUBCASE("missing nonce or timestamp") {
        RequestCert r = sign_request_cert(AttrMap{{"type", std::string("READ")}}, h.alice);
        Response resp = h.svc.handle_request(cap.heritage, r, std::nullopt);
        CHECK(resp.status == Status::bad_request);
        CHECK(resp.message == "request needs nonce and timestamp");
    }
    SUBCASE("timestamps outside the replay window") {
        for (std::int64_t ts : {kNow - 301, kNow + 301}) {
            RequestCert r = h.request(cap, "READ", {}, ts);
            Response resp = h.svc.handle_request(cap.heritage, r, std::nullopt);
            CHECK(resp.status == Status::bad_request);
            CHECK(resp.message == "request timestamp is outside the window");
        }
        for (std::int64_t ts : {kNow - 300, kNow + 300}) {
            RequestCert r = h.request(cap, "READ", {}, ts);
            CHECK(h.svc.handle_request(cap.heritage, r, std::nullopt).ok());
        }
    }
    SUBCASE("a replayed nonce conflicts") {
        RequestCert r = h.request(cap, "READ");
        CHECK(h.svc.handle_request(cap.heritage, r, std::nullopt).ok());
        Response replay = h.svc.handle_request(cap.heritage, r, std::nullopt);
        CHECK(replay.status == Status::conflict);
        CHECK(replay.message == "replay");
    }
    SUBCASE("different signers may share a nonce") {
        Codecap bob_cap{h.svc.mint_for(h.bob.public_key(), "1", 3, id), h.bob};
        AttrMap shared{{std::string(attr::kNonce), std::string("shared")}};
        CHECK(h.call(cap, "READ", shared).ok());
        CHECK(h.call(bob_cap, "READ", shared).ok());
    }
    SUBCASE("a denied request does not consume its nonce") {
        Codecap narrow{h.svc.mint_for(h.alice.public_key(), "request.type == \"READ\"", 3, id),
                       h.alice};
        AttrMap pinned{{std::string(attr::kNonce), std::string("reuse-me")},
                       {"value", std::string("x")}};
        Response denied = h.call(narrow, "WRITE", pinned);
        CHECK(denied.status == Status::denied);
        Response allowed = h.call(narrow, "READ",
                                  AttrMap{{std::string(attr::kNonce),
                                           std::string("reuse-me")}});
        CHECK(allowed.ok());
    }
    SUBCASE("nonces are forgotten after twice the window") {
        AttrMap pinned{{std::string(attr::kNonce), std::string("old-nonce")}};
        CHECK(h.call(cap, "READ", pinned).ok());

        h.svc.set_clock([] { return kNow + 601; });
        RequestCert later =
            sign_request(cap, AttrMap{{"type", std::string("READ")},
                                      {std::string(attr::kNonce), std::string("old-nonce")},
                                      {std::string(attr::kTimestamp), kNow + 601}});
        CHECK(h.svc.handle_request(cap.heritage, later, std::nullopt).ok());
    }
    SUBCASE("unknown object is 404") {
        Heritage ghost = mint_root(h.service_key, h.alice.public_key(), "1", 3, "ghost", 0);
        Response r = h.svc.handle_request(ghost, h.request(Codecap{ghost, h.alice}, "READ"),
                                          std::nullopt);
        CHECK(r.status == Status::not_found);
        CHECK(r.message == "unknown object");
    }
    SUBCASE("object verbs need an object-scoped capability") {
        Codecap factory{h.svc.mint_factory(h.alice.public_key(), "1", 3), h.alice};
        Response r = h.call(factory, "READ");
        CHECK(r.status == Status::bad_request);
        CHECK(r.message == "capability is not object-scoped");
    }
    SUBCASE("denials carry the stage label") {
        Codecap narrow{h.svc.mint_for(h.alice.public_key(), "request.type == \"READ\"", 3, id),
                       h.alice};
        Response r = h.call(narrow, "DESTROY");
        CHECK(r.status == Status::denied);
        CHECK(r.message == "denied at rights(1): rights function 1 denied (normal)");
    }
}

TEST_CASE("READ returns state slices and WRITE updates them") {
    Harness h;
    std::string id = h.svc.create_object(bytes_of("0123456789"));
    Codecap cap{h.svc.mint_for(h.alice.public_key(), "1", 3, id), h.alice};

    CHECK(h.call(cap, "READ").payload_text() == "0123456789");
    CHECK(h.call(cap, "READ", {{"offset", std::int64_t(4)}}).payload_text() == "456789");
    CHECK(h.call(cap, "READ", {{"offset", std::int64_t(4)}, {"length", std::int64_t(3)}})
              .payload_text() == "456");
    CHECK(h.call(cap, "READ", {{"offset", std::int64_t(99)}}).payload_text() == "");
    CHECK(h.call(cap, "READ", {{"length", std::int64_t(0)}}).payload_text() == "");
    CHECK(h.call(cap, "READ", {{"offset", std::int64_t(-1)}}).status == Status::bad_request);
    CHECK(h.call(cap, "READ", {{"offset", std::string("4")}}).status == Status::bad_request);

    SUBCASE("whole-object write") {
        CHECK(h.call(cap, "WRITE", {{"value", std::string("fresh")}}).ok());
        CHECK(h.call(cap, "READ").payload_text() == "fresh");
        CHECK(h.svc.object(id)->version == 0);
    }
    SUBCASE("write at an offset extends with zero fill") {
        CHECK(h.call(cap, "WRITE", {{"value", std::string("AB")}, {"offset", std::int64_t(4)}})
                  .ok());
        CHECK(h.call(cap, "READ").payload_text() == "0123AB6789");
        CHECK(h.call(cap, "WRITE", {{"value", bytes_of("ZZ")}, {"offset", std::int64_t(12)}})
                  .ok());
        Bytes state = h.svc.object(id)->state;
        REQUIRE(state.size() == 14);
        CHECK(state[10] == 0);
        CHECK(state[11] == 0);
        CHECK(state[12] == 'Z');
    }
    SUBCASE("write validation") {
        CHECK(h.call(cap, "WRITE", {}).status == Status::bad_request);
        CHECK(h.call(cap, "WRITE", {{"value", std::int64_t(3)}}).status ==
              Status::bad_request);
        CHECK(h.call(cap, "WRITE", {{"value", std::string("x")}, {"offset", std::int64_t(-2)}})
                  .status == Status::bad_request);
    }
    SUBCASE("rights functions can gate on the state snapshot") {
        Codecap guarded{
            h.svc.mint_for(h.alice.public_key(), "state.length == 10 && state.body != \"\"", 3,
                           id),
            h.alice};
        CHECK(h.call(guarded, "READ").ok());
        h.svc.write_object_state(id, bytes_of("longer than ten bytes"));
        CHECK(h.call(guarded, "READ").status == Status::denied);
    }
}

TEST_CASE("DESTROY removes the object for good") {
    Harness h;
    std::string id = h.svc.create_object(bytes_of("doomed"));
    Codecap cap{h.svc.mint_for(h.alice.public_key(), "1", 3, id), h.alice};

    Response r = h.call(cap, "DESTROY");
    CHECK(r.ok());
    CHECK(r.message == "destroyed");
    CHECK_FALSE(h.svc.object(id).has_value());
    CHECK(h.call(cap, "READ").status == Status::not_found);
    CHECK_THROWS_AS(h.svc.create_object(bytes_of("again"), id), Error);
}

TEST_CASE("CREATE mints a fresh object through a factory capability") {
    Harness h;
    Codecap factory{h.svc.mint_factory(h.alice.public_key(), "request.type == \"CREATE\"", 3),
                    h.alice};

    Response r = h.call(factory, "CREATE",
                        {{"rightsForCreator", std::string("len(request.nonce) > 0")},
                         {"pLength", std::int64_t(4)}});
    REQUIRE(r.ok());
    std::string new_id = r.message;
    CHECK(h.svc.object(new_id).has_value());
    CHECK(h.svc.object(new_id)->version == 0);

    Heritage minted = decode_heritage(r.payload_text());
    REQUIRE(minted.size() == 1);
    CHECK(minted.certs[0].subject_pubkey() == h.alice.public_key());
    CHECK(minted.certs[0].get_string(attr::kObjectId) == new_id);
    CHECK(minted.certs[0].p_length() == 4);

    Codecap creator{minted, h.alice};
    CHECK(h.call(creator, "WRITE", {{"value", std::string("mine")}}).ok());
    CHECK(h.call(creator, "READ").payload_text() == "mine");

    SUBCASE("directories are created empty") {
        Response dir = h.call(factory, "CREATE",
                              {{"rightsForCreator", std::string("1")},
                               {"pLength", std::int64_t(4)},
                               {"kind", std::string("directory")}});
        REQUIRE(dir.ok());
        CHECK(is_directory_state(h.svc.object(dir.message)->state));
    }
    SUBCASE("validation failures are 400") {
        CHECK(h.call(factory, "CREATE", {{"pLength", std::int64_t(4)}}).status ==
              Status::bad_request);
        CHECK(h.call(factory, "CREATE", {{"rightsForCreator", std::string("1")}}).status ==
              Status::bad_request);
        CHECK(h.call(factory, "CREATE",
                     {{"rightsForCreator", std::string("1")},
                      {"pLength", std::int64_t(-1)}})
                  .status == Status::bad_request);
        CHECK(h.call(factory, "CREATE",
                     {{"rightsForCreator", std::string("1 +")},
                      {"pLength", std::int64_t(4)}})
                  .status == Status::bad_request);
        CHECK(h.call(factory, "CREATE",
                     {{"rightsForCreator", std::string("1")},
                      {"pLength", std::int64_t(4)},
                      {"kind", std::string("socket")}})
                  .status == Status::bad_request);
    }
    SUBCASE("factories only do what their rights allow") {
        Response other = h.call(factory, "DELEGATEONBEHALF",
                                {{"targetPubkey", h.bob.public_key().hex()},
                                 {"rights", std::string("1")},
                                 {"pLength", std::int64_t(1)}});
        CHECK(other.status == Status::denied);
    }
}

TEST_CASE("BUMPVERSION revokes every outstanding capability") {
    Harness h;
    std::string id = h.svc.create_object(bytes_of("content"));
    Codecap alice_cap{h.svc.mint_for(h.alice.public_key(), "1", 5, id), h.alice};
    Heritage bob_chain = delegate(alice_cap, h.bob.public_key(), "len(request.type) > 0", 2);
    Codecap bob_cap{bob_chain, h.bob};

    CHECK(h.call(alice_cap, "READ").ok());
    CHECK(h.call(bob_cap, "READ").ok());

    Response bumped = h.call(bob_cap, "BUMPVERSION");
    REQUIRE(bumped.ok());
    CHECK(bumped.message == "1");
    CHECK(h.svc.version_of(id) == 1);

    SUBCASE("old capabilities die at the version stage") {
        for (const Codecap* stale : {&alice_cap, &bob_cap}) {
            Response r = h.call(*stale, "READ");
            CHECK(r.status == Status::denied);
            CHECK(r.message ==
                  "denied at version: capability version 0 does not match current version 1");
        }
    }
    SUBCASE("the bumper receives a re-minted root carrying the old restrictions") {
        Heritage fresh = decode_heritage(bumped.payload_text());
        REQUIRE(fresh.size() == 1);
        CHECK(fresh.certs[0].subject_pubkey() == h.bob.public_key());
        CHECK(fresh.certs[0].get_int(attr::kVersion) == 1);
        CHECK(fresh.certs[0].p_length() == 2);
        CHECK(fresh.certs[0].rights_source() == "(1) && (len(request.type) > 0)");
        CHECK(h.call(Codecap{fresh, h.bob}, "READ").ok());
    }
    SUBCASE("program-form rights cannot be combined") {
        Codecap prog{h.svc.mint_for(h.alice.public_key(), "var a = 1; a", 5, id), h.alice};
        Response r = h.call(prog, "BUMPVERSION");
        CHECK(r.status == Status::bad_request);
        CHECK(r.message == "cannot combine program-form rights functions");
        CHECK(h.svc.version_of(id) == 1);
    }
}

TEST_CASE("DELEGATEONBEHALF narrows rights server-side") {
    Harness h;
    std::string id = h.svc.create_object(bytes_of("content"));
    // type is tested first: delegation requests carry no offset attribute,
    // and a member access on a missing field faults.
    Codecap cap{h.svc.mint_for(h.alice.public_key(), "request.type != \"READ\" || "
                                                     "request.offset >= 256",
                               5, id),
                h.alice};

    Response r = h.call(cap, "DELEGATEONBEHALF",
                        {{"targetPubkey", h.bob.public_key().hex()},
                         {"rights", std::string("request.type == \"READ\"")},
                         {"pLength", std::int64_t(2)}});
    REQUIRE(r.ok());
    Heritage minted = decode_heritage(r.payload_text());
    REQUIRE(minted.size() == 1);
    CHECK(minted.certs[0].subject_pubkey() == h.bob.public_key());
    CHECK(minted.certs[0].issuer_pubkey() == h.service_key.public_key());
    CHECK(minted.certs[0].p_length() == 2);
    CHECK(minted.certs[0].rights_source() ==
          "(request.type != \"READ\" || request.offset >= 256) && "
          "(request.type == \"READ\")");

    Codecap bob_cap{minted, h.bob};
    CHECK(h.call(bob_cap, "READ", {{"offset", std::int64_t(300)}}).ok());
    CHECK(h.call(bob_cap, "READ", {{"offset", std::int64_t(0)}}).status == Status::denied);
    CHECK(h.call(bob_cap, "DESTROY").status == Status::denied);

    SUBCASE("parameter validation") {
        CHECK(h.call(cap, "DELEGATEONBEHALF",
                     {{"rights", std::string("1")}, {"pLength", std::int64_t(2)}})
                  .status == Status::bad_request);
        CHECK(h.call(cap, "DELEGATEONBEHALF",
                     {{"targetPubkey", std::string("zz")},
                      {"rights", std::string("1")},
                      {"pLength", std::int64_t(2)}})
                  .status == Status::bad_request);
        CHECK(h.call(cap, "DELEGATEONBEHALF",
                     {{"targetPubkey", h.bob.public_key().hex()},
                      {"rights", std::string("var a = 1; a")},
                      {"pLength", std::int64_t(2)}})
                  .status == Status::bad_request);
        CHECK(h.call(cap, "DELEGATEONBEHALF",
                     {{"targetPubkey", h.bob.public_key().hex()},
                      {"rights", std::string("1")},
                      {"pLength", std::int64_t(5)}})
                  .status == Status::bad_request);
    }
    SUBCASE("service-scoped delegation mints a factory-style root") {
        Codecap factory{h.svc.mint_factory(h.alice.public_key(), "1", 3), h.alice};
        Response svc_del = h.call(factory, "DELEGATEONBEHALF",
                                  {{"targetPubkey", h.bob.public_key().hex()},
                                   {"rights", std::string("request.type == \"CREATE\"")},
                                   {"pLength", std::int64_t(1)}});
        REQUIRE(svc_del.ok());
        Heritage svc_minted = decode_heritage(svc_del.payload_text());
        CHECK(svc_minted.certs[0].find(attr::kObjectId) == nullptr);
        Response created = h.call(Codecap{svc_minted, h.bob}, "CREATE",
                                  {{"rightsForCreator", std::string("1")},
                                   {"pLength", std::int64_t(2)}});
        CHECK(created.ok());
    }
}

TEST_CASE("REGISTERLINK attaches a primary link to the object") {
    Harness h;
    std::string dir_id = h.svc.create_directory("people");
    std::string obj_id = h.svc.create_object(bytes_of("x"), "obj-1");
    Codecap cap{h.svc.mint_for(h.alice.public_key(), "1", 3, obj_id), h.alice};

    Heritage dir_cap = h.svc.mint_for(h.service_key.public_key(), "1", 3, dir_id);
    Response r = h.call(cap, "REGISTERLINK",
                        {{"value", encode_heritage(dir_cap)},
                         {"name", std::string("alice-doc")},
                         {"group", std::string("staff")}});
    REQUIRE(r.ok());
    CHECK(r.message == "link registered");
    auto record = h.svc.object(obj_id);
    REQUIRE(record->primary_links.size() == 1);
    CHECK(record->primary_links[0].row_name == "alice-doc");
    CHECK(record->primary_links[0].group == "staff");
    CHECK(record->primary_links[0].directory_heritage == dir_cap);

    SUBCASE("bad link heritages are rejected") {
        CHECK(h.call(cap, "REGISTERLINK", {{"name", std::string("x")}}).status ==
              Status::bad_request);
        CHECK(h.call(cap, "REGISTERLINK",
                     {{"value", std::string("garbage")}, {"name", std::string("x")}})
                  .status == Status::bad_request);
        Heritage foreign = mint_root(h.service_key, h.bob.public_key(), "1", 3, dir_id, 0);
        Response bad_tail = h.call(cap, "REGISTERLINK",
                                   {{"value", encode_heritage(foreign)},
                                    {"name", std::string("x")}});
        CHECK(bad_tail.status == Status::bad_request);
        CHECK(bad_tail.message == "link heritage must terminate at this service's key");
        CHECK(h.call(cap, "REGISTERLINK",
                     {{"value", encode_heritage(dir_cap)}, {"name", std::string("a/b")}})
                  .status == Status::bad_request);
    }
}

TEST_CASE("directory verbs operate on directory objects") {
    Harness h;
    std::string dir_id = h.svc.create_directory("people");
    Codecap dir_cap{h.svc.mint_for(h.alice.public_key(), "1", 5, dir_id), h.alice};

    Heritage stored = h.svc.mint_for(h.service_key.public_key(), "1", 4, dir_id);
    Response ins = h.call(dir_cap, "INSERT",
                          {{"name", std::string("docs")},
                           {"value", encode_heritage(stored)},
                           {"rights.staff", std::string("request.type == \"READ\"")},
                           {"rights.admins", std::string("1")}});
    REQUIRE(ins.ok());
    CHECK(ins.message == "row inserted");

    SUBCASE("LOOKUP extends the stored heritage for the requester") {
        Response found = h.call(dir_cap, "LOOKUP",
                                {{"name", std::string("docs")},
                                 {"group", std::string("staff")}});
        REQUIRE(found.ok());
        Heritage extended = decode_heritage(found.payload_text());
        REQUIRE(extended.size() == 2);
        CHECK(extended.certs[1].subject_pubkey() == h.alice.public_key());
        CHECK(extended.certs[1].rights_source() == "request.type == \"READ\"");
        CHECK(extended.certs[1].p_length() == 3);
    }
    SUBCASE("missing rows and groups are 404") {
        Response miss = h.call(dir_cap, "LOOKUP",
                               {{"name", std::string("ghost")},
                                {"group", std::string("staff")}});
        CHECK(miss.status == Status::not_found);
        CHECK(miss.message == "no such name");
        Response no_group = h.call(dir_cap, "LOOKUP",
                                   {{"name", std::string("docs")},
                                    {"group", std::string("nobody")}});
        CHECK(no_group.status == Status::not_found);
        CHECK(no_group.message == "no such group");
    }
    SUBCASE("CHMOD rewrites one cell") {
        Response ch = h.call(dir_cap, "CHMOD",
                             {{"row", std::string("docs")},
                              {"group", std::string("staff")},
                              {"value", std::string("0")}});
        REQUIRE(ch.ok());
        Response found = h.call(dir_cap, "LOOKUP",
                                {{"name", std::string("docs")},
                                 {"group", std::string("staff")}});
        Heritage extended = decode_heritage(found.payload_text());
        CHECK(extended.certs[1].rights_source() == "0");
    }
    SUBCASE("LIST prints names and groups") {
        Response ls = h.call(dir_cap, "LIST");
        REQUIRE(ls.ok());
        CHECK(ls.payload_text() == "docs\tadmins,staff\n");
    }
    SUBCASE("REMOVE deletes the row") {
        CHECK(h.call(dir_cap, "REMOVE", {{"name", std::string("docs")}}).ok());
        Response miss = h.call(dir_cap, "LOOKUP",
                               {{"name", std::string("docs")},
                                {"group", std::string("staff")}});
        CHECK(miss.status == Status::not_found);
    }
    SUBCASE("INSERT refuses caps that do not end at this service") {
        Heritage foreign = mint_root(h.service_key, h.bob.public_key(), "1", 4, dir_id, 0);
        Response r = h.call(dir_cap, "INSERT",
                            {{"name", std::string("bad")},
                             {"value", encode_heritage(foreign)}});
        CHECK(r.status == Status::bad_request);
        CHECK(r.message == "cannot extend foreign cap");
    }
    SUBCASE("directory verbs on a plain object are 400") {
        std::string obj = h.svc.create_object(bytes_of("plain"));
        Codecap plain{h.svc.mint_for(h.alice.public_key(), "1", 3, obj), h.alice};
        Response r = h.call(plain, "LIST");
        CHECK(r.status == Status::bad_request);
        CHECK(r.message == "not a directory");
    }
}

TEST_CASE("gc_sweep keeps, destroys, or strands objects by probing links") {
    Harness h;
    std::string dir_id = h.svc.create_directory("people");
    Heritage dir_link = h.svc.mint_for(h.service_key.public_key(), "1", 3, dir_id);

    auto add_row = [&](std::string_view row, std::string_view target_id) {
        DirectoryTable table = decode_table(h.svc.object(dir_id)->state);
        Heritage row_cap = h.svc.mint_for(h.service_key.public_key(), "1", 4, target_id);
        table_insert(table, h.service_key.public_key(), row, row_cap, {});
        h.svc.write_object_state(dir_id, encode_table(table));
    };

    SUBCASE("a reachable row keeps the object alive") {
        std::string id = h.svc.create_object(bytes_of("kept"), "kept-1");
        add_row("kept-row", id);
        h.svc.register_link(id, PrimaryLink{dir_link, "kept-row", ""});
        SweepReport report = h.svc.gc_sweep();
        CHECK(report.persisted == std::vector<std::string>{"kept-1"});
        CHECK(h.svc.object(id).has_value());
    }
    SUBCASE("a vanished row destroys the object") {
        std::string id = h.svc.create_object(bytes_of("gone"), "gone-1");
        h.svc.register_link(id, PrimaryLink{dir_link, "never-inserted", ""});
        SweepReport report = h.svc.gc_sweep();
        CHECK(report.destroyed == std::vector<std::string>{"gone-1"});
        CHECK_FALSE(h.svc.object(id).has_value());
    }
    SUBCASE("a row holding a different object's cap is not a keepalive") {
        std::string id = h.svc.create_object(bytes_of("stale"), "stale-1");
        std::string other = h.svc.create_object(bytes_of("other"), "other-1");
        add_row("stale-row", other);
        h.svc.register_link(id, PrimaryLink{dir_link, "stale-row", ""});
        SweepReport report = h.svc.gc_sweep();
        CHECK(report.destroyed == std::vector<std::string>{"stale-1"});
    }
    SUBCASE("a missing directory strands the object in lost+found") {
        std::string id = h.svc.create_object(bytes_of("orphan"), "orphan-1");
        Heritage dangling =
            mint_root(h.service_key, h.service_key.public_key(), "1", 3, "no-such-dir", 0);
        h.svc.register_link(id, PrimaryLink{dangling, "row", ""});

        SweepReport report = h.svc.gc_sweep();
        CHECK(report.moved_to_lost_found == std::vector<std::string>{"orphan-1"});
        REQUIRE(h.svc.object(id).has_value());

        auto lf = h.svc.object("lost+found");
        REQUIRE(lf.has_value());
        DirectoryTable table = decode_table(lf->state);
        REQUIRE(table.find_row("orphan-1") != nullptr);

        auto record = h.svc.object(id);
        REQUIRE(record->primary_links.size() == 1);
        CHECK(record->primary_links[0].row_name == "orphan-1");
        CHECK(record->primary_links[0]
                  .directory_heritage.certs.front()
                  .get_string(attr::kObjectId) == "lost+found");

        SUBCASE("the lost+found row now keeps it alive") {
            SweepReport second = h.svc.gc_sweep();
            CHECK(second.persisted == std::vector<std::string>{"orphan-1"});
        }
    }
    SUBCASE("foreign-rooted links are unreachable, so the object stays") {
        KeyPair other_svc = seeded_key(128);
        std::string id = h.svc.create_object(bytes_of("remote"), "remote-1");
        Heritage foreign =
            mint_root(other_svc, h.service_key.public_key(), "1", 3, "their-dir", 0);
        h.svc.register_link(id, PrimaryLink{foreign, "row", ""});
        SweepReport report = h.svc.gc_sweep();
        CHECK(report.persisted == std::vector<std::string>{"remote-1"});
        CHECK(h.svc.object(id).has_value());
    }
    SUBCASE("objects without links are not gc candidates") {
        h.svc.create_object(bytes_of("free"), "free-1");
        SweepReport report = h.svc.gc_sweep();
        CHECK(report.persisted.empty());
        CHECK(report.destroyed.empty());
        CHECK(report.moved_to_lost_found.empty());
        CHECK(h.svc.object("free-1").has_value());
    }
    SUBCASE("one live link outweighs any number of dead ones") {
        std::string id = h.svc.create_object(bytes_of("mixed"), "mixed-1");
        add_row("good-row", id);
        h.svc.register_link(id, PrimaryLink{dir_link, "missing-row", ""});
        h.svc.register_link(id, PrimaryLink{dir_link, "good-row", ""});
        SweepReport report = h.svc.gc_sweep();
        CHECK(report.persisted == std::vector<std::string>{"mixed-1"});
    }
    SUBCASE("an injected prober replaces the in-process probe") {
        std::string id = h.svc.create_object(bytes_of("x"), "probed-1");
        h.svc.register_link(id, PrimaryLink{dir_link, "whatever", ""});
        int calls = 0;
        h.svc.set_link_prober([&](const PrimaryLink&) {
            ++calls;
            return ProbeOutcome{ProbeResult::unreachable, std::nullopt};
        });
        SweepReport report = h.svc.gc_sweep();
        CHECK(calls == 1);
        CHECK(report.persisted == std::vector<std::string>{"probed-1"});
    }
}

TEST_CASE("objects persist across service restarts") {
    Harness h;
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / ("codecap-test-" + random_hex(8));
    fs::create_directories(dir);

    ServiceConfig config = Harness::make_config(seeded_key(0));
    config.data_dir = dir;
    {
        ObjectService first(config);
        first.set_clock([] { return kNow; });
        first.create_object(bytes_of("persisted"), "obj-1");
        std::string dir_id = first.create_directory("people");
        Heritage link_cap = first.mint_for(first.public_key(), "1", 3, dir_id);
        first.register_link("obj-1", PrimaryLink{link_cap, "row-1", "staff"});
        first.create_object(bytes_of("doomed"), "obj-2");
        first.write_object_state("obj-2", bytes_of("rewritten"));
        CHECK(fs::exists(dir / "obj-1.obj"));
        CHECK(fs::exists(dir / "obj-2.obj"));
        CHECK(fs::exists(dir / "people.obj"));
    }
    {
        ObjectService second(config);
        auto record = second.object("obj-1");
        REQUIRE(record.has_value());
        CHECK(record->state == bytes_of("persisted"));
        CHECK(record->version == 0);
        CHECK(record->created_at == kNow);
        REQUIRE(record->primary_links.size() == 1);
        CHECK(record->primary_links[0].row_name == "row-1");
        CHECK(record->primary_links[0].group == "staff");
        CHECK(second.object("obj-2")->state == bytes_of("rewritten"));
        CHECK(second.object("people").has_value());

        Codecap cap{second.mint_for(seeded_key(32).public_key(), "1", 3, "obj-1"),
                    seeded_key(32)};
        second.set_clock([] { return kNow; });
        RequestCert destroy = sign_request(
            cap, AttrMap{{"type", std::string("DESTROY")},
                         {std::string(attr::kTimestamp), kNow}});
        CHECK(second.handle_request(cap.heritage, destroy, std::nullopt).ok());
        CHECK_FALSE(fs::exists(dir / "obj-1.obj"));
    }
    {
        ObjectService third(config);
        CHECK_FALSE(third.object("obj-1").has_value());
        CHECK(third.object("obj-2").has_value());
    }
    fs::remove_all(dir);
}

TEST_CASE("the store survives concurrent request traffic") {
    Harness h;
    std::string id = h.svc.create_object(bytes_of("seed"));
    const int threads = 4;
    const int per_thread = 25;
    std::atomic<int> failures{0};

    std::vector<std::thread> workers;
    for (int t = 0; t < threads; ++t) {
        workers.emplace_back([&, t] {
            KeyPair key = seeded_key(static_cast<std::uint8_t>(32 + t));
            Codecap cap{h.svc.mint_for(key.public_key(), "1", 3, id), key};
            for (int i = 0; i < per_thread; ++i) {
                AttrMap extra;
                if (i % 2 == 0) {
                    extra["value"] = "t" + std::to_string(t) + "-" + std::to_string(i);
                }
                Response r = h.call(cap, i % 2 == 0 ? "WRITE" : "READ", std::move(extra));
                if (!r.ok()) failures.fetch_add(1);
            }
        });
    }
    for (auto& w : workers) w.join();
    CHECK(failures.load() == 0);

    Bytes state = h.svc.object(id)->state;
    std::string final_state(state.begin(), state.end());
    CHECK(final_state.substr(0, 1) == "t");
}
