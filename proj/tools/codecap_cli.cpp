/*
 * Copyright (C) 2026 Codecap Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

/*
 * The codecap command-line tool: key management, minting, delegation,
 * inspection, validation, signed requests over the wire, directory
 * manipulation, serving, and garbage collection.
 *
 * Exit codes: 0 success, 1 denial or remote failure, 2 usage/parse errors.
 */

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <sys/stat.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "codecap/codecap.hpp"
#include "codecap/dir_client.hpp"
#include "codecap/object_service.hpp"
#include "codecap/wire.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace codecap;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDeny = 1;
constexpr int kExitUsage = 2;

// Input problems: missing files, unparseable artifacts, malformed flags.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The operation ran and was refused (validation failure, non-200 response).
struct DenyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::optional<fs::path> config_home() {
    const char* home = std::getenv("CODECAP_HOME");
    if (home == nullptr || *home == '\0') return std::nullopt;
    return fs::path(home);
}

// Relative input paths that do not exist in the working directory fall back
// to CODECAP_HOME.
fs::path resolve_input(const std::string& path) {
    fs::path p(path);
    if (fs::exists(p) || p.is_absolute()) return p;
    if (auto home = config_home()) {
        fs::path candidate = *home / p;
        if (fs::exists(candidate)) return candidate;
    }
    return p;
}

std::string read_file(const std::string& path) {
    fs::path resolved = resolve_input(path);
    std::ifstream in(resolved, std::ios::binary);
    if (!in) throw UsageError("cannot read '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const fs::path& path, std::string_view content, bool owner_only) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write '" + path.string() + "'");
    out << content;
    out.close();
    if (owner_only) ::chmod(path.c_str(), S_IRUSR | S_IWUSR);
}

std::string trimmed(std::string text) {
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r' || text.back() == ' ')) {
        text.pop_back();
    }
    std::size_t start = 0;
    while (start < text.size() && (text[start] == ' ' || text[start] == '\n' || text[start] == '\r')) {
        ++start;
    }
    return text.substr(start);
}

KeyPair load_key(const std::string& path) {
    std::string key_path = path;
    if (key_path.empty()) {
        if (auto home = config_home()) {
            fs::path fallback = *home / "identity.key";
            if (fs::exists(fallback)) key_path = fallback.string();
        }
        if (key_path.empty()) {
            throw UsageError("missing --key (no CODECAP_HOME/identity.key fallback found)");
        }
    }
    try {
        return KeyPair::from_seed_hex(trimmed(read_file(key_path)));
    } catch (const Error& e) {
        throw UsageError("key file '" + key_path + "': " + e.what());
    }
}

Heritage load_heritage(const std::string& path) {
    try {
        return decode_heritage(read_file(path));
    } catch (const Error& e) {
        throw UsageError("heritage file '" + path + "': " + e.what());
    }
}

PublicKey parse_pubkey(const std::string& hex, const char* flag) {
    auto key = PublicKey::try_from_hex(trimmed(hex));
    if (!key) throw UsageError(std::string(flag) + ": expected 64 hex characters");
    return *key;
}

std::string load_rights(const std::string& path) {
    std::string src = read_file(path);
    try {
        rfl::parse_program(src);
    } catch (const rfl::ParseError& e) {
        throw UsageError("rights file '" + path + "' does not parse: " + e.what());
    }
    return src;
}

struct Endpoint {
    std::string host;
    int port = 0;
};

Endpoint parse_endpoint(const std::string& text, bool allow_ephemeral = false) {
    auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
        throw UsageError("--endpoint must be host:port");
    }
    Endpoint ep;
    ep.host = text.substr(0, colon);
    try {
        ep.port = std::stoi(text.substr(colon + 1));
    } catch (const std::exception&) {
        throw UsageError("--endpoint must be host:port");
    }
    int min_port = allow_ephemeral ? 0 : 1;
    if (ep.port < min_port || ep.port > 65535) throw UsageError("--endpoint port out of range");
    return ep;
}

PublicKey heritage_root(const Heritage& h) {
    if (h.empty()) throw UsageError("heritage is empty");
    auto root = h.certs.front().issuer_pubkey();
    if (!root) throw UsageError("heritage has no well-formed root key");
    return *root;
}

void emit_heritage(const Heritage& h, const std::string& out_path, bool machine) {
    std::string armor = encode_heritage(h);
    if (!out_path.empty()) {
        write_file(out_path, armor, false);
        if (machine) {
            std::cout << json{{"ok", true}, {"certs", h.size()}, {"out", out_path}} << "\n";
        } else {
            std::cerr << "wrote " << h.size() << "-certificate heritage to " << out_path << "\n";
        }
        return;
    }
    if (machine) {
        std::cout << json{{"ok", true}, {"certs", h.size()}, {"heritage", armor}} << "\n";
    } else {
        std::cout << armor;
    }
}

std::string cert_summary_rights(const std::string& src, bool full) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= src.size()) {
        auto nl = src.find('\n', start);
        if (nl == std::string::npos) {
            lines.emplace_back(src.substr(start));
            break;
        }
        lines.emplace_back(src.substr(start, nl - start));
        start = nl + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    constexpr std::size_t kMaxLines = 10;
    std::string out;
    std::size_t shown = (full || lines.size() <= kMaxLines) ? lines.size() : kMaxLines;
    for (std::size_t i = 0; i < shown; ++i) {
        out += "    | " + lines[i] + "\n";
    }
    if (shown < lines.size()) {
        out += "    | ... (" + std::to_string(lines.size() - shown) +
               " more lines; pass --full-rights)\n";
    }
    return out;
}

// Attribute plumbing shared by `request` and `bump`.
struct RequestFlags {
    std::string type;
    std::vector<std::string> string_attrs;
    std::vector<std::string> int_attrs;
    std::optional<std::int64_t> offset;
    std::optional<std::int64_t> length;
    std::string name;
    std::string group;
    std::string row;
    std::string value;
    std::string value_file;
    std::string payload_file;
    std::string session;
};

AttrMap build_request_attrs(const RequestFlags& flags) {
    AttrMap attrs;
    attrs["type"] = flags.type;
    auto split_pair = [](const std::string& text, const char* flag) {
        auto eq = text.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw UsageError(std::string(flag) + " expects name=value");
        }
        return std::pair{text.substr(0, eq), text.substr(eq + 1)};
    };
    for (const auto& kv : flags.string_attrs) {
        auto [k, v] = split_pair(kv, "--attr");
        attrs[k] = v;
    }
    for (const auto& kv : flags.int_attrs) {
        auto [k, v] = split_pair(kv, "--int-attr");
        try {
            attrs[k] = static_cast<std::int64_t>(std::stoll(v));
        } catch (const std::exception&) {
            throw UsageError("--int-attr " + k + ": '" + v + "' is not an integer");
        }
    }
    if (flags.offset) attrs["offset"] = *flags.offset;
    if (flags.length) attrs["length"] = *flags.length;
    if (!flags.name.empty()) attrs["name"] = flags.name;
    if (!flags.group.empty()) attrs["group"] = flags.group;
    if (!flags.row.empty()) attrs["row"] = flags.row;
    if (!flags.value.empty()) attrs["value"] = flags.value;
    if (!flags.value_file.empty()) attrs["value"] = read_file(flags.value_file);
    return attrs;
}

WireResponse send_request(const Endpoint& ep, const std::string& root_pub_hex, const Codecap& cap,
                          const AttrMap& attrs, const RequestFlags& flags) {
    PublicKey server = heritage_root(cap.heritage);
    if (!root_pub_hex.empty()) {
        PublicKey expected = parse_pubkey(root_pub_hex, "--root-pub");
        if (expected != server) {
            throw UsageError("--root-pub does not match the heritage root");
        }
    }
    CallOptions options;
    if (!flags.session.empty()) options.session = flags.session;
    if (!flags.payload_file.empty()) {
        std::string payload = read_file(flags.payload_file);
        options.payload = Bytes(payload.begin(), payload.end());
    }
    try {
        return tcp_call(ep.host, ep.port, server, cap, attrs, options);
    } catch (const Error& e) {
        throw DenyError(e.what());
    }
}

int report_response(const WireResponse& response, bool machine, bool payload_is_heritage,
                    const std::string& out_path) {
    if (machine) {
        json record{{"status", response.status}, {"ok", response.ok()}};
        if (!response.message().empty()) record["message"] = response.message();
        if (auto session = response.session()) record["session"] = *session;
        if (auto realm = response.realm()) record["realm"] = *realm;
        if (!response.payload.empty()) record["payload"] = response.payload_text();
        if (!out_path.empty() && response.ok()) {
            write_file(out_path, response.payload_text(), false);
            record["out"] = out_path;
        }
        std::cout << record << "\n";
        return response.ok() ? kExitOk : kExitDeny;
    }
    if (!response.ok()) {
        std::cerr << "status " << response.status;
        if (!response.message().empty()) std::cerr << ": " << response.message();
        std::cerr << "\n";
        return kExitDeny;
    }
    if (auto session = response.session()) std::cerr << "session: " << *session << "\n";
    if (!out_path.empty()) {
        write_file(out_path, response.payload_text(), false);
        std::cerr << "wrote payload to " << out_path << "\n";
    } else if (!response.payload.empty()) {
        std::cout << response.payload_text();
        if (payload_is_heritage || response.payload.back() != '\n') {
            if (response.payload.back() != '\n') std::cout << "\n";
        }
    }
    return kExitOk;
}

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop = true; }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"codecap: capability chains with executable rights functions"};
    app.require_subcommand(1);

    bool machine = false;
    app.add_flag("--machine", machine, "Emit one JSON record per result");

    // keygen
    auto* keygen = app.add_subcommand("keygen", "Generate a signing key pair");
    std::string keygen_out;
    bool keygen_force = false;
    keygen->add_option("--out", keygen_out, "Key file path (default CODECAP_HOME/identity.key)");
    keygen->add_flag("--force", keygen_force, "Overwrite an existing key file");

    // mint
    auto* mint = app.add_subcommand("mint", "Mint a root capability as a service");
    std::string mint_key, mint_subject_pub, mint_rights, mint_object, mint_out;
    std::string mint_subject_name, mint_issuer_name, mint_serial;
    std::int64_t mint_plength = 0, mint_version = 0;
    mint->add_option("--key", mint_key, "Service private key file");
    mint->add_option("--subject-pub", mint_subject_pub, "Recipient public key (hex)")->required();
    mint->add_option("--rights-file", mint_rights, "Rights function source file")->required();
    mint->add_option("--plength", mint_plength, "Delegation budget")->required();
    mint->add_option("--object-id", mint_object, "Object the cap is scoped to");
    mint->add_option("--version", mint_version, "Object version the cap is minted at");
    mint->add_option("--subject-name", mint_subject_name, "Display name for the subject");
    mint->add_option("--issuer-name", mint_issuer_name, "Display name for the issuer");
    mint->add_option("--serial", mint_serial, "Serial attribute (default: random)");
    mint->add_option("--out", mint_out, "Write the heritage here instead of stdout");

    // delegate
    auto* del = app.add_subcommand("delegate", "Extend a heritage for another principal");
    std::string del_key, del_cap, del_target, del_rights, del_out, del_subject_name, del_serial;
    std::int64_t del_plength = 0;
    bool del_confine = false;
    del->add_option("--key", del_key, "Holder private key file");
    del->add_option("--cap", del_cap, "Heritage file to extend")->required();
    del->add_option("--target-pub", del_target, "Recipient public key (hex)")->required();
    del->add_option("--rights-file", del_rights, "Rights function source file")->required();
    del->add_option("--plength", del_plength, "Delegation budget for the new certificate")
        ->required();
    del->add_flag("--confine", del_confine, "Wrap the rights function so the recipient cannot delegate");
    del->add_option("--subject-name", del_subject_name, "Display name for the recipient");
    del->add_option("--serial", del_serial, "Serial attribute (default: random)");
    del->add_option("--out", del_out, "Write the heritage here instead of stdout");

    // confine
    auto* conf = app.add_subcommand("confine", "Wrap a rights function for no-delegation use");
    std::string conf_rights;
    conf->add_option("--rights-file", conf_rights, "Rights function source file")->required();

    // amplify
    auto* amp = app.add_subcommand("amplify", "Truncate a heritage at your own certificate");
    std::string amp_key, amp_cap, amp_out;
    amp->add_option("--key", amp_key, "Holder private key file");
    amp->add_option("--cap", amp_cap, "Heritage file")->required();
    amp->add_option("--out", amp_out, "Write the heritage here instead of stdout");

    // inspect
    auto* insp = app.add_subcommand("inspect", "Pretty-print a heritage");
    std::string insp_cap;
    bool insp_full = false;
    insp->add_option("--cap", insp_cap, "Heritage file")->required();
    insp->add_flag("--full-rights", insp_full, "Print rights sources in full");

    // validate
    auto* val = app.add_subcommand("validate", "Check a heritage against a root key");
    std::string val_cap, val_root;
    std::optional<std::int64_t> val_now;
    val->add_option("--cap", val_cap, "Heritage file")->required();
    val->add_option("--root-pub", val_root, "Service root public key (hex)")->required();
    val->add_option("--now", val_now, "Validation clock (seconds since epoch)");

    // request
    auto* req = app.add_subcommand("request", "Sign a request and send it over the wire");
    std::string req_key, req_cap, req_endpoint, req_root, req_out;
    RequestFlags req_flags;
    req->add_option("--key", req_key, "Private key file");
    req->add_option("--cap", req_cap, "Heritage file")->required();
    req->add_option("--endpoint", req_endpoint, "Service endpoint host:port")->required();
    req->add_option("--root-pub", req_root, "Expected service key (hex); defaults to the heritage root");
    req->add_option("--type", req_flags.type, "Request type (READ, WRITE, ...)")->required();
    req->add_option("--attr", req_flags.string_attrs, "Extra string attribute name=value");
    req->add_option("--int-attr", req_flags.int_attrs, "Extra integer attribute name=value");
    req->add_option("--offset", req_flags.offset, "offset attribute");
    req->add_option("--length", req_flags.length, "length attribute");
    req->add_option("--name", req_flags.name, "name attribute");
    req->add_option("--group", req_flags.group, "group attribute");
    req->add_option("--row", req_flags.row, "row attribute");
    req->add_option("--value", req_flags.value, "value attribute");
    req->add_option("--value-file", req_flags.value_file, "Read the value attribute from a file");
    req->add_option("--payload-file", req_flags.payload_file, "Frame payload file");
    req->add_option("--session", req_flags.session, "Send a session token instead of the heritage");
    req->add_option("--out", req_out, "Write the response payload here");

    // bump
    auto* bump = app.add_subcommand("bump", "Bump an object's version, revoking outstanding caps");
    std::string bump_key, bump_cap, bump_endpoint, bump_root, bump_out;
    bump->add_option("--key", bump_key, "Private key file");
    bump->add_option("--cap", bump_cap, "Heritage file")->required();
    bump->add_option("--endpoint", bump_endpoint, "Service endpoint host:port")->required();
    bump->add_option("--root-pub", bump_root, "Expected service key (hex)");
    bump->add_option("--out", bump_out, "Write the fresh heritage here instead of stdout");

    // dir
    auto* dir = app.add_subcommand("dir", "Directory operations");
    dir->require_subcommand(1);
    std::string dir_key, dir_cap, dir_endpoint, dir_home;
    dir->add_option("--key", dir_key, "Private key file")->force_callback();
    dir->add_option("--cap", dir_cap, "Directory heritage file (working directory)");
    dir->add_option("--endpoint", dir_endpoint, "Directory service endpoint host:port");
    dir->add_option("--home-cap", dir_home, "Home directory heritage (defaults to --cap)");

    auto* dl = dir->add_subcommand("lookup", "Look a name up, receiving a delegated heritage");
    std::string dl_name, dl_group, dl_out;
    dl->add_option("name", dl_name, "Row name")->required();
    dl->add_option("--group", dl_group, "Rights group")->required();
    dl->add_option("--out", dl_out, "Write the heritage here instead of stdout");

    auto* dc = dir->add_subcommand("chmod", "Replace one row's rights function for a group");
    std::string dc_row, dc_group, dc_rights;
    dc->add_option("row", dc_row, "Row name")->required();
    dc->add_option("--group", dc_group, "Rights group")->required();
    dc->add_option("--rights-file", dc_rights, "Rights function source file")->required();

    auto* di = dir->add_subcommand("insert", "Insert or replace a row");
    std::string di_name, di_target;
    std::vector<std::string> di_rights;
    di->add_option("name", di_name, "Row name")->required();
    di->add_option("--target-cap", di_target, "Heritage to store in the row")->required();
    di->add_option("--rights", di_rights, "group=rights-file column (repeatable)");

    auto* dr = dir->add_subcommand("remove", "Remove a row");
    std::string dr_name;
    dr->add_option("name", dr_name, "Row name")->required();

    auto* dls = dir->add_subcommand("list", "List rows and their groups");

    auto* dres = dir->add_subcommand("resolve", "Resolve a path of names to a heritage");
    std::string dres_path, dres_group, dres_out;
    dres->add_option("path", dres_path, "Path, '/'-separated; leading '/' starts at home")
        ->required();
    dres->add_option("--group", dres_group, "Rights group for every step")->required();
    dres->add_option("--out", dres_out, "Write the heritage here instead of stdout");

    auto* dcd = dir->add_subcommand("chdir", "Resolve a path and emit the new working directory");
    std::string dcd_path, dcd_group, dcd_out;
    dcd->add_option("path", dcd_path, "Path to change to")->required();
    dcd->add_option("--group", dcd_group, "Rights group for every step")->required();
    dcd->add_option("--out", dcd_out, "Write the working heritage here instead of stdout");

    // serve
    auto* serve = app.add_subcommand("serve", "Run an object service on a TCP endpoint");
    std::string serve_key, serve_subject, serve_listen = "127.0.0.1:0", serve_data, serve_port_file;
    std::vector<std::string> serve_create, serve_create_dir, serve_mint;
    serve->add_option("--key", serve_key, "Service private key file");
    serve->add_option("--subject", serve_subject, "Service subject (challenge realm)")->required();
    serve->add_option("--listen", serve_listen, "host:port to listen on (port 0 picks one)");
    serve->add_option("--data-dir", serve_data, "Persist objects under this directory");
    serve->add_option("--port-file", serve_port_file, "Write the bound port to this file");
    serve->add_option("--create", serve_create, "Bootstrap object id=state-file (repeatable)");
    serve->add_option("--create-dir", serve_create_dir, "Bootstrap directory id (repeatable)");
    serve->add_option("--mint", serve_mint,
                      "Bootstrap cap subject-pub:plength:rights-file[:object-id], printed to stdout");

    // gc
    auto* gc = app.add_subcommand("gc", "Run one garbage-collection sweep over a data directory");
    std::string gc_key, gc_subject, gc_data;
    gc->add_option("--key", gc_key, "Service private key file");
    gc->add_option("--subject", gc_subject, "Service subject")->required();
    gc->add_option("--data-dir", gc_data, "Object store directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (*keygen) {
            std::string out = keygen_out;
            if (out.empty()) {
                auto home = config_home();
                out = home ? (*home / "identity.key").string() : "identity.key";
            }
            if (fs::exists(out) && !keygen_force) {
                throw UsageError("'" + out + "' exists; pass --force to overwrite");
            }
            KeyPair key = KeyPair::generate();
            write_file(out, key.seed_hex() + "\n", true);
            if (machine) {
                std::cout << json{{"ok", true},
                                  {"pubkey", key.public_key().hex()},
                                  {"key_file", out}}
                          << "\n";
            } else {
                std::cout << key.public_key().hex() << "\n";
                std::cerr << "wrote private key to " << out << "\n";
            }
            return kExitOk;
        }

        if (*mint) {
            KeyPair key = load_key(mint_key);
            PublicKey subject = parse_pubkey(mint_subject_pub, "--subject-pub");
            std::string rights = load_rights(mint_rights);
            MintOptions options;
            if (!mint_subject_name.empty()) options.subject_name = mint_subject_name;
            if (!mint_issuer_name.empty()) options.issuer_name = mint_issuer_name;
            if (!mint_serial.empty()) options.serial = mint_serial;
            Heritage h;
            try {
                h = mint_object.empty()
                        ? mint_service_root(key, subject, rights, mint_plength, options)
                        : mint_root(key, subject, rights, mint_plength, mint_object, mint_version,
                                    options);
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
            emit_heritage(h, mint_out, machine);
            return kExitOk;
        }

        if (*del) {
            Codecap cap{load_heritage(del_cap), load_key(del_key)};
            PublicKey target = parse_pubkey(del_target, "--target-pub");
            std::string rights = load_rights(del_rights);
            if (del_confine) rights = confine(rights);
            MintOptions options;
            if (!del_subject_name.empty()) options.subject_name = del_subject_name;
            if (!del_serial.empty()) options.serial = del_serial;
            Heritage h;
            try {
                h = delegate(cap, target, rights, del_plength, options);
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
            emit_heritage(h, del_out, machine);
            return kExitOk;
        }

        if (*conf) {
            std::string wrapped;
            try {
                wrapped = confine(load_rights(conf_rights));
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
            if (machine) {
                std::cout << json{{"ok", true}, {"rights", wrapped}} << "\n";
            } else {
                std::cout << wrapped << "\n";
            }
            return kExitOk;
        }

        if (*amp) {
            KeyPair key = load_key(amp_key);
            Heritage h = load_heritage(amp_cap);
            Heritage mine;
            try {
                mine = amplify(h, key).heritage;
            } catch (const Error& e) {
                throw DenyError(e.what());
            }
            emit_heritage(mine, amp_out, machine);
            return kExitOk;
        }

        if (*insp) {
            Heritage h = load_heritage(insp_cap);
            if (machine) {
                json certs = json::array();
                for (const auto& cert : h.certs) {
                    json record;
                    for (const auto& [name, value] : cert.attrs) {
                        if (const auto* s = std::get_if<std::string>(&value)) record[name] = *s;
                        if (const auto* i = std::get_if<std::int64_t>(&value)) record[name] = *i;
                        if (const auto* b = std::get_if<bool>(&value)) record[name] = *b;
                    }
                    certs.push_back(std::move(record));
                }
                std::cout << json{{"certs", std::move(certs)}} << "\n";
                return kExitOk;
            }
            for (std::size_t i = 0; i < h.certs.size(); ++i) {
                const Certificate& cert = h.certs[i];
                std::cout << "certificate " << (i + 1) << "\n";
                auto field = [&](std::string_view label, std::optional<std::string> value) {
                    if (value) std::cout << "  " << label << " " << *value << "\n";
                };
                auto subject = cert.subject_pubkey();
                auto issuer = cert.issuer_pubkey();
                field("subject ", subject ? std::optional(subject->hex()) : std::nullopt);
                field("issuer  ", issuer ? std::optional(issuer->hex()) : std::nullopt);
                if (auto p = cert.p_length()) std::cout << "  pLength  " << *p << "\n";
                field("serial  ", cert.get_string(attr::kSerial));
                field("subjectName", cert.get_string(attr::kSubjectName));
                field("issuerName ", cert.get_string(attr::kIssuerName));
                field("objectId", cert.get_string(attr::kObjectId));
                if (auto v = cert.get_int(attr::kVersion)) std::cout << "  version  " << *v << "\n";
                if (auto nb = cert.get_int(attr::kNotBefore)) {
                    std::cout << "  notBefore " << *nb << "\n";
                }
                if (auto na = cert.get_int(attr::kNotAfter)) std::cout << "  notAfter  " << *na << "\n";
                std::cout << "  rights\n" << cert_summary_rights(cert.rights_source(), insp_full);
            }
            return kExitOk;
        }

        if (*val) {
            Heritage h = load_heritage(val_cap);
            PublicKey root = parse_pubkey(val_root, "--root-pub");
            ValidationReport report =
                validate_heritage(root, h, val_now.value_or(unix_now()));
            if (machine) {
                json record{{"ok", report.ok()}};
                if (!report.ok()) {
                    record["check"] = std::string(heritage_check_name(report.failing_check));
                    record["cert"] = report.cert_index;
                    record["detail"] = report.detail;
                }
                std::cout << record << "\n";
                return report.ok() ? kExitOk : kExitDeny;
            }
            if (report.ok()) {
                std::cout << "heritage valid (" << h.size() << " certificates)\n";
                return kExitOk;
            }
            std::cerr << heritage_check_name(report.failing_check) << " at cert "
                      << report.cert_index;
            if (!report.detail.empty()) std::cerr << ": " << report.detail;
            std::cerr << "\n";
            return kExitDeny;
        }

        if (*req) {
            Codecap cap{load_heritage(req_cap), load_key(req_key)};
            Endpoint ep = parse_endpoint(req_endpoint);
            AttrMap attrs = build_request_attrs(req_flags);
            WireResponse response = send_request(ep, req_root, cap, attrs, req_flags);
            return report_response(response, machine, false, req_out);
        }

        if (*bump) {
            Codecap cap{load_heritage(bump_cap), load_key(bump_key)};
            Endpoint ep = parse_endpoint(bump_endpoint);
            RequestFlags flags;
            flags.type = "BUMPVERSION";
            AttrMap attrs = build_request_attrs(flags);
            WireResponse response = send_request(ep, bump_root, cap, attrs, flags);
            return report_response(response, machine, true, bump_out);
        }

        if (*dir) {
            if (dir_cap.empty()) throw UsageError("dir: missing --cap");
            if (dir_endpoint.empty()) throw UsageError("dir: missing --endpoint");
            KeyPair key = load_key(dir_key);
            Codecap working{load_heritage(dir_cap), key};
            Endpoint ep = parse_endpoint(dir_endpoint);
            Network net = tcp_network(ep.host, ep.port, key);
            auto deny_wrap = [](auto&& fn) -> decltype(auto) {
                try {
                    return fn();
                } catch (const Error& e) {
                    throw DenyError(e.what());
                }
            };
            if (*dl) {
                Heritage h = deny_wrap([&] { return dir_lookup(net, working, dl_name, dl_group); });
                emit_heritage(h, dl_out, machine);
                return kExitOk;
            }
            if (*dc) {
                std::string rights = load_rights(dc_rights);
                deny_wrap([&] { dir_chmod(net, working, dc_row, dc_group, rights); return 0; });
                if (machine) std::cout << json{{"ok", true}} << "\n";
                return kExitOk;
            }
            if (*di) {
                Heritage target = load_heritage(di_target);
                std::map<std::string, std::string> group_rights;
                for (const auto& spec : di_rights) {
                    auto eq = spec.find('=');
                    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
                        throw UsageError("--rights expects group=rights-file");
                    }
                    group_rights[spec.substr(0, eq)] = load_rights(spec.substr(eq + 1));
                }
                deny_wrap([&] { dir_insert(net, working, di_name, target, group_rights); return 0; });
                if (machine) std::cout << json{{"ok", true}} << "\n";
                return kExitOk;
            }
            if (*dr) {
                deny_wrap([&] { dir_remove(net, working, dr_name); return 0; });
                if (machine) std::cout << json{{"ok", true}} << "\n";
                return kExitOk;
            }
            if (*dls) {
                auto entries = deny_wrap([&] { return dir_list(net, working); });
                if (machine) {
                    json rows = json::array();
                    for (const auto& entry : entries) {
                        rows.push_back(json{{"name", entry.name}, {"groups", entry.groups}});
                    }
                    std::cout << json{{"rows", std::move(rows)}} << "\n";
                } else {
                    for (const auto& entry : entries) {
                        std::cout << entry.name;
                        for (std::size_t i = 0; i < entry.groups.size(); ++i) {
                            std::cout << (i == 0 ? "\t" : ",") << entry.groups[i];
                        }
                        std::cout << "\n";
                    }
                }
                return kExitOk;
            }
            Codecap home = dir_home.empty() ? working : Codecap{load_heritage(dir_home), key};
            ClientDirState state{std::move(home), std::move(working)};
            if (*dres) {
                Heritage h =
                    deny_wrap([&] { return resolve_path(net, state, dres_path, dres_group); });
                emit_heritage(h, dres_out, machine);
                return kExitOk;
            }
            if (*dcd) {
                ClientDirState next =
                    deny_wrap([&] { return chdir(net, state, dcd_path, dcd_group); });
                emit_heritage(next.working.heritage, dcd_out, machine);
                return kExitOk;
            }
        }

        if (*serve) {
            KeyPair key = load_key(serve_key);
            ServiceConfig config{.service_key = key, .subject = serve_subject};
            if (!serve_data.empty()) config.data_dir = serve_data;
            ObjectService service(std::move(config));
            for (const auto& spec : serve_create) {
                auto eq = spec.find('=');
                std::string id = eq == std::string::npos ? spec : spec.substr(0, eq);
                Bytes state;
                if (eq != std::string::npos && eq + 1 < spec.size()) {
                    std::string text = read_file(spec.substr(eq + 1));
                    state = Bytes(text.begin(), text.end());
                }
                if (id.empty()) throw UsageError("--create expects id[=state-file]");
                if (!service.object(id)) service.create_object(std::move(state), id);
            }
            for (const auto& id : serve_create_dir) {
                if (!service.object(id)) service.create_directory(id);
            }
            Endpoint ep = parse_endpoint(serve_listen.find(':') == std::string::npos
                                             ? serve_listen + ":0"
                                             : serve_listen,
                                         true);
            for (const auto& spec : serve_mint) {
                std::vector<std::string> parts;
                std::size_t start = 0;
                while (start <= spec.size()) {
                    auto colon = spec.find(':', start);
                    if (colon == std::string::npos) {
                        parts.push_back(spec.substr(start));
                        break;
                    }
                    parts.push_back(spec.substr(start, colon - start));
                    start = colon + 1;
                }
                if (parts.size() != 3 && parts.size() != 4) {
                    throw UsageError("--mint expects subject-pub:plength:rights-file[:object-id]");
                }
                PublicKey subject = parse_pubkey(parts[0], "--mint subject");
                std::int64_t plength = 0;
                try {
                    plength = std::stoll(parts[1]);
                } catch (const std::exception&) {
                    throw UsageError("--mint plength '" + parts[1] + "' is not an integer");
                }
                std::string rights = load_rights(parts[2]);
                Heritage h = parts.size() == 4
                                 ? service.mint_for(subject, rights, plength, parts[3])
                                 : service.mint_factory(subject, rights, plength);
                std::cout << encode_heritage(h);
            }
            std::cout.flush();

            struct PortBoundServer {
                TcpServer server;
            } bound{TcpServer(service, ep.host, ep.port == 0 ? 0 : ep.port)};
            std::cerr << "listening on " << ep.host << ":" << bound.server.port() << " as "
                      << key.public_key().hex() << "\n";
            if (!serve_port_file.empty()) {
                write_file(serve_port_file, std::to_string(bound.server.port()) + "\n", false);
            }
            std::signal(SIGINT, handle_signal);
            std::signal(SIGTERM, handle_signal);
            while (!g_stop) {
                std::this_thread::sleep_for(std::chrono::milliseconds(100));
            }
            bound.server.stop();
            return kExitOk;
        }

        if (*gc) {
            KeyPair key = load_key(gc_key);
            ServiceConfig config{.service_key = key, .subject = gc_subject};
            config.data_dir = gc_data;
            ObjectService service(std::move(config));
            SweepReport report = service.gc_sweep();
            if (machine) {
                std::cout << json{{"persisted", report.persisted},
                                  {"destroyed", report.destroyed},
                                  {"moved_to_lost_found", report.moved_to_lost_found}}
                          << "\n";
            } else {
                for (const auto& id : report.destroyed) std::cout << "destroyed " << id << "\n";
                for (const auto& id : report.moved_to_lost_found) {
                    std::cout << "moved to lost+found " << id << "\n";
                }
                std::cout << report.persisted.size() << " persisted, " << report.destroyed.size()
                          << " destroyed, " << report.moved_to_lost_found.size()
                          << " moved to lost+found\n";
            }
            return kExitOk;
        }
    } catch (const UsageError& e) {
        if (machine) {
            std::cout << json{{"ok", false}, {"error", e.what()}, {"kind", "usage"}} << "\n";
        } else {
            std::cerr << "error: " << e.what() << "\n";
        }
        return kExitUsage;
    } catch (const DenyError& e) {
        if (machine) {
            std::cout << json{{"ok", false}, {"error", e.what()}, {"kind", "deny"}} << "\n";
        } else {
            std::cerr << e.what() << "\n";
        }
        return kExitDeny;
    } catch (const Error& e) {
        if (machine) {
            std::cout << json{{"ok", false}, {"error", e.what()}, {"kind", "error"}} << "\n";
        } else {
            std::cerr << "error: " << e.what() << "\n";
        }
        return kExitDeny;
    }

    std::cerr << "no subcommand\n";
    return kExitUsage;
}
