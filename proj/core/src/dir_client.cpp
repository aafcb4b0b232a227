/*
 * Copyright (C) 2026 Codecap Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "codecap/dir_client.hpp"

#include "codecap/error.hpp"

namespace codecap {

namespace {

PublicKey root_of(const Codecap& dc) {
    if (dc.heritage.empty()) throw Error("directory codecap has an empty heritage");
    auto root = dc.heritage.certs.front().issuer_pubkey();
    if (!root) throw Error("directory codecap has no well-formed root key");
    return *root;
}

Response call(const Network& net, const Codecap& dc, AttrMap attrs) {
    RequestCert request = sign_request(dc, std::move(attrs));
    return net(root_of(dc), dc.heritage, request);
}

[[noreturn]] void raise(const Response& response) {
    if (!response.message.empty()) throw Error(response.message);
    throw Error("request failed with status " +
                std::to_string(static_cast<int>(response.status)));
}

} // namespace

Heritage dir_lookup(const Network& net, const Codecap& dc, std::string_view name,
                    std::string_view group) {
    AttrMap attrs;
    attrs["type"] = std::string("LOOKUP");
    attrs["name"] = std::string(name);
    attrs["group"] = std::string(group);
    Response response = call(net, dc, std::move(attrs));
    if (!response.ok()) raise(response);
    return decode_heritage(response.payload_text());
}

void dir_chmod(const Network& net, const Codecap& dc, std::string_view row,
               std::string_view group, std::string_view rights_src) {
    AttrMap attrs;
    attrs["type"] = std::string("CHMOD");
    attrs["row"] = std::string(row);
    attrs["group"] = std::string(group);
    attrs["value"] = std::string(rights_src);
    Response response = call(net, dc, std::move(attrs));
    if (!response.ok()) raise(response);
}

void dir_insert(const Network& net, const Codecap& dc, std::string_view name, const Heritage& cap,
                const std::map<std::string, std::string>& group_rights) {
    AttrMap attrs;
    attrs["type"] = std::string("INSERT");
    attrs["name"] = std::string(name);
    attrs["value"] = encode_heritage(cap);
    for (const auto& [group, rights] : group_rights) {
        attrs["rights." + group] = rights;
    }
    Response response = call(net, dc, std::move(attrs));
    if (!response.ok()) raise(response);
}

void dir_remove(const Network& net, const Codecap& dc, std::string_view name) {
    AttrMap attrs;
    attrs["type"] = std::string("REMOVE");
    attrs["name"] = std::string(name);
    Response response = call(net, dc, std::move(attrs));
    if (!response.ok()) raise(response);
}

std::vector<DirectoryEntry> dir_list(const Network& net, const Codecap& dc) {
    AttrMap attrs;
    attrs["type"] = std::string("LIST");
    Response response = call(net, dc, std::move(attrs));
    if (!response.ok()) raise(response);
    std::vector<DirectoryEntry> entries;
    std::string text = response.payload_text();
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string_view line = std::string_view(text).substr(start, end - start);
        start = end + 1;
        if (line.empty()) continue;
        DirectoryEntry entry;
        auto tab = line.find('\t');
        entry.name = std::string(line.substr(0, tab));
        if (tab != std::string_view::npos) {
            std::string_view groups = line.substr(tab + 1);
            std::size_t g = 0;
            while (g <= groups.size() && !groups.empty()) {
                auto comma = groups.find(',', g);
                if (comma == std::string_view::npos) comma = groups.size();
                if (comma > g) entry.groups.emplace_back(groups.substr(g, comma - g));
                if (comma == groups.size()) break;
                g = comma + 1;
            }
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

ClientDirState ClientDirState::initial(Codecap home_cap) {
    Codecap working = home_cap;
    return ClientDirState{std::move(home_cap), std::move(working)};
}

namespace {

std::vector<std::string> split_components(std::string_view path, bool& absolute) {
    if (path.empty()) throw Error("empty path");
    absolute = path.front() == '/';
    if (absolute) path.remove_prefix(1);
    if (path.empty()) throw Error("path has no components");
    std::vector<std::string> components;
    std::size_t start = 0;
    while (start <= path.size()) {
        auto slash = path.find('/', start);
        if (slash == std::string_view::npos) slash = path.size();
        if (slash == start) throw Error("empty path component");
        components.emplace_back(path.substr(start, slash - start));
        if (slash == path.size()) break;
        start = slash + 1;
    }
    return components;
}

} // namespace

Heritage resolve_path(const Network& net, const ClientDirState& st, std::string_view path,
                      std::string_view group) {
    bool absolute = false;
    std::vector<std::string> components = split_components(path, absolute);
    Codecap current = absolute ? st.home : st.working;
    Heritage result;
    for (std::size_t i = 0; i < components.size(); ++i) {
        try {
            result = dir_lookup(net, current, components[i], group);
        } catch (const Error& e) {
            throw Error("component " + std::to_string(i + 1) + " ('" + components[i] +
                        "'): " + e.what());
        }
        current = Codecap{result, current.key};
    }
    return result;
}

ClientDirState chdir(const Network& net, const ClientDirState& st, std::string_view path,
                     std::string_view group) {
    Heritage resolved = resolve_path(net, st, path, group);
    Codecap target{resolved, st.working.key};
    // A lookup probe distinguishes directories from plain objects: a
    // directory answers a lookup for a nonexistent row with "no such name"
    // (or hands the row out), while a plain object reports it is not a
    // directory. Caps whose rights do not cover LOOKUP leave the probe
    // inconclusive; reading the state and checking its shape settles it.
    bool confirmed = false;
    try {
        dir_lookup(net, target, "?", group);
        confirmed = true;
    } catch (const Error& e) {
        std::string_view what = e.what();
        if (what.find("not a directory") != std::string_view::npos) {
            throw Error("not a directory: " + std::string(path));
        }
        confirmed = what.find("no such name") != std::string_view::npos;
    }
    if (!confirmed) {
        AttrMap attrs;
        attrs["type"] = std::string("READ");
        Response response = call(net, target, std::move(attrs));
        if (!response.ok() || !is_directory_state(response.payload)) {
            throw Error("not a directory: " + std::string(path));
        }
    }
    return ClientDirState{st.home, std::move(target)};
}

} // namespace codecap
