/*
 * Copyright (C) 2026 Codecap Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef CODECAP_DIR_CLIENT_HPP
#define CODECAP_DIR_CLIENT_HPP

/*
 * Client-side directory operations: lookup, chmod, row management, and
 * path resolution over a pluggable authenticated channel. Paths resolve
 * component by component, each step a lookup that delegates to the caller.
 */

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "codecap/codecap.hpp"
#include "codecap/directory.hpp"
#include "codecap/object_service.hpp"

namespace codecap {

// Routes a signed request to the service owning `root`. The channel must
// already be transport-authenticated as the calling client's key.
using Network =
    std::function<Response(const PublicKey& root, const Heritage& h, const RequestCert& r)>;

// Restricted delegation by lookup: returns the row's stored heritage
// extended by one certificate for the caller, carrying the group's rights
// function. Throws Error with the service's failure message.
Heritage dir_lookup(const Network& net, const Codecap& dc, std::string_view name,
                    std::string_view group);

void dir_chmod(const Network& net, const Codecap& dc, std::string_view row,
               std::string_view group, std::string_view rights_src);

void dir_insert(const Network& net, const Codecap& dc, std::string_view name, const Heritage& cap,
                const std::map<std::string, std::string>& group_rights);

void dir_remove(const Network& net, const Codecap& dc, std::string_view name);

std::vector<DirectoryEntry> dir_list(const Network& net, const Codecap& dc);

struct ClientDirState {
    Codecap home;
    Codecap working;

    // Initially the working directory is the home directory.
    static ClientDirState initial(Codecap home_cap);
};

// Resolves "/a/b/c" (from home) or "a/b/c" (from working) by iterated
// lookups in `group`, returning the final heritage. Errors name the failing
// component.
Heritage resolve_path(const Network& net, const ClientDirState& st, std::string_view path,
                      std::string_view group);

// Returns a state whose working directory is the resolved path. The target
// is probed to make sure it is a directory; home is unchanged.
ClientDirState chdir(const Network& net, const ClientDirState& st, std::string_view path,
                     std::string_view group);

} // namespace codecap

#endif
