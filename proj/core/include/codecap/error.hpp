/*
 * Copyright (C) 2026 Codecap Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef CODECAP_ERROR_HPP_
#define CODECAP_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace codecap {

/// Thrown by operations whose preconditions are violated (bad key material,
/// unparseable policy source, malformed encodings). Validation and
/// authorization outcomes are reported as values, never as exceptions.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace codecap

#endif // CODECAP_ERROR_HPP_
