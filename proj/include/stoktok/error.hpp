// Copyright 2026 The stoktok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace stoktok {

// Base of everything the library throws on a contract violation.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad vocabulary files, unknown ids, out-of-range parameters.
class InputError : public Error {
 public:
  using Error::Error;
};

// Well-formed request that has no solution (empty distance layer, no path of
// the requested length).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// External scorer could not be reached or answered garbage.
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace stoktok
