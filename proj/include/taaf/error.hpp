// Copyright 2026 The TAAF-SNN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace taaf {

// Root of every error the library throws. The CLI maps subclasses to exit
// codes, so keep the hierarchy flat.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible extents (matmul inner dims, broadcast, concat off-axis, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// NaN / Inf where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain (empty axis, bad class index).
class DomainError : public Error {
 public:
  using Error::Error;
};

// API misuse, e.g. backward from a non-scalar root.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Invalid or inconsistent configuration detected before any work starts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed on-disk artifact (dataset, checkpoint, metrics CSV).
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace taaf
