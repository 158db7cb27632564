// Copyright 2026 The fvslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace fvs {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// A filtered top-k was requested with fewer than k qualifying rows.
class InsufficientCandidates : public Error {
public:
    using Error::Error;
};

/// The neighbor lists of a node cannot fit on a single page.
class GraphInfeasible : public Error {
public:
    using Error::Error;
};

/// The requested bitmap cardinality exceeds the sampling window of a correlation type.
class WindowOverflow : public Error {
public:
    using Error::Error;
};

/// Bad page id, dangling tid, corrupt store file.
class StorageError : public Error {
public:
    using Error::Error;
};

/// Malformed or unreadable input data (datasets, workloads, CSV).
class DataError : public Error {
public:
    using Error::Error;
};

/// Invalid parameters or configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace fvs
