/*
 * Copyright 2026 The TinyReID Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace tinyreid {

// Precondition violated by a caller-supplied value (bad flag, bad shape request).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Tensor shapes that do not line up inside a kernel.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed, truncated or corrupted files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Content that parses but cannot be used (empty gallery, orphan query, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tinyreid
