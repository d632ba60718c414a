// Copyright 2026 The vnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace vnn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ZeroInverse : public Error {
 public:
  ZeroInverse() : Error("inverse of zero") {}
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public DimensionMismatch {
 public:
  using DimensionMismatch::DimensionMismatch;
};

class EmptyTable : public Error {
 public:
  EmptyTable() : Error("table has no variable left to fold") {}
};

class MalformedRound : public Error {
 public:
  using Error::Error;
};

// A quantized parameter or network intermediate left the signed range of the field.
class Overflow : public Error {
 public:
  using Error::Error;
};

class MalformedTranscript : public Error {
 public:
  using Error::Error;
};

class ChannelClosed : public Error {
 public:
  using Error::Error;
};

class EntropyExhausted : public Error {
 public:
  EntropyExhausted() : Error("randomness source failed to produce a field element") {}
};

// Model or batch file does not follow the expected schema.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace vnn
