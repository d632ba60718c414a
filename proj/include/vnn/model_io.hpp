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

// JSON model and batch files.
//
//   { "p": "M61"|"M127", "alpha": a, "beta": b,
//     "layers": [ {"type":"linear","rows":R,"cols":C,"weights":[...],"bias":[...]},
//                 {"type":"quad"}, ... ] }
//
// Float models have the same layout with real weights and no "p". Integers that do not
// fit in 64 bits are written as decimal strings. Batches are 2-D arrays, one row per
// input feature and one column per sample.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vnn/errors.hpp"
#include "vnn/field.hpp"
#include "vnn/matrix.hpp"
#include "vnn/network.hpp"

namespace vnn::io {

using Json = nlohmann::json;

inline SignedInt parse_signed(const Json& j) {
  if (j.is_number_integer()) return j.is_number_unsigned() ? static_cast<SignedInt>(j.get<std::uint64_t>())
                                                           : static_cast<SignedInt>(j.get<std::int64_t>());
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    std::size_t pos = 0;
    bool neg = false;
    if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
      neg = s[0] == '-';
      pos = 1;
    }
    if (pos == s.size() || s.size() - pos > 39) throw FormatError("bad integer string: " + s);
    u128 v = 0;
    for (; pos < s.size(); ++pos) {
      if (s[pos] < '0' || s[pos] > '9') throw FormatError("bad integer string: " + s);
      const u128 next = v * 10 + static_cast<u128>(s[pos] - '0');
      if (next / 10 != v || next > (u128{1} << 127) - 1) throw FormatError("integer out of range: " + s);
      v = next;
    }
    return neg ? -static_cast<SignedInt>(v) : static_cast<SignedInt>(v);
  }
  if (j.is_number_float()) {
    const double d = j.get<double>();
    if (d != std::floor(d) || std::fabs(d) > 9.0e15) throw FormatError("expected an integer, got a real number");
    return static_cast<SignedInt>(d);
  }
  throw FormatError("expected an integer");
}

inline Json signed_to_json(SignedInt v) {
  if (v >= std::numeric_limits<std::int64_t>::min() && v <= std::numeric_limits<std::int64_t>::max())
    return Json(static_cast<std::int64_t>(v));
  return Json(to_string(v));
}

inline ModulusId parse_modulus(const std::string& s) {
  if (s == "M61" || s == "m61") return ModulusId::kM61;
  if (s == "M127" || s == "m127") return ModulusId::kM127;
  throw FormatError("unknown modulus '" + s + "' (expected M61 or M127)");
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path);
  out << text;
  if (!out) throw std::ios_base::failure("write failed for " + path);
}

namespace detail {

// Walks the layer list, checking linear/quad alternation, and calls `on_linear` for each
// linear layer.
template <class OnLinear>
void for_each_linear(const Json& j, OnLinear&& on_linear) {
  if (!j.is_object() || !j.contains("layers") || !j["layers"].is_array()) throw FormatError("model needs a \"layers\" array");
  const auto& layers = j["layers"];
  bool expect_linear = true;
  std::size_t linear_count = 0;
  for (const auto& l : layers) {
    const std::string type = l.value("type", "");
    if (type == "linear") {
      if (!expect_linear) throw FormatError("two linear layers without a quad activation between them");
      const auto rows = l.at("rows").get<std::size_t>();
      const auto cols = l.at("cols").get<std::size_t>();
      const auto& w = l.at("weights");
      if (!w.is_array() || w.size() != rows * cols) throw FormatError("weights length differs from rows*cols");
      if (l.contains("bias") && (!l["bias"].is_array() || l["bias"].size() != rows))
        throw FormatError("bias length differs from rows");
      on_linear(l, rows, cols);
      ++linear_count;
      expect_linear = false;
    } else if (type == "quad") {
      if (expect_linear) throw FormatError("quad activation must follow a linear layer");
      expect_linear = true;
    } else {
      throw FormatError("unsupported layer type '" + type + "'");
    }
  }
  if (linear_count == 0) throw FormatError("model has no linear layers");
  if (expect_linear) throw FormatError("model must end with a linear layer");
}

}  // namespace detail

inline FloatModel float_model_from_json(const Json& j) {
  FloatModel m;
  try {
    detail::for_each_linear(j, [&](const Json& l, std::size_t rows, std::size_t cols) {
      FloatLayer fl{Matrix<double>(rows, cols, l["weights"].get<std::vector<double>>()), std::vector<double>(rows, 0.0)};
      if (l.contains("bias")) fl.bias = l["bias"].get<std::vector<double>>();
      m.layers.push_back(std::move(fl));
    });
  } catch (const Json::exception& e) {
    throw FormatError(e.what());
  }
  m.validate();
  return m;
}

inline Json to_json(const FloatModel& m) {
  Json layers = Json::array();
  for (std::size_t k = 0; k < m.layers.size(); ++k) {
    const auto& l = m.layers[k];
    layers.push_back({{"type", "linear"},
                      {"rows", l.weights.rows()},
                      {"cols", l.weights.cols()},
                      {"weights", std::vector<double>(l.weights.values().begin(), l.weights.values().end())},
                      {"bias", l.bias}});
    if (k + 1 < m.layers.size()) layers.push_back({{"type", "quad"}});
  }
  return {{"layers", layers}};
}

inline SignedModel signed_model_from_json(const Json& j) {
  SignedModel m;
  try {
    if (!j.contains("p")) throw FormatError("field model needs \"p\"");
    m.modulus = parse_modulus(j.at("p").get<std::string>());
    m.alpha = j.value("alpha", 1.0);
    m.beta = j.value("beta", 1.0);
    const SignedInt limit = m.modulus == ModulusId::kM61 ? signed_bound<Fp61>() : signed_bound<Fp127>();
    auto checked = [&](const Json& v) {
      const SignedInt s = parse_signed(v);
      if (s > limit || s < -limit) throw OutOfRange("parameter exceeds (p-1)/2");
      return s;
    };
    detail::for_each_linear(j, [&](const Json& l, std::size_t rows, std::size_t cols) {
      SignedLayer sl{Matrix<SignedInt>(rows, cols), std::vector<SignedInt>(rows, 0)};
      const auto& w = l["weights"];
      for (std::size_t i = 0; i < rows * cols; ++i) sl.weights.storage()[i] = checked(w[i]);
      if (l.contains("bias"))
        for (std::size_t i = 0; i < rows; ++i) sl.bias[i] = checked(l["bias"][i]);
      m.layers.push_back(std::move(sl));
    });
  } catch (const Json::exception& e) {
    throw FormatError(e.what());
  }
  m.validate();
  return m;
}

inline Json to_json(const SignedModel& m) {
  Json layers = Json::array();
  for (std::size_t k = 0; k < m.layers.size(); ++k) {
    const auto& l = m.layers[k];
    Json w = Json::array(), b = Json::array();
    for (SignedInt v : l.weights.values()) w.push_back(signed_to_json(v));
    for (SignedInt v : l.bias) b.push_back(signed_to_json(v));
    layers.push_back({{"type", "linear"}, {"rows", l.weights.rows()}, {"cols", l.weights.cols()}, {"weights", w}, {"bias", b}});
    if (k + 1 < m.layers.size()) layers.push_back({{"type", "quad"}});
  }
  return {{"p", std::string(modulus_name(m.modulus))}, {"alpha", m.alpha}, {"beta", m.beta}, {"layers", layers}};
}

/// True when the document looks like a field model (has "p").
inline bool is_field_model(const Json& j) { return j.is_object() && j.contains("p"); }

template <class T, class Parse>
Matrix<T> matrix_from_json(const Json& j, Parse&& parse) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw FormatError("batch must be a non-empty 2-D array");
  const std::size_t rows = j.size(), cols = j[0].size();
  Matrix<T> out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw FormatError("ragged batch array");
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = parse(j[r][c]);
  }
  return out;
}

inline Matrix<double> float_batch_from_json(const Json& j) {
  return matrix_from_json<double>(j, [](const Json& v) {
    if (!v.is_number()) throw FormatError("batch entries must be numbers");
    return v.get<double>();
  });
}

inline Matrix<SignedInt> signed_batch_from_json(const Json& j) {
  return matrix_from_json<SignedInt>(j, [](const Json& v) { return parse_signed(v); });
}

template <class T, class Emit>
Json matrix_to_json(const Matrix<T>& m, Emit&& emit) {
  Json out = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(emit(m(r, c)));
    out.push_back(std::move(row));
  }
  return out;
}

inline Json to_json(const Matrix<SignedInt>& m) {
  return matrix_to_json(m, [](SignedInt v) { return signed_to_json(v); });
}

inline Json to_json(const Matrix<double>& m) {
  return matrix_to_json(m, [](double v) { return Json(v); });
}

}  // namespace vnn::io
