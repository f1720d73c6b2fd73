#pragma once

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace joplen {

using json = nlohmann::json;

namespace detail {

inline void dump_number(const json& j, std::string& out) {
  if (j.is_number_float()) {
    // 17 significant digits: decimal text round-trips IEEE doubles exactly.
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", j.get<double>());
    out += buf;
  } else {
    out += j.dump();
  }
}

inline void dump_value(const json& j, std::string& out, int depth) {
  const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  const std::string pad_in(static_cast<std::size_t>(depth + 1) * 2, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        out += json(it.key()).dump();
        out += ": ";
        dump_value(it.value(), out, depth + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Scalar-only arrays stay on one line; nested ones get one row each.
      bool flat = true;
      for (const auto& v : j)
        if (v.is_structured()) flat = false;
      out += "[";
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += flat ? ", " : ",";
        if (!flat) out += "\n" + pad_in;
        first = false;
        dump_value(v, out, depth + 1);
      }
      if (!flat) out += "\n" + pad;
      out += "]";
      return;
    }
    case json::value_t::number_float:
      dump_number(j, out);
      return;
    default:
      out += j.dump();
      return;
  }
}

}  // namespace detail

// Deterministic serialization: keys in nlohmann's sorted order, floats with
// 17 significant digits. Identical json values always produce identical bytes.
inline std::string dump_json(const json& j) {
  std::string out;
  detail::dump_value(j, out, 0);
  out += "\n";
  return out;
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << dump_json(j);
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline json read_json_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return j;
}

}  // namespace joplen
