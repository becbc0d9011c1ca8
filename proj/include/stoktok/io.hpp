// Copyright 2026 The stoktok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "stoktok/error.hpp"
#include "stoktok/vocab.hpp"

namespace stoktok {

// Token byte-strings on disk and in CLI output: printable ASCII other than
// space and backslash is literal, backslash is "\\", everything else is
// "\xNN". Unescaping also passes raw non-ASCII bytes through unchanged.
inline std::string escape_bytes(std::string_view raw) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned char c : raw) {
    if (c == '\\') {
      out += "\\\\";
    } else if (c > 0x20 && c < 0x7f) {
      out += static_cast<char>(c);
    } else {
      out += "\\x";
      out += kHex[c >> 4];
      out += kHex[c & 15];
    }
  }
  return out;
}

inline std::string unescape_bytes(std::string_view s) {
  auto hex = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out += s[i];
      continue;
    }
    if (i + 1 < s.size() && s[i + 1] == '\\') {
      out += '\\';
      ++i;
    } else if (i + 3 < s.size() && s[i + 1] == 'x' && hex(s[i + 2]) >= 0 && hex(s[i + 3]) >= 0) {
      out += static_cast<char>(hex(s[i + 2]) * 16 + hex(s[i + 3]));
      i += 3;
    } else {
      throw InputError("bad escape sequence in token '" + std::string(s) + "'");
    }
  }
  return out;
}

inline std::vector<std::pair<std::string, std::string>> parse_merges(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> merges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos || sp == 0 || sp + 1 >= line.size() || line.find(' ', sp + 1) != std::string::npos) {
      throw InputError("merges line " + std::to_string(lineno) + ": expected 'LEFT RIGHT'");
    }
    merges.emplace_back(unescape_bytes(line.substr(0, sp)), unescape_bytes(line.substr(sp + 1)));
  }
  return merges;
}

inline std::vector<std::pair<std::string, TokenId>> parse_vocab_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("vocab.json must be an object mapping token -> id");
  std::vector<std::pair<std::string, TokenId>> entries;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_number_integer() || it.value().get<long long>() < 0 ||
        it.value().get<long long>() > 0xFFFFFFFELL) {
      throw InputError("vocab.json: id for '" + it.key() + "' is not a valid non-negative integer");
    }
    entries.emplace_back(unescape_bytes(it.key()), it.value().get<TokenId>());
  }
  return entries;
}

inline Vocabulary load_vocabulary_from_streams(std::istream& vocab_json, std::istream& merges_txt) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(vocab_json);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("vocab.json: ") + e.what());
  }
  return Vocabulary::build(parse_vocab_json(j), parse_merges(merges_txt));
}

inline Vocabulary load_vocabulary(const std::string& vocab_path, const std::string& merges_path) {
  std::ifstream v(vocab_path, std::ios::binary);
  if (!v) throw InputError("cannot open vocabulary file " + vocab_path);
  std::ifstream m(merges_path, std::ios::binary);
  if (!m) throw InputError("cannot open merges file " + merges_path);
  return load_vocabulary_from_streams(v, m);
}

inline nlohmann::json vocab_to_json(const Vocabulary& vocab) {
  nlohmann::json j = nlohmann::json::object();
  for (TokenId id : vocab.ids()) j[escape_bytes(vocab.bytes(id))] = id;
  return j;
}

inline std::string merges_to_text(const Vocabulary& vocab) {
  std::string out;
  for (const Merge& m : vocab.merges()) {
    out += escape_bytes(vocab.bytes(m.left));
    out += ' ';
    out += escape_bytes(vocab.bytes(m.right));
    out += '\n';
  }
  return out;
}

}  // namespace stoktok
