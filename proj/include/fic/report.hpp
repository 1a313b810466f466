#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "fic/common.hpp"

namespace fic {

using json = nlohmann::json;

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

inline std::string digest_string(std::string_view bytes) {
  return "fnv1a64:" + hex64(fnv1a64(bytes));
}

inline std::string digest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("cannot open '" + path + "' for digesting");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return digest_string(bytes);
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

// Run report. The payload is the reproducible part: identical (config, seed)
// yields a byte-identical payload and digest; the timestamp lives in meta and
// stays out of the digest.
struct Report {
  json meta = json::object();
  std::string input_digest = "none";
  json payload = json::object();

  std::string payload_digest() const { return digest_string(payload.dump()); }

  json to_json() const {
    json out;
    out["meta"] = meta;
    out["input_digest"] = input_digest;
    out["payload"] = payload;
    out["payload_digest"] = payload_digest();
    return out;
  }

  void write(const std::string& out_path) const {
    const std::string text = to_json().dump(2) + "\n";
    if (out_path.empty()) {
      std::cout << text;
      return;
    }
    std::ofstream out(out_path);
    if (!out) throw validation_error("cannot open output file '" + out_path + "'");
    out << text;
  }
};

}  // namespace fic
