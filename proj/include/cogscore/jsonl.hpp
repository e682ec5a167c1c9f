#pragma once

// Line-oriented JSON input and atomic file output.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include <fmt/format.h>
#include <json.hpp>

#include "cogscore/error.hpp"

namespace cogscore {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Calls `fn(line_number, object)` for each non-blank line of a JSONL file.
/// Line numbers are 1-based. Unparseable lines throw InputError naming the line.
inline void for_each_jsonl(const std::filesystem::path& path,
                           const std::function<void(std::size_t, const json&)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read file: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError(fmt::format("{}:{}: malformed JSON: {}", path.string(), line_no, e.what()));
    }
    if (!obj.is_object()) {
      throw InputError(fmt::format("{}:{}: expected a JSON object", path.string(), line_no));
    }
    try {
      fn(line_no, obj);
    } catch (const json::exception& e) {
      throw InputError(fmt::format("{}:{}: schema error: {}", path.string(), line_no, e.what()));
    }
  }
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_real(double v) { return fmt::format("{}", v); }

/// Nine significant digits, enough to round-trip any float.
inline std::string format_float(float v) { return fmt::format("{:.9g}", v); }

/// Writes `content` to `path` through a sibling temporary file and a rename.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write file: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw InputError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw InputError("cannot rename " + tmp.string() + " to " + path.string());
}

}  // namespace cogscore
