#pragma once

#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace tunetext {

/// Parse failure in a line-delimited file. `line()` is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::filesystem::path& path, std::size_t line,
             const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Calls `fn(object, line_number)` for every non-blank line. Exceptions
/// thrown by `fn` (other than ParseError) are rethrown as ParseError
/// naming the line.
void for_each_json_line(
    const std::filesystem::path& path,
    const std::function<void(const nlohmann::json&, std::size_t)>& fn);

/// Writes one compact JSON document per line.
void write_json_lines(const std::filesystem::path& path,
                      const std::vector<nlohmann::json>& rows);

/// Pretty-printed single document with a trailing newline.
void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& doc);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace tunetext
