#include "tunetext/json_lines.hpp"

#include <fstream>
#include <sstream>

namespace tunetext {

ParseError::ParseError(const std::filesystem::path& path, std::size_t line,
                       const std::string& what)
    : std::runtime_error(path.string() + ":" + std::to_string(line) + ": " +
                         what),
      line_(line) {}

void for_each_json_line(
    const std::filesystem::path& path,
    const std::function<void(const nlohmann::json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path, number, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError(path, number, "expected a JSON object");
    try {
      fn(doc, number);
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(path, number, e.what());
    }
  }
}

void write_json_lines(const std::filesystem::path& path,
                      const std::vector<nlohmann::json>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  for (const auto& row : rows) out << row.dump() << '\n';
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": invalid JSON: " + e.what());
  }
}

}  // namespace tunetext
