#include "entkit/io.hpp"

#include <charconv>

#include "entkit/error.hpp"

namespace entkit {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::missing_input, "cannot open " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::missing_input, "cannot write " + path);
  return out;
}

void for_each_json_line(const std::string& path,
                        const std::function<void(size_t, const Json&)>& fn) {
  std::ifstream in = open_input(path);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Json record = Json::parse(line, nullptr, false);
    if (record.is_discarded())
      fail_at(ErrorKind::parse, path, lineno, "malformed JSON record");
    try {
      fn(lineno, record);
    } catch (const Error& e) {
      throw Error(e.kind(), path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

const Json& require_field(const Json& record, const char* field) {
  auto it = record.find(field);
  if (it == record.end())
    throw Error(ErrorKind::parse, std::string("missing field \"") + field + "\"");
  return *it;
}

std::string require_string(const Json& record, const char* field) {
  const Json& v = require_field(record, field);
  if (!v.is_string())
    throw Error(ErrorKind::parse, std::string("field \"") + field + "\" must be a string");
  return v.get<std::string>();
}

}  // namespace entkit
