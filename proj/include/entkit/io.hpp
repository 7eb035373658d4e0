#pragma once

#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

namespace entkit {

using Json = nlohmann::json;
// Preserves insertion order; used for every file we write so field order is
// byte-stable.
using OrderedJson = nlohmann::ordered_json;

// Opens for reading or throws Error{missing_input}.
std::ifstream open_input(const std::string& path);
// Opens for writing (truncates) or throws Error{missing_input}.
std::ofstream open_output(const std::string& path);

// Calls fn(line_number, parsed) for every non-empty line. Parse failures and
// exceptions from fn are rethrown as Error with "path:line:" context.
void for_each_json_line(const std::string& path,
                        const std::function<void(size_t, const Json&)>& fn);

// Shortest round-trip decimal form of a double (to_chars), deterministic
// across runs.
std::string format_double(double value);

// Require a field of the given json type; throws Error{parse} naming it.
const Json& require_field(const Json& record, const char* field);
std::string require_string(const Json& record, const char* field);

}  // namespace entkit
