#pragma once

#include <string_view>

#include <json.hpp>

#include "bfactory/rational.hpp"

namespace bfactory {

using Json = nlohmann::json;

/// Parses JSON text, turning syntax errors into UsageError.
Json parse_json(std::string_view text);

/// Reads the file at `path` and parses it as JSON.
Json load_json_file(const std::string& path);

/// Accepts `"num/den"`, decimal strings and JSON integers.
Rational rational_from_json(const Json& value);
RationalVector rational_vector_from_json(const Json& value);

Json to_json(const Rational& value);
Json to_json(const RationalVector& values);

}  // namespace bfactory
