#include "bfactory/json_io.hpp"

#include <fstream>
#include <sstream>

namespace bfactory {

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw UsageError(std::string("invalid JSON: ") + e.what());
  }
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_json(buffer.str());
}

Rational rational_from_json(const Json& value) {
  if (value.is_string()) return parse_rational(value.get<std::string>());
  if (value.is_number_integer()) return Rational(value.get<long long>());
  throw UsageError("expected a rational as \"num/den\" string or integer, got " + value.dump());
}

RationalVector rational_vector_from_json(const Json& value) {
  if (!value.is_array()) throw UsageError("expected an array of rationals, got " + value.dump());
  RationalVector out;
  out.reserve(value.size());
  for (const auto& v : value) out.push_back(rational_from_json(v));
  return out;
}

Json to_json(const Rational& value) { return to_string(value); }

Json to_json(const RationalVector& values) {
  Json out = Json::array();
  for (const auto& v : values) out.push_back(to_string(v));
  return out;
}

}  // namespace bfactory
