#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bcl/error.hpp"

namespace bcl {

using Json = nlohmann::ordered_json;

namespace detail {

inline Json parse_json_strict(std::string_view text) {
  // Rejects duplicate object keys; nlohmann would otherwise keep the last one.
  std::vector<std::set<std::string>> seen;
  std::string duplicate;
  auto callback = [&](int /*depth*/, nlohmann::detail::parse_event_t event, Json& parsed) {
    using nlohmann::detail::parse_event_t;
    switch (event) {
      case parse_event_t::object_start: seen.emplace_back(); break;
      case parse_event_t::object_end:
        if (!seen.empty()) seen.pop_back();
        break;
      case parse_event_t::key: {
        const auto& key = parsed.get_ref<const std::string&>();
        if (!seen.empty() && !seen.back().insert(key).second && duplicate.empty()) duplicate = key;
        break;
      }
      default: break;
    }
    return true;
  };
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end(), callback);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseFailure(ErrorCode::ParseError, e.what(), e.byte);
  }
  if (!duplicate.empty()) {
    throw ParseFailure(ErrorCode::ParseError, "duplicate object key '" + duplicate + "'", 0);
  }
  return doc;
}

}  // namespace detail
}  // namespace bcl
