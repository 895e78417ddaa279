#pragma once

// Small helpers for schema-checked reads out of nlohmann::json documents.
// Every failure raises Error(SchemaViolation) with a JSON-pointer path.

#include "swapgrid/error.hpp"

#include <json.hpp>

#include <cmath>
#include <string>

namespace swapgrid::detail
{

using nlohmann::json;

inline std::string child_path(const std::string& path, const std::string& key)
{
    return path + "/" + key;
}

inline std::string child_path(const std::string& path, std::size_t index)
{
    return path + "/" + std::to_string(index);
}

inline const json& require(const json& obj, const std::string& key, const std::string& path)
{
    if (!obj.is_object())
    {
        throw Error(ErrorKind::SchemaViolation, "expected an object", path.empty() ? "/" : path);
    }
    const auto it = obj.find(key);
    if (it == obj.end())
    {
        throw Error(ErrorKind::SchemaViolation, "missing field '" + key + "'", child_path(path, key));
    }
    return *it;
}

inline double read_number(const json& obj, const std::string& key, const std::string& path)
{
    const json& v = require(obj, key, path);
    if (!v.is_number() || !std::isfinite(v.get<double>()))
    {
        throw Error(ErrorKind::SchemaViolation, "field '" + key + "' must be a finite number", child_path(path, key));
    }
    return v.get<double>();
}

inline double read_number_or(const json& obj, const std::string& key, const std::string& path, double fallback)
{
    return obj.contains(key) ? read_number(obj, key, path) : fallback;
}

inline int read_int(const json& obj, const std::string& key, const std::string& path)
{
    const json& v = require(obj, key, path);
    if (!v.is_number_integer())
    {
        throw Error(ErrorKind::SchemaViolation, "field '" + key + "' must be an integer", child_path(path, key));
    }
    return v.get<int>();
}

inline const json& read_array(const json& obj, const std::string& key, const std::string& path)
{
    const json& v = require(obj, key, path);
    if (!v.is_array())
    {
        throw Error(ErrorKind::SchemaViolation, "field '" + key + "' must be an array", child_path(path, key));
    }
    return v;
}

inline void require_format(const json& doc, const std::string& expected)
{
    const json& v = require(doc, "format", "");
    if (!v.is_string() || v.get<std::string>() != expected)
    {
        throw Error(ErrorKind::SchemaViolation, "expected format tag \"" + expected + "\"", "/format");
    }
}

inline json parse_document(const std::string& text)
{
    try
    {
        return json::parse(text);
    }
    catch (const json::parse_error& e)
    {
        throw Error(ErrorKind::SchemaViolation, std::string("malformed JSON: ") + e.what(), "/");
    }
}

} // namespace swapgrid::detail
