// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmrag/jsonl.hpp"

#include <fstream>

#include "mmrag/error.hpp"

namespace mmrag {

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const json&, std::size_t)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                                  ": malformed line: " + e.what());
        }
        if (!obj.is_object()) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                                  ": malformed line: expected a JSON object");
        }
        try {
            fn(obj, line_no);
        } catch (const ValidationError& e) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " +
                                  e.what());
        }
    }
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    for (const auto& row : rows) {
        out << row.dump() << '\n';
    }
    out.flush();
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

void write_json(const std::filesystem::path& path, const json& value) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << value.dump(2) << '\n';
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::string require_string(const json& obj, const char* field) {
    auto it = obj.find(field);
    if (it == obj.end()) {
        throw ValidationError(std::string("missing required field '") + field + "'");
    }
    if (!it->is_string()) {
        throw ValidationError(std::string("field '") + field + "' must be a string");
    }
    return it->get<std::string>();
}

std::vector<std::string> require_string_list(const json& obj, const char* field) {
    auto it = obj.find(field);
    if (it == obj.end()) {
        throw ValidationError(std::string("missing required field '") + field + "'");
    }
    if (!it->is_array()) {
        throw ValidationError(std::string("field '") + field + "' must be a list of strings");
    }
    std::vector<std::string> out;
    out.reserve(it->size());
    for (const auto& v : *it) {
        if (!v.is_string()) {
            throw ValidationError(std::string("field '") + field + "' must be a list of strings");
        }
        out.push_back(v.get<std::string>());
    }
    return out;
}

}  // namespace mmrag
