#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace medpipe {

// Parses one JSON object per line, skipping blank lines. Parse failures
// raise Error("bad_input_line") naming the line number.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

void write_jsonl(const std::filesystem::path& path,
                 const std::vector<nlohmann::json>& records);

nlohmann::json read_json_file(const std::filesystem::path& path);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace medpipe
