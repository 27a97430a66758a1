#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace pg::io {

using ordered_json = nlohmann::ordered_json;

// Writes content to a temp file in the same directory, then renames it over
// the target so readers never observe a half-written file.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

// One parsed JSON object per non-empty line. on_corrupt (if set) is invoked
// with the 1-based line number and the line text for entries that fail to
// parse; those lines are skipped.
std::vector<ordered_json> read_jsonl(
    const std::filesystem::path& path,
    const std::function<void(std::size_t, const std::string&)>& on_corrupt = nullptr);

void write_jsonl(const std::filesystem::path& path, const std::vector<ordered_json>& rows);

// FNV-1a over the file bytes, hex encoded. Used for manifest fingerprints.
std::string file_fingerprint(const std::filesystem::path& path);
std::string content_fingerprint(std::string_view content);

}  // namespace pg::io
