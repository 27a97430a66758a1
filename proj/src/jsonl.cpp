#include "poisonguard/jsonl.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "poisonguard/errors.hpp"
#include "poisonguard/rng.hpp"

namespace pg::io {

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<ordered_json> read_jsonl(
    const std::filesystem::path& path,
    const std::function<void(std::size_t, const std::string&)>& on_corrupt) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path.string());
  std::vector<ordered_json> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j = ordered_json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      if (on_corrupt) on_corrupt(lineno, line);
      continue;
    }
    rows.push_back(std::move(j));
  }
  return rows;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<ordered_json>& rows) {
  std::string content;
  for (const auto& row : rows) {
    content += row.dump();
    content += '\n';
  }
  atomic_write(path, content);
}

std::string content_fingerprint(std::string_view content) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, rng::fnv1a64(content));
  return buf;
}

std::string file_fingerprint(const std::filesystem::path& path) {
  return content_fingerprint(read_file(path));
}

}  // namespace pg::io
