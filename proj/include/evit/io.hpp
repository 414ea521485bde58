#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

#include "evit/errors.hpp"

namespace evit {

// Shortest round-trip decimal form; keeps CSV/JSON artifacts byte-stable.
inline std::string format_double(double value) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open file for reading", path.string());
  std::ostringstream out;
  out << in.rdbuf();
  if (in.bad()) throw io_error("read failed", path.string());
  return out.str();
}

// Writes via a .partial sibling and renames on success, so an interrupted
// write never leaves a plausible-looking artifact behind.
inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
  std::filesystem::path partial = path;
  partial += ".partial";
  {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open file for writing", partial.string());
    out << content;
    out.flush();
    if (!out) throw io_error("write failed", partial.string());
  }
  std::error_code ec;
  std::filesystem::rename(partial, path, ec);
  if (ec) throw io_error("rename failed: " + ec.message(), path.string());
}

// Exclusive-create lock file; remove() releases it. The destructor also
// releases so a throwing pipeline stage does not leave the directory locked.
class DirectoryLock {
public:
  explicit DirectoryLock(const std::filesystem::path& lock_path)
      : path_(lock_path) {
    std::FILE* f = std::fopen(path_.string().c_str(), "wx");
    if (!f) {
      throw io_error(
          "output directory is locked by another process (delete the lock "
          "file if stale)",
          path_.string());
    }
    std::fclose(f);
    held_ = true;
  }

  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

  ~DirectoryLock() { release(); }

  void release() {
    if (held_) {
      std::error_code ec;
      std::filesystem::remove(path_, ec);
      held_ = false;
    }
  }

private:
  std::filesystem::path path_;
  bool held_ = false;
};

}  // namespace evit
