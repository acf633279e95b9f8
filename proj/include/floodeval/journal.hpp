#ifndef FLOODEVAL_JOURNAL_HPP
#define FLOODEVAL_JOURNAL_HPP

// Append-only NDJSON files. Each append is written, flushed and fsynced
// before returning so a record acknowledged to the caller survives a crash.

#include <cerrno>
#include <cstring>
#include <string>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include "floodeval/error.hpp"
#include "floodeval/geo_core.hpp"

namespace floodeval {

inline void append_line_durably(const std::string& path, const std::string& line) {
  require(line.find('\n') == std::string::npos, "journal line must not contain a newline");
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw IoError(path, std::strerror(errno));
  const std::string buf = line + "\n";
  std::size_t done = 0;
  while (done < buf.size()) {
    const ssize_t n = ::write(fd, buf.data() + done, buf.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      throw IoError(path, std::strerror(err));
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    const int err = errno;
    ::close(fd);
    throw IoError(path, std::strerror(err));
  }
  ::close(fd);
}

/// Parses every non-blank line. A torn final line (no trailing newline and
/// not valid JSON) is reported as a ParseError with its byte offset.
inline std::vector<json> read_ndjson(const std::string& text, const std::string& origin) {
  std::vector<json> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(pos, end - pos);
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      try {
        out.push_back(json::parse(line));
      } catch (const json::parse_error& e) {
        throw ParseError(origin + ": line at byte " + std::to_string(pos) + ": " + e.what(),
                         pos + (e.byte > 0 ? e.byte - 1 : 0));
      }
    }
    pos = end + 1;
  }
  return out;
}

}  // namespace floodeval

#endif  // FLOODEVAL_JOURNAL_HPP
