#ifndef FLOODEVAL_ERROR_HPP
#define FLOODEVAL_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace floodeval {

/// Raised when a caller breaks an operation's precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// File system failures. The message always carries the offending path.
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Malformed input document. `byte_offset` points at the failing byte when
/// the parser can tell.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what), byte_offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

/// Stage input missing on disk; names the command that produces it.
class MissingStageOutput : public std::runtime_error {
 public:
  MissingStageOutput(const std::string& path, const std::string& command)
      : std::runtime_error("missing " + path + " (run `" + command + "` first)"),
        command_(command) {}
  const std::string& command() const noexcept { return command_; }

 private:
  std::string command_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace floodeval

#endif  // FLOODEVAL_ERROR_HPP
