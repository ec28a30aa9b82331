#pragma once

#include <stdexcept>
#include <string>

namespace faultscope {

/// Broad failure category. The CLI maps these onto process exit codes.
enum class ErrorKind { Usage = 1, Data = 2, Internal = 3 };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

/// Bad input data: unreadable files, malformed records, invalid values.
class DataError : public Error {
public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

/// A caller violated an operation's precondition (bad parameters).
class InvalidArgument : public Error {
public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorKind::Usage, what) {}
};

/// Malformed line in a label or prediction file.
class ParseError : public DataError {
public:
  ParseError(const std::string& detail, std::size_t line, const std::string& file = {})
      : DataError((file.empty() ? std::string() : file + ": ") + detail + " at line " +
                  std::to_string(line)),
        detail_(detail), line_(line) {}

  const std::string& detail() const noexcept { return detail_; }
  std::size_t line() const noexcept { return line_; }

private:
  std::string detail_;
  std::size_t line_;
};

} // namespace faultscope
