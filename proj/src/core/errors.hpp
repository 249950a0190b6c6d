#pragma once

#include <stdexcept>
#include <string>

namespace pcrec {

// Error categories exposed through the C API as status codes.
enum class ErrorKind { Config, Data, Io, Numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void config_error(const std::string& msg) {
  throw Error(ErrorKind::Config, msg);
}
[[noreturn]] inline void data_error(const std::string& msg) {
  throw Error(ErrorKind::Data, msg);
}
[[noreturn]] inline void io_error(const std::string& msg) {
  throw Error(ErrorKind::Io, msg);
}
[[noreturn]] inline void numeric_error(const std::string& msg) {
  throw Error(ErrorKind::Numeric, msg);
}

}  // namespace pcrec
