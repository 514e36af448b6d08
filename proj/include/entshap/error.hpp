#pragma once

#include <stdexcept>
#include <string>

namespace entshap {

// Error taxonomy maps onto process exit codes: config=2, data=3, capacity=4.
enum class ErrorKind { config, data, capacity };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }
  int exit_code() const {
    switch (kind_) {
      case ErrorKind::config: return 2;
      case ErrorKind::data: return 3;
      case ErrorKind::capacity: return 4;
    }
    return 1;
  }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_config(const std::string& msg) { throw Error(ErrorKind::config, msg); }
[[noreturn]] inline void throw_data(const std::string& msg) { throw Error(ErrorKind::data, msg); }
[[noreturn]] inline void throw_capacity(const std::string& msg) { throw Error(ErrorKind::capacity, msg); }

inline void require_config(bool ok, const std::string& msg) {
  if (!ok) throw_config(msg);
}
inline void require_data(bool ok, const std::string& msg) {
  if (!ok) throw_data(msg);
}

}  // namespace entshap
