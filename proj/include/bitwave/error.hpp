#pragma once

#include <stdexcept>
#include <string>

namespace bitwave {

/// Failure categories. Each maps onto one CLI exit code.
enum class ErrorKind {
  io_parse,   // unreadable file, malformed container or WAV
  config,     // invalid configuration or incompatible options
  data,       // dataset problems: missing files, bad manifest
  numerical,  // NaN/Inf during training or gradient checking
  shape,      // tensor extents do not fit an operation
  range,      // value outside its representable range
  domain,     // value outside the allowed set (e.g. non-binary bit)
  label,      // class label out of range
  unsupported,
  too_short,
  undefined_snr,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// CLI exit codes: 0 ok, 1 I/O-parse, 2 config, 3 data, 4 numerical.
int exit_code_for(ErrorKind kind) noexcept;

const char* to_string(ErrorKind kind) noexcept;

}  // namespace bitwave
