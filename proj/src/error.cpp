#include "bitwave/error.hpp"

namespace bitwave {

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::io_parse:
    case ErrorKind::unsupported:
      return 1;
    case ErrorKind::config:
    case ErrorKind::shape:
    case ErrorKind::label:
      return 2;
    case ErrorKind::data:
    case ErrorKind::range:
    case ErrorKind::domain:
    case ErrorKind::too_short:
    case ErrorKind::undefined_snr:
      return 3;
    case ErrorKind::numerical:
      return 4;
  }
  return 1;
}

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::io_parse: return "io/parse error";
    case ErrorKind::config: return "config error";
    case ErrorKind::data: return "data error";
    case ErrorKind::numerical: return "numerical error";
    case ErrorKind::shape: return "shape error";
    case ErrorKind::range: return "range error";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::label: return "label error";
    case ErrorKind::unsupported: return "unsupported format";
    case ErrorKind::too_short: return "input too short";
    case ErrorKind::undefined_snr: return "undefined SNR";
  }
  return "error";
}

}  // namespace bitwave
