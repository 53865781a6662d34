#include "cavspdc/error.hpp"

namespace cavspdc {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::argument: return "argument";
    case ErrorKind::range: return "range";
    case ErrorKind::invariant: return "invariant";
    case ErrorKind::lookup: return "lookup";
    case ErrorKind::root_not_bracketed: return "root_not_bracketed";
    case ErrorKind::resolution: return "resolution";
    case ErrorKind::shape: return "shape";
    case ErrorKind::undefined_snr: return "undefined_snr";
    case ErrorKind::no_detuning: return "no_detuning";
    case ErrorKind::config: return "config";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace cavspdc
