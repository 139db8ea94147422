#include "kdrsdl/error.hpp"

namespace kdrsdl {

const char* to_string(FormatErrorKind kind) {
  switch (kind) {
    case FormatErrorKind::kIo: return "io error";
    case FormatErrorKind::kBadMagic: return "bad magic";
    case FormatErrorKind::kTruncated: return "truncated payload";
    case FormatErrorKind::kTrailingBytes: return "trailing bytes";
    case FormatErrorKind::kBadHeader: return "bad header";
    case FormatErrorKind::kNonFinite: return "non-finite value";
    case FormatErrorKind::kUnsupportedImage: return "unsupported image";
    case FormatErrorKind::kBadMaxval: return "bad maxval";
    case FormatErrorKind::kMixedDimensions: return "mixed dimensions";
  }
  return "format error";
}

}  // namespace kdrsdl
