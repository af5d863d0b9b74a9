#pragma once

#include <iosfwd>
#include <string>

#include "sdsforge/hadamard.hpp"

namespace sdsforge {

// Text certificate (k values follow the J, K, L, M block order):
//   v=213
//   H=37
//   params=213;106,105,92,106;196
//   J=...
//   K=...
//   L=...
//   M=...
// plus an optional "skew=0|1" line; '#' starts a comment.
SdsCertificate read_certificate(std::istream& in);
SdsCertificate read_certificate_file(const std::string& path);
void write_certificate(std::ostream& out, const SdsCertificate& cert);

// Text matrix: one row per line, '+' for +1 and '-' for -1.
void write_matrix_text(std::ostream& out, const SignMatrix& m);
SignMatrix read_matrix_text(std::istream& in);

// Packed matrix: 16-byte header (8-byte magic "SDSFMAT1", 64-bit little-endian
// order), then each row bit-packed 8 entries per byte, LSB first, rows padded
// to whole bytes. A set bit encodes -1.
inline constexpr char kMatrixMagic[8] = {'S', 'D', 'S', 'F', 'M', 'A', 'T', '1'};
void write_matrix_packed(std::ostream& out, const SignMatrix& m);
SignMatrix read_matrix_packed(std::istream& in);

} // namespace sdsforge
