#pragma once

#include <filesystem>
#include <string>

#include "rfpi/spinor_field.hpp"

namespace rfpi {

/// Writes `<stem>.bin` (row-major grid points, spin component fastest,
/// little-endian float64 re/im pairs) and `<stem>.json` (dim, extents,
/// points, l).
void write_field(const std::filesystem::path& stem, const SpinorField& f);

/// Reads a field written by write_field. Throws Error on malformed input.
SpinorField read_field(const std::filesystem::path& stem);

/// The structured-text header written next to the binary payload.
std::string field_header(const SpinorField& f);

}  // namespace rfpi
