#pragma once
// Grayscale PGM images for density fields. Row 0 of the image is the top of
// the domain (largest y); pixel value v maps to v / maxval.

#include <iosfwd>
#include <string>

#include "mftd/density.hpp"

namespace mftd::io {

// Binary P5 with maxval 255, values rounded from [0, 1] (clamped).
void write_pgm(std::ostream& out, const DensityField& field);
void write_pgm(const std::string& path, const DensityField& field);

// Accepts P2 (ASCII) and P5 (binary) with maxval up to 65535. Throws
// ConfigError on malformed content and IoError when the file is unreadable.
DensityField read_pgm(std::istream& in);
DensityField read_pgm(const std::string& path);

}  // namespace mftd::io
