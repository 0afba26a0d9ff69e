#include "mftd/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "mftd/error.hpp"

namespace mftd::io {

void write_pgm(std::ostream& out, const DensityField& field) {
  if (field.nx < 1 || field.ny < 1) throw ConfigError("write_pgm: empty field");
  out << "P5\n" << field.nx << ' ' << field.ny << "\n255\n";
  std::string row(static_cast<std::size_t>(field.nx), '\0');
  for (int j = field.ny - 1; j >= 0; --j) {
    for (int i = 0; i < field.nx; ++i) {
      const double v = std::clamp(field.at(i, j), 0.0, 1.0);
      row[i] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
}

void write_pgm(const std::string& path, const DensityField& field) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path + "'");
  write_pgm(f, field);
  if (!f) throw IoError("write failed for '" + path + "'");
}

namespace {

// Header token, skipping whitespace and '#' comments.
long header_int(std::istream& in, const char* what) {
  int c = in.peek();
  while (c != EOF) {
    if (std::isspace(c)) {
      in.get();
    } else if (c == '#') {
      std::string skip;
      std::getline(in, skip);
    } else {
      break;
    }
    c = in.peek();
  }
  long v = -1;
  if (!(in >> v) || v < 0) throw ConfigError(std::string("pgm: bad ") + what);
  return v;
}

}  // namespace

DensityField read_pgm(std::istream& in) {
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (in.gcount() != 2 || magic[0] != 'P' || (magic[1] != '2' && magic[1] != '5')) {
    throw ConfigError("pgm: expected a P2 or P5 header");
  }
  const long w = header_int(in, "width"), h = header_int(in, "height"), maxval = header_int(in, "maxval");
  if (w < 1 || h < 1 || w > 100000 || h > 100000) throw ConfigError("pgm: unsupported dimensions");
  if (maxval < 1 || maxval > 65535) throw ConfigError("pgm: maxval must lie in [1, 65535]");
  DensityField f(static_cast<int>(w), static_cast<int>(h));
  auto put = [&](long k, long raw) {
    if (raw > maxval) throw ConfigError("pgm: sample exceeds maxval");
    const int i = static_cast<int>(k % w), row = static_cast<int>(k / w);
    f.at(i, static_cast<int>(h) - 1 - row) = static_cast<double>(raw) / static_cast<double>(maxval);
  };
  const long n = w * h;
  if (magic[1] == '2') {
    for (long k = 0; k < n; ++k) {
      long v;
      if (!(in >> v) || v < 0) throw ConfigError("pgm: truncated pixel data");
      put(k, v);
    }
  } else {
    in.get();  // single whitespace after maxval
    const int bytes = maxval < 256 ? 1 : 2;
    std::string data(static_cast<std::size_t>(n * bytes), '\0');
    in.read(data.data(), static_cast<std::streamsize>(data.size()));
    if (in.gcount() != static_cast<std::streamsize>(data.size())) throw ConfigError("pgm: truncated pixel data");
    for (long k = 0; k < n; ++k) {
      const auto* p = reinterpret_cast<const unsigned char*>(data.data()) + k * bytes;
      put(k, bytes == 1 ? p[0] : (p[0] << 8) | p[1]);
    }
  }
  return f;
}

DensityField read_pgm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open image '" + path + "'");
  return read_pgm(f);
}

}  // namespace mftd::io
