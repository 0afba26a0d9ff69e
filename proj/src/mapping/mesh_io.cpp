#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mftd/error.hpp"
#include "mftd/mapping.hpp"

namespace mftd::mapping {

namespace {

// Token stream with '#' comments removed.
std::istringstream strip_comments(std::istream& in) {
  std::ostringstream clean;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    clean << line << '\n';
  }
  return std::istringstream(clean.str());
}

template <typename T>
T next(std::istream& in, const char* what) {
  T v;
  if (!(in >> v)) throw ConfigError(std::string("mesh file: expected ") + what);
  return v;
}

}  // namespace

SurfacePatchMesh read_mesh(std::istream& raw) {
  std::istringstream in = strip_comments(raw);
  SurfacePatchMesh m;
  const long n = next<long>(in, "node count");
  if (n < 1) throw ConfigError("mesh file: node count must be positive");
  m.nodes.resize(static_cast<std::size_t>(n));
  for (auto& p : m.nodes) {
    p.x() = next<double>(in, "node x");
    p.y() = next<double>(in, "node y");
    p.z() = next<double>(in, "node z");
  }
  const long nq = next<long>(in, "quad count");
  if (nq < 1) throw ConfigError("mesh file: quad count must be positive");
  m.quads.resize(static_cast<std::size_t>(nq));
  for (auto& q : m.quads) {
    for (int& v : q) v = next<int>(in, "quad node index");
  }
  for (auto& line : m.boundary) {
    const long k = next<long>(in, "boundary length");
    if (k < 0) throw ConfigError("mesh file: negative boundary length");
    line.resize(static_cast<std::size_t>(k));
    for (int& v : line) v = next<int>(in, "boundary node index");
  }
  std::string extra;
  if (in >> extra) throw ConfigError("mesh file: trailing content '" + extra + "'");
  m.validate();
  return m;
}

SurfacePatchMesh load_mesh(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open mesh file '" + path + "'");
  return read_mesh(f);
}

void write_mesh(std::ostream& out, const SurfacePatchMesh& mesh) {
  std::ostringstream os;
  os.precision(17);
  os << mesh.nodes.size() << '\n';
  for (const auto& p : mesh.nodes) os << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  os << mesh.quads.size() << '\n';
  for (const auto& q : mesh.quads) os << q[0] << ' ' << q[1] << ' ' << q[2] << ' ' << q[3] << '\n';
  for (const auto& line : mesh.boundary) {
    os << line.size();
    for (int v : line) os << ' ' << v;
    os << '\n';
  }
  out << os.str();
}

}  // namespace mftd::mapping
