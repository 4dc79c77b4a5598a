#include <cctype>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "afem/mesh.hpp"

namespace afem {

namespace {

[[noreturn]] void parse_fail(int line, const std::string& what) {
  throw std::runtime_error("mesh parse error at line " + std::to_string(line) + ": " + what);
}

// Pulls the next whitespace-separated token, skipping '#' comments, and
// reports the line it was found on.
class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string next(const std::string& what) {
    std::string tok;
    while (true) {
      if (pos_ >= line_.size()) {
        if (!std::getline(in_, line_)) parse_fail(lineno_, "unexpected end of input, expected " + what);
        ++lineno_;
        pos_ = 0;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(line_[pos_]))) {
        ++pos_;
        continue;
      }
      if (line_[pos_] == '#') {
        pos_ = line_.size();
        continue;
      }
      size_t start = pos_;
      while (pos_ < line_.size() && !std::isspace(static_cast<unsigned char>(line_[pos_])) &&
             line_[pos_] != '#')
        ++pos_;
      return line_.substr(start, pos_ - start);
    }
  }

  long read_int(const std::string& what) {
    std::string tok = next(what);
    size_t used = 0;
    long v = 0;
    try {
      v = std::stol(tok, &used);
    } catch (const std::exception&) {
      parse_fail(lineno_, "expected integer " + what + ", got '" + tok + "'");
    }
    if (used != tok.size()) parse_fail(lineno_, "expected integer " + what + ", got '" + tok + "'");
    return v;
  }

  double read_double(const std::string& what) {
    std::string tok = next(what);
    size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      parse_fail(lineno_, "expected number " + what + ", got '" + tok + "'");
    }
    if (used != tok.size()) parse_fail(lineno_, "expected number " + what + ", got '" + tok + "'");
    return v;
  }

  int line() const { return lineno_; }

 private:
  std::istream& in_;
  std::string line_;
  size_t pos_ = 0;
  int lineno_ = 0;
};

}  // namespace

Mesh read_mesh(std::istream& in) {
  TokenReader tr(in);
  long nv = tr.read_int("vertex count");
  long ne = tr.read_int("element count");
  if (nv < 3 || ne < 1) parse_fail(tr.line(), "need at least 3 vertices and 1 element");

  Mesh m;
  m.vertices.reserve(nv);
  for (long v = 0; v < nv; ++v) {
    double x = tr.read_double("x coordinate");
    double y = tr.read_double("y coordinate");
    m.vertices.push_back({x, y});
  }
  for (long t = 0; t < ne; ++t) {
    std::array<int, 3> e;
    for (int i = 0; i < 3; ++i) {
      long v = tr.read_int("vertex id");
      if (v < 0 || v >= nv)
        parse_fail(tr.line(), "vertex id " + std::to_string(v) + " out of range [0," +
                                  std::to_string(nv - 1) + "]");
      e[i] = static_cast<int>(v);
    }
    long r = tr.read_int("reference edge");
    if (r < 0 || r > 2) parse_fail(tr.line(), "reference edge must be 0, 1 or 2");
    m.elems.push_back(e);
    m.ref_edge.push_back(static_cast<int>(r));
  }
  m.generation.assign(ne, 0);
  m.parent.assign(ne, -1);
  m.finalize();
  return m;
}

Mesh read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file '" + path + "'");
  return read_mesh(in);
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
  out << mesh.n_vertices() << ' ' << mesh.n_elems() << '\n';
  out << std::setprecision(17);
  for (const Vec2& v : mesh.vertices) out << v.x << ' ' << v.y << '\n';
  for (int t = 0; t < mesh.n_elems(); ++t)
    out << mesh.elems[t][0] << ' ' << mesh.elems[t][1] << ' ' << mesh.elems[t][2] << ' '
        << mesh.ref_edge[t] << '\n';
}

void write_mesh_file(const std::string& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_mesh(out, mesh);
  if (!out.flush()) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace afem
