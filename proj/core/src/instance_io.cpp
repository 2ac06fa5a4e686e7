#include "sktflow/instance_io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <vector>

namespace sktflow {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

bool parse_number(const std::string& tok, double& out) {
  const char* b = tok.data();
  const char* e = b + tok.size();
  const auto res = std::from_chars(b, e, out);
  return res.ec == std::errc{} && res.ptr == e;
}

std::vector<std::string> tokens(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string t;
  while (is >> t) out.push_back(t);
  return out;
}

ParseResult fail(int line, std::string msg) {
  ParseResult r;
  r.error = ParseDiagnostic{line, std::move(msg)};
  return r;
}

}  // namespace

ParseResult parse_instance(std::istream& in) {
  int dim = 0;
  std::vector<BracketTerm> terms;
  Eigen::MatrixXd j, g;
  bool have_dim = false, have_j = false, have_g = false;

  std::string line;
  int lineno = 0;
  enum class Section { None, Bracket, J, G } section = Section::None;
  int matrix_row = 0;

  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto tk = tokens(line);
    if (tk.empty()) continue;

    if (tk[0] == "dim") {
      if (tk.size() != 2) return fail(lineno, "dim expects one integer");
      double v = 0;
      if (!parse_number(tk[1], v) || v != static_cast<int>(v))
        return fail(lineno, "dim: not an integer");
      dim = static_cast<int>(v);
      if (dim < 2 || dim % 2 != 0) return fail(lineno, "dim must be even and >= 2");
      have_dim = true;
      section = Section::None;
      continue;
    }
    if (tk[0] == "bracket") {
      if (!have_dim) return fail(lineno, "bracket section before dim");
      section = Section::Bracket;
      continue;
    }
    if (tk[0] == "J") {
      if (!have_dim) return fail(lineno, "J section before dim");
      section = Section::J;
      j = Eigen::MatrixXd::Zero(dim, dim);
      matrix_row = 0;
      continue;
    }
    if (tk[0] == "g") {
      if (!have_dim) return fail(lineno, "g section before dim");
      section = Section::G;
      g = Eigen::MatrixXd::Zero(dim, dim);
      matrix_row = 0;
      continue;
    }

    switch (section) {
      case Section::None:
        return fail(lineno, "unexpected content outside a section: '" + tk[0] + "'");
      case Section::Bracket: {
        if (tk.size() != 4) return fail(lineno, "bracket line expects 'i j k value'");
        double iv, jv, kv, val;
        if (!parse_number(tk[0], iv) || !parse_number(tk[1], jv) || !parse_number(tk[2], kv) ||
            !parse_number(tk[3], val))
          return fail(lineno, "bracket line: malformed number");
        const int bi = static_cast<int>(iv), bj = static_cast<int>(jv), bk = static_cast<int>(kv);
        if (bi != iv || bj != jv || bk != kv) return fail(lineno, "bracket indices must be integers");
        if (bi < 1 || bi > dim || bj < 1 || bj > dim || bk < 1 || bk > dim)
          return fail(lineno, "bracket index out of range 1..dim");
        if (bi == bj) return fail(lineno, "bracket needs i != j");
        terms.push_back({bi - 1, bj - 1, bk - 1, val});
        break;
      }
      case Section::J:
      case Section::G: {
        Eigen::MatrixXd& m = section == Section::J ? j : g;
        if (matrix_row >= dim) return fail(lineno, "too many matrix rows");
        if (static_cast<int>(tk.size()) != dim)
          return fail(lineno, "matrix row expects " + std::to_string(dim) + " entries");
        for (int c = 0; c < dim; ++c) {
          double v;
          if (!parse_number(tk[static_cast<std::size_t>(c)], v))
            return fail(lineno, "matrix row: malformed number");
          m(matrix_row, c) = v;
        }
        ++matrix_row;
        if (matrix_row == dim) {
          (section == Section::J ? have_j : have_g) = true;
          section = Section::None;
        }
        break;
      }
    }
  }
  if (!have_dim) return fail(lineno, "missing dim");
  if (!have_j) return fail(lineno, "missing or incomplete J section");
  if (!have_g) return fail(lineno, "missing or incomplete g section");

  ParseResult r;
  r.spec = InstanceSpec{"file", LieAlgebra(dim, terms), j, g, "file"};
  return r;
}

ParseResult parse_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) return fail(0, "cannot open '" + path + "'");
  return parse_instance(in);
}

void write_instance(const InstanceSpec& spec, std::ostream& out) {
  const int d = spec.algebra.dim();
  out << "# sktflow instance";
  if (!spec.name.empty()) out << ": " << spec.name;
  if (!spec.provenance.empty()) out << " (" << spec.provenance << ")";
  out << "\n";
  out << "dim " << d << "\n";
  out << "bracket\n";
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        const double v = spec.algebra.c(i, j, k);
        if (v != 0.0)
          out << (i + 1) << " " << (j + 1) << " " << (k + 1) << " " << format_double(v) << "\n";
      }
  out << "J\n";
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) out << (j ? " " : "") << format_double(spec.J(i, j));
    out << "\n";
  }
  out << "g\n";
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) out << (j ? " " : "") << format_double(spec.g(i, j));
    out << "\n";
  }
}

bool write_instance_file(const InstanceSpec& spec, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // '\n' line endings everywhere
  if (!out) return false;
  write_instance(spec, out);
  return static_cast<bool>(out);
}

}  // namespace sktflow
