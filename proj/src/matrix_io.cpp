#include "opfunc/matrix_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace opfunc {

namespace {

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::string format_complex(cd z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw DomainError("cannot serialize a non-finite matrix entry");
  std::string out = format_real(z.real());
  const double im = z.imag();
  out += std::signbit(im) ? '-' : '+';
  out += format_real(std::fabs(im));
  out += 'i';
  return out;
}

cd parse_complex(const std::string& token) {
  const char* begin = token.c_str();
  char* end = nullptr;
  errno = 0;
  const double re = std::strtod(begin, &end);
  if (end == begin || errno == ERANGE) throw ParseError("bad complex entry '" + token + "'");
  if (*end == '\0') return {re, 0.0};
  if (*end == 'i' && end[1] == '\0') return {0.0, re};  // pure imaginary "3i"
  if (*end != '+' && *end != '-') throw ParseError("bad complex entry '" + token + "'");
  const char* im_begin = end;
  const double im = std::strtod(im_begin, &end);
  if (end == im_begin || *end != 'i' || end[1] != '\0')
    throw ParseError("bad complex entry '" + token + "'");
  if (!std::isfinite(re) || !std::isfinite(im)) throw ParseError("non-finite entry '" + token + "'");
  return {re, im};
}

void write_matrix(std::ostream& os, const MatrixXcd& m) {
  if (m.rows() != m.cols()) throw DomainError("matrix exchange format requires a square matrix");
  os << "dim " << m.rows() << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ' ';
      os << format_complex(m(i, j));
    }
    os << '\n';
  }
}

MatrixXcd read_matrix(std::istream& is) {
  std::string keyword;
  long long n = 0;
  if (!(is >> keyword) || keyword != "dim") throw ParseError("matrix file: expected header 'dim n'");
  if (!(is >> n) || n < 1) throw ParseError("matrix file: dimension must be a positive integer");
  MatrixXcd m(n, n);
  std::string token;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (!(is >> token))
        throw ParseError("matrix file: expected " + std::to_string(n * n) + " entries");
      m(i, j) = parse_complex(token);
    }
  if (is >> token) throw ParseError("matrix file: trailing content '" + token + "'");
  return m;
}

MatrixXcd load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open matrix file " + path);
  try {
    return read_matrix(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void save_matrix(const std::string& path, const MatrixXcd& m) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write matrix file " + path);
  write_matrix(out, m);
}

std::string format_sig17(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  int decimals = 16;
  if (x != 0) {
    const int exponent = static_cast<int>(std::floor(std::log10(std::fabs(x))));
    decimals = 16 - exponent;
    if (decimals < 0) decimals = 0;
    if (decimals > 340) decimals = 340;
  }
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(decimals);
  os << x;
  return os.str();
}

}  // namespace opfunc
