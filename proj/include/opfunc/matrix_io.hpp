#ifndef OPFUNC_MATRIX_IO_HPP
#define OPFUNC_MATRIX_IO_HPP

#include <iosfwd>
#include <string>

#include "opfunc/core.hpp"

namespace opfunc {

// Matrix exchange format:
//
//   dim n
//   a11 a12 ... a1n
//   ...
//
// with each entry written as re+imi (or re-imi) at 17 significant digits,
// which round-trips doubles exactly.

std::string format_complex(cd z);
cd parse_complex(const std::string& token);

void write_matrix(std::ostream& os, const MatrixXcd& m);
MatrixXcd read_matrix(std::istream& is);

MatrixXcd load_matrix(const std::string& path);
void save_matrix(const std::string& path, const MatrixXcd& m);

/// Fixed notation with 17 significant digits ("5.0000000000000000").
std::string format_sig17(double x);

}  // namespace opfunc

#endif  // OPFUNC_MATRIX_IO_HPP
