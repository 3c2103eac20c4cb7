#ifndef OPFUNC_JACOBI_HPP
#define OPFUNC_JACOBI_HPP

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>

#include "opfunc/core.hpp"

namespace opfunc {

template <typename Real>
struct JointEigen {
  Matrix<Real> vectors;                   // orthonormal columns
  std::vector<RealVector<Real>> diagonals;  // diag(V^H M_k V), one per input
  int sweeps = 0;
};

/// Cyclic Jacobi diagonalization of one or more pairwise commuting Hermitian
/// matrices with a common unitary V. Each plane rotation minimises the summed
/// squared off-diagonal mass of the (p,q) entries over all inputs
/// (Cardoso-Souloumiac angles); for a single matrix this is the classical
/// complex Jacobi rotation that zeroes a_pq exactly.
///
/// Inputs are assumed Hermitian; only the upper triangle pairs are inspected.
template <typename Real>
JointEigen<Real> joint_jacobi(std::vector<Matrix<Real>> mats, int max_sweeps = 100) {
  using C = Complex<Real>;
  using Mat3 = Eigen::Matrix<Real, 3, 3>;
  using Vec3 = Eigen::Matrix<Real, 3, 1>;

  JointEigen<Real> out;
  if (mats.empty()) throw DomainError("joint_jacobi: no input matrices");
  const Index n = mats.front().rows();
  out.vectors = Matrix<Real>::Identity(n, n);

  Real scale = 0;
  for (const auto& m : mats) scale += m.squaredNorm();
  const Real eps = std::numeric_limits<Real>::epsilon();
  const Real stop = scale * (eps * eps) * static_cast<Real>(n * n);
  const Real skip = scale * (eps * eps) * eps;

  auto off_mass = [&] {
    Real off = 0;
    for (const auto& m : mats)
      for (Index q = 1; q < n; ++q)
        for (Index p = 0; p < q; ++p) off += std::norm(m(p, q));
    return 2 * off;
  };

  for (int sweep = 0; sweep < max_sweeps && scale > 0; ++sweep) {
    if (off_mass() <= stop) break;
    out.sweeps = sweep + 1;
    for (Index p = 0; p + 1 < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        Real pair_mass = 0;
        for (const auto& m : mats) pair_mass += std::norm(m(p, q));
        if (pair_mass <= skip) continue;

        Vec3 dir;
        if (mats.size() == 1) {
          const auto& m = mats.front();
          dir << std::real(m(p, p)) - std::real(m(q, q)), 2 * std::real(m(p, q)),
              2 * std::imag(m(p, q));
          dir.normalize();
        } else {
          Mat3 g = Mat3::Zero();
          for (const auto& m : mats) {
            Vec3 h;
            h << std::real(m(p, p)) - std::real(m(q, q)), 2 * std::real(m(p, q)),
                2 * std::imag(m(p, q));
            g += h * h.transpose();
          }
          Eigen::SelfAdjointEigenSolver<Mat3> es(g);
          dir = es.eigenvectors().col(2);
        }
        if (dir(0) < 0) dir = -dir;

        const Real c = std::sqrt((1 + dir(0)) / 2);
        const C s = C(dir(1), -dir(2)) / (2 * c);
        const C sc = std::conj(s);

        // M <- G^H M G with G = [[c, -conj(s)], [s, c]] acting on (p, q).
        for (auto& m : mats) {
          for (Index r = 0; r < n; ++r) {
            const C mp = m(r, p), mq = m(r, q);
            m(r, p) = c * mp + s * mq;
            m(r, q) = -sc * mp + c * mq;
          }
          for (Index k = 0; k < n; ++k) {
            const C mp = m(p, k), mq = m(q, k);
            m(p, k) = c * mp + sc * mq;
            m(q, k) = -s * mp + c * mq;
          }
          m(p, p) = std::real(m(p, p));
          m(q, q) = std::real(m(q, q));
          if (mats.size() == 1) {
            m(p, q) = 0;
            m(q, p) = 0;
          } else {
            m(q, p) = std::conj(m(p, q));
          }
        }
        auto& v = out.vectors;
        for (Index r = 0; r < n; ++r) {
          const C vp = v(r, p), vq = v(r, q);
          v(r, p) = c * vp + s * vq;
          v(r, q) = -sc * vp + c * vq;
        }
      }
    }
  }

  out.diagonals.reserve(mats.size());
  for (const auto& m : mats) out.diagonals.push_back(m.diagonal().real());
  return out;
}

}  // namespace opfunc

#endif  // OPFUNC_JACOBI_HPP
