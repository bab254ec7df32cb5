#ifndef FCS_FOCK_HPP
#define FCS_FOCK_HPP

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>

#include "fcs/params.hpp"

namespace fcs {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

class InvalidDimension : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline void check_dim(int n_max) {
    if (n_max < 1) throw InvalidDimension("Fock truncation n_max must be >= 1");
}

// a|n> = sqrt(n)|n-1> on the truncated basis {|0>,...,|n_max>}.
inline Matrix annihilation(int n_max) {
    check_dim(n_max);
    Matrix a = Matrix::Zero(n_max + 1, n_max + 1);
    for (int n = 1; n <= n_max; ++n) {
        a(n - 1, n) = std::sqrt(static_cast<double>(n));
    }
    return a;
}

inline Matrix number_operator(int n_max) {
    check_dim(n_max);
    Matrix n = Matrix::Zero(n_max + 1, n_max + 1);
    for (int k = 0; k <= n_max; ++k) n(k, k) = static_cast<double>(k);
    return n;
}

// (u2/2) ad^2 a^2: diagonal with entries (u2/2) n (n-1).
inline Matrix kerr_hamiltonian(int n_max, double u2) {
    check_dim(n_max);
    if (u2 < 0.0) throw InvalidParameter("Kerr strength u2 must be nonnegative");
    Matrix h = Matrix::Zero(n_max + 1, n_max + 1);
    for (int n = 0; n <= n_max; ++n) {
        h(n, n) = 0.5 * u2 * n * (n - 1.0);
    }
    return h;
}

// Port-resolved homodyne jump operator,
//   sqrt(gamma) (u a - v ad) -+ i beta  (port 1: -i beta, port 2: +i beta).
inline Matrix jump_operator(const ModelParams& p, int port, int n_max) {
    p.validate();
    if (port != 1 && port != 2) throw InvalidParameter("port must be 1 or 2");
    const Matrix a = annihilation(n_max);
    const double sg = std::sqrt(p.gamma);
    Matrix op = sg * (p.u() * a - p.v() * a.adjoint());
    const Complex lo = (port == 1) ? Complex(0.0, -p.beta) : Complex(0.0, p.beta);
    op += lo * Matrix::Identity(n_max + 1, n_max + 1);
    return op;
}

// Builder signature used by displace_operator: constructs an operator as a
// polynomial in the given ladder matrices.
using LadderPolynomial = std::function<Matrix(const Matrix& a, const Matrix& ad)>;

// Frame shift a -> a + alpha, ad -> ad + conj(alpha), applied by rebuilding
// the polynomial from shifted ladder matrices. Exact on the truncated space,
// no exponentiation involved.
inline Matrix displace_operator(const LadderPolynomial& build, int n_max, Complex alpha) {
    check_dim(n_max);
    const Matrix id = Matrix::Identity(n_max + 1, n_max + 1);
    const Matrix a = annihilation(n_max);
    return build(a + alpha * id, a.adjoint() + std::conj(alpha) * id);
}

// --- vectorization helpers (column-major vec, vec(A X B) = (B^T kron A) vec X) ---

inline Vector vectorize(const Matrix& m) {
    return Eigen::Map<const Vector>(m.data(), m.size());
}

inline Matrix unvectorize(const Vector& v, int dim) {
    return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// vec(A X) = (I kron A) vec X
inline Matrix left_mult(const Matrix& a) {
    return kron(Matrix::Identity(a.rows(), a.cols()), a);
}

// vec(X B) = (B^T kron I) vec X
inline Matrix right_mult(const Matrix& b) {
    return kron(b.transpose(), Matrix::Identity(b.rows(), b.cols()));
}

}  // namespace fcs

#endif
