#include "fusebench/spd.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace fusebench {

namespace {

constexpr double kRelTol = 1e-10;

void require_square(const Eigen::MatrixXd& m, const char* what) {
    if (m.rows() != m.cols()) {
        std::ostringstream msg;
        msg << what << ": matrix is " << m.rows() << "x" << m.cols() << ", expected square";
        throw DimensionMismatch(msg.str());
    }
}

double max_abs(const Eigen::MatrixXd& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

} // namespace

double pd_tolerance(const Eigen::MatrixXd& m) {
    return kRelTol * (1.0 + max_abs(m));
}

double symmetry_tolerance(const Eigen::MatrixXd& m) {
    return kRelTol * (1.0 + max_abs(m));
}

bool is_positive_definite(const Eigen::MatrixXd& m, double tol) {
    if (m.rows() != m.cols() || m.size() == 0) {
        return false;
    }
    if (!m.allFinite()) {
        return false;
    }
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > symmetry_tolerance(m)) {
        return false;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.compute(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    return es.info() == Eigen::Success && es.eigenvalues().minCoeff() > tol;
}

SpdMatrix::SpdMatrix(Eigen::MatrixXd entries) {
    require_square(entries, "SpdMatrix");
    if (entries.size() == 0) {
        throw DimensionMismatch("SpdMatrix: empty matrix");
    }
    if (!entries.allFinite()) {
        throw NotPositiveDefinite("SpdMatrix: non-finite entries");
    }
    const double asym = (entries - entries.transpose()).cwiseAbs().maxCoeff();
    if (asym > symmetry_tolerance(entries)) {
        std::ostringstream msg;
        msg << "SpdMatrix: asymmetry " << asym << " exceeds tolerance "
            << symmetry_tolerance(entries);
        throw NotPositiveDefinite(msg.str());
    }
    entries_ = 0.5 * (entries + entries.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.compute(entries_, Eigen::EigenvaluesOnly);
    const double floor = pd_tolerance(entries_);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= floor) {
        std::ostringstream msg;
        msg << "SpdMatrix: smallest eigenvalue "
            << (es.info() == Eigen::Success ? es.eigenvalues().minCoeff() : std::nan(""))
            << " is not above the tolerance " << floor;
        throw NotPositiveDefinite(msg.str());
    }
}

SpdMatrix SpdMatrix::identity(Eigen::Index dim) {
    return SpdMatrix(Eigen::MatrixXd::Identity(dim, dim), already_validated{});
}

SpdMatrix SpdMatrix::diagonal(const Eigen::VectorXd& diag) {
    if (diag.size() == 0 || diag.minCoeff() <= 0.0) {
        throw NotPositiveDefinite("SpdMatrix::diagonal: entries must be positive");
    }
    return SpdMatrix(Eigen::MatrixXd(diag.asDiagonal()), already_validated{});
}

SpdMatrix SpdMatrix::scaled_identity(Eigen::Index dim, double scale) {
    if (!(scale > 0.0)) {
        throw NotPositiveDefinite("SpdMatrix::scaled_identity: scale must be positive");
    }
    return SpdMatrix(scale * Eigen::MatrixXd::Identity(dim, dim), already_validated{});
}

SpdMatrix spd_from_validated(Eigen::MatrixXd entries) {
    Eigen::MatrixXd sym = 0.5 * (entries + entries.transpose());
    return SpdMatrix(std::move(sym), SpdMatrix::already_validated{});
}

SpdMatrix sym_sqrt(const SpdMatrix& a) {
    return spd_from_validated(detail::sym_sqrt_raw(a.matrix()));
}

SpdMatrix spd_inverse(const SpdMatrix& a) {
    Eigen::LLT<Eigen::MatrixXd> llt(a.matrix());
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("spd_inverse: Cholesky factorization failed");
    }
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(a.dim(), a.dim()));
    return spd_from_validated(std::move(inv));
}

double logdet(const SpdMatrix& a) {
    return detail::logdet_raw(a.matrix());
}

double ln_multigamma(int l, double a) {
    if (l < 1) {
        throw DomainError("ln_multigamma: order must be a positive integer");
    }
    if (!(a > 0.5 * (l - 1))) {
        std::ostringstream msg;
        msg << "ln_multigamma: argument " << a << " must exceed (l-1)/2 = " << 0.5 * (l - 1);
        throw DomainError(msg.str());
    }
    double sum = 0.25 * l * (l - 1) * std::log(std::numbers::pi);
    for (int j = 1; j <= l; ++j) {
        sum += std::lgamma(a - 0.5 * (j - 1));
    }
    return sum;
}

namespace detail {

namespace {

[[noreturn]] void fail_not_pd(const char* what, double min_eig, double floor) {
    std::ostringstream msg;
    msg << what << ": smallest eigenvalue " << min_eig << " is not above the tolerance " << floor;
    throw NotPositiveDefinite(msg.str());
}

// Closed form for 2x2: sqrt(A) = (A + sqrt(det A) I) / sqrt(tr A + 2 sqrt(det A)),
// and the inverse square root from its adjugate (det sqrt(A) = sqrt(det A)).
Eigen::MatrixXd sym_power_half_2x2(const Eigen::MatrixXd& a, bool inverse, const char* what) {
    const double p = a(0, 0);
    const double q = 0.5 * (a(0, 1) + a(1, 0));
    const double r = a(1, 1);
    const double mean = 0.5 * (p + r);
    const double disc = std::sqrt(std::max(0.0, 0.25 * (p - r) * (p - r) + q * q));
    const double lo = mean - disc;
    const double hi = mean + disc;
    const double floor = pd_tolerance(a);
    if (!(lo > floor)) {
        fail_not_pd(what, lo, floor);
    }
    const double s = std::sqrt(lo * hi);
    const double t = std::sqrt(p + r + 2.0 * s);
    Eigen::MatrixXd out(2, 2);
    if (!inverse) {
        out << (p + s) / t, q / t, q / t, (r + s) / t;
    } else {
        const double denom = t * s;
        out << (r + s) / denom, -q / denom, -q / denom, (p + s) / denom;
    }
    return out;
}

Eigen::MatrixXd sym_power_half(const Eigen::MatrixXd& a, bool inverse, const char* what) {
    if (a.rows() == 2) {
        return sym_power_half_2x2(a, inverse, what);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() != Eigen::Success) {
        throw NotPositiveDefinite(std::string(what) + ": eigendecomposition failed");
    }
    const double floor = pd_tolerance(a);
    if (es.eigenvalues().minCoeff() <= floor) {
        fail_not_pd(what, es.eigenvalues().minCoeff(), floor);
    }
    Eigen::VectorXd d = es.eigenvalues().cwiseSqrt();
    if (inverse) {
        d = d.cwiseInverse();
    }
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace

Eigen::MatrixXd sym_sqrt_raw(const Eigen::MatrixXd& a) {
    return sym_power_half(a, false, "sym_sqrt");
}

Eigen::MatrixXd sym_inv_sqrt_raw(const Eigen::MatrixXd& a) {
    return sym_power_half(a, true, "sym_inv_sqrt");
}

double logdet_raw(const Eigen::MatrixXd& a) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("logdet: Cholesky factorization failed");
    }
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

} // namespace detail

} // namespace fusebench
