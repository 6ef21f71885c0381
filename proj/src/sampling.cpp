#include "fusebench/sampling.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace fusebench {

namespace {

// Requires an integral dof no smaller than minimum; returns it as int.
int require_integer_dof(double dof, double minimum, const char* what) {
    if (!(dof == std::floor(dof)) || !std::isfinite(dof)) {
        std::ostringstream msg;
        msg << what << ": stacking sampler needs an integer dof, got " << dof;
        throw InvalidDof(msg.str());
    }
    if (dof < minimum) {
        std::ostringstream msg;
        msg << what << ": dof " << dof << " is below the minimum " << minimum;
        throw InvalidDof(msg.str());
    }
    return static_cast<int>(dof);
}

// G^T G for G an n x l standard Gaussian matrix; identity-scale Wishart draw.
Eigen::MatrixXd wishart_identity_raw(Eigen::Index l, int dof, RandomStream& rng) {
    Eigen::MatrixXd g = sample_gaussian_matrix(dof, l, rng);
    return g.transpose() * g;
}

// A12^T = sqrt(A22) (S + X X^T)^(-1/2) X sqrt(A11) with S ~ W_{l2}(s_dof, I)
// drawn first, X ~ N_{l2,l1} second. Shared by the pairwise and chain
// samplers so the two stay draw-for-draw identical.
Eigen::MatrixXd draw_offdiag_transpose(const Eigen::MatrixXd& sqrt_a11,
                                       const Eigen::MatrixXd& sqrt_a22, int s_dof,
                                       RandomStream& rng) {
    const Eigen::Index l1 = sqrt_a11.rows();
    const Eigen::Index l2 = sqrt_a22.rows();
    Eigen::MatrixXd s = wishart_identity_raw(l2, s_dof, rng);
    Eigen::MatrixXd x = sample_gaussian_matrix(l2, l1, rng);
    s.noalias() += x * x.transpose();
    return sqrt_a22 * detail::sym_inv_sqrt_raw(s) * x * sqrt_a11;
}

} // namespace

DiagonalBlocks::DiagonalBlocks(std::vector<SpdMatrix> blocks) : blocks_(std::move(blocks)) {
    if (blocks_.empty()) {
        throw DimensionMismatch("DiagonalBlocks: need at least one block");
    }
    const Eigen::Index m = blocks_.front().dim();
    for (const auto& b : blocks_) {
        if (b.dim() != m) {
            throw DimensionMismatch("DiagonalBlocks: blocks have mixed sizes");
        }
    }
}

OffDiagonalBlocks::OffDiagonalBlocks(int k, Eigen::Index m) : k_(k), m_(m) {
    if (k < 1 || m < 1) {
        throw DimensionMismatch("OffDiagonalBlocks: k and m must be positive");
    }
    blocks_.assign(static_cast<std::size_t>(k) * (k - 1) / 2, Eigen::MatrixXd::Zero(m, m));
}

namespace {

std::size_t pair_index(int i, int j, int k) {
    if (i < 0 || j <= i || j >= k) {
        std::ostringstream msg;
        msg << "OffDiagonalBlocks: pair (" << i << ", " << j << ") invalid for k = " << k;
        throw DimensionMismatch(msg.str());
    }
    // blocks stored in lexicographic (i, j) order, i < j
    const std::size_t before = static_cast<std::size_t>(i) * (2 * k - i - 1) / 2;
    return before + static_cast<std::size_t>(j - i - 1);
}

} // namespace

const Eigen::MatrixXd& OffDiagonalBlocks::block(int i, int j) const {
    return blocks_[pair_index(i, j, k_)];
}

void OffDiagonalBlocks::set_block(int i, int j, Eigen::MatrixXd value) {
    if (value.rows() != m_ || value.cols() != m_) {
        throw DimensionMismatch("OffDiagonalBlocks::set_block: wrong block shape");
    }
    blocks_[pair_index(i, j, k_)] = std::move(value);
}

Eigen::MatrixXd assemble_joint(const DiagonalBlocks& pd, const OffDiagonalBlocks& po) {
    const int k = pd.k();
    const Eigen::Index m = pd.m();
    if (po.k() != k || po.m() != m) {
        throw DimensionMismatch("assemble_joint: block sets disagree on (k, m)");
    }
    Eigen::MatrixXd full(k * m, k * m);
    for (int i = 0; i < k; ++i) {
        full.block(i * m, i * m, m, m) = pd.block(i).matrix();
        for (int j = i + 1; j < k; ++j) {
            full.block(i * m, j * m, m, m) = po.block(i, j);
            full.block(j * m, i * m, m, m) = po.block(i, j).transpose();
        }
    }
    return full;
}

Eigen::MatrixXd sample_gaussian_matrix(Eigen::Index rows, Eigen::Index cols, RandomStream& rng) {
    if (rows < 1 || cols < 1) {
        throw DimensionMismatch("sample_gaussian_matrix: rows and cols must be positive");
    }
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            m(r, c) = rng.normal();
        }
    }
    return m;
}

SpdMatrix sample_wishart(const WishartParams& params, RandomStream& rng) {
    if (params.scale.dim() != params.dim) {
        throw DimensionMismatch("sample_wishart: scale size disagrees with dim");
    }
    const int n = require_integer_dof(params.dof, static_cast<double>(params.dim),
                                      "sample_wishart");
    Eigen::MatrixXd a = wishart_identity_raw(params.dim, n, rng);
    if (!params.scale.matrix().isIdentity(0.0)) {
        const Eigen::MatrixXd root = detail::sym_sqrt_raw(params.scale.matrix());
        a = root * a * root;
    }
    return SpdMatrix(std::move(a));
}

double wishart_logpdf(const SpdMatrix& a, const WishartParams& params) {
    const Eigen::Index l = params.dim;
    if (a.dim() != l || params.scale.dim() != l) {
        throw DimensionMismatch("wishart_logpdf: dimension mismatch");
    }
    const double n = params.dof;
    if (!(n > static_cast<double>(l - 1))) {
        std::ostringstream msg;
        msg << "wishart_logpdf: density needs dof > l - 1 = " << (l - 1) << ", got " << n;
        throw InvalidDof(msg.str());
    }
    Eigen::LLT<Eigen::MatrixXd> scale_llt(params.scale.matrix());
    if (scale_llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("wishart_logpdf: scale factorization failed");
    }
    const double trace_term = scale_llt.solve(a.matrix()).trace();
    return 0.5 * (n - l - 1) * logdet(a) - 0.5 * trace_term -
           0.5 * n * l * std::numbers::ln2 - 0.5 * n * logdet(params.scale) -
           ln_multigamma(static_cast<int>(l), 0.5 * n);
}

Eigen::MatrixXd sample_inverted_t(const InvTParams& params, RandomStream& rng) {
    const Eigen::Index l = params.row_scale.dim();
    const Eigen::Index m = params.col_scale.dim();
    if (params.location.rows() != l || params.location.cols() != m) {
        throw DimensionMismatch("sample_inverted_t: location shape disagrees with scales");
    }
    const int n = require_integer_dof(params.dof, 1.0, "sample_inverted_t");
    // S first, X second.
    Eigen::MatrixXd s = wishart_identity_raw(l, n + static_cast<int>(l) - 1, rng);
    Eigen::MatrixXd x = sample_gaussian_matrix(l, m, rng);
    s.noalias() += x * x.transpose();
    return detail::sym_sqrt_raw(params.row_scale.matrix()) * detail::sym_inv_sqrt_raw(s) * x *
               detail::sym_sqrt_raw(params.col_scale.matrix()) +
           params.location;
}

double inverted_t_logpdf(const Eigen::MatrixXd& t, const InvTParams& params) {
    const Eigen::Index l = params.row_scale.dim();
    const Eigen::Index m = params.col_scale.dim();
    if (t.rows() != l || t.cols() != m || params.location.rows() != l ||
        params.location.cols() != m) {
        throw DimensionMismatch("inverted_t_logpdf: shape mismatch");
    }
    const double n = params.dof;
    if (!(n > 0.0)) {
        throw InvalidDof("inverted_t_logpdf: density needs dof > 0");
    }
    // Deviation in the whitened coordinates keeps the support matrix
    // symmetric: I - S^-1/2 (T-M) O^-1 (T-M)^T S^-1/2.
    const Eigen::MatrixXd dev = detail::sym_inv_sqrt_raw(params.row_scale.matrix()) *
                                (t - params.location);
    Eigen::LLT<Eigen::MatrixXd> omega_llt(params.col_scale.matrix());
    if (omega_llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("inverted_t_logpdf: column scale factorization failed");
    }
    Eigen::MatrixXd support = Eigen::MatrixXd::Identity(l, l) -
                              dev * omega_llt.solve(dev.transpose());
    support = 0.5 * (support + support.transpose());
    if (!is_positive_definite(support, pd_tolerance(support))) {
        throw OutOfSupport("inverted_t_logpdf: point outside the bounded support");
    }
    const int li = static_cast<int>(l);
    const double md = static_cast<double>(m);
    const double ld = static_cast<double>(l);
    return ln_multigamma(li, 0.5 * (n + md + ld - 1)) - ln_multigamma(li, 0.5 * (n + ld - 1)) -
           0.5 * md * ld * std::log(std::numbers::pi) - 0.5 * md * logdet(params.row_scale) -
           0.5 * ld * logdet(params.col_scale) + 0.5 * (n - 2) * detail::logdet_raw(support);
}

Eigen::MatrixXd sample_offdiag_two(const SpdMatrix& a11, const SpdMatrix& a22, double dof,
                                   RandomStream& rng) {
    const Eigen::Index l1 = a11.dim();
    const Eigen::Index l2 = a22.dim();
    const int n = require_integer_dof(dof, static_cast<double>(l1 + l2), "sample_offdiag_two");
    const Eigen::MatrixXd t = draw_offdiag_transpose(detail::sym_sqrt_raw(a11.matrix()),
                                                     detail::sym_sqrt_raw(a22.matrix()),
                                                     n - static_cast<int>(l1), rng);
    return t.transpose();
}

OffDiagonalBlocks sample_offdiag_chain(const DiagonalBlocks& pd, double dof, RandomStream& rng) {
    const int n = require_integer_dof(dof, static_cast<double>(pd.k() * pd.m()),
                                      "sample_offdiag_chain");
    std::vector<Eigen::MatrixXd> sqrt_diag;
    sqrt_diag.reserve(static_cast<std::size_t>(pd.k()));
    for (int j = 0; j < pd.k(); ++j) {
        sqrt_diag.push_back(detail::sym_sqrt_raw(pd.block(j).matrix()));
    }
    return detail::sample_offdiag_chain_prepared(pd, sqrt_diag, n, rng);
}

double conditional_logpdf(const OffDiagonalBlocks& po, const DiagonalBlocks& pd, double dof) {
    const int k = pd.k();
    const Eigen::Index m = pd.m();
    if (po.k() != k || po.m() != m) {
        throw DimensionMismatch("conditional_logpdf: block sets disagree on (k, m)");
    }
    if (!(dof > static_cast<double>(k * m - 1))) {
        std::ostringstream msg;
        msg << "conditional_logpdf: density needs dof > k*m - 1 = " << (k * m - 1) << ", got "
            << dof;
        throw InvalidDof(msg.str());
    }
    const Eigen::MatrixXd full = assemble_joint(pd, po);
    if (!is_positive_definite(full, pd_tolerance(full))) {
        throw OutOfSupport("conditional_logpdf: assembled joint covariance is not PD");
    }
    double sum = 0.0;
    for (int j = 1; j < k; ++j) {
        const Eigen::Index p = j * m;  // size of the leading block already assembled
        Eigen::MatrixXd t(m, p);
        for (int i = 0; i < j; ++i) {
            t.middleCols(i * m, m) = po.block(i, j).transpose();
        }
        const InvTParams factor{dof - static_cast<double>((j + 1) * m) + 1.0,
                                Eigen::MatrixXd::Zero(m, p), pd.block(j),
                                SpdMatrix(full.topLeftCorner(p, p))};
        sum += inverted_t_logpdf(t, factor);
    }
    return sum;
}

namespace detail {

OffDiagonalBlocks sample_offdiag_chain_prepared(const DiagonalBlocks& pd,
                                                const std::vector<Eigen::MatrixXd>& sqrt_diag,
                                                int dof, RandomStream& rng) {
    const int k = pd.k();
    const Eigen::Index m = pd.m();
    OffDiagonalBlocks po(k, m);
    Eigen::MatrixXd leading = pd.block(0).matrix();
    Eigen::MatrixXd sqrt_leading = sqrt_diag[0];
    for (int j = 1; j < k; ++j) {
        const Eigen::Index p = j * m;
        if (j > 1) {
            sqrt_leading = sym_sqrt_raw(leading);
        }
        // R is m x p; its i-th column block is A_{i,j}^T.
        const Eigen::MatrixXd r =
            draw_offdiag_transpose(sqrt_leading, sqrt_diag[static_cast<std::size_t>(j)],
                                   dof - static_cast<int>(p), rng);
        for (int i = 0; i < j; ++i) {
            po.set_block(i, j, r.middleCols(i * m, m).transpose());
        }
        if (j + 1 < k) {
            Eigen::MatrixXd grown(p + m, p + m);
            grown.topLeftCorner(p, p) = leading;
            grown.topRightCorner(p, m) = r.transpose();
            grown.bottomLeftCorner(m, p) = r;
            grown.bottomRightCorner(m, m) = pd.block(j).matrix();
            leading = std::move(grown);
        }
    }
    return po;
}

} // namespace detail

} // namespace fusebench
