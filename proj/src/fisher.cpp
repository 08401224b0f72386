#include "isac/fisher.hpp"

#include <numbers>

namespace isac {

namespace {

double slow_time_rate(const SystemConfig& cfg, int psi)
{
    return two_pi * cfg.carrier_freq * (psi - 1) * cfg.symbol_duration;
}

double fast_freq_rate(const SystemConfig& cfg, int zeta)
{
    return two_pi * zeta * cfg.subcarrier_spacing;
}

void require_nondegenerate(const ResourceAssignment& asg)
{
    if (asg.subcarriers.empty() || asg.symbols.empty())
        throw DegenerateError("fisher: empty assignment");
    if (scaled_index_variance(asg.subcarriers) == 0 || scaled_index_variance(asg.symbols) == 0)
        throw DegenerateError("fisher: zero index variance makes the projection singular");
}

} // namespace

VectorXcd build_manifold(const SystemConfig& cfg, const ResourceAssignment& asg, double delay,
                         double doppler_ratio)
{
    const Index nk = asg.n_sub();
    const Index gk = asg.n_sym();
    VectorXcd a(gk * nk);
    for (Index g = 0; g < gk; ++g) {
        const double slow = slow_time_rate(cfg, asg.symbols[static_cast<std::size_t>(g)]) * doppler_ratio;
        for (Index n = 0; n < nk; ++n) {
            const double fast = fast_freq_rate(cfg, asg.subcarriers[static_cast<std::size_t>(n)]) * delay;
            a(g * nk + n) = std::polar(1.0, -(slow + fast));
        }
    }
    return a;
}

VectorXcd build_manifold(const FisherProblem& problem)
{
    return build_manifold(problem.config, problem.assignment, problem.target.delay,
                          problem.target.doppler_ratio(problem.config.c));
}

MatrixXcd manifold_derivatives(const FisherProblem& problem)
{
    const auto& asg = problem.assignment;
    const auto& cfg = problem.config;
    const VectorXcd a = build_manifold(problem);
    const Index nk = asg.n_sub();
    MatrixXcd v(a.size(), 2);
    const cd minus_j(0.0, -1.0);
    for (Index g = 0; g < asg.n_sym(); ++g) {
        const double slow = slow_time_rate(cfg, asg.symbols[static_cast<std::size_t>(g)]);
        for (Index n = 0; n < nk; ++n) {
            const double fast = fast_freq_rate(cfg, asg.subcarriers[static_cast<std::size_t>(n)]);
            const Index i = g * nk + n;
            v(i, 0) = minus_j * fast * a(i);
            v(i, 1) = minus_j * slow * a(i);
        }
    }
    return v;
}

Eigen::Matrix2d fisher_crb(const FisherProblem& problem)
{
    require_nondegenerate(problem.assignment);
    const VectorXcd a = build_manifold(problem);
    const MatrixXcd v = manifold_derivatives(problem);

    // mean μ = β a; columns of ∂μ/∂θ for θ = (Re β, Im β, τ, 2v/c)
    MatrixXcd d(a.size(), 4);
    d.col(0) = a;
    d.col(1) = cd(0.0, 1.0) * a;
    d.col(2) = problem.beta * v.col(0);
    d.col(3) = problem.beta * v.col(1);

    const Eigen::Matrix4d j = (2.0 / problem.noise_power) * (d.adjoint() * d).real();
    const Eigen::Matrix2d jbb = j.topLeftCorner<2, 2>();
    const Eigen::Matrix2d jbp = j.topRightCorner<2, 2>();
    const Eigen::Matrix2d jpp = j.bottomRightCorner<2, 2>();
    const Eigen::Matrix2d schur = jpp - jbp.transpose() * jbb.inverse() * jbp;

    Eigen::LDLT<Eigen::Matrix2d> ldlt(schur);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        schur.determinant() <= 1e-300 * schur.trace() * schur.trace())
        throw DegenerateError("fisher_crb: singular Fisher information");
    return schur.inverse();
}

Eigen::Matrix2cd projection_residual(const FisherProblem& problem)
{
    const auto& asg = problem.assignment;
    const auto& cfg = problem.config;
    const double nk = static_cast<double>(asg.n_sub());
    const double gk = static_cast<double>(asg.n_sym());
    const double pi2 = std::numbers::pi * std::numbers::pi;

    double sz = 0.0, sz2 = 0.0, sp = 0.0, sp2 = 0.0;
    for (int z : asg.subcarriers) {
        sz += z;
        sz2 += static_cast<double>(z) * z;
    }
    // slow-time phases reference the first symbol, hence ψ − 1
    for (int p : asg.symbols) {
        sp += p - 1;
        sp2 += static_cast<double>(p - 1) * (p - 1);
    }
    const double df = cfg.subcarrier_spacing;
    const double fts = cfg.carrier_freq * cfg.symbol_duration;

    // V^H V
    Eigen::Matrix2d vv;
    vv(0, 0) = 4 * pi2 * df * df * gk * sz2;
    vv(0, 1) = 4 * pi2 * df * fts * sz * sp;
    vv(1, 0) = vv(0, 1);
    vv(1, 1) = 4 * pi2 * fts * fts * nk * sp2;

    // V^H A (A^H A)^{-1} A^H V with A^H A = G_k N_k
    Eigen::Matrix2d proj;
    proj(0, 0) = 4 * pi2 * df * df * gk * gk * sz * sz;
    proj(0, 1) = 4 * pi2 * df * fts * gk * nk * sz * sp;
    proj(1, 0) = proj(0, 1);
    proj(1, 1) = 4 * pi2 * fts * fts * nk * nk * sp * sp;
    proj /= gk * nk;

    return (vv - proj).cast<cd>();
}

Eigen::Matrix2cd projection_residual_numeric(const FisherProblem& problem)
{
    const VectorXcd a = build_manifold(problem);
    const MatrixXcd v = manifold_derivatives(problem);
    const cd gram = a.squaredNorm();
    const Eigen::Matrix<cd, 2, 1> va = v.adjoint() * a;
    const Eigen::Matrix2cd vv = v.adjoint() * v;
    return vv - va * va.adjoint() / gram;
}

cd manifold_gram(const FisherProblem& problem)
{
    const VectorXcd a = build_manifold(problem);
    return a.adjoint() * a;
}

RangeVelocityCrb to_range_velocity(const Eigen::Matrix2d& crb, double c)
{
    return {c * c * crb(0, 0), 0.25 * c * c * crb(1, 1)};
}

} // namespace isac
