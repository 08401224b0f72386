#include "isac/music.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "isac/fisher.hpp"

namespace isac {

Index GridAxis::size() const
{
    return static_cast<Index>(std::floor((max - min) / step + 1e-9)) + 1;
}

void MusicConfig::validate() const
{
    for (const auto* axis : {&range, &velocity})
        if (!(axis->step > 0) || axis->max < axis->min)
            throw ConfigError("MusicConfig: grid needs step > 0 and max >= min");
    if (n_sources < 1)
        throw ConfigError("MusicConfig: n_sources must be >= 1");
    if (freq_sub < 0 || time_sub < 0 || freq_sub == 1 || time_sub == 1)
        throw ConfigError("MusicConfig: subarray sizes must be >= 2 (or 0 for default)");
    if (refine_iterations < 0)
        throw ConfigError("MusicConfig: refine_iterations must be >= 0");
}

bool uniform_lattice(std::span<const int> indices)
{
    if (indices.size() < 2)
        return false;
    const int step = indices[1] - indices[0];
    for (std::size_t i = 2; i < indices.size(); ++i)
        if (indices[i] - indices[i - 1] != step)
            return false;
    return step != 0;
}

SnapshotLayout snapshot_layout(const ResourceAssignment& assignment, const MusicConfig& config)
{
    config.validate();
    const bool uniform = uniform_lattice(assignment.subcarriers) && uniform_lattice(assignment.symbols);
    bool smooth = false;
    switch (config.smoothing) {
    case Smoothing::automatic:
        smooth = uniform;
        break;
    case Smoothing::on:
        if (!uniform)
            throw ConfigError("snapshot_layout: smoothing needs uniform index lattices");
        smooth = true;
        break;
    case Smoothing::off:
        break;
    }

    SnapshotLayout layout;
    layout.smoothed = smooth;
    const Index nk = assignment.n_sub();
    const Index gk = assignment.n_sym();
    Index lf = nk;
    Index lt = gk;
    if (smooth) {
        lf = config.freq_sub > 0 ? config.freq_sub : nk - config.n_sources;
        lt = config.time_sub > 0 ? config.time_sub : gk - config.n_sources;
        if (lf < 2 || lt < 2 || lf > nk || lt > gk)
            throw SnapshotError("snapshot_layout: subarray sizes must lie in [2, (N_k, G_k)]");
        layout.freq_shifts = nk - lf + 1;
        layout.time_shifts = gk - lt + 1;
        if (layout.freq_shifts * layout.time_shifts < config.n_sources + 1)
            throw SnapshotError("snapshot_layout: too few subarrays for the requested sources");
    }
    layout.zeta.assign(assignment.subcarriers.begin(), assignment.subcarriers.begin() + lf);
    layout.psi.assign(assignment.symbols.begin(), assignment.symbols.begin() + lt);
    if (layout.dim() <= config.n_sources)
        throw SnapshotError("snapshot_layout: no noise subspace left");
    return layout;
}

MatrixXcd snapshot_matrix(std::span<const CsiBlock> csi, const SnapshotLayout& layout)
{
    if (csi.empty())
        throw SnapshotError("snapshot_matrix: no CSI blocks");
    const auto lf = static_cast<Index>(layout.zeta.size());
    const auto lt = static_cast<Index>(layout.psi.size());
    const Index per_block = layout.freq_shifts * layout.time_shifts;
    const Index s = per_block * static_cast<Index>(csi.size());
    MatrixXcd y(layout.dim(), s);
    Index col = 0;
    for (const auto& block : csi) {
        if (block.values.rows() < lt + layout.time_shifts - 1 ||
            block.values.cols() < lf + layout.freq_shifts - 1)
            throw DimensionError("snapshot_matrix: CSI block smaller than the layout");
        for (Index it = 0; it < layout.time_shifts; ++it)
            for (Index jf = 0; jf < layout.freq_shifts; ++jf) {
                for (Index g = 0; g < lt; ++g)
                    y.col(col).segment(g * lf, lf) = block.values.row(it + g).segment(jf, lf).transpose();
                ++col;
            }
    }
    return y / std::sqrt(static_cast<double>(s));
}

MatrixXcd sample_covariance(std::span<const CsiBlock> csi, const ResourceAssignment& assignment,
                            const MusicConfig& config)
{
    const auto layout = snapshot_layout(assignment, config);
    const MatrixXcd y = snapshot_matrix(csi, layout);
    MatrixXcd r = y * y.adjoint();
    if (!layout.smoothed) {
        const double load = config.diagonal_loading * r.trace().real();
        r.diagonal().array() += load;
    }
    return r;
}

MatrixXcd signal_subspace(const MatrixXcd& snapshots, int n_sources)
{
    const Index d = snapshots.rows();
    const Index s = snapshots.cols();
    if (n_sources < 1 || n_sources >= d)
        throw SnapshotError("signal_subspace: need 1 <= L̂ < snapshot dimension");
    if (s >= d || s < n_sources) {
        Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(snapshots * snapshots.adjoint());
        return eig.eigenvectors().rightCols(n_sources).rowwise().reverse();
    }
    // the nonzero spectrum of Y Y^H equals that of Y^H Y; map eigenvectors back through Y
    Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(snapshots.adjoint() * snapshots);
    const VectorXd& lambda = eig.eigenvalues();
    const double floor = lambda(s - 1) * 1e-14;
    if (!(lambda(s - n_sources) > floor))
        throw SnapshotError("signal_subspace: snapshot rank below the requested sources");
    MatrixXcd u(d, n_sources);
    for (int j = 0; j < n_sources; ++j) {
        const Index col = s - 1 - j;
        u.col(j) = snapshots * eig.eigenvectors().col(col) / std::sqrt(lambda(col));
    }
    // re-orthonormalise against rounding
    Eigen::HouseholderQR<MatrixXcd> qr(u);
    MatrixXcd q = qr.householderQ() * MatrixXcd::Identity(d, n_sources);
    return q;
}

MatrixXcd noise_subspace(const MatrixXcd& covariance, int n_sources)
{
    const Index d = covariance.rows();
    if (n_sources < 1 || n_sources >= d)
        throw SnapshotError("noise_subspace: need 1 <= L̂ < dimension");
    Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(covariance);
    return eig.eigenvectors().leftCols(d - n_sources);
}

VectorXcd lattice_steering(const SystemConfig& cfg, const SnapshotLayout& layout, double delay,
                           double doppler_ratio)
{
    ResourceAssignment sub;
    sub.subcarriers = layout.zeta;
    sub.symbols = layout.psi;
    return build_manifold(cfg, sub, delay, doppler_ratio);
}

namespace {

double invert(double den)
{
    return den > 0 ? 1.0 / den : std::numeric_limits<double>::infinity();
}

double signal_denominator(const MatrixXcd& signal, const VectorXcd& a)
{
    return a.squaredNorm() - (signal.adjoint() * a).squaredNorm();
}

} // namespace

double music_spectrum(const MatrixXcd& covariance, const SystemConfig& cfg,
                      const SnapshotLayout& layout, double delay, double doppler_ratio,
                      int n_sources)
{
    const MatrixXcd un = noise_subspace(covariance, n_sources);
    const VectorXcd a = lattice_steering(cfg, layout, delay, doppler_ratio);
    return invert((un.adjoint() * a).squaredNorm());
}

double music_spectrum_signal(const MatrixXcd& signal, const SystemConfig& cfg,
                             const SnapshotLayout& layout, double delay, double doppler_ratio)
{
    return invert(signal_denominator(signal, lattice_steering(cfg, layout, delay, doppler_ratio)));
}

namespace {

// Denominator ‖a‖² − ‖U_s^H a‖² over the grid; the steering vector is separable so each
// signal eigenvector contributes Ξ^T conj(U_j) T.
MatrixXd denominator_grid(const MatrixXcd& signal, const SystemConfig& cfg,
                          const SnapshotLayout& layout, const MusicConfig& config)
{
    const auto lf = static_cast<Index>(layout.zeta.size());
    const auto lt = static_cast<Index>(layout.psi.size());
    const Index nr = config.range.size();
    const Index nv = config.velocity.size();

    MatrixXcd xi(lt, nv);
    for (Index j = 0; j < nv; ++j) {
        const double eps = 2.0 * config.velocity.at(j) / cfg.c;
        for (Index g = 0; g < lt; ++g)
            xi(g, j) = std::polar(1.0, -two_pi * cfg.carrier_freq * (layout.psi[static_cast<std::size_t>(g)] - 1) *
                                           cfg.symbol_duration * eps);
    }
    MatrixXcd tau(lf, nr);
    for (Index j = 0; j < nr; ++j) {
        const double delay = config.range.at(j) / cfg.c;
        for (Index n = 0; n < lf; ++n)
            tau(n, j) = std::polar(1.0, -two_pi * layout.zeta[static_cast<std::size_t>(n)] *
                                           cfg.subcarrier_spacing * delay);
    }

    MatrixXd den = MatrixXd::Constant(nv, nr, static_cast<double>(layout.dim()));
    MatrixXcd u(lt, lf);
    for (Index s = 0; s < signal.cols(); ++s) {
        for (Index g = 0; g < lt; ++g)
            u.row(g) = signal.col(s).segment(g * lf, lf).conjugate().transpose();
        const MatrixXcd proj = xi.transpose() * (u * tau);
        den -= proj.cwiseAbs2();
    }
    return den;
}

struct Peak {
    Index iv = 0;
    Index ir = 0;
    double value = 0.0;
};

std::vector<Peak> local_maxima(const MatrixXd& p)
{
    std::vector<Peak> peaks;
    for (Index i = 0; i < p.rows(); ++i)
        for (Index j = 0; j < p.cols(); ++j) {
            const double x = p(i, j);
            bool best = true;
            for (Index di = -1; di <= 1 && best; ++di)
                for (Index dj = -1; dj <= 1; ++dj) {
                    if (di == 0 && dj == 0)
                        continue;
                    const Index a = i + di;
                    const Index b = j + dj;
                    if (a < 0 || b < 0 || a >= p.rows() || b >= p.cols())
                        continue;
                    // ties go to the first cell in scan order
                    const double y = p(a, b);
                    if (y > x || (y == x && (di < 0 || (di == 0 && dj < 0)))) {
                        best = false;
                        break;
                    }
                }
            if (best)
                peaks.push_back({i, j, x});
        }
    std::stable_sort(peaks.begin(), peaks.end(),
                     [](const Peak& a, const Peak& b) { return a.value > b.value; });
    return peaks;
}

// Alternating per-axis parabolic steps on the denominator with a halving bracket.
Estimate refine(const MatrixXcd& signal, const SystemConfig& cfg, const SnapshotLayout& layout,
                const MusicConfig& config, double range, double velocity)
{
    auto den = [&](double r, double v) {
        return signal_denominator(signal, lattice_steering(cfg, layout, r / cfg.c, 2.0 * v / cfg.c));
    };
    double hr = config.range.step;
    double hv = config.velocity.step;
    double f0 = den(range, velocity);
    for (int it = 0; it < config.refine_iterations; ++it) {
        for (int axis = 0; axis < 2; ++axis) {
            double& x = axis == 0 ? range : velocity;
            const double h = axis == 0 ? hr : hv;
            const double fm = axis == 0 ? den(x - h, velocity) : den(range, x - h);
            const double fp = axis == 0 ? den(x + h, velocity) : den(range, x + h);
            const double curv = fm - 2.0 * f0 + fp;
            double shift = 0.0;
            if (curv > 0)
                shift = std::clamp(0.5 * h * (fm - fp) / curv, -h, h);
            else if (fm < f0 || fp < f0)
                shift = fm < fp ? -h : h;
            if (shift != 0.0) {
                const double f1 = axis == 0 ? den(x + shift, velocity) : den(range, x + shift);
                if (f1 <= f0) {
                    x += shift;
                    f0 = f1;
                }
            }
        }
        hr *= 0.5;
        hv *= 0.5;
    }
    return {range, velocity, invert(f0)};
}

} // namespace

MatrixXd spectrum_grid(const MatrixXcd& signal, const SystemConfig& cfg,
                       const SnapshotLayout& layout, const MusicConfig& config)
{
    return denominator_grid(signal, cfg, layout, config).unaryExpr(&invert);
}

EstimateSet estimate(const SystemConfig& cfg, std::span<const CsiBlock> csi,
                     const ResourceAssignment& assignment, const MusicConfig& config)
{
    const auto layout = snapshot_layout(assignment, config);
    const MatrixXcd y = snapshot_matrix(csi, layout);
    const MatrixXcd us = signal_subspace(y, config.n_sources);
    const MatrixXd p = spectrum_grid(us, cfg, layout, config);

    const auto peaks = local_maxima(p);
    EstimateSet out;
    const std::size_t want = static_cast<std::size_t>(config.n_sources);
    for (std::size_t i = 0; i < std::min(want, peaks.size()); ++i) {
        const auto& pk = peaks[i];
        out.pairs.push_back(refine(us, cfg, layout, config, config.range.at(pk.ir),
                                   config.velocity.at(pk.iv)));
    }
    std::stable_sort(out.pairs.begin(), out.pairs.end(),
                     [](const Estimate& a, const Estimate& b) { return a.peak > b.peak; });
    out.resolved = out.pairs.size() == want;
    return out;
}

} // namespace isac
