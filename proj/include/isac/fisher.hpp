#pragma once

#include "isac/model.hpp"

namespace isac {

// Single-target estimation problem for parameters p = [τ, 2v/c] with the complex path
// coefficient β treated as a nuisance parameter.
struct FisherProblem {
    ResourceAssignment assignment;
    ChannelPath target;
    cd beta{1.0, 0.0};
    double noise_power = 1.0;
    SystemConfig config;
};

// ξ ⊗ τ with entry g·N_k + n equal to
// exp(−j2π[f_c(ψ[g]−1)T_s·(2v/c) + ζ[n]Δf·τ]).
VectorXcd build_manifold(const FisherProblem& problem);

// Same manifold for explicit parameter values (delay, doppler_ratio = 2v/c).
VectorXcd build_manifold(const SystemConfig& cfg, const ResourceAssignment& asg, double delay,
                         double doppler_ratio);

// V = [∂a/∂τ, ∂a/∂(2v/c)], analytic phase derivatives, G_k N_k × 2.
MatrixXcd manifold_derivatives(const FisherProblem& problem);

// CRB for [τ, 2v/c] from the full real Fisher matrix over (Re β, Im β, τ, 2v/c),
// inverted through the Schur complement of the nuisance block. Throws DegenerateError
// when either index set has zero variance.
Eigen::Matrix2d fisher_crb(const FisherProblem& problem);

// V^H V − V^H A (A^H A)^{-1} A^H V assembled from closed-form index sums.
Eigen::Matrix2cd projection_residual(const FisherProblem& problem);

// The same residual computed from the materialised A and V.
Eigen::Matrix2cd projection_residual_numeric(const FisherProblem& problem);

// A^H A for the single-column manifold.
cd manifold_gram(const FisherProblem& problem);

// Converts a [τ, 2v/c] CRB to (range, velocity) variances: c² and c²/4 Jacobian factors.
struct RangeVelocityCrb {
    double range = 0.0;    // m²
    double velocity = 0.0; // (m/s)²
};
RangeVelocityCrb to_range_velocity(const Eigen::Matrix2d& crb, double c = speed_of_light);

} // namespace isac
