#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "slider/dynamics.hpp"
#include "slider/errors.hpp"
#include "slider/thrusters.hpp"

namespace slider {

/// Thrust magnitudes chosen by the allocator and the part of the demand they leave unmet.
struct ThrusterDuties {
    ThrustVector magnitudes = ThrustVector::Zero();  // [N], within [t_min, t_max]
    Wrench residual;                                  // demand - A * magnitudes
    bool attainable = true;                           // demand lies inside the attainable wrench set
    int iterations = 0;
};

/// Active-set iteration cap exceeded. Carries the best iterate found.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, const ThrustVector& best) : std::runtime_error(what), best_iterate(best) {}
    ThrustVector best_iterate;
};

struct AllocatorOptions {
    int max_iterations = 100;
    double feasibility_tolerance = 1e-9;
};

namespace detail {

enum class BoundState : unsigned char { Free, Lower, Upper };

using Index = Eigen::Index;
constexpr Index kN = static_cast<Index>(kThrusterCount);

struct FreeColumns {
    std::array<Index, kThrusterCount> idx{};
    Index count = 0;
};

inline FreeColumns free_columns(const std::array<BoundState, kThrusterCount>& state) {
    FreeColumns f;
    for (Index i = 0; i < kN; ++i)
        if (state[static_cast<std::size_t>(i)] == BoundState::Free) f.idx[static_cast<std::size_t>(f.count++)] = i;
    return f;
}

inline Eigen::MatrixXd gather(const AllocationMatrix& a, const FreeColumns& f) {
    Eigen::MatrixXd m(3, f.count);
    for (Index j = 0; j < f.count; ++j) m.col(j) = a.col(f.idx[static_cast<std::size_t>(j)]);
    return m;
}

inline Eigen::Index rank_of(const Eigen::MatrixXd& m) {
    if (m.cols() == 0) return 0;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
    qr.setThreshold(1e-10);
    return qr.rank();
}

struct PhaseResult {
    ThrustVector x;
    int iterations = 0;
};

/**
 * Bounded-variable least squares: min |A x - b|_2 over lb <= x <= ub.
 *
 * Primal active set over the bound constraints. Each iteration moves the free
 * variables toward the minimum-norm least-squares solution of the free
 * subproblem; bounds are released on the sign of the gradient A^T (b - A x).
 */
inline PhaseResult box_least_squares(const AllocationMatrix& a, const Eigen::Vector3d& b, const ThrustVector& lb,
                                     const ThrustVector& ub, int max_iterations) {
    ThrustVector x = ThrustVector::Zero().cwiseMax(lb).cwiseMin(ub);
    std::array<BoundState, kThrusterCount> state{};
    for (Index i = 0; i < kN; ++i) {
        auto& s = state[static_cast<std::size_t>(i)];
        s = x[i] == lb[i] ? BoundState::Lower : (x[i] == ub[i] ? BoundState::Upper : BoundState::Free);
    }

    constexpr double step_tol = 1e-13;
    constexpr double gradient_tol = 1e-13;
    Index just_released = -1;
    for (int it = 1; it <= max_iterations; ++it) {
        const Eigen::Vector3d residual = b - a * x;
        const FreeColumns f = free_columns(state);
        Eigen::VectorXd d = Eigen::VectorXd::Zero(f.count);
        if (f.count > 0) d = gather(a, f).completeOrthogonalDecomposition().solve(residual);

        if (f.count == 0 || d.lpNorm<Eigen::Infinity>() <= step_tol) {
            const ThrustVector w = a.transpose() * residual;
            Index release = -1;
            double worst = gradient_tol;
            for (Index i = 0; i < kN; ++i) {
                const auto s = state[static_cast<std::size_t>(i)];
                const double v = s == BoundState::Lower ? w[i] : (s == BoundState::Upper ? -w[i] : 0.0);
                if (v > worst) {
                    worst = v;
                    release = i;
                }
            }
            if (release < 0) return {x, it};
            state[static_cast<std::size_t>(release)] = BoundState::Free;
            just_released = release;
            continue;
        }

        double alpha = 1.0;
        Index block = -1;
        bool block_lower = false;
        for (Index j = 0; j < f.count; ++j) {
            const Index i = f.idx[static_cast<std::size_t>(j)];
            double limit = alpha;
            if (d[j] < -step_tol) limit = (lb[i] - x[i]) / d[j];
            else if (d[j] > step_tol) limit = (ub[i] - x[i]) / d[j];
            if (limit < alpha) {
                alpha = std::max(limit, 0.0);
                block = i;
                block_lower = d[j] < 0.0;
            }
        }

        if (block >= 0 && block == just_released && alpha <= 0.0) {
            // The released variable is pushed back onto its bound by the free subproblem;
            // move it alone along its own gradient instead.
            const Eigen::Vector3d col = a.col(block);
            const double step = col.dot(residual) / col.squaredNorm();
            x[block] = std::clamp(x[block] + step, lb[block], ub[block]);
            state[static_cast<std::size_t>(block)] = x[block] == lb[block]
                                                         ? BoundState::Lower
                                                         : (x[block] == ub[block] ? BoundState::Upper : BoundState::Free);
            just_released = -1;
            continue;
        }

        for (Index j = 0; j < f.count; ++j) x[f.idx[static_cast<std::size_t>(j)]] += alpha * d[j];
        if (block >= 0) {
            x[block] = block_lower ? lb[block] : ub[block];
            state[static_cast<std::size_t>(block)] = block_lower ? BoundState::Lower : BoundState::Upper;
        }
        just_released = -1;
    }
    throw SolverError("bounded least squares did not converge", x);
}

/**
 * min |x|^2 subject to A x = target, lb <= x <= ub, started from a feasible x0.
 *
 * Primal active-set method. The free columns always span R^3, so the equality
 * multipliers are unique and each added bound is linearly independent of the
 * working set.
 */
inline PhaseResult min_norm_on_target(const AllocationMatrix& a, const Eigen::Vector3d& target, const ThrustVector& lb,
                                      const ThrustVector& ub, const ThrustVector& x0, int max_iterations) {
    constexpr double bound_snap = 1e-12;
    ThrustVector x = x0;
    std::array<BoundState, kThrusterCount> state{};
    for (Index i = 0; i < kN; ++i) {
        auto& s = state[static_cast<std::size_t>(i)];
        if (x[i] - lb[i] <= bound_snap) {
            x[i] = lb[i];
            s = BoundState::Lower;
        } else if (ub[i] - x[i] <= bound_snap) {
            x[i] = ub[i];
            s = BoundState::Upper;
        } else {
            s = BoundState::Free;
        }
    }

    // Free bounded variables until the free columns have full row rank.
    {
        FreeColumns f = free_columns(state);
        Index rank = rank_of(gather(a, f));
        for (Index i = 0; i < kN && rank < 3; ++i) {
            auto& s = state[static_cast<std::size_t>(i)];
            if (s == BoundState::Free) continue;
            const BoundState saved = s;
            s = BoundState::Free;
            const Index r = rank_of(gather(a, free_columns(state)));
            if (r > rank) rank = r;
            else s = saved;
        }
        if (rank < 3) throw ParameterError("allocation matrix does not have full row rank");
    }

    constexpr double step_tol = 1e-14;
    constexpr double multiplier_tol = 1e-12;
    for (int it = 1; it <= max_iterations; ++it) {
        const FreeColumns f = free_columns(state);
        const Eigen::MatrixXd af = gather(a, f);
        Eigen::VectorXd xf(f.count);
        for (Index j = 0; j < f.count; ++j) xf[j] = x[f.idx[static_cast<std::size_t>(j)]];

        const Eigen::Vector3d lambda = (af * af.transpose()).ldlt().solve(af * xf);
        const Eigen::VectorXd d = af.transpose() * lambda - xf;

        if (d.lpNorm<Eigen::Infinity>() <= step_tol) {
            Index drop = -1;
            double worst = multiplier_tol;
            for (Index i = 0; i < kN; ++i) {
                const auto s = state[static_cast<std::size_t>(i)];
                if (s == BoundState::Free) continue;
                const double mu = x[i] - a.col(i).dot(lambda);
                const double violation = s == BoundState::Lower ? -mu : mu;
                if (violation > worst) {
                    worst = violation;
                    drop = i;
                }
            }
            if (drop < 0) {
                // Polish: exact minimum-norm solution on the final working set.
                Eigen::Vector3d rhs = target;
                for (Index i = 0; i < kN; ++i)
                    if (state[static_cast<std::size_t>(i)] != BoundState::Free) rhs -= a.col(i) * x[i];
                const Eigen::VectorXd exact = af.transpose() * (af * af.transpose()).ldlt().solve(rhs);
                for (Index j = 0; j < f.count; ++j) {
                    const Index i = f.idx[static_cast<std::size_t>(j)];
                    x[i] = std::clamp(exact[j], lb[i], ub[i]);
                }
                return {x, it};
            }
            state[static_cast<std::size_t>(drop)] = BoundState::Free;
            continue;
        }

        double alpha = 1.0;
        Index block = -1;
        BoundState block_state = BoundState::Free;
        for (Index j = 0; j < f.count; ++j) {
            const Index i = f.idx[static_cast<std::size_t>(j)];
            // Round-off components must not block: that would drop a column the rank needs.
            if (d[j] < -step_tol) {
                const double limit = std::max((lb[i] - x[i]) / d[j], 0.0);
                if (limit < alpha) {
                    alpha = limit;
                    block = i;
                    block_state = BoundState::Lower;
                }
            } else if (d[j] > step_tol) {
                const double limit = std::max((ub[i] - x[i]) / d[j], 0.0);
                if (limit < alpha) {
                    alpha = limit;
                    block = i;
                    block_state = BoundState::Upper;
                }
            }
        }
        for (Index j = 0; j < f.count; ++j) {
            const Index i = f.idx[static_cast<std::size_t>(j)];
            x[i] = std::clamp(x[i] + alpha * d[j], lb[i], ub[i]);
        }
        if (block >= 0) {
            x[block] = block_state == BoundState::Lower ? lb[block] : ub[block];
            state[static_cast<std::size_t>(block)] = block_state;
        }
    }
    throw SolverError("minimum-norm active set did not converge", x);
}

}  // namespace detail

/**
 * @brief Minimum-effort thrust allocation.
 *
 * Solves min x^T x subject to A x = demand and t_min <= x <= t_max. When the
 * demand lies outside the attainable set, the demand is replaced by its
 * closest attainable wrench (box-constrained least squares) and the
 * minimum-norm thrusts producing that wrench are returned; the unmet part is
 * reported in ThrusterDuties::residual.
 *
 * Throws ParameterError on a non-finite demand and SolverError when the
 * iteration cap is exceeded.
 */
inline ThrusterDuties allocate(const ThrusterBank& bank, const Wrench& demand, const AllocatorOptions& options = {}) {
    if (!demand.finite()) throw ParameterError("allocation demand must be finite");
    const AllocationMatrix& a = bank.allocation_matrix();
    const ThrustVector lb = bank.lower_bounds();
    const ThrustVector ub = bank.upper_bounds();
    const Eigen::Vector3d b = demand.vector();

    const detail::PhaseResult closest = detail::box_least_squares(a, b, lb, ub, options.max_iterations);
    const Eigen::Vector3d reached = a * closest.x;
    const bool attainable = (b - reached).lpNorm<Eigen::Infinity>() <= options.feasibility_tolerance;
    const Eigen::Vector3d target = attainable ? b : reached;

    const detail::PhaseResult best =
        detail::min_norm_on_target(a, target, lb, ub, closest.x, options.max_iterations);

    ThrusterDuties duties;
    duties.magnitudes = best.x;
    duties.residual = Wrench::from_vector(b - a * best.x);
    duties.attainable = attainable;
    duties.iterations = closest.iterations + best.iterations;
    return duties;
}

/**
 * Pseudo-inverse allocation baseline.
 *
 * x = A^+ b, shifted along the all-positive null-space direction (when the bank
 * has one) until the smallest thrust sits on its lower bound, then clamped.
 * The clamp can break A x = b; that is the weakness this baseline illustrates.
 */
inline ThrusterDuties allocate_pinv(const ThrusterBank& bank, const Wrench& demand) {
    if (!demand.finite()) throw ParameterError("allocation demand must be finite");
    const AllocationMatrix& a = bank.allocation_matrix();
    const ThrustVector lb = bank.lower_bounds();
    const ThrustVector ub = bank.upper_bounds();
    const Eigen::Matrix<double, kThrusterCount, 3> pinv =
        a.transpose() * (a * a.transpose()).inverse();

    ThrustVector x = pinv * demand.vector();
    const ThrustVector ones = ThrustVector::Ones();
    const ThrustVector null_dir = ones - pinv * (a * ones);
    if ((null_dir.array() > 1e-12).all()) {
        const double shift = ((lb - x).array() / null_dir.array()).maxCoeff();
        x += shift * null_dir;
    }
    x = x.cwiseMax(lb).cwiseMin(ub);

    ThrusterDuties duties;
    duties.magnitudes = x;
    duties.residual = Wrench::from_vector(demand.vector() - a * x);
    duties.attainable = duties.residual.vector().lpNorm<Eigen::Infinity>() <= 1e-9;
    return duties;
}

/// Largest value of direction . (A x) over the thrust box.
inline double attainable_extent(const ThrusterBank& bank, const Eigen::Vector3d& direction) {
    const ThrustVector g = bank.allocation_matrix().transpose() * direction;
    const ThrustVector lb = bank.lower_bounds();
    const ThrustVector ub = bank.upper_bounds();
    double best = 0.0;
    for (Eigen::Index k = 0; k < g.size(); ++k) best += g[k] > 0.0 ? g[k] * ub[k] : g[k] * lb[k];
    return best;
}

}  // namespace slider
