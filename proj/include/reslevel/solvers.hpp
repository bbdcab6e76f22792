#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include "reslevel/errors.hpp"
#include "reslevel/kernels.hpp"
#include "reslevel/liouville.hpp"
#include "reslevel/special_functions.hpp"

namespace reslevel {

/// Uniform grid t_i = t_end * i / n_steps, i = 0..n_steps.
struct TimeGrid {
    double t_end = 10.0;
    int n_steps = 1000;

    void validate() const
    {
        if (!(t_end > 0.0) || !std::isfinite(t_end)) {
            throw DomainError("TimeGrid: t_end must be > 0");
        }
        if (n_steps < 2) {
            throw DomainError("TimeGrid: n_steps must be >= 2");
        }
    }

    [[nodiscard]] double step() const { return t_end / n_steps; }

    [[nodiscard]] double at(int i) const { return i == n_steps ? t_end : step() * i; }

    [[nodiscard]] std::vector<double> times() const
    {
        std::vector<double> out(static_cast<std::size_t>(n_steps) + 1);
        for (int i = 0; i <= n_steps; ++i) {
            out[static_cast<std::size_t>(i)] = at(i);
        }
        return out;
    }

    /// Shortest physical time scale min(1/Gamma, pi/|eps|, 1/(pi T)).
    [[nodiscard]] static double shortest_scale(const ModelParams& p)
    {
        double scale = 1.0 / p.gamma_coupling;
        if (p.detuning() != 0.0) {
            scale = std::min(scale, pi / std::abs(p.detuning()));
        }
        if (p.temperature > 0.0) {
            scale = std::min(scale, 1.0 / (pi * p.temperature));
        }
        return scale;
    }

    [[nodiscard]] bool resolves(const ModelParams& p, int points_per_scale = 20) const
    {
        return step() * points_per_scale <= shortest_scale(p) * (1.0 + 1e-12);
    }

    [[nodiscard]] static TimeGrid resolving(const ModelParams& p, double t_end,
                                            int points_per_scale = 20)
    {
        const double dt = shortest_scale(p) / points_per_scale;
        return {t_end, std::max(2, static_cast<int>(std::ceil(t_end / dt - 1e-9)))};
    }
};

/// Uniform bath levels at the midpoints of n_modes cells on [mu - W, mu + W],
/// each coupled with sqrt(Gamma dw / 2 pi).
struct BathDiscretization {
    int n_modes = 2000;
    double half_bandwidth = 200.0;

    void validate(const ModelParams& p) const
    {
        if (n_modes < 2) {
            throw DomainError("BathDiscretization: n_modes must be >= 2");
        }
        if (!(half_bandwidth >= 10.0 * p.gamma_coupling)) {
            throw DomainError("BathDiscretization: half_bandwidth must be >= 10 Gamma");
        }
    }

    [[nodiscard]] double spacing() const { return 2.0 * half_bandwidth / n_modes; }

    /// Recurrence time 2 pi / dw of the discrete bath.
    [[nodiscard]] double revival_time() const { return 2.0 * pi / spacing(); }
};

struct Trajectory {
    std::vector<double> times;
    std::vector<DensityMatrix> states;
    std::vector<double> traces;  // Tr rho(t); stays 1 up to rounding

    [[nodiscard]] std::vector<double> parity() const
    {
        std::vector<double> out;
        out.reserve(states.size());
        for (const DensityMatrix& s : states) {
            out.push_back(s.parity);
        }
        return out;
    }
};

struct OccupationTrajectory {
    std::vector<double> times;
    std::vector<double> occupation;
    std::vector<double> parity;
    std::vector<std::string> warnings;
};

namespace detail {

inline void record_state(Trajectory& out, double t, const Vec4& c)
{
    const Mat2 rho = from_coords(c);
    out.times.push_back(t);
    out.traces.push_back(rho.trace().real());
    out.states.push_back(DensityMatrix::from_matrix(rho));
}

}  // namespace detail

inline constexpr double kTclAbsTolerance = 1e-12;
inline constexpr double kTclRelTolerance = 1e-12;

/// d rho/dt = [-iL + Sigma^TCL(t)] rho with dopri5 step control. h(t) is carried as an
/// extra state variable, dh/dt = e^{-Gamma t/2} gamma(t), so no quadrature is involved.
[[nodiscard]] inline Trajectory integrate_tcl(const ModelParams& p, const DensityMatrix& rho0,
                                              const TimeGrid& grid)
{
    namespace odeint = boost::numeric::odeint;
    p.validate();
    rho0.validate();
    grid.validate();
    using State = std::array<double, 9>;  // Re/Im of four coordinates, then h
    const Mat4 minus_il = minus_i_liouvillian(p);
    const Mat4 lp = dissipator(+1).matrix;
    const Mat4 lm = dissipator(-1).matrix;
    const double G = p.gamma_coupling;

    auto rhs = [&](const State& x, State& dxdt, double t) {
        const double h = x[8];
        const Mat4 gen = minus_il + 0.5 * G * ((1.0 - h) * lp + (1.0 + h) * lm);
        Vec4 c;
        for (int i = 0; i < 4; ++i) {
            c(i) = complex{x[static_cast<std::size_t>(2 * i)], x[static_cast<std::size_t>(2 * i + 1)]};
        }
        const Vec4 dc = gen * c;
        for (int i = 0; i < 4; ++i) {
            dxdt[static_cast<std::size_t>(2 * i)] = dc(i).real();
            dxdt[static_cast<std::size_t>(2 * i + 1)] = dc(i).imag();
        }
        dxdt[8] = std::exp(-0.5 * G * t) * detail::gamma_unchecked(p, t);
    };

    State x{};
    const Vec4 c0 = to_coords(rho0.matrix());
    for (int i = 0; i < 4; ++i) {
        x[static_cast<std::size_t>(2 * i)] = c0(i).real();
        x[static_cast<std::size_t>(2 * i + 1)] = c0(i).imag();
    }

    Trajectory out;
    auto observe = [&](const State& s, double t) {
        Vec4 c;
        for (int i = 0; i < 4; ++i) {
            c(i) = complex{s[static_cast<std::size_t>(2 * i)], s[static_cast<std::size_t>(2 * i + 1)]};
        }
        if (!c.allFinite()) {
            throw IntegrationError("integrate_tcl: non-finite state at t = " + std::to_string(t));
        }
        detail::record_state(out, t, c);
    };

    const std::vector<double> times = grid.times();
    auto stepper = odeint::make_controlled(kTclAbsTolerance, kTclRelTolerance,
                                           odeint::runge_kutta_dopri5<State>());
    try {
        odeint::integrate_times(stepper, rhs, x, times.begin(), times.end(),
                                std::min(grid.step(), 1e-3 * TimeGrid::shortest_scale(p)), observe,
                                odeint::max_step_checker(100000));
    } catch (const IntegrationError&) {
        throw;
    } catch (const std::exception& e) {
        throw IntegrationError(std::string("integrate_tcl: ") + e.what());
    }
    return out;
}

inline constexpr double kMemoryHorizonTolerance = 1e-12;

/// Nakajima-Zwanzig equation d rho/dt = -iL rho + int_0^t Sigma(t - s) rho(s) ds by
/// product integration on a uniform grid: rho is piecewise linear inside the memory
/// integral, the lag weights of Sigma are integrated exactly, and the local step is
/// the implicit trapezoid rule. The delta part of Sigma acts locally.
[[nodiscard]] inline Trajectory integrate_nz(const ModelParams& p, const DensityMatrix& rho0,
                                             const TimeGrid& grid)
{
    p.validate();
    rho0.validate();
    grid.validate();
    const double G = p.gamma_coupling;
    const double dt = grid.step();
    const int n = grid.n_steps;
    const Mat4 local = minus_i_liouvillian(p) + 0.5 * G * (dissipator(+1).matrix + dissipator(-1).matrix);
    const Mat4 dir = nilpotent_direction();

    // lag weights for the kernel scalar w(u) = -(Gamma/2) e^{-Gamma u/2} gamma(u)
    int horizon = n;
    for (int l = 1; l <= n; ++l) {
        if (0.5 * G * detail::kernel_envelope(p, l * dt) < kMemoryHorizonTolerance) {
            horizon = l;
            break;
        }
    }
    std::vector<double> wa(static_cast<std::size_t>(horizon) + 1, 0.0);
    std::vector<double> wb(static_cast<std::size_t>(horizon) + 1, 0.0);
    for (int l = 0; l <= horizon; ++l) {
        const double lo = l * dt;
        const double hi = (l + 1) * dt;
        auto w = [&](double u) { return -0.5 * G * std::exp(-0.5 * G * u) * detail::gamma_unchecked(p, u); };
        wa[static_cast<std::size_t>(l)] =
            detail::integrate_panels([&](double u) { return w(u) * (hi - u) / dt; }, lo, hi, p.detuning());
        wb[static_cast<std::size_t>(l)] =
            detail::integrate_panels([&](double u) { return w(u) * (u - lo) / dt; }, lo, hi, p.detuning());
    }

    std::vector<Vec4> y(static_cast<std::size_t>(n) + 1);
    y[0] = to_coords(rho0.matrix());
    const Mat4 implicit = Mat4::Identity() - 0.5 * dt * (local + wa[0] * dir);
    const Eigen::PartialPivLU<Mat4> lu(implicit);

    Trajectory out;
    detail::record_state(out, 0.0, y[0]);
    Vec4 memory = Vec4::Zero();  // int_0^{t_k} Sigma_reg(t_k - s) rho(s) ds at the current k
    for (int k = 0; k < n; ++k) {
        // R = sum_{l=1}^{k} A_l y_{k+1-l} + sum_{l=0}^{k} B_l y_{k-l}, truncated at the horizon
        Vec4 r = Vec4::Zero();
        const int lmax = std::min(k, horizon);
        for (int l = 1; l <= lmax; ++l) {
            r += wa[static_cast<std::size_t>(l)] * y[static_cast<std::size_t>(k + 1 - l)];
        }
        for (int l = 0; l <= lmax; ++l) {
            r += wb[static_cast<std::size_t>(l)] * y[static_cast<std::size_t>(k - l)];
        }
        const Vec4& yk = y[static_cast<std::size_t>(k)];
        const Vec4 rhs = yk + 0.5 * dt * (local * yk + memory) + 0.5 * dt * (dir * r);
        Vec4 next = lu.solve(rhs);
        if (!next.allFinite()) {
            throw IntegrationError("integrate_nz: non-finite state at step " + std::to_string(k + 1));
        }
        memory = dir * (wa[0] * next + r);
        y[static_cast<std::size_t>(k + 1)] = next;
        detail::record_state(out, grid.at(k + 1), next);
    }
    return out;
}

/// e^{[-iL + Sigma^TCL(inf)] t} rho(0): the exact generator frozen at its stationary value.
[[nodiscard]] inline DensityMatrix markov_only(const ModelParams& p, const DensityMatrix& rho0,
                                               double t)
{
    rho0.validate();
    const SuperOp map = propagator_exponential(p, t, g_stationary(p));
    return DensityMatrix::from_matrix(map.apply(rho0.matrix()));
}

/// Golden-rule generator Gamma sum_eta f(eta eps/T) L_eta - iL.
[[nodiscard]] inline SuperOp born_markov_generator(const ModelParams& p)
{
    p.validate();
    const double eps = p.detuning();
    auto occupation = [&](double sign) {
        if (p.temperature == 0.0) {
            const double x = sign * eps;
            return x > 0.0 ? 0.0 : (x < 0.0 ? 1.0 : 0.5);
        }
        return fermi(sign * eps / p.temperature);
    };
    const double G = p.gamma_coupling;
    return {minus_i_liouvillian(p) + G * occupation(+1.0) * dissipator(+1).matrix +
                G * occupation(-1.0) * dissipator(-1).matrix,
            SuperOpKind::generator};
}

/// rho(t) under the Born-Markov semigroup.
[[nodiscard]] inline DensityMatrix born_markov_state(const ModelParams& p, const DensityMatrix& rho0,
                                                     double t)
{
    rho0.validate();
    if (!(t >= 0.0)) {
        throw DomainError("born_markov_state: requires t >= 0");
    }
    const Mat4 map = detail::expm_diagonalizable(born_markov_generator(p).matrix * t);
    return DensityMatrix::from_matrix(from_coords(map * to_coords(rho0.matrix())));
}

namespace detail {

/// Eigensystem of the arrowhead matrix [[d0, v 1^T], [v 1, diag(omega)]] with sorted,
/// distinct omega and v != 0. Roots of E - d0 - sum v^2/(E - omega_j) = 0 are found by
/// bisection in an offset from the nearest pole, which keeps E - omega_j accurate.
/// Column m of vectors is (1, v/(E_m - omega_j))/norm.
struct ArrowheadEigensystem {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

[[nodiscard]] inline ArrowheadEigensystem arrowhead_eigensystem(double d0,
                                                                const std::vector<double>& omega,
                                                                double v)
{
    const auto n = static_cast<Eigen::Index>(omega.size());
    const double v2 = v * v;
    // secular function at E = origin + delta
    auto secular = [&](double origin, double delta) {
        double s = 0.0;
        for (double w : omega) {
            s += v2 / ((origin - w) + delta);
        }
        return (origin - d0) + delta - s;
    };
    auto bisect = [&](double origin, double lo, double hi) {
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid == lo || mid == hi) {
                break;
            }
            (secular(origin, mid) > 0.0 ? hi : lo) = mid;
        }
        return 0.5 * (lo + hi);
    };

    ArrowheadEigensystem out;
    out.values.resize(n + 1);
    out.vectors.resize(n + 1, n + 1);
    const double reach = std::abs(d0 - omega.front()) + std::abs(d0 - omega.back()) +
                         std::sqrt(v2 * static_cast<double>(n)) + 1.0;
    auto store = [&](Eigen::Index m, double origin, double delta) {
        out.values(m) = origin + delta;
        double norm2 = 1.0;
        out.vectors(0, m) = 1.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double x = v / ((origin - omega[static_cast<std::size_t>(j)]) + delta);
            out.vectors(j + 1, m) = x;
            norm2 += x * x;
        }
        out.vectors.col(m) /= std::sqrt(norm2);
    };

    // below the first pole
    store(0, omega.front(), bisect(omega.front(), -reach, 0.0));
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        const double a = omega[static_cast<std::size_t>(k)];
        const double b = omega[static_cast<std::size_t>(k + 1)];
        const double half = 0.5 * (b - a);
        if (secular(a, half) > 0.0) {
            store(k + 1, a, bisect(a, 0.0, half));
        } else {
            store(k + 1, b, bisect(b, -half, 0.0));
        }
    }
    store(n, omega.back(), bisect(omega.back(), 0.0, reach));
    return out;
}

}  // namespace detail

/// Exact occupation <n(t)> of the level coupled to a discretized bath. Single-particle
/// correlation matrix: C(t) = e^{-iHt} C(0) e^{iHt}, so <n(t)> = sum_j |U_{j0}(t)|^2 C_jj(0)
/// with U = e^{-iHt} from the eigensystem of the (N+1)x(N+1) arrowhead Hamiltonian.
/// Gamma = 0 is accepted (decoupled level).
[[nodiscard]] inline OccupationTrajectory microscopic_oracle(const ModelParams& p,
                                                             const BathDiscretization& bath,
                                                             const DensityMatrix& rho0,
                                                             const TimeGrid& grid)
{
    if (!(p.gamma_coupling >= 0.0) || !(p.temperature >= 0.0) || !std::isfinite(p.epsilon_level) ||
        !std::isfinite(p.mu)) {
        throw DomainError("microscopic_oracle: invalid parameters");
    }
    bath.validate(p);
    rho0.validate();
    grid.validate();
    if (rho0.field != complex{}) {
        throw UnsupportedModeError("microscopic_oracle: needs an occupation-diagonal initial state");
    }

    OccupationTrajectory out;
    out.times = grid.times();
    if (bath.revival_time() < grid.t_end) {
        out.warnings.push_back("bath recurrence time " + std::to_string(bath.revival_time()) +
                               " is shorter than t_end; increase n_modes");
    }
    const double n0 = 0.5 * (1.0 - rho0.parity);
    if (p.gamma_coupling == 0.0) {
        out.occupation.assign(out.times.size(), n0);
        out.parity.assign(out.times.size(), rho0.parity);
        return out;
    }

    const int n = bath.n_modes;
    const double dw = bath.spacing();
    std::vector<double> omega(static_cast<std::size_t>(n));
    Eigen::VectorXd occ(n + 1);
    occ(0) = n0;
    for (int k = 0; k < n; ++k) {
        const double w = p.mu - bath.half_bandwidth + (k + 0.5) * dw;
        omega[static_cast<std::size_t>(k)] = w;
        const double x = w - p.mu;
        occ(k + 1) = p.temperature == 0.0 ? (x < 0.0 ? 1.0 : (x > 0.0 ? 0.0 : 0.5))
                                          : fermi(x / p.temperature);
    }
    const double v = std::sqrt(p.gamma_coupling * dw / (2.0 * pi));
    const detail::ArrowheadEigensystem es = detail::arrowhead_eigensystem(p.epsilon_level, omega, v);

    // psi(t) = V (V_0 e^{-iEt}), batched over times
    const Eigen::Index dim = n + 1;
    const Eigen::RowVectorXd v0 = es.vectors.row(0);
    const std::size_t total = out.times.size();
    constexpr std::size_t chunk = 128;
    out.occupation.resize(total);
    out.parity.resize(total);
    for (std::size_t start = 0; start < total; start += chunk) {
        const auto cols = static_cast<Eigen::Index>(std::min(chunk, total - start));
        Eigen::MatrixXd phi_re(dim, cols);
        Eigen::MatrixXd phi_im(dim, cols);
        for (Eigen::Index c = 0; c < cols; ++c) {
            const double t = out.times[start + static_cast<std::size_t>(c)];
            for (Eigen::Index m = 0; m < dim; ++m) {
                const double ph = es.values(m) * t;
                phi_re(m, c) = v0(m) * std::cos(ph);
                phi_im(m, c) = -v0(m) * std::sin(ph);
            }
        }
        const Eigen::MatrixXd psi_re = es.vectors * phi_re;
        const Eigen::MatrixXd psi_im = es.vectors * phi_im;
        for (Eigen::Index c = 0; c < cols; ++c) {
            const double nt = (psi_re.col(c).array().square() + psi_im.col(c).array().square())
                                  .matrix()
                                  .dot(occ);
            out.occupation[start + static_cast<std::size_t>(c)] = nt;
            out.parity[start + static_cast<std::size_t>(c)] = 1.0 - 2.0 * nt;
        }
    }
    return out;
}

}  // namespace reslevel
