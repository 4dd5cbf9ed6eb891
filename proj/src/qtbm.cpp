#include "dqd/qtbm.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>
#include <Eigen/UmfPackSupport>
#include <fmt/format.h>

#include <dlfcn.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <ostream>

#include "dqd/errors.hpp"

namespace dqd {

void ScatteringProblem::validate() const {
    if (!basis) throw ConfigError("scattering problem has no basis");
    if (input_channel < 0 || input_channel >= basis->size())
        throw ConfigError(fmt::format("input channel {} outside the basis", input_channel));
    if (!(kinetic_energy > 0.0)) throw ConfigError("T0 must be positive");
    if (basis->single.levels() > 0 && total_energy() >= basis->single.level_energy(0))
        throw ConfigError(fmt::format("total energy {:.4f} meV is above the ionization threshold {:.4f} meV",
                                      total_energy(), basis->single.level_energy(0)));
    if (options.exchange == ExchangeMode::distinguishable && options.symmetry != SymmetryMode::full_cube)
        throw ConfigError("distinguishable exchange needs the full cube");
}

std::vector<Channel> enumerate_channels(const ScatteringProblem& problem) {
    const ChannelBasis& basis = *problem.basis;
    const double h = basis.grid.spacing;
    const double kp = basis.scale.kinetic_prefactor;
    const double t = kp / (h * h);
    const double energy = problem.total_energy();
    std::vector<Channel> out;
    for (int n = 0; n < basis.size(); ++n) {
        Channel ch;
        ch.n = n;
        ch.kinetic = n == problem.input_channel ? problem.kinetic_energy : energy - basis.energy(n);
        const double cosine = 1.0 - ch.kinetic / (2.0 * t);
        if (ch.kinetic >= problem.options.threshold_tolerance_mev) {
            if (cosine <= -1.0) throw ConfigError("channel energy above the lattice band; refine the grid");
            const double sine = std::sqrt(1.0 - cosine * cosine);
            ch.kind = ChannelKind::traveling;
            ch.k = std::sqrt(ch.kinetic / kp);
            ch.lattice_phase = {cosine, sine};
            ch.velocity = sine;
        } else {
            const double ch_cosh = std::max(cosine, 1.0);
            ch.kind = ChannelKind::evanescent;
            ch.k = std::sqrt(std::max(-ch.kinetic, 0.0) / kp);
            ch.lattice_phase = ch_cosh - std::sqrt(ch_cosh * ch_cosh - 1.0);
            ch.near_threshold = std::abs(ch.kinetic) < problem.options.threshold_tolerance_mev;
        }
        out.push_back(ch);
    }
    return out;
}

Eigen::Index wedge_rank(int p, int q, int r) {
    const Eigen::Index P = p, Q = q;
    return P * (P - 1) * (P - 2) / 6 + Q * (Q - 1) / 2 + r;
}

Eigen::Index interior_unknown_count(int points, SymmetryMode mode) {
    const Eigen::Index n = points - 2;
    return mode == SymmetryMode::full_cube ? n * n * n : n * (n - 1) * (n - 2) / 6;
}

namespace {

// Sorts a triple into descending order; returns the permutation sign, or 0 on a coincidence.
int sort_descending(int& a, int& b, int& c) {
    int sign = 1;
    if (a < b) std::swap(a, b), sign = -sign;
    if (b < c) std::swap(b, c), sign = -sign;
    if (a < b) std::swap(a, b), sign = -sign;
    if (a == b || b == c) return 0;
    return sign;
}

struct Layout {
    int N;
    SymmetryMode mode;

    // Column of an interior node with a sign, or sign 0 when the node is not an unknown.
    std::pair<Eigen::Index, int> locate(int a, int b, int c) const {
        if (mode == SymmetryMode::full_cube) {
            const Eigen::Index n = N - 2;
            return {((a - 1) * n + (b - 1)) * n + (c - 1), 1};
        }
        const int s = sort_descending(a, b, c);
        if (s == 0) return {0, 0};
        return {wedge_rank(a - 1, b - 1, c - 1), s};
    }
};

struct FaceHit {
    bool upper = false;
    int sign = 0;  // 0: no ansatz on this face
    int y = 0, z = 0;
};

// The ansatz on the six faces: x1 faces carry Eqs. for the incident/reflected and transmitted
// expansions, the x2 and x3 faces carry their exchange images with signs -1 and +1.
FaceHit face_of(int a, int b, int c, int N, ExchangeMode exchange) {
    FaceHit f;
    const int coords[3] = {a, b, c};
    for (int d = 0; d < 3; ++d) {
        if (coords[d] != 0 && coords[d] != N - 1) continue;
        f.upper = coords[d] == N - 1;
        if (d == 0) f.sign = 1, f.y = b, f.z = c;
        else if (exchange == ExchangeMode::distinguishable) f.sign = 0;
        else if (d == 1) f.sign = -1, f.y = a, f.z = c;
        else f.sign = 1, f.y = a, f.z = b;
        return f;
    }
    f.sign = 2;  // interior marker, never returned for face nodes
    return f;
}

bool on_face(int a, int b, int c, int N) {
    return a == 0 || b == 0 || c == 0 || a == N - 1 || b == N - 1 || c == N - 1;
}

}  // namespace

AssembledSystem assemble_system(const ScatteringProblem& problem) {
    problem.validate();
    const ChannelBasis& basis = *problem.basis;
    const int N = basis.grid.points_per_axis;
    const double h = basis.grid.spacing;
    const double t = basis.scale.kinetic_prefactor / (h * h);
    const double E = problem.total_energy();
    const int C = basis.size();
    const int j = problem.input_channel;
    const SymmetryMode mode = problem.options.symmetry;
    const ExchangeMode exchange = problem.options.exchange;

    AssembledSystem sys;
    sys.channel_data = enumerate_channels(problem);
    for (const auto& ch : sys.channel_data)
        if (std::abs(ch.kinetic) < problem.options.singular_threshold_mev) throw NearThresholdError(ch.n, ch.kinetic);
    sys.channels = C;
    sys.interior_unknowns = interior_unknown_count(N, mode);
    const Eigen::Index nn = sys.interior_unknowns;
    const Eigen::Index total = nn + 2 * C;
    sys.rhs = Eigen::VectorXcd::Zero(total);

    // Discrete unit-norm channel functions xi_m = Xi_m h.
    std::vector<Eigen::MatrixXd> xi(C);
    for (int m = 0; m < C; ++m) xi[m] = basis.states[m].wavefunction * h;
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(N, N);
    if (basis.coulomb)
        for (int a = 0; a < N; ++a)
            for (int b = 0; b < N; ++b) W(a, b) = coulomb_kernel(basis.grid.x(a), basis.grid.x(b), basis.device, basis.scale);
    const Eigen::VectorXd& V = basis.potential;
    const Layout layout{N, mode};

    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(static_cast<std::size_t>(nn) * 8);

    auto add_link = [&](Eigen::Index row, int a, int b, int c, double coef) {
        if (!on_face(a, b, c, N)) {
            auto [col, s] = layout.locate(a, b, c);
            if (s != 0) trip.emplace_back(row, col, s * coef);
            return;
        }
        const FaceHit f = face_of(a, b, c, N, exchange);
        if (f.sign == 0) return;
        const double w = f.sign * coef;
        if (!f.upper) sys.rhs[row] -= w * xi[j](f.y, f.z);
        for (int m = 0; m < C; ++m) {
            const double v = xi[m](f.y, f.z);
            if (v != 0.0) trip.emplace_back(row, f.upper ? sys.c_column(m) : sys.b_column(m), w * v);
        }
    };

    auto add_node = [&](Eigen::Index row, int a, int b, int c) {
        const double diag = 6.0 * t + V[a] + V[b] + V[c] + W(a, b) + W(a, c) + W(b, c) - E;
        trip.emplace_back(row, row, diag);
        add_link(row, a - 1, b, c, -t);
        add_link(row, a + 1, b, c, -t);
        add_link(row, a, b - 1, c, -t);
        add_link(row, a, b + 1, c, -t);
        add_link(row, a, b, c - 1, -t);
        add_link(row, a, b, c + 1, -t);
        // Projection rows <xi_m | Psi> on the planes next to the x1 faces.
        for (int m = 0; m < C; ++m) {
            if (mode == SymmetryMode::antisymmetric_sector) {
                // Psi(1, y, z) = Psi(y, z, 1), and the y < z half doubles the y > z half.
                if (c == 1) trip.emplace_back(sys.b_column(m), row, 2.0 * t * xi[m](a, b));
                if (a == N - 2) trip.emplace_back(sys.c_column(m), row, 2.0 * t * xi[m](b, c));
            } else if (exchange == ExchangeMode::distinguishable) {
                if (a == 1) trip.emplace_back(sys.b_column(m), row, t * xi[m](b, c));
                if (a == N - 2) trip.emplace_back(sys.c_column(m), row, t * xi[m](b, c));
            } else {
                // Average of the three exchange images keeps the system permutation-equivariant.
                const double third = t / 3.0;
                if (a == 1) trip.emplace_back(sys.b_column(m), row, third * xi[m](b, c));
                if (b == 1) trip.emplace_back(sys.b_column(m), row, -third * xi[m](a, c));
                if (c == 1) trip.emplace_back(sys.b_column(m), row, third * xi[m](a, b));
                if (a == N - 2) trip.emplace_back(sys.c_column(m), row, third * xi[m](b, c));
                if (b == N - 2) trip.emplace_back(sys.c_column(m), row, -third * xi[m](a, c));
                if (c == N - 2) trip.emplace_back(sys.c_column(m), row, third * xi[m](a, b));
            }
        }
    };

    if (mode == SymmetryMode::antisymmetric_sector) {
        Eigen::Index row = 0;
        for (int p = 2; p < N - 2; ++p)
            for (int q = 1; q < p; ++q)
                for (int r = 0; r < q; ++r) add_node(row++, p + 1, q + 1, r + 1);
    } else {
        Eigen::Index row = 0;
        for (int a = 1; a < N - 1; ++a)
            for (int b = 1; b < N - 1; ++b)
                for (int c = 1; c < N - 1; ++c) add_node(row++, a, b, c);
    }

    for (int m = 0; m < C; ++m) {
        const cplx inv = 1.0 / sys.channel_data[m].lattice_phase;
        trip.emplace_back(sys.b_column(m), sys.b_column(m), -t * inv);
        trip.emplace_back(sys.c_column(m), sys.c_column(m), -t * inv);
    }
    sys.rhs[sys.b_column(j)] += t * sys.channel_data[j].lattice_phase;

    sys.matrix.resize(total, total);
    sys.matrix.setFromTriplets(trip.begin(), trip.end());
    sys.matrix.makeCompressed();
    return sys;
}

namespace {

// Threaded BLAS inside the factorization would make results depend on the thread count;
// parallelism lives in the sweep layer instead.
void pin_blas_threads() {
    static std::once_flag once;
    std::call_once(once, [] {
        using setter = void (*)(int);
        if (void* f = dlsym(RTLD_DEFAULT, "openblas_set_num_threads")) reinterpret_cast<setter>(f)(1);
    });
}

double relative_residual(const Eigen::SparseMatrix<cplx>& A, const Eigen::VectorXcd& x, const Eigen::VectorXcd& b) {
    return (A * x - b).norm() / b.norm();
}

}  // namespace

ScatteringSolution solve_scattering(const ScatteringProblem& problem) {
    pin_blas_threads();
    AssembledSystem sys = assemble_system(problem);
    const SolverOptions& opt = problem.options;
    ScatteringSolution sol;
    sol.basis = problem.basis;
    sol.input_channel = problem.input_channel;
    sol.kinetic_energy = problem.kinetic_energy;
    sol.total_energy = problem.total_energy();
    sol.symmetry = opt.symmetry;
    sol.exchange = opt.exchange;
    sol.channels = sys.channel_data;
    for (const auto& ch : sol.channels)
        if (ch.near_threshold)
            sol.warnings.push_back(fmt::format("channel {} within {} meV of threshold; treated as evanescent",
                                               ch.n, opt.threshold_tolerance_mev));

    const Eigen::SparseMatrix<cplx>& A = sys.matrix;
    Eigen::VectorXcd x;
    if (A.rows() <= opt.direct_max_unknowns) {
        sol.method = "umfpack";
        Eigen::UmfPackLU<Eigen::SparseMatrix<cplx>> lu;
        // METIS roughly halves fill and time against the AMD default on these 3D stencils.
        lu.umfpackControl()(UMFPACK_ORDERING) = UMFPACK_ORDERING_METIS;
        {
            // METIS keeps its random state in globals, so concurrent orderings are not
            // reproducible; only the symbolic step is serialized.
            static std::mutex ordering_mutex;
            std::lock_guard<std::mutex> lock(ordering_mutex);
            lu.analyzePattern(A);
        }
        lu.factorize(A);
        if (lu.info() != Eigen::Success)
            throw SolverError("sparse LU factorization failed (singular system near a threshold?)", {});
        x = lu.solve(sys.rhs);
        double res = relative_residual(A, x, sys.rhs);
        sol.residual_history.push_back(res);
        for (int k = 0; k < opt.max_refinement_steps && res > 0.01 * opt.relative_residual; ++k) {
            const Eigen::VectorXcd r = sys.rhs - A * x;
            x += lu.solve(r);
            res = relative_residual(A, x, sys.rhs);
            sol.residual_history.push_back(res);
        }
    } else {
        sol.method = "bicgstab+ilut";
        Eigen::BiCGSTAB<Eigen::SparseMatrix<cplx>, Eigen::IncompleteLUT<cplx>> it;
        it.preconditioner().setDroptol(1e-4);
        it.preconditioner().setFillfactor(20);
        it.compute(A);
        if (it.info() != Eigen::Success) throw SolverError("incomplete LU preconditioner failed", {});
        it.setTolerance(0.1 * opt.relative_residual);
        it.setMaxIterations(200);
        x = Eigen::VectorXcd::Zero(A.rows());
        for (int round = 0; round < 50; ++round) {
            x = it.solveWithGuess(sys.rhs, x);
            sol.residual_history.push_back(relative_residual(A, x, sys.rhs));
            if (sol.residual_history.back() <= opt.relative_residual) break;
        }
    }
    sol.residual_norm = sol.residual_history.back();
    if (!std::isfinite(sol.residual_norm) || sol.residual_norm > opt.relative_residual)
        throw SolverError(fmt::format("linear solve stalled at relative residual {:.3e}", sol.residual_norm),
                          sol.residual_history);

    const Eigen::Index nn = sys.interior_unknowns;
    sol.interior = x.head(nn);
    sol.b = x.segment(nn, sys.channels);
    sol.c = x.segment(nn + sys.channels, sys.channels);
    return sol;
}

cplx ScatteringSolution::psi(int i1, int i2, int i3) const {
    const int N = points();
    const double h = basis->grid.spacing;
    if (on_face(i1, i2, i3, N)) {
        const FaceHit f = face_of(i1, i2, i3, N, exchange);
        if (f.sign == 0) return 0.0;
        cplx v = 0.0;
        const Eigen::VectorXcd& amp = f.upper ? c : b;
        for (std::size_t m = 0; m < channels.size(); ++m) v += amp[m] * basis->states[m].wavefunction(f.y, f.z) * h;
        if (!f.upper) v += basis->states[input_channel].wavefunction(f.y, f.z) * h;
        return static_cast<double>(f.sign) * v;
    }
    const Layout layout{N, symmetry};
    auto [col, s] = layout.locate(i1, i2, i3);
    return s == 0 ? cplx(0.0) : static_cast<double>(s) * interior[col];
}

ChannelProbabilities channel_probabilities(const ScatteringSolution& solution, double tolerance) {
    ChannelProbabilities p;
    const double v0 = solution.channels[solution.input_channel].velocity;
    if (!(v0 > 0.0)) throw DegenerateInputError("input channel is not traveling");
    for (std::size_t n = 0; n < solution.channels.size(); ++n) {
        const double w = solution.channels[n].velocity / v0;
        p.reflection.push_back(w * std::norm(solution.b[n]));
        p.transmission.push_back(w * std::norm(solution.c[n]));
        p.total += p.reflection.back() + p.transmission.back();
    }
    p.defect = std::abs(p.total - 1.0);
    if (tolerance > 0.0 && p.defect > tolerance)
        throw ConservationError(fmt::format("flux sum {:.12f} misses 1 by {:.3e}", p.total, p.defect), p.defect);
    return p;
}

Field3 expand_field(const ScatteringSolution& solution) {
    Field3 f;
    f.n = solution.points();
    f.data.resize(static_cast<std::size_t>(f.n) * f.n * f.n);
    for (int a = 0; a < f.n; ++a)
        for (int b = 0; b < f.n; ++b)
            for (int c = 0; c < f.n; ++c) f.at(a, b, c) = solution.psi(a, b, c);
    return f;
}

AntisymmetryReport check_antisymmetry(const Field3& field) {
    AntisymmetryReport r;
    const int N = field.n;
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b)
            for (int c = 0; c < N; ++c) {
                const cplx v = field.at(a, b, c);
                r.max_abs = std::max(r.max_abs, std::abs(v));
                r.max_violation = std::max({r.max_violation, std::abs(v + field.at(b, a, c)),
                                            std::abs(v + field.at(c, b, a)), std::abs(v + field.at(a, c, b))});
            }
    return r;
}

AntisymmetryReport check_antisymmetry(const ScatteringSolution& solution) {
    return check_antisymmetry(expand_field(solution));
}

void write_density_slice_csv(std::ostream& out, const ScatteringSolution& solution, int k) {
    out << "x1_nm,x2_nm,density\n";
    const int N = solution.points();
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b)
            out << fmt::format("{},{},{}\n", solution.basis->grid.x(a), solution.basis->grid.x(b),
                               std::norm(solution.psi(a, b, k)));
}

}  // namespace dqd
