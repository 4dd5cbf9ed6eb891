#include "dqd/bound_states.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "dqd/errors.hpp"

namespace dqd {

namespace {

int first_lobe_sign(const Eigen::VectorXd& v) {
    const double peak = v.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (std::abs(v[i]) > 0.5 * peak) return v[i] > 0 ? 1 : -1;
    return 1;
}

// Index of the pair (p, q), p > q >= 0, in the antisymmetric two-particle basis.
inline Eigen::Index pair_rank(int p, int q) { return static_cast<Eigen::Index>(p) * (p - 1) / 2 + q; }

struct PairEigen {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

// Shift-invert subspace iteration with Rayleigh-Ritz on H itself. `sigma` must lie below the
// spectrum so H - sigma is positive definite.
PairEigen lowest_eigenpairs(const Eigen::SparseMatrix<double>& h, int count, double sigma, double tol) {
    const Eigen::Index dim = h.rows();
    const int block = static_cast<int>(std::min<Eigen::Index>(dim, 2 * count + 8));
    Eigen::SparseMatrix<double> shifted = h;
    for (Eigen::Index i = 0; i < dim; ++i) shifted.coeffRef(i, i) -= sigma;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(shifted);
    if (ldlt.info() != Eigen::Success) throw BasisError("two-particle factorization failed");

    std::mt19937_64 rng(20240611);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd x(dim, block);
    for (Eigen::Index j = 0; j < block; ++j)
        for (Eigen::Index i = 0; i < dim; ++i) x(i, j) = gauss(rng);

    PairEigen out;
    double worst = 0.0;
    for (int iter = 0; iter < 4000; ++iter) {
        Eigen::MatrixXd y = ldlt.solve(x);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, block);
        Eigen::MatrixXd hq = h * q;
        Eigen::MatrixXd small = q.transpose() * hq;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (small + small.transpose()));
        x = q * es.eigenvectors();
        Eigen::MatrixXd r = hq * es.eigenvectors() - x * es.eigenvalues().asDiagonal();
        worst = 0.0;
        for (int j = 0; j < count; ++j) worst = std::max(worst, r.col(j).norm());
        if (worst < tol) {
            out.values = es.eigenvalues().head(count);
            out.vectors = x.leftCols(count);
            return out;
        }
    }
    throw BasisError(fmt::format("two-particle eigensolver stalled at residual {:.3e}", worst));
}

}  // namespace

SingleParticleSpectrum solve_single_particle(const Eigen::VectorXd& potential, const GridSpec& grid,
                                             const EnergyScale& scale, int levels_per_dot) {
    if (levels_per_dot < 2) throw ConfigError("need at least 2 levels per dot");
    const int N = grid.points_per_axis;
    const int n = N - 2;
    const double h = grid.spacing;
    const double t = scale.kinetic_prefactor / (h * h);
    Eigen::VectorXd diag = (2.0 * t + potential.segment(1, n).array()).matrix();
    Eigen::VectorXd sub = Eigen::VectorXd::Constant(n - 1, -t);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);

    const int want = 2 * levels_per_dot;
    int bound = 0;
    while (bound < n && es.eigenvalues()[bound] < 0.0) ++bound;
    if (bound < want) throw ShortfallError(levels_per_dot, bound / 2);

    SingleParticleSpectrum s;
    s.eigenvalues = es.eigenvalues().head(want);
    s.eigenvectors = Eigen::MatrixXd::Zero(N, want);
    for (int k = 0; k < want; ++k) {
        const Eigen::VectorXd v = es.eigenvectors().col(k);
        Eigen::VectorXd hv = diag.cwiseProduct(v);
        hv.head(n - 1) += sub.cwiseProduct(v.tail(n - 1));
        hv.tail(n - 1) += sub.cwiseProduct(v.head(n - 1));
        s.max_residual = std::max(s.max_residual, (hv - s.eigenvalues[k] * v).norm());
        s.eigenvectors.col(k).segment(1, n) = v / std::sqrt(h);
    }

    const double mid = 0.5 * (N - 1);
    Eigen::VectorXd left_weight(N);
    for (int i = 0; i < N; ++i) left_weight[i] = i < mid ? 1.0 : (i == mid ? 0.5 : 0.0);

    for (int l = 0; l < levels_per_dot; ++l) {
        Eigen::MatrixXd pair = s.eigenvectors.middleCols(2 * l, 2);
        Eigen::Matrix2d m = pair.transpose() * left_weight.asDiagonal() * pair * h;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> loc(m);
        const double energy = 0.5 * (s.eigenvalues[2 * l] + s.eigenvalues[2 * l + 1]);
        for (Dot dot : {Dot::left, Dot::right}) {
            // Eigenvalues ascend, so column 1 carries the larger left-half weight.
            Eigen::VectorXd chi = pair * loc.eigenvectors().col(dot == Dot::left ? 1 : 0);
            chi *= first_lobe_sign(chi) / std::sqrt(chi.squaredNorm() * h);
            s.orbitals.push_back({energy, chi, dot, l});
        }
    }
    return s;
}

std::vector<TwoParticleBoundState> solve_two_particle(const Eigen::VectorXd& potential,
                                                      const GridSpec& grid, const EnergyScale& scale,
                                                      const PairInteraction& interaction, int count) {
    const int N = grid.points_per_axis;
    const int n = N - 2;
    const Eigen::Index dim = static_cast<Eigen::Index>(n) * (n - 1) / 2;
    if (count < 1 || count > dim) throw ConfigError("two-particle state count out of range");
    const double h = grid.spacing;
    const double t = scale.kinetic_prefactor / (h * h);

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(dim * 5);
    double min_w = 0.0;
    for (int p = 1; p < n; ++p) {
        for (int q = 0; q < p; ++q) {
            const Eigen::Index r = pair_rank(p, q);
            const double w = interaction ? interaction(grid.x(p + 1), grid.x(q + 1)) : 0.0;
            min_w = std::min(min_w, w);
            trip.emplace_back(r, r, 4.0 * t + potential[p + 1] + potential[q + 1] + w);
            if (p + 1 < n) trip.emplace_back(r, pair_rank(p + 1, q), -t);
            if (p - 1 > q) trip.emplace_back(r, pair_rank(p - 1, q), -t);
            if (q + 1 < p) trip.emplace_back(r, pair_rank(p, q + 1), -t);
            if (q > 0) trip.emplace_back(r, pair_rank(p, q - 1), -t);
        }
    }
    Eigen::SparseMatrix<double> H(dim, dim);
    H.setFromTriplets(trip.begin(), trip.end());

    Eigen::VectorXd diag = (2.0 * t + potential.segment(1, n).array()).matrix();
    Eigen::VectorXd sub = Eigen::VectorXd::Constant(n - 1, -t);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es1;
    es1.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    const double sigma = 2.0 * es1.eigenvalues()[0] + min_w - 1.0;

    PairEigen pe = lowest_eigenpairs(H, count, sigma, 1e-10);

    // Mirror acts on the pair basis as (p, q) -> -(n-1-q, n-1-p).
    auto apply_mirror = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd out(dim);
        for (int p = 1; p < n; ++p)
            for (int q = 0; q < p; ++q) out[pair_rank(n - 1 - q, n - 1 - p)] = -v[pair_rank(p, q)];
        return out;
    };

    // Only splittings below the residual floor are treated as degenerate; anything wider is
    // already resolved into parity eigenstates by the solver.
    const double cluster_tol = 1e-9;
    int start = 0;
    while (start < count) {
        int stop = start + 1;
        while (stop < count && pe.values[stop] - pe.values[stop - 1] < cluster_tol)
            ++stop;
        if (stop - start > 1) {
            const int k = stop - start;
            Eigen::MatrixXd block = pe.vectors.middleCols(start, k);
            Eigen::MatrixXd rb(dim, k);
            for (int c = 0; c < k; ++c) rb.col(c) = apply_mirror(block.col(c));
            Eigen::MatrixXd m = block.transpose() * rb;
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> mes(0.5 * (m + m.transpose()));
            // Odd states first, then even, inside each cluster.
            pe.vectors.middleCols(start, k) = block * mes.eigenvectors();
            for (int c = start; c < stop; ++c) pe.values[c] = pe.vectors.col(c).dot(H * pe.vectors.col(c));
        }
        start = stop;
    }

    std::vector<TwoParticleBoundState> states;
    for (int s = 0; s < count; ++s) {
        Eigen::VectorXd v = pe.vectors.col(s);
        v.normalize();
        v *= first_lobe_sign(v);
        TwoParticleBoundState st;
        st.index = s;
        st.energy = pe.values[s];
        st.residual = (H * v - st.energy * v).norm();
        st.mirror_parity = v.dot(apply_mirror(v)) >= 0.0 ? 1 : -1;
        st.wavefunction = Eigen::MatrixXd::Zero(N, N);
        const double scale_factor = 1.0 / (std::sqrt(2.0) * h);
        for (int p = 1; p < n; ++p)
            for (int q = 0; q < p; ++q) {
                const double val = v[pair_rank(p, q)] * scale_factor;
                st.wavefunction(p + 1, q + 1) = val;
                st.wavefunction(q + 1, p + 1) = -val;
            }
        states.push_back(std::move(st));
    }
    return states;
}

Eigen::MatrixXd antisymmetrized_product(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a * b.transpose() - b * a.transpose()) / std::sqrt(2.0);
}

Eigen::MatrixXd mirror(const Eigen::MatrixXd& xi) { return xi.reverse(); }

Eigen::Matrix4d table1_matrix() {
    const double r = 1.0 / std::sqrt(2.0);
    Eigen::Matrix4d m;
    m << 1, 0, 0, 0,
         0, -r, -r, 0,
         0, -r, r, 0,
         0, 0, 0, 1;
    return m;
}

int ChannelBasis::qubit_label(int n) const {
    for (int l = 0; l < 4; ++l)
        if (qubit_index[l] == n) return l;
    return -1;
}

namespace {

std::array<Eigen::MatrixXd, 4> product_states(const SingleParticleSpectrum& sp) {
    const auto& l0 = sp.orbital(Dot::left, 0).wavefunction;
    const auto& l1 = sp.orbital(Dot::left, 1).wavefunction;
    const auto& r0 = sp.orbital(Dot::right, 0).wavefunction;
    const auto& r1 = sp.orbital(Dot::right, 1).wavefunction;
    return {antisymmetrized_product(l0, r0), antisymmetrized_product(l0, r1),
            antisymmetrized_product(l1, r0), antisymmetrized_product(l1, r1)};
}

Eigen::Vector4d product_overlaps(const std::array<Eigen::MatrixXd, 4>& prods, const Eigen::MatrixXd& xi, double h) {
    Eigen::Vector4d o;
    for (int b = 0; b < 4; ++b) o[b] = prods[b].cwiseProduct(xi).sum() * h * h;
    return o;
}

}  // namespace

Eigen::Matrix4d overlap_table(const ChannelBasis& basis) {
    if (!basis.qubits_identified) throw BasisError("qubit states were not identified in this basis");
    const auto prods = product_states(basis.single);
    Eigen::Matrix4d m;
    for (int l = 0; l < 4; ++l)
        m.row(l) = product_overlaps(prods, basis.states[basis.qubit_index[l]].wavefunction,
                                    basis.grid.spacing).transpose();
    return m;
}

ChannelBasis build_channel_basis(const SimulationConfig& config) {
    config.validate();
    ChannelBasis b;
    b.grid = config.grid();
    b.scale = energy_scale(config.material);
    b.device = config.device;
    b.coulomb = config.basis.coulomb;
    b.potential = build_potential(config.device, b.grid);
    if (config.device.well_depth_mev > 0.0)
        b.single = solve_single_particle(b.potential, b.grid, b.scale, config.basis.levels_per_dot);

    PairInteraction w;
    if (config.basis.coulomb) {
        const DeviceSpec spec = config.device;
        const EnergyScale scale = b.scale;
        w = [spec, scale](double x2, double x3) { return coulomb_kernel(x2, x3, spec, scale); };
    }
    b.states = solve_two_particle(b.potential, b.grid, b.scale, w, config.basis.two_particle_states);
    b.kinds.assign(b.states.size(), StateKind::other);

    const int N = b.grid.points_per_axis;
    const double h = b.grid.spacing;
    const double mid = 0.5 * (N - 1);
    for (std::size_t s = 0; s < b.states.size(); ++s) {
        const auto& xi = b.states[s].wavefunction;
        double same = 0.0;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                if ((i < mid && j < mid) || (i > mid && j > mid)) same += xi(i, j) * xi(i, j);
        if (same * h * h > 0.5) b.kinds[s] = StateKind::double_occupancy;
    }
    if (b.single.levels() < 2) return b;

    const auto prods = product_states(b.single);
    std::vector<Eigen::Vector4d> ov;
    for (const auto& st : b.states) ov.push_back(product_overlaps(prods, st.wavefunction, h));

    const double r = 1.0 / std::sqrt(2.0);
    auto score = [&](int label, const Eigen::Vector4d& o) {
        switch (label) {
            case 0: return o[0];
            case 1: return -r * (o[1] + o[2]);
            case 2: return r * (o[2] - o[1]);
            default: return o[3];
        }
    };
    bool ok = true;
    for (int l = 0; l < 4; ++l) {
        int best = -1;
        double best_score = 0.0;
        for (std::size_t s = 0; s < ov.size(); ++s) {
            const double sc = std::abs(score(l, ov[s]));
            if (sc > best_score) best_score = sc, best = static_cast<int>(s);
        }
        if (best < 0 || best_score < 0.9) {
            ok = false;
            break;
        }
        b.qubit_index[l] = best;
    }
    for (int l = 0; ok && l < 4; ++l)
        for (int k = 0; k < l; ++k)
            if (b.qubit_index[l] == b.qubit_index[k]) ok = false;
    if (!ok) {
        b.qubit_index = {-1, -1, -1, -1};
        return b;
    }
    // Signs follow Table 1: +1 on |0L0R>, (-1,-1)/sqrt2, (-1,+1)/sqrt2, +1 on |1L1R>.
    for (int l = 0; l < 4; ++l) {
        const int s = b.qubit_index[l];
        if (score(l, ov[s]) < 0.0) {
            b.states[s].wavefunction *= -1.0;
            ov[s] *= -1.0;
        }
        b.kinds[s] = StateKind::qubit;
        b.overlaps.row(l) = ov[s].transpose();
    }
    b.qubits_identified = true;
    return b;
}

void write_single_particle_csv(std::ostream& out, const ChannelBasis& basis) {
    out << "x_nm,V_mev";
    for (const auto& o : basis.single.orbitals)
        out << ',' << (o.dot == Dot::left ? 'L' : 'R') << o.level_index;
    out << '\n';
    for (int i = 0; i < basis.grid.points_per_axis; ++i) {
        out << fmt::format("{},{}", basis.grid.x(i), basis.potential[i]);
        for (const auto& o : basis.single.orbitals) out << fmt::format(",{}", o.wavefunction[i]);
        out << '\n';
    }
}

void write_two_particle_csv(std::ostream& out, const ChannelBasis& basis) {
    out << "n,energy_mev,mirror_parity,kind,qubit_label,residual\n";
    for (int s = 0; s < basis.size(); ++s) {
        const auto& st = basis.states[s];
        const char* kind = basis.kinds[s] == StateKind::qubit              ? "qubit"
                           : basis.kinds[s] == StateKind::double_occupancy ? "double_occupancy"
                                                                           : "other";
        out << fmt::format("{},{},{},{},{},{}\n", s, st.energy, st.mirror_parity, kind,
                           basis.qubit_label(s), st.residual);
    }
}

void write_two_particle_wavefunctions_csv(std::ostream& out, const ChannelBasis& basis) {
    out << "x2_nm,x3_nm";
    for (int s = 0; s < basis.size(); ++s) out << ",xi" << s;
    out << '\n';
    const int N = basis.grid.points_per_axis;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            out << fmt::format("{},{}", basis.grid.x(i), basis.grid.x(j));
            for (const auto& st : basis.states) out << fmt::format(",{}", st.wavefunction(i, j));
            out << '\n';
        }
}

}  // namespace dqd
