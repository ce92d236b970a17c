#include "intricacy/sectors.hpp"

#include "intricacy/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace intricacy::sectors {

namespace {

Eigen::Matrix4cd kron(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b)
{
    Eigen::Matrix4cd out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return out;
}

double periodic_distance(double a, double b, double period)
{
    double d = std::fmod(std::abs(a - b), period);
    return std::min(d, period - d);
}

double kernel(const GaussianKernel& k, double d)
{
    return k.strength * std::exp(-d * d / (2.0 * k.range * k.range));
}

std::size_t ipow(std::size_t base, int exp)
{
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i)
        r *= base;
    return r;
}

// Coordinate c of configuration idx (c = 0 is the particle, c = n + 1 atom n).
std::size_t coordinate(std::size_t idx, int c, std::size_t m)
{
    return (idx / ipow(m, c)) % m;
}

Eigen::VectorXcd packet(const WavePacket& w, std::size_t m, double dx)
{
    const double period = static_cast<double>(m) * dx;
    Eigen::VectorXcd v(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
        double x = static_cast<double>(i) * dx;
        double d = periodic_distance(x, w.center, period);
        // Signed offset for the plane-wave phase, continuous around the centre.
        double signed_d = std::remainder(x - w.center, period);
        v[static_cast<Eigen::Index>(i)] =
            std::exp(-d * d / (2.0 * w.width * w.width)) * std::polar(1.0, w.momentum * signed_d);
    }
    return v;
}

} // namespace

int popcount(std::size_t q)
{
    return std::popcount(q);
}

IndexMatrices build_index_matrices()
{
    IndexMatrices m;
    m.p0 << 1, 0, 0, 0;
    m.p1 << 0, 0, 0, 1;
    // |1><0|: the raising direction points from non-intricate to intricate.
    m.s << 0, 0, 1, 0;
    m.a = m.s * m.p0 + m.p1;
    m.o = kron(m.p0, m.p0) + kron(m.p1, m.p1) + kron(m.s * m.p0, m.p1) + kron(m.p1, m.s * m.p0);
    return m;
}

void ModelSpec::validate() const
{
    if (atoms < 1 || atoms > 3)
        throw ConfigError("sector model supports 1 to 3 atoms");
    if (grid_points < 4)
        throw ConfigError("sector model needs at least 4 grid points per coordinate");
    if (!(spacing > 0.0) || !(particle_mass > 0.0) || !(atom_mass > 0.0))
        throw ConfigError("sector model spacing and masses must be positive");
    if (!(particle_atom.range > 0.0) || !(atom_atom.range > 0.0))
        throw ConfigError("potential ranges must be positive");
    if (!(particle.width > 0.0))
        throw ConfigError("particle packet width must be positive");
    if (atom_packets.size() != static_cast<std::size_t>(atoms))
        throw ConfigError("need one initial packet per atom");
    for (const auto& p : atom_packets)
        if (!(p.width > 0.0))
            throw ConfigError("atom packet widths must be positive");
    if (amplitudes() > amplitude_cap) {
        std::ostringstream os;
        os << "sector state needs " << amplitudes() << " amplitudes, above the cap of " << amplitude_cap;
        throw ConfigError(os.str());
    }
}

std::size_t ModelSpec::configurations() const
{
    return ipow(grid_points, atoms + 1);
}

Eigen::VectorXcd initial_wavefunction(const ModelSpec& spec)
{
    spec.validate();
    const std::size_t m = spec.grid_points;
    const std::size_t g = spec.configurations();
    const Eigen::VectorXcd chi = packet(spec.particle, m, spec.spacing);
    std::vector<Eigen::VectorXcd> phis;
    for (const auto& w : spec.atom_packets)
        phis.push_back(packet(w, m, spec.spacing));

    std::vector<int> perm(static_cast<std::size_t>(spec.atoms));
    std::iota(perm.begin(), perm.end(), 0);

    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(g));
    do {
        for (std::size_t idx = 0; idx < g; ++idx) {
            cplx v = chi[static_cast<Eigen::Index>(coordinate(idx, 0, m))];
            for (int n = 0; n < spec.atoms; ++n)
                v *= phis[static_cast<std::size_t>(perm[static_cast<std::size_t>(n)])]
                         [static_cast<Eigen::Index>(coordinate(idx, n + 1, m))];
            psi[static_cast<Eigen::Index>(idx)] += v;
        }
    } while (spec.bose_symmetric && std::next_permutation(perm.begin(), perm.end()));

    const double norm = psi.norm();
    if (!(norm > 0.0))
        throw ConfigError("initial wave function vanishes on the grid");
    return psi / norm;
}

Eigen::VectorXcd SectorStack::total() const
{
    Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(sectors.front().size());
    for (const auto& s : sectors)
        sum += s;
    return sum;
}

SectorStack initial_stack(const ModelSpec& spec)
{
    SectorStack stack;
    stack.atoms = spec.atoms;
    const Eigen::VectorXcd psi = initial_wavefunction(spec);
    stack.sectors.assign(spec.sector_count(), Eigen::VectorXcd::Zero(psi.size()));
    stack.sectors[0] = psi;
    return stack;
}

Generator::Generator(ModelSpec spec) : spec_(std::move(spec))
{
    spec_.validate();
    configurations_ = spec_.configurations();
    const std::size_t m = spec_.grid_points;
    const double period = static_cast<double>(m) * spec_.spacing;
    const auto size = static_cast<Eigen::Index>(configurations_);

    for (int n = 0; n < spec_.atoms; ++n) {
        Eigen::VectorXd u(size);
        for (std::size_t idx = 0; idx < configurations_; ++idx) {
            double y = static_cast<double>(coordinate(idx, 0, m)) * spec_.spacing;
            double x = static_cast<double>(coordinate(idx, n + 1, m)) * spec_.spacing;
            u[static_cast<Eigen::Index>(idx)] = kernel(spec_.particle_atom, periodic_distance(y, x, period));
        }
        u_.push_back(std::move(u));
    }
    for (int a = 0; a < spec_.atoms; ++a) {
        for (int b = a + 1; b < spec_.atoms; ++b) {
            Eigen::VectorXd v(size);
            for (std::size_t idx = 0; idx < configurations_; ++idx) {
                double xa = static_cast<double>(coordinate(idx, a + 1, m)) * spec_.spacing;
                double xb = static_cast<double>(coordinate(idx, b + 1, m)) * spec_.spacing;
                v[static_cast<Eigen::Index>(idx)] = kernel(spec_.atom_atom, periodic_distance(xa, xb, period));
            }
            v_.push_back(std::move(v));
            pairs_.emplace_back(a, b);
        }
    }
}

const Eigen::VectorXd& Generator::atom_atom_potential(int a, int b) const
{
    if (a > b)
        std::swap(a, b);
    for (std::size_t i = 0; i < pairs_.size(); ++i)
        if (pairs_[i] == std::make_pair(a, b))
            return v_[i];
    throw ConfigError("no such atom pair");
}

void Generator::apply_kinetic(const Eigen::VectorXcd& in, Eigen::VectorXcd& out) const
{
    const std::size_t m = spec_.grid_points;
    const double dx2 = spec_.spacing * spec_.spacing;
    out.setZero(in.size());
    for (int c = 0; c <= spec_.atoms; ++c) {
        const double mass = c == 0 ? spec_.particle_mass : spec_.atom_mass;
        const double w = 1.0 / (2.0 * mass * dx2);
        const std::size_t stride = ipow(m, c);
        for (std::size_t idx = 0; idx < configurations_; ++idx) {
            const std::size_t xc = (idx / stride) % m;
            const std::size_t up = xc + 1 == m ? idx - xc * stride : idx + stride;
            const std::size_t down = xc == 0 ? idx + (m - 1) * stride : idx - stride;
            const auto i = static_cast<Eigen::Index>(idx);
            out[i] -= w * (in[static_cast<Eigen::Index>(up)] - 2.0 * in[i] + in[static_cast<Eigen::Index>(down)]);
        }
    }
}

void Generator::apply(const SectorStack& in, SectorStack& out) const
{
    const std::size_t nq = sector_count();
    out.atoms = in.atoms;
    out.time = in.time;
    out.sectors.resize(nq);
    for (std::size_t q = 0; q < nq; ++q)
        apply_kinetic(in.sectors[q], out.sectors[q]);

    for (std::size_t q = 0; q < nq; ++q) {
        auto& target = out.sectors[q];
        // U_n A_n: output bit n = 1 collects inputs with bit n = 0 and 1.
        for (int n = 0; n < spec_.atoms; ++n) {
            const std::size_t bit = std::size_t{1} << n;
            if (!(q & bit))
                continue;
            target.array() += u_[static_cast<std::size_t>(n)].array() *
                              (in.sectors[q] + in.sectors[q & ~bit]).array();
        }
        // V_nn' O_nn': 00 -> 00, and {01, 10, 11} -> 11.
        for (std::size_t p = 0; p < pairs_.size(); ++p) {
            const std::size_t ba = std::size_t{1} << pairs_[p].first;
            const std::size_t bb = std::size_t{1} << pairs_[p].second;
            const bool ha = q & ba;
            const bool hb = q & bb;
            if (!ha && !hb) {
                target.array() += v_[p].array() * in.sectors[q].array();
            } else if (ha && hb) {
                target.array() += v_[p].array() *
                                  (in.sectors[q] + in.sectors[q & ~ba] + in.sectors[q & ~bb]).array();
            }
        }
    }
}

double Generator::norm_bound() const
{
    const double dx2 = spec_.spacing * spec_.spacing;
    double bound = 2.0 / (spec_.particle_mass * dx2) + spec_.atoms * 2.0 / (spec_.atom_mass * dx2);
    for (const auto& u : u_)
        bound += std::sqrt(2.0) * u.cwiseAbs().maxCoeff();
    for (const auto& v : v_)
        bound += std::sqrt(3.0) * v.cwiseAbs().maxCoeff();
    return bound;
}

std::vector<std::vector<bool>> Generator::block_pattern() const
{
    const std::size_t nq = sector_count();
    const auto size = static_cast<Eigen::Index>(configurations_);
    std::mt19937_64 rng(0x5eC7);
    std::normal_distribution<double> normal;

    std::vector<std::vector<bool>> pattern(nq, std::vector<bool>(nq, false));
    SectorStack probe, out;
    probe.atoms = spec_.atoms;
    for (std::size_t src = 0; src < nq; ++src) {
        probe.sectors.assign(nq, Eigen::VectorXcd::Zero(size));
        for (Eigen::Index i = 0; i < size; ++i)
            probe.sectors[src][i] = cplx(normal(rng), normal(rng));
        apply(probe, out);
        for (std::size_t dst = 0; dst < nq; ++dst)
            pattern[dst][src] = out.sectors[dst].cwiseAbs().maxCoeff() > 0.0;
    }
    return pattern;
}

SectorStack evolve_sectors(SectorStack stack, const Generator& generator, const SectorEvolveOptions& options,
                           const std::function<void(const SectorStack&)>& observer)
{
    if (!(options.dt > 0.0))
        throw ConfigError("sector time step must be positive");
    if (options.dt > generator.stable_step()) {
        std::ostringstream os;
        os << "sector time step " << options.dt << " exceeds the RK4 bound " << generator.stable_step()
           << " from the operator-norm estimate";
        throw ConfigError(os.str());
    }
    if (stack.sectors.size() != generator.sector_count())
        throw ConfigError("stack and generator disagree on the number of sectors");

    const cplx minus_i(0.0, -1.0);
    const double n0 = stack.total().norm();
    const std::size_t nq = generator.sector_count();

    SectorStack k1, k2, k3, k4, tmp = stack;
    auto axpy = [&](const SectorStack& base, double w, const SectorStack& k) {
        for (std::size_t q = 0; q < nq; ++q)
            tmp.sectors[q] = base.sectors[q] + (w * minus_i) * k.sectors[q];
        return tmp;
    };

    for (std::size_t step = 0; step < options.steps; ++step) {
        const double h = options.dt;
        generator.apply(stack, k1);
        generator.apply(axpy(stack, 0.5 * h, k1), k2);
        generator.apply(axpy(stack, 0.5 * h, k2), k3);
        generator.apply(axpy(stack, h, k3), k4);
        for (std::size_t q = 0; q < nq; ++q)
            stack.sectors[q] += (minus_i * (h / 6.0)) *
                                (k1.sectors[q] + 2.0 * k2.sectors[q] + 2.0 * k3.sectors[q] + k4.sectors[q]);
        stack.time += h;

        const double n = stack.total().norm();
        if (!std::isfinite(n) || std::abs(n / n0 - 1.0) > options.norm_tolerance) {
            std::ostringstream os;
            os << "sector evolution unstable at step " << step + 1 << " (t = " << stack.time
               << "): norm of the summed wave drifted to " << n / n0;
            throw NumericalError(os.str());
        }
        if (observer)
            observer(stack);
    }
    return stack;
}

IntricacyEstimate intricacy_from_sectors(const SectorStack& stack, std::size_t grid_points, const Region& region)
{
    const int atoms = stack.atoms;
    const auto size = static_cast<std::size_t>(stack.sectors.front().size());
    const std::size_t hi = std::min(region.hi, grid_points);
    if (region.lo >= hi)
        throw ConfigError("empty intricacy region");

    std::vector<std::size_t> members;
    for (std::size_t idx = 0; idx < size; ++idx) {
        bool inside = true;
        for (int n = 0; n < atoms && inside; ++n) {
            std::size_t x = coordinate(idx, n + 1, grid_points);
            inside = x >= region.lo && x < hi;
        }
        if (inside)
            members.push_back(idx);
    }
    if (members.empty())
        throw ConfigError("empty intricacy region");

    double weighted = 0.0, total = 0.0;
    std::vector<double> weights(stack.sectors.size());
    for (std::size_t q = 0; q < stack.sectors.size(); ++q)
        weights[q] = static_cast<double>(popcount(q)) / atoms;

    double coherent_num = 0.0, psi_norm2 = 0.0;
    for (std::size_t idx : members) {
        const auto i = static_cast<Eigen::Index>(idx);
        cplx psi = 0.0, weighted_sum = 0.0;
        for (std::size_t q = 0; q < stack.sectors.size(); ++q) {
            const cplx a = stack.sectors[q][i];
            const double a2 = std::norm(a);
            weighted += weights[q] * a2;
            total += a2;
            psi += a;
            weighted_sum += weights[q] * a;
        }
        coherent_num += std::real(std::conj(psi) * weighted_sum);
        psi_norm2 += std::norm(psi);
    }

    IntricacyEstimate e;
    e.raw = weighted;
    e.diagonal = total > 0.0 ? weighted / total : 0.0;
    e.coherent = psi_norm2 > 0.0 ? coherent_num / psi_norm2 : 0.0;
    return e;
}

Eigen::VectorXcd SymmetricStack::total() const
{
    Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(components.front().size());
    for (const auto& c : components)
        sum += c;
    return sum;
}

SymmetricStack symmetrize(const SectorStack& stack)
{
    SymmetricStack out;
    out.time = stack.time;
    const auto size = stack.sectors.front().size();
    out.components.assign(static_cast<std::size_t>(stack.atoms) + 1, Eigen::VectorXcd::Zero(size));
    for (std::size_t q = 0; q < stack.sectors.size(); ++q)
        out.components[static_cast<std::size_t>(popcount(q))] += stack.sectors[q];
    return out;
}

} // namespace intricacy::sectors
