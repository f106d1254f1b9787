#pragma once
// Closed-loop simulation and benchmarking for the encrypted controller
// pipeline: plant models, zero-order-hold discretization, the two bundled
// demonstration cases, timed runs in four controller modes with a per-step
// overflow certificate, performance-error analysis, and CSV export.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "encctl/canon.hpp"
#include "encctl/controller.hpp"

namespace encctl {

using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Plant models
// ---------------------------------------------------------------------------

// Discrete-time linear plant x+ = A x + B u, y = C x.
struct PlantModel {
    RealMatrix A;      // n_p x n_p
    RealMatrix B;      // n_p x m
    RealMatrix C;      // p x n_p
    RealVector x_ini;  // n_p

    u32 states() const { return static_cast<u32>(A.rows()); }
    u32 inputs() const { return static_cast<u32>(B.cols()); }
    u32 outputs() const { return static_cast<u32>(C.rows()); }

    void validate() const {
        if (A.rows() != A.cols()) throw std::invalid_argument("PlantModel: A must be square");
        if (B.rows() != A.rows()) throw std::invalid_argument("PlantModel: B row count mismatch");
        if (C.cols() != A.cols()) throw std::invalid_argument("PlantModel: C column count mismatch");
        if (x_ini.size() != A.rows()) throw std::invalid_argument("PlantModel: initial state length mismatch");
    }
};

// Physical constants of the cart-mounted pendulum demo plant.
struct PendulumParams {
    double cart_mass = 0.5;
    double pend_mass = 0.2;
    double friction = 0.1;      // cart velocity friction coefficient
    double arm_length = 0.2;    // pivot-to-mass distance
    double inertia = 0.006;     // pendulum moment of inertia
    double gravity = 9.8;
    double sample_period = 0.05;  // seconds

    void validate() const {
        for (double v : {cart_mass, pend_mass, friction, arm_length, inertia, gravity, sample_period})
            if (!(v > 0)) throw std::invalid_argument("PendulumParams: all parameters must be positive");
    }
};

// Continuous-time linearization of the cart-pendulum around the upright
// equilibrium.  State order is fixed as (position, velocity, angle, angular
// rate); the input is the horizontal force, the output the cart position.
inline std::pair<RealMatrix, RealMatrix> pendulum_continuous(const PendulumParams& pp) {
    pp.validate();
    const double ml = pp.pend_mass * pp.arm_length;
    const double j = pp.inertia + ml * pp.arm_length;  // I + m l^2
    const double total = pp.cart_mass + pp.pend_mass;
    const double den = j * total - ml * ml;

    RealMatrix a = RealMatrix::Zero(4, 4);
    a(0, 1) = 1;
    a(1, 1) = -j * pp.friction / den;
    a(1, 2) = ml * ml * pp.gravity / den;
    a(2, 3) = 1;
    a(3, 1) = -ml * pp.friction / den;
    a(3, 2) = ml * pp.gravity * total / den;

    RealMatrix b = RealMatrix::Zero(4, 1);
    b(1, 0) = j / den;
    b(3, 0) = ml / den;
    return {a, b};
}

// Zero-order-hold discretization via the augmented matrix exponential:
// exp([[Ac, Bc], [0, 0]] * Ts) = [[A, B], [0, I]].
inline std::pair<RealMatrix, RealMatrix> discretize_zoh(const RealMatrix& a_c, const RealMatrix& b_c, double t_s) {
    if (a_c.rows() != a_c.cols()) throw std::invalid_argument("discretize_zoh: state matrix must be square");
    if (b_c.rows() != a_c.rows()) throw std::invalid_argument("discretize_zoh: input matrix row mismatch");
    if (!(t_s > 0)) throw std::invalid_argument("discretize_zoh: sampling period must be positive");
    const auto n = a_c.rows();
    const auto m = b_c.cols();
    RealMatrix aug = RealMatrix::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = a_c;
    aug.topRightCorner(n, m) = b_c;
    const RealMatrix e = (aug * t_s).exp();
    return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

inline double spectral_radius(const RealMatrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("spectral_radius: matrix must be square");
    Eigen::EigenSolver<RealMatrix> es(m, /*computeEigenvectors=*/false);
    double rho = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) rho = std::max(rho, std::abs(es.eigenvalues()[i]));
    return rho;
}

// ---------------------------------------------------------------------------
// Simulation cases
// ---------------------------------------------------------------------------

// One plant/controller pair with its scale factors and run defaults.
struct SimCase {
    std::string name;
    PlantModel plant;
    LinearController controller;
    Rational r, s1, s2;
    u32 horizon = 500;
    u32 y_decimals = 5;  // measurement quantization digits

    void validate() const {
        plant.validate();
        if (plant.inputs() != controller.outputs()) throw std::invalid_argument("SimCase: u dimension mismatch");
        if (plant.outputs() != controller.inputs()) throw std::invalid_argument("SimCase: y dimension mismatch");
    }
};

namespace detail {

inline Rational pow10_rat(u32 k) {
    BigInt v = 1;
    for (u32 i = 0; i < k; ++i) v *= 10;
    return Rational(v);
}

inline RealMatrix rat_to_real(const RatMatrix& m) {
    RealMatrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = static_cast<double>(m.at(r, c));
    return out;
}

}  // namespace detail

// Order-8 single-block controller stabilizing the discretized cart-pendulum.
inline SimCase build_case1() {
    PendulumParams pp;
    const auto [a_c, b_c] = pendulum_continuous(pp);
    const auto [a, b] = discretize_zoh(a_c, b_c, pp.sample_period);
    RealMatrix c(1, 4);
    c << 1, 0, 0, 0;
    RealVector x0(4);
    x0 << 0, 0, 0.1, 0.1;

    const u32 n = 8;
    RatMatrix f(n, n);
    const std::array<i64, 4> head = {1, 13, 4, -10};
    for (u32 row = 0; row < 4; ++row) f.at(row, 0) = head[row];
    for (u32 col = 1; col < n; ++col) f.at(col - 1, col) = 1;
    // The output-injection gains carry four informative digits each
    // (-640.5, 1715, -1489, 389.5, 27.23, -0.6047, -2.364, 0.4784).  The
    // loop they close is extremely sensitive to the trailing digits: with
    // the gains truncated at four significant digits the closed-loop
    // spectral radius lands at 1.1028, i.e. just outside the stable region.
    // The digits below the displayed precision are therefore fixed on the
    // 10^-4 grid (which the scale factor s1 = 10^-4 turns into exact
    // integers) by maximizing the closed-loop stability margin; each entry
    // still rounds to the four-digit value above, and the spectral radius
    // becomes 0.9557.
    RatMatrix g(n, 1);
    const std::array<const char*, 8> g_text = {"-640.5002", "1715.4999", "-1489.0977", "389.45",
                                               "27.225",    "-0.6047",   "-2.3644",    "0.4784"};
    for (u32 row = 0; row < n; ++row) g.at(row, 0) = parse_rational(g_text[row]);
    RatMatrix h(1, n);
    h.at(0, 0) = 10;
    LinearController ctrl{f, g, h, std::vector<Rational>(n, Rational(0))};

    SimCase sim{"case1",
                PlantModel{a, b, c, x0},
                std::move(ctrl),
                Rational(1) / detail::pow10_rat(10),
                Rational(1) / detail::pow10_rat(4),
                Rational(1),
                500,
                5};
    sim.validate();
    return sim;
}

// Order-4 two-block controller with two inputs and two outputs against a
// four-state discrete plant.
inline SimCase build_case2() {
    RealMatrix a(4, 4);
    a << -4.9535, -1.3701, 2.0157, 1.0929,  //
        5.4838, 3.0300, -3.8440, -1.9888,   //
        0.9319, 0.5722, -1.2467, 0.5866,    //
        -2.4378, -0.9447, -2.0371, -0.6299;
    RealMatrix b(4, 2);
    b << 1.3993, -0.0344,  //
        2.0586, -0.0405,   //
        0.0968, 0.4669,    //
        0.1186, 0.6871;
    RealMatrix c(2, 4);
    c << -0.5224, -0.2219, -0.3423, -0.1006,  //
        -0.9765, -0.5500, 0.8802, 0.4234;
    RealVector x0(4);
    x0 << 0, 0, 0.1, -0.1;

    RatMatrix f = RatMatrix::from_int_rows({{1, 1, 0, 0}, {2, 0, 0, 0}, {0, 0, 1, 1}, {0, 0, 2, 0}});
    RatMatrix g(4, 2);
    const std::array<std::array<const char*, 2>, 4> g_text = {{{"2.7", "3.2"}, {"-1.3", "-4.9"}, {"-0.1", "-1.0"}, {"5.0", "-0.3"}}};
    for (u32 row = 0; row < 4; ++row)
        for (u32 col = 0; col < 2; ++col) g.at(row, col) = parse_rational(g_text[row][col]);
    RatMatrix h = RatMatrix::from_int_rows({{1, 0, 0, 0}, {0, 0, 3, 0}});
    LinearController ctrl{f, g, h, std::vector<Rational>(4, Rational(0))};

    SimCase sim{"case2",
                PlantModel{a, b, c, x0},
                std::move(ctrl),
                Rational(1) / detail::pow10_rat(10),
                Rational(1) / detail::pow10_rat(4),
                Rational(1),
                500,
                5};
    sim.validate();
    return sim;
}

// Combined closed-loop state matrix [[A, B H], [G C, F]] in doubles; its
// spectral radius decides boundedness of the interconnection.
inline RealMatrix closed_loop_matrix(const SimCase& sim) {
    const RealMatrix f = detail::rat_to_real(sim.controller.F);
    const RealMatrix g = detail::rat_to_real(sim.controller.G);
    const RealMatrix h = detail::rat_to_real(sim.controller.H);
    const auto np = sim.plant.states();
    const auto n = sim.controller.order();
    RealMatrix m = RealMatrix::Zero(np + n, np + n);
    m.topLeftCorner(np, np) = sim.plant.A;
    m.topRightCorner(np, n) = sim.plant.B * h;
    m.bottomLeftCorner(n, np) = g * sim.plant.C;
    m.bottomRightCorner(n, n) = f;
    return m;
}

// Round each sample to `decimals` decimal places, ties away from zero; the
// result is exact.
inline std::vector<Rational> quantize_measurement(const RealVector& y, u32 decimals = 5) {
    const double scale = std::pow(10.0, static_cast<double>(decimals));
    const Rational den = detail::pow10_rat(decimals);
    std::vector<Rational> out;
    out.reserve(static_cast<std::size_t>(y.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) out.push_back(Rational(std::llround(y[i] * scale)) / den);
    return out;
}

// Standard encryption parameters: moduli are the first primes splitting the
// ring at degree up to 2^13 above the requested bit floors, gadget base q.
inline EncParams standard_params(u32 degree = 1u << 13, u32 q_bits = 56, u32 p_bits = 51, double sigma = 19.2) {
    const u64 q = find_ntt_prime(1ull << q_bits, 1ull << 14);
    const u64 p = find_ntt_prime(1ull << p_bits, 1ull << 14);
    return EncParams::make(degree, q, p, q, sigma);
}

// ---------------------------------------------------------------------------
// Closed-loop runs
// ---------------------------------------------------------------------------

enum class RunMode { PlainReference, RingShadow, EncryptedProposed, EncryptedBaseline };

inline const char* mode_name(RunMode m) {
    switch (m) {
        case RunMode::PlainReference: return "plain";
        case RunMode::RingShadow: return "ring";
        case RunMode::EncryptedProposed: return "proposed";
        case RunMode::EncryptedBaseline: return "baseline";
    }
    return "?";
}

inline std::optional<RunMode> parse_mode(const std::string& s) {
    if (s == "plain") return RunMode::PlainReference;
    if (s == "ring") return RunMode::RingShadow;
    if (s == "proposed") return RunMode::EncryptedProposed;
    if (s == "baseline") return RunMode::EncryptedBaseline;
    return std::nullopt;
}

struct StepRecord {
    std::vector<double> y;      // plant output fed to the controller path
    std::vector<double> u;      // control applied to the plant
    std::vector<double> u_nom;  // nominal controller's control (its own loop)
    double err = 0;             // inf-norm of u - u_nom
    double elapsed_ms = 0;      // sensor-encode -> step -> actuator-decode span
    u64 ext_products = 0;       // external products consumed by this step
    double margin = 0;          // running overflow margin (peak / (q/2))
};

struct RunRecord {
    std::string case_name;
    RunMode mode = RunMode::PlainReference;
    u64 seed = 0;
    u32 horizon = 0;
    u32 warmup = 0;
    u32 degree = 0;
    u64 q = 0;
    u64 special_p = 0;
    double sigma = 0;
    Rational r, s1, s2;
    std::vector<StepRecord> steps;
    double final_margin = 0;
    // Largest observed per-step deviation of the decrypted state/output from
    // one plaintext step applied to the previously decrypted state.
    double max_state_defect = 0;
    double max_output_defect = 0;
    PerturbationBounds bounds;  // per-step budgets for the packed pipeline
};

// Raised when the exact-arithmetic certificate sees a scaled signal reach
// q/2: from that step on, modular arithmetic would no longer match the
// intended integer recursion.
class OverflowError : public std::runtime_error {
public:
    OverflowError(double margin, u32 step)
        : std::runtime_error("overflow margin reached " + std::to_string(margin) + " at step " +
                             std::to_string(step) + "; scaled signals no longer fit below q/2"),
          margin_(margin),
          step_(step) {}

    double margin() const { return margin_; }
    u32 step() const { return step_; }

private:
    double margin_;
    u32 step_;
};

struct RunOptions {
    u32 horizon = 0;  // 0: use the case default
    u32 warmup = 10;  // leading steps excluded from timing statistics
    u64 seed = 1;
    const SecretKey* key = nullptr;  // externally supplied key; generated from seed when null
};

namespace detail {

// Exact candidate for the next scaled controller state over the integers
// (no modulus).  Inputs are genuine centered values, so any entry at or
// beyond q/2 proves the modular loop would wrap at this step.
struct StepCertificate {
    i128 peak = 0;

    void absorb(i128 v) { peak = std::max(peak, v < 0 ? -v : v); }

    double margin(u64 q) const { return static_cast<double>(peak) / (static_cast<double>(q) / 2.0); }

    void check(u64 q, u32 step) const {
        if (static_cast<u128>(peak < 0 ? -peak : peak) * 2 >= static_cast<u128>(q))
            throw OverflowError(margin(q), step);
    }
};

inline std::vector<i128> int_matvec(const std::vector<std::vector<i64>>& m, std::span<const i64> v) {
    std::vector<i128> out(m.size(), 0);
    for (std::size_t r = 0; r < m.size(); ++r)
        for (std::size_t c = 0; c < m[r].size(); ++c) out[r] += static_cast<i128>(m[r][c]) * v[c];
    return out;
}

inline double ms_between(std::chrono::steady_clock::time_point a, std::chrono::steady_clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}

}  // namespace detail

// Runs the plant against the selected controller implementation.  The
// controller state matrix must already be in padded block-companion form
// (run the canonical-form transform first otherwise).  Alongside the actual
// loop, a nominal rational controller drives its own plant copy to provide
// the reference input series, and an exact integer certificate re-seeded
// from the decrypted state each step proves that no scaled signal ever
// reaches q/2 (throwing OverflowError otherwise).
inline RunRecord run_closed_loop(const SimCase& sim, RunMode mode, const EncParams& pr, const RunOptions& opt = {}) {
    sim.validate();
    const RcfResult rcf = rcf_transform(sim.controller.F);
    if (!(rcf.F_bar == sim.controller.F))
        throw std::invalid_argument("run_closed_loop: controller state matrix must be in block-companion form");
    const u32 n = sim.controller.order();
    if ((n & (n - 1)) != 0)
        throw std::invalid_argument("run_closed_loop: controller order must be a power of two (pad first)");

    const ScaledController sc =
        scale_and_integerize(sim.controller, RatMatrix::identity(n), sim.r, sim.s1, sim.s2, /*strict=*/true);
    const u32 p = sc.inputs();
    const u32 m = sc.outputs();
    const u64 q = pr.q();
    const Rational back = sc.reconstruction();  // r * s1 * s2

    RunRecord rec;
    rec.case_name = sim.name;
    rec.mode = mode;
    rec.seed = opt.seed;
    rec.warmup = opt.warmup;
    rec.degree = pr.degree();
    rec.q = q;
    rec.special_p = pr.special_p();
    rec.sigma = pr.sigma;
    rec.r = sim.r;
    rec.s1 = sim.s1;
    rec.s2 = sim.s2;

    // --- mode-specific controller backends ---
    const PackingLayout layout(pr.degree(), n, p, m);
    const PackedController pc = pack_controller(pr.ctx_q, sc, rcf.kappa, rcf.r);
    rec.bounds = perturbation_bounds(pc, pr);

    const SecretKey sk = opt.key != nullptr ? *opt.key : keygen(pr, opt.seed);
    CounterRng rng = CounterRng(opt.seed).fork(0x73696d62656e6368ull);

    std::optional<EncControllerState> enc;
    std::optional<BaselineEncState> base;
    std::optional<RingElement> z_ring;
    std::vector<Rational> x_plain = sim.controller.x_ini;  // PlainReference state
    if (mode == RunMode::EncryptedProposed) enc.emplace(encrypt_controller(pc, sk, pr, rng));
    if (mode == RunMode::EncryptedBaseline) base.emplace(baseline_encrypt(baseline_pack(pr.ctx_q, sc), sk, pr, rng));
    if (mode == RunMode::RingShadow) z_ring = pack_vector(pr.ctx_q, layout, sc.z_ini);

    // --- plant, nominal co-loop, and certificate state ---
    RealVector xp = sim.plant.x_ini;
    RealVector xp_nom = sim.plant.x_ini;
    std::vector<Rational> x_nom = sim.controller.x_ini;
    std::vector<i64> z_cert = sc.z_ini;  // genuine centered scaled state at step entry
    detail::StepCertificate cert;
    for (i64 v : z_cert) cert.absorb(v);
    cert.check(q, 0);

    const u32 horizon = opt.horizon ? opt.horizon : sim.horizon;
    rec.horizon = horizon;
    rec.steps.reserve(horizon);

    u64 ops_before = 0;
    const auto op_count = [&]() -> u64 {
        if (enc) return enc->ops->value();
        if (base) return base->ops->value();
        return 0;
    };

    for (u32 t = 0; t < horizon; ++t) {
        const RealVector y_real = sim.plant.C * xp;
        const std::vector<Rational> y_q = quantize_measurement(y_real, sim.y_decimals);
        std::vector<i64> y_bar(p);
        for (u32 j = 0; j < p; ++j) y_bar[j] = rat_to_i64(y_q[j] / sc.r);

        // ---- timed span: encode, step, decode ----
        ops_before = op_count();
        std::vector<Rational> u(m, Rational(0));
        std::optional<Ciphertext> u_ct;
        const auto t0 = std::chrono::steady_clock::now();
        switch (mode) {
            case RunMode::PlainReference: {
                const std::vector<Rational> hx = sim.controller.H.matvec(x_plain);
                for (u32 i = 0; i < m; ++i) u[i] = hx[i];
                const std::vector<Rational> fx = sim.controller.F.matvec(x_plain);
                const std::vector<Rational> gy = sim.controller.G.matvec(y_q);
                for (u32 i = 0; i < n; ++i) x_plain[i] = fx[i] + gy[i];
                break;
            }
            case RunMode::RingShadow: {
                const RingElement y_packed = pack_input(pr.ctx_q, layout, y_bar);
                auto [z_next, u_ring] = plain_ring_step(*z_ring, y_packed, pc);
                *z_ring = std::move(z_next);
                const std::vector<i64> slots = unpack_output(u_ring, layout);
                for (u32 i = 0; i < m; ++i) u[i] = back * Rational(slots[i]);
                break;
            }
            case RunMode::EncryptedProposed: {
                const Ciphertext y_enc = sensor_encode(y_q, sim.r, layout, sk, pr, rng);
                u_ct = controller_step_encrypted(*enc, y_enc);
                u = actuator_decode(*u_ct, sk, layout, sim.r, sim.s1, sim.s2);
                break;
            }
            case RunMode::EncryptedBaseline: {
                const Ciphertext y_enc = baseline_sensor_encode(y_q, sim.r, *base, sk, pr, rng);
                u_ct = baseline_step(*base, y_enc);
                u = baseline_decode(*u_ct, sk, m, sim.r, sim.s1, sim.s2);
                break;
            }
        }
        const auto t1 = std::chrono::steady_clock::now();

        // ---- nominal co-loop (own plant, untimed) ----
        const std::vector<Rational> y_nom_q = quantize_measurement(sim.plant.C * xp_nom, sim.y_decimals);
        const std::vector<Rational> u_nom = sim.controller.H.matvec(x_nom);
        {
            const std::vector<Rational> fx = sim.controller.F.matvec(x_nom);
            const std::vector<Rational> gy = sim.controller.G.matvec(y_nom_q);
            for (u32 i = 0; i < n; ++i) x_nom[i] = fx[i] + gy[i];
        }
        RealVector u_nom_d(m);
        for (u32 i = 0; i < m; ++i) u_nom_d[i] = static_cast<double>(u_nom[i]);
        xp_nom = sim.plant.A * xp_nom + sim.plant.B * u_nom_d;

        // ---- overflow certificate on this step's exact signals ----
        const std::vector<i128> u_exact = detail::int_matvec(sc.H, z_cert);
        std::vector<i128> z_exact = detail::int_matvec(sc.F, z_cert);
        {
            const std::vector<i128> gy = detail::int_matvec(sc.G, y_bar);
            for (u32 i = 0; i < n; ++i) z_exact[i] += gy[i];
        }
        for (i64 v : y_bar) cert.absorb(v);
        for (i128 v : u_exact) cert.absorb(v);
        for (i128 v : z_exact) cert.absorb(v);
        cert.check(q, t);

        // ---- re-seed the certificate and record per-step defects ----
        const std::vector<i64> prev_slots = z_cert;
        if (mode == RunMode::PlainReference) {
            for (u32 i = 0; i < n; ++i) z_cert[i] = static_cast<i64>(z_exact[i]);
        } else if (mode == RunMode::RingShadow) {
            z_cert = unpack_state(*z_ring, layout);
        } else {
            const RingElement state = decrypt(enc ? enc->z_ct : base->z_ct, sk);
            auto limb = state.limb(0);
            const u32 gap = pr.degree() / n;
            for (u32 i = 0; i < n; ++i) z_cert[i] = limb[static_cast<std::size_t>(i) * gap];
        }
        if (mode != RunMode::PlainReference) {
            const std::vector<i64> expect_z = plain_zq_step(prev_slots, y_bar, sc, q);
            for (u32 i = 0; i < n; ++i) {
                const i64 d = reduce_center_i128(static_cast<i128>(z_cert[i]) - expect_z[i], q);
                rec.max_state_defect = std::max(rec.max_state_defect, std::abs(static_cast<double>(d)));
            }
            const std::vector<i64> expect_u = plain_zq_output(prev_slots, sc, q);
            std::vector<i64> got_u(m);
            if (mode == RunMode::RingShadow) {
                for (u32 i = 0; i < m; ++i) got_u[i] = rat_to_i64(u[i] / back);
            } else {
                const RingElement raw = decrypt(*u_ct, sk);
                auto limb = raw.limb(0);
                const u32 gap = enc ? layout.output_gap() : pr.degree() / m;
                for (u32 i = 0; i < m; ++i) got_u[i] = limb[static_cast<std::size_t>(i) * gap];
            }
            for (u32 i = 0; i < m; ++i) {
                const i64 d = reduce_center_i128(static_cast<i128>(got_u[i]) - expect_u[i], q);
                rec.max_output_defect = std::max(rec.max_output_defect, std::abs(static_cast<double>(d)));
            }
        }

        // ---- drive the plant and record the step ----
        RealVector u_d(m);
        for (u32 i = 0; i < m; ++i) u_d[i] = static_cast<double>(u[i]);
        xp = sim.plant.A * xp + sim.plant.B * u_d;

        StepRecord step;
        step.y.assign(y_real.data(), y_real.data() + y_real.size());
        step.u.assign(u_d.data(), u_d.data() + u_d.size());
        step.u_nom.assign(u_nom_d.data(), u_nom_d.data() + u_nom_d.size());
        Rational emax(0);
        for (u32 i = 0; i < m; ++i) {
            const Rational gap = abs(u[i] - u_nom[i]);
            if (gap > emax) emax = gap;
        }
        step.err = static_cast<double>(emax);
        step.elapsed_ms = detail::ms_between(t0, t1);
        step.ext_products = op_count() - ops_before;
        step.margin = cert.margin(q);
        rec.steps.push_back(std::move(step));
    }
    rec.final_margin = cert.margin(q);
    return rec;
}

// ---------------------------------------------------------------------------
// Analysis
// ---------------------------------------------------------------------------

// Per-step inf-norm gap between the control inputs of two runs.
inline std::vector<double> performance_error_series(const RunRecord& run, const RunRecord& reference) {
    if (run.steps.size() != reference.steps.size())
        throw std::invalid_argument("performance_error_series: horizon mismatch");
    std::vector<double> out;
    out.reserve(run.steps.size());
    for (std::size_t t = 0; t < run.steps.size(); ++t) {
        const auto& a = run.steps[t].u;
        const auto& b = reference.steps[t].u;
        if (a.size() != b.size()) throw std::invalid_argument("performance_error_series: width mismatch");
        double e = 0;
        for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
        out.push_back(e);
    }
    return out;
}

// True when no later window's peak exceeds twice the peak of the first two
// windows: a bounded, trend-free series passes; steady growth fails fast.
inline bool bounded_no_growth(const std::vector<double>& series, std::size_t window) {
    if (window == 0) throw std::invalid_argument("bounded_no_growth: window must be positive");
    if (series.size() < 2 * window) return true;
    std::vector<double> peaks;
    for (std::size_t start = 0; start + window <= series.size(); start += window) {
        double m = 0;
        for (std::size_t i = start; i < start + window; ++i) m = std::max(m, series[i]);
        peaks.push_back(m);
    }
    const double early = std::max(peaks[0], peaks[1]);
    for (std::size_t i = 2; i < peaks.size(); ++i)
        if (peaks[i] > 2 * early + 1e-12) return false;
    return true;
}

struct TimingStats {
    double max_ms = 0;
    double mean_ms = 0;
    double std_ms = 0;
    u64 samples = 0;
    u64 ep_min = 0;  // per-step external products over the measured span
    u64 ep_max = 0;
};

inline TimingStats timing_stats(const RunRecord& run) {
    TimingStats s;
    const std::size_t skip = run.steps.size() > run.warmup ? run.warmup : 0;
    if (run.steps.size() <= skip) return s;
    s.ep_min = std::numeric_limits<u64>::max();
    double sum = 0;
    for (std::size_t t = skip; t < run.steps.size(); ++t) {
        const auto& st = run.steps[t];
        s.max_ms = std::max(s.max_ms, st.elapsed_ms);
        sum += st.elapsed_ms;
        s.ep_min = std::min(s.ep_min, st.ext_products);
        s.ep_max = std::max(s.ep_max, st.ext_products);
        ++s.samples;
    }
    s.mean_ms = sum / static_cast<double>(s.samples);
    double var = 0;
    for (std::size_t t = skip; t < run.steps.size(); ++t) {
        const double d = run.steps[t].elapsed_ms - s.mean_ms;
        var += d * d;
    }
    s.std_ms = std::sqrt(var / static_cast<double>(s.samples));
    return s;
}

// Fixed-width comparison table over several completed runs.
inline std::string timing_report(const std::vector<RunRecord>& runs) {
    std::ostringstream os;
    os << "case      method     max(ms)   mean(ms)  std(ms)   ep/step\n";
    for (const auto& run : runs) {
        const TimingStats s = timing_stats(run);
        os << std::left << std::setw(10) << run.case_name << std::setw(11) << mode_name(run.mode);
        os << std::right << std::fixed << std::setprecision(3) << std::setw(9) << s.max_ms << "  " << std::setw(8)
           << s.mean_ms << "  " << std::setw(8) << s.std_ms << "  ";
        if (s.ep_min == s.ep_max)
            os << s.ep_min;
        else
            os << s.ep_min << ".." << s.ep_max;
        os << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// CSV export
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace detail

// Writes `# key=value` manifest lines followed by a header row and one data
// row per step.
inline void export_csv(const RunRecord& run, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_csv: cannot open " + path);
    out << "# case=" << run.case_name << "\n";
    out << "# mode=" << mode_name(run.mode) << "\n";
    out << "# seed=" << run.seed << "\n";
    out << "# degree=" << run.degree << "\n";
    out << "# q=" << run.q << "\n";
    out << "# special_p=" << run.special_p << "\n";
    out << "# sigma=" << detail::fmt_double(run.sigma) << "\n";
    out << "# r=" << run.r << "\n";
    out << "# s1=" << run.s1 << "\n";
    out << "# s2=" << run.s2 << "\n";
    out << "# horizon=" << run.horizon << "\n";
    out << "# warmup=" << run.warmup << "\n";
    const std::size_t p = run.steps.empty() ? 0 : run.steps.front().y.size();
    const std::size_t m = run.steps.empty() ? 0 : run.steps.front().u.size();
    out << "t";
    for (std::size_t i = 0; i < p; ++i) out << ",y" << i;
    for (std::size_t i = 0; i < m; ++i) out << ",u" << i;
    for (std::size_t i = 0; i < m; ++i) out << ",unom" << i;
    out << ",err,elapsed_ms,ext_prod_count,margin\n";
    for (std::size_t t = 0; t < run.steps.size(); ++t) {
        const auto& st = run.steps[t];
        out << t;
        for (double v : st.y) out << "," << detail::fmt_double(v);
        for (double v : st.u) out << "," << detail::fmt_double(v);
        for (double v : st.u_nom) out << "," << detail::fmt_double(v);
        out << "," << detail::fmt_double(st.err) << "," << detail::fmt_double(st.elapsed_ms) << ","
            << st.ext_products << "," << detail::fmt_double(st.margin) << "\n";
    }
    if (!out) throw std::runtime_error("export_csv: write failed for " + path);
}

// Key-value run summary as a standalone text file.
inline void write_manifest(const RunRecord& run, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_manifest: cannot open " + path);
    const TimingStats s = timing_stats(run);
    out << "case=" << run.case_name << "\n"
        << "mode=" << mode_name(run.mode) << "\n"
        << "seed=" << run.seed << "\n"
        << "degree=" << run.degree << "\n"
        << "q=" << run.q << "\n"
        << "special_p=" << run.special_p << "\n"
        << "sigma=" << detail::fmt_double(run.sigma) << "\n"
        << "r=" << run.r << "\n"
        << "s1=" << run.s1 << "\n"
        << "s2=" << run.s2 << "\n"
        << "horizon=" << run.horizon << "\n"
        << "warmup=" << run.warmup << "\n"
        << "final_margin=" << detail::fmt_double(run.final_margin) << "\n"
        << "max_state_defect=" << detail::fmt_double(run.max_state_defect) << "\n"
        << "max_output_defect=" << detail::fmt_double(run.max_output_defect) << "\n"
        << "mean_ms=" << detail::fmt_double(s.mean_ms) << "\n"
        << "max_ms=" << detail::fmt_double(s.max_ms) << "\n"
        << "std_ms=" << detail::fmt_double(s.std_ms) << "\n";
    if (!out) throw std::runtime_error("write_manifest: write failed for " + path);
}

// Reads a file produced by export_csv: manifest keys and the step series
// (per-step defect maxima and bounds are not part of the CSV contract).
inline RunRecord load_run_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_run_csv: cannot open " + path);
    RunRecord run;
    std::string line;
    std::size_t p = 0, m = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            std::string key = line.substr(1, eq - 1);
            while (!key.empty() && key.front() == ' ') key.erase(key.begin());
            const std::string val = line.substr(eq + 1);
            if (key == "case") run.case_name = val;
            if (key == "mode") {
                const auto mm = parse_mode(val);
                if (!mm) throw std::runtime_error("load_run_csv: unknown mode " + val);
                run.mode = *mm;
            }
            if (key == "seed") run.seed = std::stoull(val);
            if (key == "degree") run.degree = static_cast<u32>(std::stoul(val));
            if (key == "q") run.q = std::stoull(val);
            if (key == "special_p") run.special_p = std::stoull(val);
            if (key == "sigma") run.sigma = std::stod(val);
            if (key == "r") run.r = parse_rational(val);
            if (key == "s1") run.s1 = parse_rational(val);
            if (key == "s2") run.s2 = parse_rational(val);
            if (key == "horizon") run.horizon = static_cast<u32>(std::stoul(val));
            if (key == "warmup") run.warmup = static_cast<u32>(std::stoul(val));
            continue;
        }
        std::vector<std::string> cells;
        {
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) cells.push_back(cell);
        }
        if (!header_seen) {
            for (const auto& c : cells) {
                if (c.rfind("unom", 0) == 0) continue;
                if (c.size() > 1 && c[0] == 'y' && std::isdigit(static_cast<unsigned char>(c[1]))) ++p;
                if (c.size() > 1 && c[0] == 'u' && std::isdigit(static_cast<unsigned char>(c[1]))) ++m;
            }
            header_seen = true;
            continue;
        }
        if (cells.size() != 1 + p + 2 * m + 4) throw std::runtime_error("load_run_csv: bad row width");
        StepRecord st;
        std::size_t k = 1;
        for (std::size_t i = 0; i < p; ++i) st.y.push_back(std::stod(cells[k++]));
        for (std::size_t i = 0; i < m; ++i) st.u.push_back(std::stod(cells[k++]));
        for (std::size_t i = 0; i < m; ++i) st.u_nom.push_back(std::stod(cells[k++]));
        st.err = std::stod(cells[k++]);
        st.elapsed_ms = std::stod(cells[k++]);
        st.ext_products = std::stoull(cells[k++]);
        st.margin = std::stod(cells[k++]);
        run.steps.push_back(std::move(st));
    }
    return run;
}

}  // namespace encctl
