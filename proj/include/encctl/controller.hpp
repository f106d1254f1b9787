#pragma once
// Controller pipeline: scaling a rational state-space controller to integer
// matrices, plaintext reference recursions over Z_q and over the packed ring,
// encryption of the packed parameters, the online encrypted step with its
// external-product accounting, sensor/actuator transcoding, overflow-margin
// monitoring, per-step noise-perturbation bounds, and a column-packed
// comparison path that unpacks every state slot homomorphically.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <encctl/canon.hpp>
#include <encctl/packing.hpp>
#include <encctl/trace.hpp>

namespace encctl {

namespace detail {

// Nearest integer, ties away from zero.  Exact over the rationals.
inline BigInt round_half_away(const Rational& x) {
    const BigInt num = rat_num(x);
    const BigInt den = rat_den(x);  // canonical: den > 0
    const BigInt sign = num < 0 ? BigInt(-1) : BigInt(1);
    return (2 * num + sign * den) / (2 * den);  // cpp_int division truncates toward zero
}

inline double poly_inf_norm(const RingElement& a) {
    double best = 0;
    for (u32 j = 0; j < a.degree(); ++j) {
        const double v = std::abs(static_cast<double>(a.coeff_crt(j)));
        if (v > best) best = v;
    }
    return best;
}

inline void require_positive_integer_reciprocal(const Rational& s, const char* name) {
    if (s == 0) throw std::invalid_argument(std::string("scale_and_integerize: zero scale factor ") + name);
    const Rational inv = Rational(1) / s;
    if (!rat_is_integer(inv) || inv < 0)
        throw std::invalid_argument(std::string("scale_and_integerize: reciprocal of ") + name +
                                    " must be a positive integer");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

// A discrete-time linear controller x+ = Fx + Gy, u = Hx with integer F.
struct LinearController {
    RatMatrix F;                   // n x n, integer entries
    RatMatrix G;                   // n x p
    RatMatrix H;                   // m x n
    std::vector<Rational> x_ini;   // n

    u32 order() const { return F.rows(); }
    u32 inputs() const { return G.cols(); }
    u32 outputs() const { return H.rows(); }
};

// Entrywise rounding residuals left by scale_and_integerize (value - rounded).
struct ScaleResidual {
    RatMatrix F, G, H;
    std::vector<Rational> z_ini;
    Rational max_abs{0};

    bool exact() const { return max_abs == 0; }
};

// Integerized controller in transformed coordinates:
//   F = T F_orig T^-1, G = T G_orig / s1, H = H_orig T^-1 / s2,
//   z_ini = T x_ini / (r s1), all rounded to nearest integer.
struct ScaledController {
    std::vector<std::vector<i64>> F;  // n x n
    std::vector<std::vector<i64>> G;  // n x p
    std::vector<std::vector<i64>> H;  // m x n
    std::vector<i64> z_ini;           // n
    Rational r, s1, s2;
    ScaleResidual residual;

    u32 order() const { return static_cast<u32>(F.size()); }
    u32 inputs() const { return F.empty() || G.empty() ? 0 : static_cast<u32>(G.front().size()); }
    u32 outputs() const { return static_cast<u32>(H.size()); }
    Rational reconstruction() const { return r * s1 * s2; }
};

// Ring-packed controller: the nontrivial columns of F - S as kappa
// polynomials, plus the packed input map, output map, and initial state.
struct PackedController {
    PackingLayout layout;
    std::vector<RingElement> F_tilde;  // kappa packed designated columns
    std::vector<u32> r_idx;            // their column offsets (block starts)
    RingElement G_tilde, H_tilde, z_ini_tilde;
    Rational r, s1, s2;

    u32 kappa() const { return static_cast<u32>(F_tilde.size()); }
};

// Encrypted controller instance.  Parameter ciphertexts are immutable after
// construction; z_ct is the single mutable recursion state.
struct EncControllerState {
    PackingLayout layout;
    std::vector<GadgetCiphertext> F_enc;
    GadgetCiphertext G_enc, H_enc;
    std::vector<u32> r_idx;
    AutoKeySet ak;
    Ciphertext z_ct;
    std::shared_ptr<OpCounter> ops;

    u64 gadget_count() const { return F_enc.size() + 2; }
    u64 key_count() const { return ak.size(); }
};

// Per-step message-level perturbation bounds.
struct PerturbationBounds {
    double z_bound = 0;          // state defect on the packing slots, Z_q units
    double u_message_bound = 0;  // output defect before actuator scaling, Z_q units
    double u_bound = 0;          // output defect in actuator units
    double ini_bound = 0;        // initial-state defect, Z_q units
};

// Overflow monitor result: peak normalized magnitude against q/2.
struct MarginReport {
    double margin = 0;       // peak / (q/2)
    bool overflow = false;   // exact comparison peak >= q/2
    Rational peak{0};        // max over time of the two normalized sup-norms
};

// ---------------------------------------------------------------------------
// Scaling and plaintext recursions
// ---------------------------------------------------------------------------

inline ScaledController scale_and_integerize(const LinearController& ctrl, const RatMatrix& T, const Rational& r,
                                             const Rational& s1, const Rational& s2, bool strict = false) {
    detail::require_positive_integer_reciprocal(r, "r");
    detail::require_positive_integer_reciprocal(s1, "s1");
    detail::require_positive_integer_reciprocal(s2, "s2");
    const u32 n = ctrl.order(), p = ctrl.inputs(), m = ctrl.outputs();
    if (T.rows() != n || T.cols() != n) throw std::invalid_argument("scale_and_integerize: T shape mismatch");
    if (ctrl.x_ini.size() != n) throw std::invalid_argument("scale_and_integerize: x_ini length mismatch");
    const RatMatrix T_inv = T.inverse();

    ScaledController sc;
    sc.r = r;
    sc.s1 = s1;
    sc.s2 = s2;
    sc.residual.F = RatMatrix(n, n);
    sc.residual.G = RatMatrix(n, p);
    sc.residual.H = RatMatrix(m, n);
    sc.residual.z_ini.assign(n, Rational(0));

    const auto round_into = [&sc](const Rational& exact, Rational& res_slot) {
        const BigInt rounded = detail::round_half_away(exact);
        res_slot = exact - Rational(rounded);
        const Rational mag = res_slot < 0 ? -res_slot : res_slot;
        if (mag > sc.residual.max_abs) sc.residual.max_abs = mag;
        return rat_to_i64(Rational(rounded));
    };

    const RatMatrix F_exact = T * ctrl.F * T_inv;
    const RatMatrix G_exact = (T * ctrl.G).scaled(Rational(1) / s1);
    const RatMatrix H_exact = (ctrl.H * T_inv).scaled(Rational(1) / s2);
    const Rational z_scale = Rational(1) / (r * s1);

    sc.F.assign(n, std::vector<i64>(n, 0));
    sc.G.assign(n, std::vector<i64>(p, 0));
    sc.H.assign(m, std::vector<i64>(n, 0));
    sc.z_ini.assign(n, 0);
    for (u32 i = 0; i < n; ++i)
        for (u32 j = 0; j < n; ++j) sc.F[i][j] = round_into(F_exact.at(i, j), sc.residual.F.at(i, j));
    for (u32 i = 0; i < n; ++i)
        for (u32 j = 0; j < p; ++j) sc.G[i][j] = round_into(G_exact.at(i, j), sc.residual.G.at(i, j));
    for (u32 i = 0; i < m; ++i)
        for (u32 j = 0; j < n; ++j) sc.H[i][j] = round_into(H_exact.at(i, j), sc.residual.H.at(i, j));
    for (u32 i = 0; i < n; ++i) {
        Rational z_exact = Rational(0);
        for (u32 j = 0; j < n; ++j) z_exact = z_exact + T.at(i, j) * ctrl.x_ini[j];
        sc.z_ini[i] = round_into(z_exact * z_scale, sc.residual.z_ini[i]);
    }
    if (strict && !sc.residual.exact())
        throw std::domain_error("scale_and_integerize: nonzero rounding residual in strict mode");
    return sc;
}

// One exact step of the integer recursion over Z_q (centered representatives).
inline std::vector<i64> plain_zq_step(std::span<const i64> z, std::span<const i64> y_bar,
                                      const ScaledController& sc, u64 q) {
    const u32 n = sc.order(), p = sc.inputs();
    if (z.size() != n || y_bar.size() != p) throw std::invalid_argument("plain_zq_step: dimension mismatch");
    std::vector<i64> out(n, 0);
    for (u32 i = 0; i < n; ++i) {
        i128 acc = 0;
        for (u32 j = 0; j < n; ++j) acc += static_cast<i128>(sc.F[i][j]) * z[j] % static_cast<i64>(q);
        for (u32 j = 0; j < p; ++j) acc += static_cast<i128>(sc.G[i][j]) * y_bar[j] % static_cast<i64>(q);
        out[i] = reduce_center_i128(acc, q);
    }
    return out;
}

// The matching output map over Z_q.
inline std::vector<i64> plain_zq_output(std::span<const i64> z, const ScaledController& sc, u64 q) {
    const u32 n = sc.order(), m = sc.outputs();
    if (z.size() != n) throw std::invalid_argument("plain_zq_output: dimension mismatch");
    std::vector<i64> out(m, 0);
    for (u32 i = 0; i < m; ++i) {
        i128 acc = 0;
        for (u32 j = 0; j < n; ++j) acc += static_cast<i128>(sc.H[i][j]) * z[j] % static_cast<i64>(q);
        out[i] = reduce_center_i128(acc, q);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ring packing of the controller
// ---------------------------------------------------------------------------

// Packs a scaled controller whose state matrix is in rational canonical form.
// kappa and the designated column offsets come from the verified form; the
// packed columns are those of F - S where S is the order-n shift matrix.
inline PackedController pack_controller(const RingCtxPtr& ctx, const ScaledController& sc, u32 kappa,
                                        std::span<const u32> r_offsets) {
    const u32 n = sc.order(), p = sc.inputs(), m = sc.outputs();
    if (kappa == 0 || kappa != r_offsets.size())
        throw std::invalid_argument("pack_controller: offset list must have kappa entries");
    for (u32 j = 0; j < kappa; ++j) {
        if (r_offsets[j] >= n || (j > 0 && r_offsets[j] <= r_offsets[j - 1]))
            throw std::invalid_argument("pack_controller: offsets must be strictly increasing and below n");
    }
    if (r_offsets[0] != 0) throw std::invalid_argument("pack_controller: first block offset must be zero");

    PackedController pc{PackingLayout(ctx->degree(), n, p, m), {}, {}, RingElement::zero(ctx),
                        RingElement::zero(ctx), RingElement::zero(ctx), sc.r, sc.s1, sc.s2};
    pc.r_idx.assign(r_offsets.begin(), r_offsets.end());
    for (u32 j = 0; j < kappa; ++j) {
        const u32 c = r_offsets[j];
        std::vector<i64> col(n, 0);
        for (u32 k = 0; k < n; ++k) col[k] = sc.F[k][c];
        if (c == 0)
            col[n - 1] += 1;  // shift matrix column 0 is -e_{n-1}
        else
            col[c - 1] -= 1;  // shift matrix column c is e_{c-1}
        pc.F_tilde.push_back(pack_vector(ctx, pc.layout, col));
    }
    pc.G_tilde = pack_input_matrix(ctx, pc.layout, sc.G);
    pc.H_tilde = pack_output_matrix(ctx, pc.layout, sc.H);
    pc.z_ini_tilde = pack_vector(ctx, pc.layout, sc.z_ini);
    return pc;
}

// One exact step of the packed recursion over R_q.  Returns the next state
// and the output polynomial computed from the current state.
inline std::pair<RingElement, RingElement> plain_ring_step(const RingElement& z, const RingElement& y,
                                                           const PackedController& pc) {
    const auto& lay = pc.layout;
    const i64 gap = static_cast<i64>(lay.state_gap());
    RingElement u = ring_mul(pc.H_tilde, slot_project(z, lay.n));
    RingElement z_next = monomial_mul(z, -gap);
    for (u32 i = 0; i < pc.kappa(); ++i) {
        const RingElement slot = slot_project(monomial_mul(z, -static_cast<i64>(pc.r_idx[i]) * gap), 1);
        z_next = z_next + ring_mul(pc.F_tilde[i], slot);
    }
    z_next = z_next + ring_mul(pc.G_tilde, y);
    return {z_next, u};
}

// ---------------------------------------------------------------------------
// Encryption and the online step
// ---------------------------------------------------------------------------

inline EncControllerState encrypt_controller(const PackedController& pc, const SecretKey& sk, const EncParams& pr,
                                             CounterRng& rng) {
    if (pr.degree() != pc.layout.N) throw std::invalid_argument("encrypt_controller: ring degree mismatch");
    EncControllerState st{pc.layout,
                          {},
                          encrypt_gadget(pc.G_tilde, sk, pr, rng),
                          encrypt_gadget(pc.H_tilde, sk, pr, rng),
                          pc.r_idx,
                          {},
                          Ciphertext::zero(pr.ctx_q),
                          std::make_shared<OpCounter>()};
    for (const auto& f : pc.F_tilde) st.F_enc.push_back(encrypt_gadget(f, sk, pr, rng));
    for (u64 theta : trace_key_exponents(pc.layout.n, pc.layout.tau))
        st.ak.emplace(theta, gen_automorphism_key(theta, sk, pr, rng));
    st.z_ct = encrypt(pc.z_ini_tilde, sk, pr, rng);
    return st;
}

// External products consumed by one encrypted step.
inline u64 proposed_step_cost(u32 kappa, u32 n, u32 tau) {
    const u64 log_n = detail::log2_exact_u32(n);
    const u64 log_tau = detail::log2_exact_u32(tau);
    return 2 + static_cast<u64>(kappa) * (1 + log_n) + log_tau;
}

// One encrypted controller step: emits the output for the current state, then
// advances the state.  The slot shift X^{-N/n} is applied as a bare monomial.
inline Ciphertext controller_step_encrypted(EncControllerState& st, const Ciphertext& y_ct) {
    const auto& lay = st.layout;
    const i64 gap = static_cast<i64>(lay.state_gap());
    OpCounter& ops = *st.ops;

    Ciphertext z_for_out = st.z_ct;
    if (lay.tau > 1) z_for_out = homomorphic_trace(z_for_out, lay.n, lay.n * lay.tau, st.ak, ops);
    const Ciphertext u_ct = external_product(st.H_enc, z_for_out, ops);

    Ciphertext z_next = ct_monomial_mul(st.z_ct, -gap);
    for (size_t i = 0; i < st.F_enc.size(); ++i) {
        Ciphertext slot = ct_monomial_mul(st.z_ct, -static_cast<i64>(st.r_idx[i]) * gap);
        if (lay.n > 1) slot = homomorphic_trace(slot, 1, lay.n, st.ak, ops);
        z_next = ct_add(z_next, external_product(st.F_enc[i], slot, ops));
    }
    z_next = ct_add(z_next, external_product(st.G_enc, y_ct, ops));
    st.z_ct = z_next;
    return u_ct;
}

// Scales a measurement by 1/r, packs it as coefficients 0..p-1, and encrypts
// it fresh.  Rejects measurements that do not scale to integers.
inline Ciphertext sensor_encode(std::span<const Rational> y, const Rational& r, const PackingLayout& layout,
                                const SecretKey& sk, const EncParams& pr, CounterRng& rng) {
    if (y.size() != layout.p) throw std::invalid_argument("sensor_encode: input dimension mismatch");
    std::vector<i64> vals(layout.p, 0);
    for (u32 j = 0; j < layout.p; ++j) {
        const Rational scaled = y[j] / r;
        if (!rat_is_integer(scaled)) throw std::domain_error("sensor_encode: sample not integral after scaling");
        vals[j] = rat_to_i64(scaled);
    }
    return encrypt(pack_input(pr.ctx_q, layout, vals), sk, pr, rng);
}

// Decrypts, unpacks the output slots, and rescales to actuator units.
inline std::vector<Rational> actuator_decode(const Ciphertext& u_ct, const SecretKey& sk,
                                             const PackingLayout& layout, const Rational& r, const Rational& s1,
                                             const Rational& s2) {
    const std::vector<i64> vals = unpack_output(decrypt(u_ct, sk), layout);
    const Rational scale = r * s1 * s2;
    std::vector<Rational> out;
    out.reserve(vals.size());
    for (i64 v : vals) out.push_back(scale * Rational(v));
    return out;
}

// ---------------------------------------------------------------------------
// Overflow monitoring and perturbation bounds
// ---------------------------------------------------------------------------

// Peak of the normalized exact trajectories against q/2: entries of the
// transformed state trajectory are divided by r*s1, entries of the output
// trajectory by r*s1*s2, and the largest magnitude is compared to q/2.
inline MarginReport overflow_margin(const std::vector<std::vector<Rational>>& state_traj,
                                    const std::vector<std::vector<Rational>>& output_traj, u64 q, const Rational& r,
                                    const Rational& s1, const Rational& s2) {
    MarginReport rep;
    const Rational zs = Rational(1) / (r * s1);
    const Rational us = Rational(1) / (r * s1 * s2);
    const auto fold = [&rep](const Rational& v) {
        const Rational mag = v < 0 ? -v : v;
        if (mag > rep.peak) rep.peak = mag;
    };
    for (const auto& row : state_traj)
        for (const auto& v : row) fold(v * zs);
    for (const auto& row : output_traj)
        for (const auto& v : row) fold(v * us);
    const Rational half_q = Rational(BigInt(q)) / 2;
    rep.overflow = rep.peak >= half_q;
    rep.margin = static_cast<double>(rep.peak / half_q);
    return rep;
}

// Message-level per-step defect bounds for the encrypted recursion.
inline PerturbationBounds perturbation_bounds(const PackedController& pc, const EncParams& pr) {
    const auto& lay = pc.layout;
    const double sm = pr.sigma_mult();
    const double log_n = detail::log2_exact_u32(lay.n);
    const double log_tau = detail::log2_exact_u32(lay.tau);
    double sum_f = 0;
    for (const auto& f : pc.F_tilde) sum_f += detail::poly_inf_norm(f);
    const double g_norm = detail::poly_inf_norm(pc.G_tilde);
    const double h_norm = detail::poly_inf_norm(pc.H_tilde);

    PerturbationBounds b;
    b.z_bound = (sum_f * lay.n * log_n + pc.kappa() + 1) * sm +
                static_cast<double>(lay.n) * lay.p * g_norm * pr.sigma;
    b.u_message_bound = (1 + h_norm * lay.n * lay.m * log_tau) * sm;
    b.u_bound = static_cast<double>(pc.r * pc.s1 * pc.s2) * b.u_message_bound;
    b.ini_bound = pr.sigma;
    return b;
}

// ---------------------------------------------------------------------------
// Column-packed comparison path
// ---------------------------------------------------------------------------

// Every column of F, G, and H packed as its own polynomial: state and input
// columns on the N/n state grid, output columns on an N/m grid.
struct BaselineController {
    u32 N = 0, n = 0, p = 0, m = 0;
    std::vector<RingElement> F_cols, G_cols, H_cols;
    RingElement z_ini;
};

struct BaselineEncState {
    u32 N = 0, n = 0, p = 0, m = 0;
    std::vector<GadgetCiphertext> F_enc, G_enc, H_enc;
    AutoKeySet ak;
    Ciphertext z_ct;
    std::shared_ptr<OpCounter> ops;

    u64 gadget_count() const { return F_enc.size() + G_enc.size() + H_enc.size(); }
    u64 key_count() const { return ak.size(); }
};

inline u64 baseline_step_bound(u32 n, u32 p) { return 4ull * n + p - 2; }
inline u64 baseline_step_cost(u32 n, u32 p) { return 3ull * n + 2ull * p - 2; }

namespace detail {

inline void require_pow2(u32 v, const char* what) {
    if (!is_pow2_u32(v)) throw std::invalid_argument(std::string("baseline: ") + what + " must be a power of two");
}

inline RingElement pack_on_grid(const RingCtxPtr& ctx, std::span<const i64> vals, u32 gap) {
    std::vector<i64> coeffs(ctx->degree(), 0);
    for (size_t k = 0; k < vals.size(); ++k) coeffs[k * gap] = vals[k];
    return RingElement::from_coeffs(ctx, coeffs);
}

}  // namespace detail

inline BaselineController baseline_pack(const RingCtxPtr& ctx, const ScaledController& sc) {
    const u32 N = ctx->degree(), n = sc.order(), p = sc.inputs(), m = sc.outputs();
    detail::require_pow2(n, "state dimension");
    detail::require_pow2(p, "input dimension");
    detail::require_pow2(m, "output dimension");
    if (p > n) throw std::invalid_argument("baseline: input dimension must not exceed state dimension");
    if (n > N || m > N) throw std::invalid_argument("baseline: dimensions exceed ring degree");

    BaselineController bc{N, n, p, m, {}, {}, {}, RingElement::zero(ctx)};
    std::vector<i64> col(n, 0);
    for (u32 c = 0; c < n; ++c) {
        for (u32 k = 0; k < n; ++k) col[k] = sc.F[k][c];
        bc.F_cols.push_back(detail::pack_on_grid(ctx, col, N / n));
    }
    for (u32 c = 0; c < p; ++c) {
        for (u32 k = 0; k < n; ++k) col[k] = sc.G[k][c];
        bc.G_cols.push_back(detail::pack_on_grid(ctx, col, N / n));
    }
    std::vector<i64> ocol(m, 0);
    for (u32 c = 0; c < n; ++c) {
        for (u32 k = 0; k < m; ++k) ocol[k] = sc.H[k][c];
        bc.H_cols.push_back(detail::pack_on_grid(ctx, ocol, N / m));
    }
    bc.z_ini = detail::pack_on_grid(ctx, sc.z_ini, N / n);
    return bc;
}

inline BaselineEncState baseline_encrypt(const BaselineController& bc, const SecretKey& sk, const EncParams& pr,
                                         CounterRng& rng) {
    if (pr.degree() != bc.N) throw std::invalid_argument("baseline_encrypt: ring degree mismatch");
    BaselineEncState st{bc.N, bc.n,         bc.p,
                        bc.m, {},           {},
                        {},   {},           Ciphertext::zero(pr.ctx_q),
                        std::make_shared<OpCounter>()};
    for (const auto& f : bc.F_cols) st.F_enc.push_back(encrypt_gadget(f, sk, pr, rng));
    for (const auto& g : bc.G_cols) st.G_enc.push_back(encrypt_gadget(g, sk, pr, rng));
    for (const auto& h : bc.H_cols) st.H_enc.push_back(encrypt_gadget(h, sk, pr, rng));
    for (u64 theta : trace_key_exponents(bc.n, 1)) st.ak.emplace(theta, gen_automorphism_key(theta, sk, pr, rng));
    st.z_ct = encrypt(bc.z_ini, sk, pr, rng);
    return st;
}

// Splits a ciphertext holding `count` values on the N/count grid into `count`
// ciphertexts each holding one value in its constant coefficient.  The
// per-level halvings are hoisted into one exact scalar multiply up front, so
// automorphism-key noise is never itself divided.  Costs count-1 keyed
// automorphisms.
inline std::vector<Ciphertext> extract_slots(const Ciphertext& c, u32 count, const AutoKeySet& keys,
                                             OpCounter& ops) {
    detail::require_pow2(count, "slot count");
    if (count == 1) return {c};
    const u32 N = c.b.degree();
    if (count > N) throw std::invalid_argument("extract_slots: more slots than coefficients");
    const u64 q = c.b.context()->field(0).modulus();
    const u64 inv = pow_mod_u64((q + 1) / 2, detail::log2_exact_u32(count), q);

    struct Node {
        Ciphertext ct;
        u32 first, stride;
    };
    std::vector<Node> level;
    level.push_back({ct_scalar_mul(c, center_u64(inv, q)), 0, 1});
    u32 alpha = count, gap = N / count;
    std::vector<Ciphertext> out(count, Ciphertext::zero(c.b.context()));
    while (alpha > 1) {
        const auto& ak = find_automorphism_key(keys, static_cast<u64>(alpha) + 1, N);
        std::vector<Node> next;
        next.reserve(level.size() * 2);
        for (const auto& node : level) {
            const Ciphertext twisted = ciphertext_automorphism(node.ct, ak, ops);
            next.push_back({ct_add(node.ct, twisted), node.first, node.stride * 2});
            next.push_back({ct_monomial_mul(ct_sub(node.ct, twisted), -static_cast<i64>(gap)),
                            node.first + node.stride, node.stride * 2});
        }
        level = std::move(next);
        alpha /= 2;
        gap *= 2;
    }
    for (const auto& node : level) out[node.first] = node.ct;
    return out;
}

// Measurement encoding for the column-packed path: values on the N/p grid.
inline Ciphertext baseline_sensor_encode(std::span<const Rational> y, const Rational& r, const BaselineEncState& st,
                                         const SecretKey& sk, const EncParams& pr, CounterRng& rng) {
    if (y.size() != st.p) throw std::invalid_argument("baseline_sensor_encode: input dimension mismatch");
    std::vector<i64> vals(st.p, 0);
    for (u32 j = 0; j < st.p; ++j) {
        const Rational scaled = y[j] / r;
        if (!rat_is_integer(scaled))
            throw std::domain_error("baseline_sensor_encode: sample not integral after scaling");
        vals[j] = rat_to_i64(scaled);
    }
    return encrypt(detail::pack_on_grid(pr.ctx_q, vals, st.N / st.p), sk, pr, rng);
}

// One step of the column-packed recursion: unpack every state and input slot
// homomorphically, then take one gadget product per matrix column.
inline Ciphertext baseline_step(BaselineEncState& st, const Ciphertext& y_ct) {
    OpCounter& ops = *st.ops;
    const u64 before = ops.value();
    const std::vector<Ciphertext> zs = extract_slots(st.z_ct, st.n, st.ak, ops);
    const std::vector<Ciphertext> ys = extract_slots(y_ct, st.p, st.ak, ops);

    Ciphertext u_ct = Ciphertext::zero(st.z_ct.b.context());
    for (u32 i = 0; i < st.n; ++i) u_ct = ct_add(u_ct, external_product(st.H_enc[i], zs[i], ops));
    Ciphertext z_next = Ciphertext::zero(st.z_ct.b.context());
    for (u32 i = 0; i < st.n; ++i) z_next = ct_add(z_next, external_product(st.F_enc[i], zs[i], ops));
    for (u32 j = 0; j < st.p; ++j) z_next = ct_add(z_next, external_product(st.G_enc[j], ys[j], ops));
    st.z_ct = z_next;

    const u64 used = ops.value() - before;
    if (used > baseline_step_bound(st.n, st.p))
        throw std::logic_error("baseline_step: external-product budget exceeded");
    return u_ct;
}

// Output decode for the column-packed path: values on the N/m grid.
inline std::vector<Rational> baseline_decode(const Ciphertext& u_ct, const SecretKey& sk, u32 m, const Rational& r,
                                             const Rational& s1, const Rational& s2) {
    const RingElement dec = decrypt(u_ct, sk);
    const u32 gap = dec.degree() / m;
    const Rational scale = r * s1 * s2;
    std::vector<Rational> out;
    out.reserve(m);
    for (u32 k = 0; k < m; ++k) out.push_back(scale * Rational(dec.coeff_crt(k * gap)));
    return out;
}

}  // namespace encctl
