// Command-line front end: key generation, canonical-form preprocessing,
// closed-loop simulation runs with CSV export, timing benchmarks, and a
// self-contained invariant check battery.
//
// Exit codes: 0 success, 2 usage/argument errors, 3 overflow abort during a
// simulation, 4 invariant-verification failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "encctl/canon.hpp"
#include "encctl/controller.hpp"
#include "encctl/packing.hpp"
#include "encctl/rlwe.hpp"
#include "encctl/serialize.hpp"
#include "encctl/simbench.hpp"
#include "encctl/trace.hpp"

namespace {

using namespace encctl;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitOverflow = 3;
constexpr int kExitVerifyFailed = 4;

// ---------------------------------------------------------------------------
// Matrix text format: first line "rows cols", then row-major entries written
// as integers, num/den fractions, or decimals.

RatMatrix read_matrix_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open matrix file: " + path);
    std::size_t rows = 0, cols = 0;
    if (!(in >> rows >> cols) || rows == 0 || cols == 0)
        throw std::runtime_error("matrix file must start with \"rows cols\": " + path);
    RatMatrix m(rows, cols);
    for (std::size_t rr = 0; rr < rows; ++rr)
        for (std::size_t cc = 0; cc < cols; ++cc) {
            std::string tok;
            if (!(in >> tok))
                throw std::runtime_error("matrix file ends early; expected " +
                                         std::to_string(rows * cols) + " entries: " + path);
            m.at(rr, cc) = parse_rational(tok);
        }
    return m;
}

void write_matrix_text(const RatMatrix& m, std::ostream& out) {
    out << m.rows() << " " << m.cols() << "\n";
    for (std::size_t rr = 0; rr < m.rows(); ++rr) {
        for (std::size_t cc = 0; cc < m.cols(); ++cc)
            out << (cc ? " " : "") << format_rational(m.at(rr, cc));
        out << "\n";
    }
}

void save_matrix_text(const RatMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write_matrix_text(m, out);
    if (!out) throw std::runtime_error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Key container ('K'): header, then the parameter fields needed to rebuild
// EncParams, then the ternary secret key.

struct CryptoFlags {
    u32 degree = 1u << 13;
    u32 q_bits = 56;
    u32 p_bits = 51;
    double sigma = 19.2;
};

void add_crypto_flags(CLI::App* cmd, CryptoFlags& fl) {
    cmd->add_option("--degree", fl.degree, "ring degree N (power of two)")
        ->check(CLI::Range(8u, 1u << 13));
    cmd->add_option("--q-bits", fl.q_bits, "target bit size of the ciphertext modulus q")
        ->check(CLI::Range(18u, 60u));
    cmd->add_option("--p-bits", fl.p_bits, "target bit size of the special modulus P")
        ->check(CLI::Range(16u, 58u));
    cmd->add_option("--sigma", fl.sigma, "per-sample error bound");
}

void save_key_file(const std::string& path, const EncParams& pr, const SecretKey& sk) {
    ByteWriter w;
    write_container_header(w, 'K', pr.digest());
    w.put_u32(pr.degree());
    w.put_u64(pr.q());
    w.put_u64(pr.special_p());
    w.put_u64(pr.nu);
    w.put_f64(pr.sigma);
    w.put_f64(pr.sample_stddev);
    write_secret_key(w, sk);
    w.save(path);
}

std::pair<EncParams, SecretKey> load_key_file(const std::string& path) {
    const auto bytes = load_bytes(path);
    ByteReader r(bytes);
    if (r.get_u32() != kContainerMagic) throw std::runtime_error("bad container magic: " + path);
    if (r.get_u32() != kContainerVersion)
        throw std::runtime_error("unsupported container version: " + path);
    if (r.get_u8() != 'K') throw std::runtime_error("not a key container: " + path);
    const u64 digest = r.get_u64();
    const u32 degree = r.get_u32();
    const u64 q = r.get_u64();
    const u64 special_p = r.get_u64();
    const u64 nu = r.get_u64();
    const double sigma = r.get_f64();
    const double stddev = r.get_f64();
    EncParams pr = EncParams::make(degree, q, special_p, nu, sigma, stddev);
    if (pr.digest() != digest)
        throw std::runtime_error("key container parameter digest mismatch: " + path);
    SecretKey sk = read_secret_key(r, pr);
    if (!r.done()) throw std::runtime_error("trailing bytes in key container: " + path);
    return {std::move(pr), std::move(sk)};
}

// ---------------------------------------------------------------------------
// keygen

int cmd_keygen(const std::string& out_path, const CryptoFlags& fl, u64 seed) {
    const EncParams pr = standard_params(fl.degree, fl.q_bits, fl.p_bits, fl.sigma);
    const SecretKey sk = keygen(pr, seed);
    save_key_file(out_path, pr, sk);
    std::cout << "wrote " << out_path << "\n"
              << "  degree     " << pr.degree() << "\n"
              << "  q          " << pr.q() << "\n"
              << "  special P  " << pr.special_p() << "\n"
              << "  sigma      " << pr.sigma << "\n"
              << "  digest     " << std::hex << pr.digest() << std::dec << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// rcf

std::string poly_text(const RatPoly& p) {
    std::ostringstream os;
    os << "[";
    const auto& c = p.coeffs();
    for (std::size_t i = 0; i < c.size(); ++i) os << (i ? " " : "") << format_rational(c[i]);
    os << "] (constant term first)";
    return os.str();
}

int cmd_rcf(const std::string& in_path, const std::string& out_dir) {
    const RatMatrix f = read_matrix_text(in_path);
    if (f.rows() != f.cols()) {
        std::cerr << "rcf: matrix must be square, got " << f.rows() << "x" << f.cols() << "\n";
        return kExitUsage;
    }
    const RcfResult rcf = rcf_transform(f);
    const RcfReport report = verify_rcf(f, rcf);
    if (!report.ok) {
        std::cerr << "rcf: self-check failed:\n";
        for (const auto& issue : report.issues) std::cerr << "  - " << issue << "\n";
        return kExitVerifyFailed;
    }
    std::cout << "order  " << f.rows() << "\n"
              << "kappa  " << rcf.kappa << "\n";
    std::cout << "r      ";
    for (std::size_t i = 0; i < rcf.r.size(); ++i) std::cout << (i ? " " : "") << rcf.r[i];
    std::cout << "\n";
    for (std::size_t i = 0; i < rcf.blocks.size(); ++i)
        std::cout << "block " << i << " char poly " << poly_text(rcf.blocks[i]) << "\n";
    std::cout << "F_bar\n";
    write_matrix_text(rcf.F_bar, std::cout);
    std::cout << "T\n";
    write_matrix_text(rcf.T, std::cout);
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        save_matrix_text(rcf.F_bar, out_dir + "/F_bar.txt");
        save_matrix_text(rcf.T, out_dir + "/T.txt");
        save_matrix_text(rcf.T_inv, out_dir + "/T_inv.txt");
        std::cout << "wrote " << out_dir << "/{F_bar,T,T_inv}.txt\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// run

SimCase case_by_number(int case_no) { return case_no == 1 ? build_case1() : build_case2(); }

int cmd_run(int case_no, const std::string& mode_text, u32 steps, u64 seed, u32 warmup,
            const std::string& out_path, const CryptoFlags& fl, const std::string& key_path) {
    const auto mode = parse_mode(mode_text);
    if (!mode) {
        std::cerr << "run: unknown mode '" << mode_text
                  << "' (expected plain, ring, proposed, or baseline)\n";
        return kExitUsage;
    }
    SimCase sim = case_by_number(case_no);
    std::optional<std::pair<EncParams, SecretKey>> loaded;
    if (!key_path.empty()) loaded.emplace(load_key_file(key_path));
    const EncParams pr =
        loaded ? loaded->first : standard_params(fl.degree, fl.q_bits, fl.p_bits, fl.sigma);
    RunOptions opt;
    opt.horizon = steps;
    opt.warmup = warmup;
    opt.seed = seed;
    if (loaded) opt.key = &loaded->second;
    try {
        const RunRecord rec = run_closed_loop(sim, *mode, pr, opt);
        export_csv(rec, out_path);
        write_manifest(rec, out_path + ".manifest");
        const TimingStats st = timing_stats(rec);
        std::cout << "case " << case_no << " mode " << mode_name(*mode) << ": " << rec.steps.size()
                  << " steps, mean " << st.mean_ms << " ms/step, external products/step ["
                  << st.ep_min << ", " << st.ep_max << "], final margin " << rec.final_margin
                  << "\n"
                  << "  max state defect " << rec.max_state_defect << " (budget "
                  << rec.bounds.z_bound << "), max output defect " << rec.max_output_defect
                  << " (budget " << rec.bounds.u_message_bound << ")\n"
                  << "wrote " << out_path << " and " << out_path << ".manifest\n";
    } catch (const OverflowError& e) {
        std::cerr << "run aborted: " << e.what() << "\n";
        return kExitOverflow;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// bench

int cmd_bench(u32 steps, u32 repeats, u64 seed, u32 warmup, const CryptoFlags& fl) {
    std::vector<RunRecord> runs;
    try {
        for (int case_no : {1, 2}) {
            for (const RunMode mode : {RunMode::EncryptedProposed, RunMode::EncryptedBaseline}) {
                for (u32 rep = 0; rep < repeats; ++rep) {
                    SimCase sim = case_by_number(case_no);
                    const EncParams pr = standard_params(fl.degree, fl.q_bits, fl.p_bits, fl.sigma);
                    RunOptions opt;
                    opt.horizon = steps;
                    opt.warmup = warmup;
                    opt.seed = seed + rep;
                    runs.push_back(run_closed_loop(sim, mode, pr, opt));
                }
            }
        }
    } catch (const OverflowError& e) {
        std::cerr << "bench aborted: " << e.what() << "\n";
        return kExitOverflow;
    }
    std::cout << timing_report(runs);
    for (int case_no : {1, 2}) {
        const std::string name = case_no == 1 ? "case1" : "case2";
        double prop = 0, base = 0;
        u32 nprop = 0, nbase = 0;
        for (const auto& rec : runs) {
            if (rec.case_name != name) continue;
            const double mean = timing_stats(rec).mean_ms;
            if (rec.mode == RunMode::EncryptedProposed) prop += mean, ++nprop;
            if (rec.mode == RunMode::EncryptedBaseline) base += mean, ++nbase;
        }
        prop /= nprop;
        base /= nbase;
        std::cout << name << " mean ms/step: proposed " << prop << ", baseline " << base
                  << ", ratio " << prop / base << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// verify: self-contained invariant battery over every layer.

class Battery {
public:
    void check(const std::string& name, bool ok, const std::string& detail = "") {
        std::cout << (ok ? "[ok]   " : "[FAIL] ") << name;
        if (!ok && !detail.empty()) std::cout << " — " << detail;
        std::cout << "\n";
        if (!ok) ++failures_;
    }
    int failures() const { return failures_; }

private:
    int failures_ = 0;
};

// Independent negacyclic convolution over the integers, reduced centered.
std::vector<i64> negacyclic_reference(std::span<const i64> a, std::span<const i64> b, u64 q) {
    const std::size_t n = a.size();
    std::vector<i128> acc(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t jj = 0; jj < n; ++jj) {
            const std::size_t k = i + jj;
            const i128 term = static_cast<i128>(a[i]) * b[jj];
            if (k < n)
                acc[k] += term;
            else
                acc[k - n] -= term;
        }
    std::vector<i64> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = reduce_center_i128(acc[i], q);
    return out;
}

int cmd_verify(u64 seed) {
    Battery bat;
    CounterRng rng(seed);

    // Ring arithmetic against the schoolbook reference.
    {
        const u32 n = 128;
        const u64 q = find_ntt_prime(u64(1) << 20, u64(1) << 14);
        auto ctx = RingContext::make(n, {q});
        bool ok = true;
        for (int t = 0; t < 100 && ok; ++t) {
            std::vector<i64> a(n), b(n);
            for (auto& v : a) v = static_cast<i64>(rng.next_u64() % q);
            for (auto& v : b) v = static_cast<i64>(rng.next_u64() % q);
            const auto pa = RingElement::from_coeffs(ctx, a);
            const auto pb = RingElement::from_coeffs(ctx, b);
            const auto prod = ring_mul(pa, pb);
            const auto want = negacyclic_reference(pa.limb(0), pb.limb(0), q);
            for (u32 i = 0; i < n; ++i) ok = ok && prod.limb(0)[i] == want[i];
        }
        bat.check("ring multiplication matches schoolbook negacyclic convolution", ok);
    }

    // Modulus structure behind the production parameters.
    {
        const u64 q = find_ntt_prime(u64(1) << 56, u64(1) << 14);
        const u64 p = find_ntt_prime(u64(1) << 51, u64(1) << 14);
        bat.check("production moduli are 1 mod 2N for every supported degree",
                  q % (u64(1) << 14) == 1 && p % (u64(1) << 14) == 1 && q > p);
    }

    const EncParams pr = standard_params(1u << 7);
    const SecretKey sk = keygen(pr, seed);

    // Fresh encryption error stays inside the per-sample bound.
    {
        bool ok = true;
        double worst = 0;
        for (int t = 0; t < 50 && ok; ++t) {
            std::vector<i64> msg(pr.degree());
            for (auto& v : msg) v = static_cast<i64>(rng.next_u64() % 20000) - 10000;
            const auto m = RingElement::from_coeffs(pr.ctx_q, msg);
            const auto c = encrypt(m, sk, pr, rng);
            const auto dec = decrypt(c, sk);
            const auto diff = dec - m;
            for (u32 i = 0; i < pr.degree(); ++i)
                worst = std::max(worst, std::abs(static_cast<double>(diff.limb(0)[i])));
            ok = worst <= pr.sigma;
        }
        bat.check("fresh encryption error within sigma", ok,
                  "worst " + std::to_string(worst) + " vs " + std::to_string(pr.sigma));
    }

    // External product error against the multiplication budget.
    {
        bool ok = true;
        double worst = 0;
        OpCounter counter;
        for (int t = 0; t < 25 && ok; ++t) {
            std::vector<i64> mult(pr.degree(), 0), msg(pr.degree());
            for (u32 i = 0; i < 4; ++i) mult[i] = static_cast<i64>(rng.next_u64() % 9) - 4;
            for (auto& v : msg) v = static_cast<i64>(rng.next_u64() % 20000) - 10000;
            const auto mu = RingElement::from_coeffs(pr.ctx_q, mult);
            const auto m = RingElement::from_coeffs(pr.ctx_q, msg);
            const auto gadget = encrypt_gadget(mu, sk, pr, rng);
            const auto c = encrypt(m, sk, pr, rng);
            const auto out = decrypt(external_product(gadget, c, counter), sk);
            const auto want = ring_mul(mu, decrypt(c, sk));
            const auto diff = out - want;
            for (u32 i = 0; i < pr.degree(); ++i)
                worst = std::max(worst, std::abs(static_cast<double>(diff.limb(0)[i])));
            ok = worst <= pr.sigma_mult();
        }
        bat.check("external product error within the multiplication budget", ok,
                  "worst " + std::to_string(worst) + " vs " + std::to_string(pr.sigma_mult()));
    }

    // Automorphism key switch error against the same budget.
    {
        bool ok = true;
        double worst = 0;
        OpCounter counter;
        for (int t = 0; t < 25 && ok; ++t) {
            const u64 theta = trace_key_exponents(pr.degree(), 1).front();
            std::vector<i64> msg(pr.degree());
            for (auto& v : msg) v = static_cast<i64>(rng.next_u64() % 20000) - 10000;
            const auto m = RingElement::from_coeffs(pr.ctx_q, msg);
            const auto ak = gen_automorphism_key(theta, sk, pr, rng);
            const auto c = encrypt(m, sk, pr, rng);
            const auto out = decrypt(ciphertext_automorphism(c, ak, counter), sk);
            const auto want = plaintext_automorphism(decrypt(c, sk), theta);
            const auto diff = out - want;
            for (u32 i = 0; i < pr.degree(); ++i)
                worst = std::max(worst, std::abs(static_cast<double>(diff.limb(0)[i])));
            ok = worst <= pr.sigma_mult();
        }
        bat.check("automorphism key switch error within the multiplication budget", ok,
                  "worst " + std::to_string(worst) + " vs " + std::to_string(pr.sigma_mult()));
    }

    // Canonical-form transform on random integer matrices.
    {
        bool ok = true;
        std::string detail;
        for (int t = 0; t < 25 && ok; ++t) {
            const std::size_t n = 2 + rng.next_u64() % 5;
            RatMatrix f(n, n);
            for (std::size_t rr = 0; rr < n; ++rr)
                for (std::size_t cc = 0; cc < n; ++cc)
                    f.at(rr, cc) = static_cast<i64>(rng.next_u64() % 7) - 3;
            const RcfResult rcf = rcf_transform(f);
            const RcfReport rep = verify_rcf(f, rcf);
            if (!rep.ok) {
                ok = false;
                detail = rep.issues.front();
            }
        }
        bat.check("canonical-form transform verifies on random integer matrices", ok, detail);
    }

    // Packing round trips are exact.
    {
        const SimCase sim = build_case2();
        PackingLayout layout{pr.degree(), static_cast<u32>(sim.controller.order()),
                             static_cast<u32>(sim.controller.inputs()),
                             static_cast<u32>(sim.controller.outputs())};
        bool ok = true;
        for (int t = 0; t < 100 && ok; ++t) {
            std::vector<i64> z(layout.n);
            for (auto& v : z) v = static_cast<i64>(rng.next_u64() % 2001) - 1000;
            const auto packed = pack_vector(pr.ctx_q, layout, z);
            const auto back = unpack_state(packed, layout);
            for (u32 i = 0; i < layout.n; ++i) ok = ok && back[i] == z[i];
        }
        bat.check("state packing round trip is exact", ok);
    }

    // Closed-loop runs: plain settles, encrypted stays within per-step budgets.
    try {
        RunOptions opt;
        opt.horizon = 200;
        opt.seed = seed;
        const RunRecord plain = run_closed_loop(build_case1(), RunMode::PlainReference, pr, opt);
        double tail = 0;
        for (std::size_t t = 190; t < 200; ++t)
            for (double v : plain.steps[t].y) tail = std::max(tail, std::abs(v));
        bat.check("plain closed loop settles with margin below one",
                  plain.final_margin < 1.0 && tail < 1e-2,
                  "final margin " + std::to_string(plain.final_margin) + ", tail " +
                      std::to_string(tail));

        opt.horizon = 60;
        const RunRecord enc =
            run_closed_loop(build_case2(), RunMode::EncryptedProposed, pr, opt);
        bat.check("encrypted closed loop stays within per-step defect budgets",
                  enc.max_state_defect <= enc.bounds.z_bound &&
                      enc.max_output_defect <= enc.bounds.u_message_bound &&
                      enc.final_margin < 1.0,
                  "state defect " + std::to_string(enc.max_state_defect) + " vs " +
                      std::to_string(enc.bounds.z_bound));
    } catch (const OverflowError& e) {
        bat.check("closed-loop runs complete without overflow", false, e.what());
    }

    if (bat.failures() > 0) {
        std::cout << bat.failures() << " check(s) failed\n";
        return kExitVerifyFailed;
    }
    std::cout << "all checks passed\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"encrypted linear dynamic controller toolkit"};
    app.require_subcommand(1);

    // keygen
    auto* keygen_cmd = app.add_subcommand("keygen", "generate a secret key container");
    std::string keygen_out;
    u64 keygen_seed = 1;
    CryptoFlags keygen_fl;
    keygen_cmd->add_option("--out", keygen_out, "output key file")->required();
    keygen_cmd->add_option("--seed", keygen_seed, "key generation seed");
    add_crypto_flags(keygen_cmd, keygen_fl);

    // rcf
    auto* rcf_cmd = app.add_subcommand("rcf", "block-companion preprocessing of a state matrix");
    std::string rcf_in, rcf_out_dir;
    rcf_cmd->add_option("--in", rcf_in, "matrix file (\"rows cols\" then entries)")->required();
    rcf_cmd->add_option("--out-dir", rcf_out_dir, "directory for F_bar/T/T_inv text files");

    // run
    auto* run_cmd = app.add_subcommand("run", "closed-loop simulation with CSV export");
    int run_case = 1;
    std::string run_mode = "proposed", run_out, run_key;
    u32 run_steps = 0, run_warmup = 10;
    u64 run_seed = 1;
    CryptoFlags run_fl;
    run_cmd->add_option("--case", run_case, "simulation case")->check(CLI::IsMember({1, 2}))->required();
    run_cmd->add_option("--mode", run_mode, "plain | ring | proposed | baseline");
    run_cmd->add_option("--steps", run_steps, "horizon (0 = case default)");
    run_cmd->add_option("--seed", run_seed, "run seed");
    run_cmd->add_option("--warmup", run_warmup, "steps excluded from timing stats");
    run_cmd->add_option("--out", run_out, "output CSV path")->required();
    run_cmd->add_option("--key", run_key, "key container from keygen (overrides crypto flags)");
    add_crypto_flags(run_cmd, run_fl);

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "timing benchmark, both cases and methods");
    u32 bench_steps = 500, bench_warmup = 10, bench_repeats = 1;
    u64 bench_seed = 1;
    CryptoFlags bench_fl;
    bench_cmd->add_option("--steps", bench_steps, "steps per run");
    bench_cmd->add_option("--repeats", bench_repeats, "repetitions per case and method")
        ->check(CLI::Range(1u, 100u));
    bench_cmd->add_option("--seed", bench_seed, "base seed");
    bench_cmd->add_option("--warmup", bench_warmup, "steps excluded from timing stats");
    add_crypto_flags(bench_cmd, bench_fl);

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "run the invariant check battery");
    u64 verify_seed = 1;
    verify_cmd->add_option("--seed", verify_seed, "battery seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (keygen_cmd->parsed()) return cmd_keygen(keygen_out, keygen_fl, keygen_seed);
        if (rcf_cmd->parsed()) return cmd_rcf(rcf_in, rcf_out_dir);
        if (run_cmd->parsed())
            return cmd_run(run_case, run_mode, run_steps, run_seed, run_warmup, run_out, run_fl,
                           run_key);
        if (bench_cmd->parsed())
            return cmd_bench(bench_steps, bench_repeats, bench_seed, bench_warmup, bench_fl);
        if (verify_cmd->parsed()) return cmd_verify(verify_seed);
    } catch (const OverflowError& e) {
        std::cerr << "aborted: " << e.what() << "\n";
        return kExitOverflow;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
