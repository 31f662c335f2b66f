#pragma once

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <w2lab/json_io.hpp>
#include <w2lab/w2lab.hpp>

namespace w2lab {
namespace cli {

using io::json;

struct Config {
    std::string command;
    std::string mu, nu, eta, phi, coupling, out;
    std::string mode = "rational";
    std::string tol;
    std::string t_list;
    std::string primes;
    unsigned long seed = 0;
};

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) parts.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    if (!cur.empty()) parts.push_back(cur);
    return parts;
}

inline void emit(const Config& cfg, std::ostream& fallback, const std::string& text) {
    if (!cfg.out.empty()) {
        std::ofstream f(cfg.out, std::ios::binary);
        if (!f) throw IoError("cannot write '" + cfg.out + "'");
        f << text;
    } else {
        fallback << text;
    }
}

inline std::string format_double(double v) {
    return json(v).dump(); // shortest representation that round-trips
}

// ---------------------------------------------------------------------------
// Typed helpers.
// ---------------------------------------------------------------------------

template <class S>
DiscreteMeasure<S> load_measure(const std::string& path) {
    return io::measure_from_json<S>(io::load_json_file(path));
}

template <class S>
json points_to_json(const std::vector<Point<S>>& pts) {
    json out = json::array();
    for (const auto& p : pts) out.push_back(io::point_to_json(p));
    return out;
}

template <class S>
json scalars_to_json(const std::vector<S>& xs) {
    json out = json::array();
    for (const auto& x : xs) out.push_back(io::scalar_to_json(x));
    return out;
}

inline json header(const Config& cfg) {
    json doc = json::object();
    doc["schema"] = "w2lab/1";
    doc["command"] = cfg.command;
    doc["mode"] = cfg.mode;
    return doc;
}

template <class S>
json structure_to_json(const StructureCertificate<S>& cert) {
    json c = json::object();
    c["w2_squared"] = io::scalar_to_json(cert.w2_squared);
    c["unique"] = cert.unique;
    c["is_map"] = cert.is_map;
    c["map"] = cert.map ? points_to_json(*cert.map) : json(nullptr);
    c["conditional_variance"] = io::scalar_to_json(cert.conditional_variance);
    c["witness_coupling"] = io::coupling_to_json(cert.witness_coupling);
    return c;
}

// ---------------------------------------------------------------------------
// Subcommand implementations.
// ---------------------------------------------------------------------------

template <class S>
json cmd_w2(const Config& cfg) {
    auto mu = load_measure<S>(cfg.mu);
    auto nu = load_measure<S>(cfg.nu);
    W2Solution<S> sol = solve_w2(mu, nu);
    json doc = header(cfg);
    doc["w2_squared"] = io::scalar_to_json(sol.value);
    doc["coupling"] = io::coupling_to_json(sol.coupling);
    json dual = json::object();
    dual["u"] = scalars_to_json(sol.dual.u);
    dual["v"] = scalars_to_json(sol.dual.v);
    doc["dual"] = std::move(dual);
    doc["certificate"] = structure_to_json(certify_structure(mu, nu));
    return doc;
}

template <class S>
json cmd_oned(const Config& cfg) {
    auto mu = load_measure<S>(cfg.mu);
    auto nu = load_measure<S>(cfg.nu);
    json doc = header(cfg);
    doc["w2_squared"] = io::scalar_to_json(w2_squared_1d(mu, nu));
    doc["comonotone"] = io::coupling_to_json(comonotone_coupling(mu, nu));
    MapExistence1D<S> me = map_exists_1d(mu, nu);
    doc["map_exists"] = me.exists;
    doc["map"] = me.exists ? scalars_to_json(me.map) : json(nullptr);
    doc["violating_atom"] =
        me.violating_atom ? json(*me.violating_atom) : json(nullptr);
    doc["barycentric_map"] = scalars_to_json(barycentric_map_1d(mu, nu));
    doc["eta"] = io::measure_to_json(barycentric_image_1d(mu, nu));
    doc["martingale_coupling"] = io::coupling_to_json(martingale_coupling_1d(mu, nu));
    return doc;
}

template <class S>
json cmd_cx(const Config& cfg) {
    auto mu = load_measure<S>(cfg.mu);
    auto nu = load_measure<S>(cfg.nu);
    ConvexOrderResult<S> res = convex_order_test(mu, nu);
    json doc = header(cfg);
    doc["ordered"] = res.ordered;
    if (res.ordered) {
        doc["kernel"] = io::kernel_to_json(*res.kernel);
    } else {
        json w = json::object();
        w["intercepts"] = scalars_to_json(res.witness->intercepts);
        json slopes = json::array();
        for (const auto& g : res.witness->slopes) slopes.push_back(io::point_to_json(g));
        w["slopes"] = std::move(slopes);
        w["integral_source"] = io::scalar_to_json(res.witness->integral(mu));
        w["integral_target"] = io::scalar_to_json(res.witness->integral(nu));
        doc["witness"] = std::move(w);
    }
    if (mu.dimension() == 1 && nu.dimension() == 1)
        doc["ordered_1d"] = convex_order_1d(mu, nu);
    return doc;
}

template <class S>
json cmd_decompose(const Config& cfg) {
    auto mu = load_measure<S>(cfg.mu);
    auto nu = load_measure<S>(cfg.nu);
    Coupling<S> pi = cfg.coupling.empty()
                         ? solve_w2(mu, nu).coupling
                         : io::coupling_from_json<S>(io::load_json_file(cfg.coupling));
    if (pi.source != mu || pi.target != nu)
        throw InvalidArgument("supplied coupling does not couple the given measures");
    const S residual = decomposition_residual(mu, nu, pi);
    json doc = header(cfg);
    doc["eta"] = io::measure_to_json(barycentric_image(pi));
    doc["map"] = points_to_json(barycentric_projection(pi));
    doc["conditional_variance"] = io::scalar_to_json(conditional_variance(pi));
    doc["residual"] = io::scalar_to_json(residual);
    if (!cfg.eta.empty()) {
        auto eta = load_measure<S>(cfg.eta);
        doc["in_I"] = cfg.tol.empty() ? in_I(mu, nu, eta)
                                      : in_I(mu, nu, eta, parse_scalar<S>(cfg.tol));
    }
    return doc;
}

template <class S>
json cmd_eta(const Config& cfg) {
    auto mu = load_measure<S>(cfg.mu);
    auto nu = load_measure<S>(cfg.nu);
    QuadraticObjective<S> phi =
        cfg.phi.empty() ? QuadraticObjective<S>::norm_sq(mu.dimension())
                        : io::objective_from_json<S>(io::load_json_file(cfg.phi), mu.dimension());
    EtaSelection<S> sel = minimize_phi_over_face(mu, nu, phi);
    json doc = header(cfg);
    doc["eta"] = io::measure_to_json(sel.eta);
    doc["pi"] = io::coupling_to_json(sel.pi);
    doc["map"] = points_to_json(sel.map);
    doc["fw_gap"] = io::scalar_to_json(sel.fw_gap);
    doc["iterations"] = sel.iterations;
    return doc;
}

template <class S>
json cmd_diff(const Config& cfg) {
    auto mu = load_measure<S>(cfg.mu);
    auto nu = load_measure<S>(cfg.nu);
    DiffCertificate<S> cert = diff_certificate(mu, nu);
    json doc = header(cfg);
    doc["differentiable"] = cert.differentiable;
    doc["derivative"] = cert.derivative ? points_to_json(*cert.derivative) : json(nullptr);
    if (cert.witness) {
        json w = json::object();
        w["coupling"] = io::coupling_to_json(cert.witness->coupling);
        w["xi_norm_sq"] = io::scalar_to_json(cert.witness->xi_norm_sq);
        doc["witness"] = std::move(w);
    } else {
        doc["witness"] = json(nullptr);
    }
    return doc;
}

template <class S>
std::string cmd_fdcheck(const Config& cfg) {
    auto mu = load_measure<S>(cfg.mu);
    auto nu = load_measure<S>(cfg.nu);
    std::vector<S> ts;
    for (const auto& tok : split_list(cfg.t_list.empty() ? "0.1,0.01,0.001,0.0001" : cfg.t_list))
        ts.push_back(parse_scalar<S>(tok));
    // Default probing direction: the all-ones vector at every atom.
    std::vector<Point<S>> dirs(mu.size(), Point<S>(mu.dimension(), S(1)));
    FdReport<S> rep = fd_derivative_check(mu, nu, dirs, ts);
    std::ostringstream csv;
    csv << "t,residual,fitted_order\n";
    for (std::size_t k = 0; k < ts.size(); ++k)
        csv << format_double(to_double(ts[k])) << ',' << format_double(to_double(rep.residuals[k]))
            << ',' << format_double(rep.fitted_order) << '\n';
    return csv.str();
}

template <class S>
std::string cmd_primedemo(const Config& cfg) {
    auto samples = load_measure<S>(cfg.mu); // atom locations serve as sample points
    auto nu = load_measure<S>(cfg.nu);
    std::vector<Point<S>> pts;
    for (std::size_t i = 0; i < samples.size(); ++i) pts.push_back(samples.point(i));
    std::vector<long> primes;
    for (const auto& tok : split_list(cfg.primes.empty() ? "2,3,5,7,11,13" : cfg.primes))
        primes.push_back(std::stol(tok));
    PrimeDemoReport<S> rep = prime_perturbation_demo(pts, nu, primes, cfg.seed);
    std::ostringstream csv;
    csv << "prime,mass_feasible\n";
    for (std::size_t k = 0; k < rep.primes.size(); ++k)
        csv << rep.primes[k] << ',' << (rep.mass_feasible[k] ? 1 : 0) << '\n';
    return csv.str();
}

// ---------------------------------------------------------------------------
// Built-in example suite: recomputes the bundled reference examples exactly
// and reports one pass/fail entry per check.  Always runs in rational mode.
// ---------------------------------------------------------------------------

inline json run_example_suite(const Config& cfg) {
    using R = Rational;
    const R h = R(1) / R(2);
    auto meas = [](std::vector<Point<R>> pts, std::vector<R> wts) {
        return DiscreteMeasure<R>(std::move(pts), std::move(wts));
    };

    json checks = json::array();
    bool all = true;
    auto record = [&](const std::string& name, bool pass) {
        json c = json::object();
        c["name"] = name;
        c["pass"] = pass;
        checks.push_back(std::move(c));
        all = all && pass;
    };

    // Two-point source against the rotated two-point target.
    auto mu = meas({{R(-1), R(0)}, {R(1), R(0)}}, {h, h});
    auto nu1 = meas({{R(0), R(-1)}, {R(0), R(1)}}, {h, h});
    auto sol1 = solve_w2(mu, nu1);
    record("cross_value", sol1.value == R(2));
    auto cert1 = certify_structure(mu, nu1);
    record("cross_not_unique", !cert1.unique && !cert1.is_map &&
                                   cert1.conditional_variance > R(0));
    auto verts = enumerate_optimal_vertices(mu, nu1);
    record("cross_two_vertices", verts.size() == 2);
    auto range1 = face_coordinate_range(mu, nu1, sol1.value, std::size_t{0}, std::size_t{0});
    record("cross_cell_range", range1.first == R(0) && range1.second == h);
    auto etac = minimize_phi_over_face(mu, nu1, QuadraticObjective<R>::norm_sq(2));
    record("cross_norm_sq_selection",
           etac.eta == meas({{R(0), R(0)}}, {R(1)}));

    // Four-point target: the one-parameter family of barycentric selections.
    auto nu2 = meas({{R(-1), R(-1)}, {R(0), R(-1)}, {R(0), R(1)}, {R(1), R(1)}},
                    {R(1) / R(4), R(1) / R(4), R(1) / R(4), R(1) / R(4)});
    record("segment_value", solve_w2(mu, nu2).value == R(3) / R(2));
    bool family_ok = true;
    for (R p : {R(0), R(3) / R(10), R(1)}) {
        Matrix<R> A{Point<R>{R(1) + R(4) * p * p, R(-2) * p}, Point<R>{R(-2) * p, R(1)}};
        auto sel = minimize_phi_over_face(mu, nu2, QuadraticObjective<R>(A, {R(0), R(0)}));
        family_ok = family_ok && sel.eta == meas({{-h, -p}, {h, p}}, {h, h});
    }
    record("segment_family_selection", family_ok);
    record("segment_minimal_element",
           underline_eta(mu, nu2) == meas({{-h, R(0)}, {h, R(0)}}, {h, h}));
    {
        std::vector<QuadraticObjective<R>> fam;
        for (R p : {R(0), h, R(1)}) {
            Matrix<R> A{Point<R>{R(1) + R(4) * p * p, R(-2) * p}, Point<R>{R(-2) * p, R(1)}};
            fam.emplace_back(A, Point<R>{R(0), R(0)});
        }
        auto probe = minimal_element_probe(mu, nu2, fam);
        record("segment_probe_no_minimum", !probe.all_equal && probe.counterexample.has_value());
    }

    // Spread target: decomposition of the squared distance through the
    // barycentric image.
    auto nu3 = meas({{R(-1), R(-1)}, {R(-1), R(5)}, {R(1), R(-5)}, {R(1), R(1)}},
                    {R(1) / R(4), R(1) / R(4), R(1) / R(4), R(1) / R(4)});
    auto eta3 = meas({{R(-1), R(2)}, {R(1), R(-2)}}, {h, h});
    record("spread_eta_value", solve_w2(eta3, nu3).value == R(7));
    record("spread_total_value", solve_w2(mu, nu3).value == R(13));
    record("spread_second_moments",
           nu3.second_moment() == R(14) && eta3.second_moment() == R(5));
    {
        auto sol3 = solve_w2(mu, nu3);
        record("spread_residual_zero",
               decomposition_residual(mu, nu3, sol3.coupling) == R(0));
        const R mart_cost = sol3.value - solve_w2(mu, barycentric_image(sol3.coupling)).value;
        record("spread_martingale_cost", mart_cost == R(9));
    }

    // Dirac split: non-differentiability with unit variance and the exact
    // linear decrease.
    auto d0 = meas({{R(0)}}, {R(1)});
    auto pm1 = meas({{R(-1)}, {R(1)}}, {h, h});
    auto dc = diff_certificate(d0, pm1);
    record("dirac_split_witness",
           !dc.differentiable && dc.witness && dc.witness->xi_norm_sq == R(1));
    {
        auto rep = nondiff_decrease_check(d0, pm1, dc.witness->coupling, {h, R(1)});
        record("dirac_split_decrease",
               rep.value[0] == R(1) / R(4) && rep.value[1] == R(0));
    }
    {
        std::vector<Point<R>> pts;
        for (int i = 0; i < 8; ++i) pts.push_back(Point<R>{R(i)});
        auto rep = prime_perturbation_demo(pts, pm1, {2, 3, 5, 7});
        record("prime_demo_unique", rep.feasible_prime && *rep.feasible_prime == 2);
    }

    // One-dimensional agreement: closed form versus the linear program.
    {
        auto a = meas({{R(0)}, {R(1)}, {R(3)}}, {R(1) / R(4), h, R(1) / R(4)});
        auto b = meas({{R(-1)}, {R(2)}, {R(4)}}, {h, R(1) / R(4), R(1) / R(4)});
        const R closed = w2_squared_1d(a, b);
        const R lp = solve_w2(a, b).value;
        const R como = comonotone_coupling(a, b).quadratic_cost();
        record("oned_three_way_agreement", closed == lp && closed == como);
    }

    json doc = header(cfg);
    doc["checks"] = std::move(checks);
    doc["all_pass"] = all;
    return doc;
}

// ---------------------------------------------------------------------------
// Dispatch.
// ---------------------------------------------------------------------------

template <class S>
int run_typed(const Config& cfg, std::ostream& out) {
    try {
        std::string text;
        if (cfg.command == "fdcheck") {
            text = cmd_fdcheck<S>(cfg);
        } else if (cfg.command == "primedemo") {
            text = cmd_primedemo<S>(cfg);
        } else {
            json doc;
            if (cfg.command == "w2") doc = cmd_w2<S>(cfg);
            else if (cfg.command == "oned") doc = cmd_oned<S>(cfg);
            else if (cfg.command == "cx") doc = cmd_cx<S>(cfg);
            else if (cfg.command == "decompose") doc = cmd_decompose<S>(cfg);
            else if (cfg.command == "eta") doc = cmd_eta<S>(cfg);
            else if (cfg.command == "diff") doc = cmd_diff<S>(cfg);
            else if (cfg.command == "paper-suite") doc = run_example_suite(cfg);
            else throw InvalidArgument("unknown command '" + cfg.command + "'");
            text = doc.dump(2) + "\n";
            if (cfg.command == "paper-suite" && !doc["all_pass"].template get<bool>()) {
                emit(cfg, out, text);
                return 1;
            }
        }
        emit(cfg, out, text);
        return 0;
    } catch (const Error& e) {
        json env = json::object();
        env["error"] = json{{"code", e.code()}, {"message", e.what()}};
        emit(cfg, out, env.dump(2) + "\n");
        return 1;
    } catch (const std::exception& e) {
        json env = json::object();
        env["error"] = json{{"code", "internal_error"}, {"message", e.what()}};
        emit(cfg, out, env.dump(2) + "\n");
        return 1;
    }
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Config cfg;
    CLI::App app{"Structure of quadratic-Wasserstein optimal couplings between "
                 "finitely supported measures"};
    app.require_subcommand(1);

    auto add_common = [&](CLI::App* sub, bool need_mu, bool need_nu) {
        auto* mu_opt = sub->add_option("--mu", cfg.mu, "source measure JSON file");
        auto* nu_opt = sub->add_option("--nu", cfg.nu, "target measure JSON file");
        if (need_mu) mu_opt->required();
        if (need_nu) nu_opt->required();
        sub->add_option("--mode", cfg.mode, "numeric mode")
            ->check(CLI::IsMember({"rational", "float"}));
        sub->add_option("--out", cfg.out, "write output to this file instead of stdout");
    };

    auto* w2 = app.add_subcommand("w2", "squared distance, optimal coupling, dual certificate");
    add_common(w2, true, true);
    auto* oned = app.add_subcommand("oned", "closed-form one-dimensional machinery");
    add_common(oned, true, true);
    auto* cx = app.add_subcommand("cx", "convex-order test with kernel or separating witness");
    add_common(cx, true, true);
    auto* dec = app.add_subcommand("decompose", "martingale-map decomposition of a coupling");
    add_common(dec, true, true);
    dec->add_option("--coupling", cfg.coupling, "coupling JSON file (optimal one if omitted)");
    dec->add_option("--eta", cfg.eta, "test this measure for membership in the decomposition set");
    dec->add_option("--tol", cfg.tol, "residual tolerance override");
    auto* eta = app.add_subcommand("eta", "barycentric selection by convex minimization");
    add_common(eta, true, true);
    eta->add_option("--phi", cfg.phi, "objective JSON ({\"A\":...,\"b\":...} or {\"builtin\":\"norm_sq\"})");
    auto* dif = app.add_subcommand("diff", "differentiability certificate of the squared distance");
    add_common(dif, true, true);
    auto* fdc = app.add_subcommand("fdcheck", "finite-difference residuals of the derivative (CSV)");
    add_common(fdc, true, true);
    fdc->add_option("--t-list", cfg.t_list, "comma-separated step sizes");
    auto* pde = app.add_subcommand("primedemo", "prime-atom perturbation feasibility (CSV)");
    add_common(pde, true, true);
    pde->add_option("--primes", cfg.primes, "comma-separated primes");
    pde->add_option("--seed", cfg.seed, "jitter seed");
    auto* suite = app.add_subcommand("paper-suite", "recompute all bundled reference examples");
    add_common(suite, false, false);

    std::vector<const char*> argv;
    std::string prog = "w2cli";
    argv.push_back(prog.c_str());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return 2;
    }

    for (CLI::App* sub : {w2, oned, cx, dec, eta, dif, fdc, pde, suite})
        if (sub->parsed()) cfg.command = sub->get_name();

    if (cfg.mode == "rational") return run_typed<Rational>(cfg, out);
    return run_typed<double>(cfg, out);
}

} // namespace cli
} // namespace w2lab
