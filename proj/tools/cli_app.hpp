#pragma once

// Command-line front end. Every library operation is reachable from exactly
// one subcommand; op_subcommand_map() below is the authoritative table and is
// checked by the test suite.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "markovig/markovig.hpp"

namespace migcli {

using namespace markovig;

inline const std::vector<std::pair<std::string, std::string>>& op_subcommand_map() {
    static const std::vector<std::pair<std::string, std::string>> table = {
        {"pf_core.check_structure", "pf"},
        {"pf_core.perron_frobenius", "pf"},
        {"pf_core.stationary_distribution", "pf"},
        {"expfam.tilt", "phi"},
        {"expfam.potential", "phi"},
        {"expfam.point", "eta"},
        {"expfam.fisher", "fisher"},
        {"expfam.check_independence", "model"},
        {"expfam.theta_from_eta", "theta-from-eta"},
        {"expfam.solve_mixed_coordinates", "pythagoras-check"},
        {"divergence.renyi", "renyi"},
        {"divergence.relative_entropy", "divergence"},
        {"divergence.divergence_properties_check", "divergence"},
        {"divergence.fisher_from_divergence", "fisher"},
        {"projection.pythagoras_point", "pythagoras-check"},
        {"projection.m_project", "project-mixture"},
        {"projection.e_project", "project-exp"},
        {"projection.curved_fisher", "fisher"},
        {"projection.curved_estimate", "estimate-curved"},
        {"estimate.sample_mean", "estimate"},
        {"estimate.estimate_expectation", "estimate"},
        {"estimate.estimate_natural", "estimate"},
        {"estimate.estimate_curved", "estimate-curved"},
        {"estimate.cramer_rao_report", "fisher"},
        {"simulate.sample", "simulate"},
        {"simulate.run_monte_carlo", "simulate"},
        {"simulate.exhaustive_moments", "oracle"},
        {"simulate.exhaustive_fisher", "oracle"},
        {"simulate.joint_divergence_rate", "oracle"},
        {"models.full_positive_family", "model"},
        {"models.restricted_support_family", "model"},
        {"models.bistochastic_mixture", "model"},
        {"models.two_state_reference", "model"},
    };
    return table;
}

inline const std::vector<std::string>& subcommand_names() {
    static const std::vector<std::string> names = {
        "pf",         "phi",          "eta",          "fisher",         "theta-from-eta",
        "divergence", "renyi",        "pythagoras-check", "project-mixture", "project-exp",
        "estimate",   "estimate-curved", "simulate",  "oracle",         "model"};
    return names;
}

struct Options {
    std::string model_name;
    std::string model_file, model_file2, model_file3;
    int states = 0;
    std::string theta_csv, eta_csv, c_csv, targets_csv, xi_csv, initial_csv;
    std::string theta_prime_csv, theta_dprime_csv;
    double s = 0.0;
    bool s_given = false;
    double p = 0.5;
    int k = 0;
    int n = 0;
    int trials = 1;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 1;
    std::string csv_path;
    std::string eval_path = "bregman";
    double tol = 1e-13;
    std::string method = "newton";
    std::string divergence_method = "both";
    bool natural = false;
    bool from_divergence = false;
    int cr_n = 0;
    bool properties_check = false;
    bool emit_trajectory = false;
    std::string data_path;
    std::string oracle_tool;

    std::vector<std::string> digest_parts;  // argv tokens plus file bytes
};

inline Vector parse_csv_vector(const std::string& text, const std::string& what) {
    std::vector<double> vals;
    std::string token;
    std::stringstream ss(text);
    while (std::getline(ss, token, ',')) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(token, &pos);
            while (pos < token.size() && std::isspace(static_cast<unsigned char>(token[pos])))
                ++pos;
            if (pos != token.size()) throw std::invalid_argument(token);
            vals.push_back(v);
        } catch (const std::exception&) {
            throw input_error("cannot parse --" + what + " entry '" + token + "'");
        }
    }
    if (vals.empty()) throw input_error("--" + what + " must be a comma-separated list");
    Vector v(static_cast<int>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) v(static_cast<int>(i)) = vals[i];
    return v;
}

inline std::string slurp_file(const std::string& path, Options& o) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    o.digest_parts.push_back(ss.str());
    return ss.str();
}

inline ModelFile load_model(const std::string& path, Options& o) {
    const std::string text = slurp_file(path, o);
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw input_error("model file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_model_file(j);
}

// All model-derived objects a subcommand may need.
struct Resolved {
    std::optional<ModelFile> file;
    std::optional<TransitionKernel> kernel;
    std::optional<TransitionKernel> kernel2;
    std::optional<TransitionKernel> kernel3;
    std::optional<ExpFamily> family;
    std::optional<CurvedFamily> curved;
    std::optional<BistochasticModel> bisto;
    std::optional<Vector> initial;
    std::string description;
};

inline Resolved resolve_model(Options& o) {
    Resolved r;
    if (!o.model_file.empty()) {
        r.file = load_model(o.model_file, o);
        r.kernel = r.file->kernel;
        r.kernel2 = r.file->kernel2;
        r.kernel3 = r.file->kernel3;
        r.initial = r.file->initial;
        if (!r.file->generators.empty() && r.kernel) {
            std::vector<Matrix> gens;
            for (const auto& [name, g] : r.file->generators) gens.push_back(g);
            r.family.emplace(*r.kernel, GeneratorSet::make(std::move(gens)));
            if (r.file->curved_c)
                r.curved = CurvedFamily::affine(*r.family, *r.file->curved_c,
                                                *r.file->curved_t0);
        }
        r.description = "file:" + o.model_file;
    }
    if (!o.model_file2.empty()) {
        auto mf = load_model(o.model_file2, o);
        if (!mf.kernel) throw input_error("second model file must contain a kernel");
        r.kernel2 = mf.kernel;
    }
    if (!o.model_file3.empty()) {
        auto mf = load_model(o.model_file3, o);
        if (!mf.kernel) throw input_error("third model file must contain a kernel");
        r.kernel3 = mf.kernel;
    }

    if (!o.model_name.empty()) {
        const std::string& name = o.model_name;
        if (name == "m2") {
            auto desc = two_state_reference();
            r.kernel = desc.family.base();
            r.family.emplace(std::move(desc.family));
            r.description = "builtin:m2 (" + desc.notes + ")";
        } else if (name == "full" || name == "restricted") {
            TransitionKernel base = r.kernel ? *r.kernel : [&] {
                if (o.states < 2)
                    throw input_error("--model " + name + " needs --states or a model file");
                return uniform_kernel(o.states);
            }();
            r.kernel = base;
            r.family.emplace(name == "full" ? full_positive_family(base)
                                            : restricted_support_family(base));
            r.description = "builtin:" + name;
        } else if (name == "bistochastic") {
            if (o.states < 2) throw input_error("--model bistochastic needs --states");
            r.bisto = bistochastic_mixture(o.states);
            r.kernel = uniform_kernel(o.states);
            r.description = "builtin:bistochastic";
        } else {
            throw input_error("unknown --model '" + name +
                              "' (expected m2|full|restricted|bistochastic)");
        }
    }
    return r;
}

inline const TransitionKernel& need_kernel(const Resolved& r) {
    if (!r.kernel) throw input_error("this subcommand needs a kernel (--model or --model-file)");
    return *r.kernel;
}

inline const TransitionKernel& need_kernel2(const Resolved& r) {
    if (!r.kernel2)
        throw input_error("this subcommand needs a second kernel (--model-file2 or 'kernel2')");
    return *r.kernel2;
}

inline const ExpFamily& need_family(const Resolved& r) {
    if (!r.family)
        throw input_error("this subcommand needs a family (generators in the model)");
    return *r.family;
}

inline const CurvedFamily& need_curved(const Resolved& r) {
    if (!r.curved)
        throw input_error("this subcommand needs a curved block in the model file");
    return *r.curved;
}

inline Vector need_theta(const Options& o, const ExpFamily& fam) {
    if (o.theta_csv.empty()) return Vector::Zero(fam.dim());
    return parse_csv_vector(o.theta_csv, "theta");
}

inline Trajectory load_trajectory(const std::string& path, Options& o) {
    if (path.empty()) throw input_error("this subcommand needs --data with a trajectory file");
    std::string text = slurp_file(path, o);
    for (char& c : text)
        if (c == ',') c = ' ';
    std::stringstream ss(text);
    Trajectory t;
    long long v;
    while (ss >> v) t.states.push_back(static_cast<int>(v));
    if (t.states.size() < 2) throw input_error("trajectory file needs at least two states");
    return t;
}

inline std::optional<Vector> parse_initial(const Options& o, const Resolved& r) {
    if (!o.initial_csv.empty()) {
        if (o.initial_csv == "stationary") return std::nullopt;
        return parse_csv_vector(o.initial_csv, "initial");
    }
    return r.initial;  // model-file initial, or stationary when absent
}

// --- subcommand handlers ---------------------------------------------------

inline json run_pf(Options& o) {
    Resolved r = resolve_model(o);
    const TransitionKernel& k = need_kernel(r);
    json res;
    json support = json::array();
    for (auto [to, from] : k.support()) support.push_back({{"from", from}, {"to", to}});
    res["structure"] = {{"support", support},
                        {"irreducible", k.irreducible()},
                        {"ergodic", k.ergodic()}};
    if (k.irreducible()) {
        const auto pf = perron_frobenius(k.matrix(), o.tol);
        res["pf"] = {{"log_eigenvalue", pf.log_eigenvalue},
                     {"right_vec", json_vector(pf.right_vec)},
                     {"left_vec", json_vector(pf.left_vec)},
                     {"residual", pf.residual}};
        res["stationary"] = json_vector(stationary_distribution(k, o.tol));
    }
    return res;
}

inline json run_phi(Options& o) {
    Resolved r = resolve_model(o);
    const ExpFamily& fam = need_family(r);
    const Vector theta = need_theta(o, fam);
    json res;
    res["theta"] = json_vector(theta);
    res["phi"] = fam.potential(theta);
    res["tilt"] = json_matrix_rows(fam.tilt(theta));
    return res;
}

inline json run_eta(Options& o) {
    Resolved r = resolve_model(o);
    const ExpFamily& fam = need_family(r);
    const FamilyPoint p = fam.point(need_theta(o, fam));
    json res;
    res["theta"] = json_vector(p.theta);
    res["phi"] = p.phi;
    res["eta"] = json_vector(p.eta);
    res["kernel"] = json_matrix_rows(p.kernel.matrix());
    res["stationary"] = json_vector(p.stationary);
    return res;
}

inline json run_fisher(Options& o) {
    Resolved r = resolve_model(o);
    const ExpFamily& fam = need_family(r);
    const Vector theta = need_theta(o, fam);
    const FisherMatrix fm = fam.fisher(theta);
    json res;
    res["theta"] = json_vector(theta);
    res["fisher"] = json_matrix(fm.entries);
    res["step"] = fm.step;
    if (o.from_divergence) {
        if (o.c_csv.empty()) throw input_error("--from-divergence needs a direction --c");
        const Vector c = parse_csv_vector(o.c_csv, "c");
        res["from_divergence"] = {{"s", o.s},
                                  {"limit", fisher_from_divergence(fam, theta, c, o.s)}};
    }
    if (o.cr_n > 0) {
        const auto cr = cramer_rao_report(fam, theta, o.cr_n, parse_initial(o, r));
        json block;
        block["n"] = cr.n;
        block["j1"] = json_matrix(cr.j1);
        block["joint_fisher"] = json_matrix(cr.joint_fisher);
        block["cr_bound"] = json_matrix(cr.cr_bound);
        block["asymptotic_bound"] = json_matrix(cr.asymptotic_bound);
        block["vhat"] = json_matrix(cr.vhat);
        if (fam.dim() == 1) {
            block["sandwich_lo"] = cr.sandwich_lo;
            block["sandwich_hi"] = cr.sandwich_hi;
        }
        res["cramer_rao"] = block;
    }
    if (!o.xi_csv.empty()) {
        const CurvedFamily& cf = need_curved(r);
        const Vector xi = parse_csv_vector(o.xi_csv, "xi");
        const auto cfish = curved_fisher(cf, xi);
        res["curved"] = {{"xi", json_vector(xi)},
                         {"fisher", json_matrix(cfish.entries)},
                         {"step", cfish.step}};
    }
    return res;
}

inline json run_theta_from_eta(Options& o) {
    Resolved r = resolve_model(o);
    const ExpFamily& fam = need_family(r);
    if (o.eta_csv.empty()) throw input_error("theta-from-eta needs --eta");
    const Vector eta = parse_csv_vector(o.eta_csv, "eta");
    const SolveMethod method =
        o.method == "nelder-mead" ? SolveMethod::nelder_mead : SolveMethod::newton;
    if (o.method != "newton" && o.method != "nelder-mead")
        throw input_error("--method must be newton or nelder-mead");
    const Vector theta = fam.theta_from_eta(eta, method);
    const FamilyPoint p = fam.point(theta);
    json res;
    res["eta"] = json_vector(eta);
    res["theta"] = json_vector(theta);
    res["eta_achieved"] = json_vector(p.eta);
    res["residual"] = (p.eta - eta).cwiseAbs().maxCoeff();
    return res;
}

inline json run_divergence(Options& o) {
    Resolved r = resolve_model(o);
    const TransitionKernel& w = need_kernel(r);
    const TransitionKernel& v = need_kernel2(r);
    json res;
    if (o.properties_check) {
        if (!r.kernel3)
            throw input_error("--properties-check needs a third kernel (--model-file3)");
        const auto rep = divergence_properties_check(w, v, *r.kernel3, o.p);
        res["properties"] = {{"p", o.p},
                             {"skipped", rep.skipped},
                             {"gap_first_arg", rep.gap_first_arg},
                             {"gap_second_arg", rep.gap_second_arg},
                             {"passed", rep.passed}};
        return res;
    }
    RelEntropyMethod m = RelEntropyMethod::both;
    if (o.divergence_method == "eigen") m = RelEntropyMethod::eigen_derivative;
    else if (o.divergence_method == "stationary") m = RelEntropyMethod::stationary_form;
    else if (o.divergence_method != "both")
        throw input_error("--divergence-method must be eigen, stationary, or both");
    const auto d = relative_entropy(w, v, m);
    res["value"] = d.value;
    res["finite"] = d.finite;
    res["method"] = d.method == DivMethod::eigen_derivative ? "eigen_derivative"
                                                            : "stationary_form";
    return res;
}

inline json run_renyi(Options& o) {
    Resolved r = resolve_model(o);
    if (!o.s_given) throw input_error("renyi needs --s");
    const auto d = renyi(need_kernel(r), need_kernel2(r), o.s);
    json res;
    res["s"] = o.s;
    res["value"] = d.value;
    res["finite"] = d.finite;
    res["method"] = "renyi_limit";
    return res;
}

inline json run_pythagoras(Options& o) {
    Resolved r = resolve_model(o);
    const ExpFamily& fam = need_family(r);
    if (o.theta_prime_csv.empty() || o.theta_dprime_csv.empty() || o.k < 1)
        throw input_error("pythagoras-check needs --theta-prime, --theta-dprime and --k");
    const Vector tp = parse_csv_vector(o.theta_prime_csv, "theta-prime");
    const Vector tdp = parse_csv_vector(o.theta_dprime_csv, "theta-dprime");
    const FamilyPoint mid = pythagoras_point(fam, tp, tdp, o.k);
    const double d_total = bregman_divergence(fam, tp, tdp);
    const double d_left = bregman_divergence(fam, tp, mid.theta);
    const double d_right = bregman_divergence(fam, mid.theta, tdp);
    json res;
    res["k"] = o.k;
    res["theta_mid"] = json_vector(mid.theta);
    res["eta_mid"] = json_vector(mid.eta);
    res["d_total"] = d_total;
    res["d_left"] = d_left;
    res["d_right"] = d_right;
    res["additivity_gap"] = d_total - d_left - d_right;
    return res;
}

inline json run_project_mixture(Options& o) {
    Resolved r = resolve_model(o);
    const ExpFamily& fam = need_family(r);  // generators define the constraints
    if (o.targets_csv.empty()) throw input_error("project-mixture needs --targets");
    const Vector targets = parse_csv_vector(o.targets_csv, "targets");
    const FamilyPoint p =
        m_project(need_kernel(r), MixtureConstraints{fam.generators(), targets});
    json res;
    res["targets"] = json_vector(targets);
    res["theta"] = json_vector(p.theta);
    res["eta"] = json_vector(p.eta);
    res["kernel"] = json_matrix_rows(p.kernel.matrix());
    res["divergence_from_base"] = bregman_divergence(fam, p.theta, Vector::Zero(fam.dim()));
    return res;
}

inline json run_project_exp(Options& o) {
    Resolved r = resolve_model(o);
    const ExpFamily& fam = need_family(r);
    const TransitionKernel& w = need_kernel2(r);
    const FamilyPoint p = e_project(w, fam);
    json res;
    res["theta"] = json_vector(p.theta);
    res["eta"] = json_vector(p.eta);
    res["divergence"] = relative_entropy(w, p.kernel, RelEntropyMethod::stationary_form).value;
    return res;
}

inline json run_estimate(Options& o) {
    Resolved r = resolve_model(o);
    const ExpFamily& fam = need_family(r);
    const Trajectory traj = load_trajectory(o.data_path, o);
    EstimateReport rep = estimate_expectation(traj, fam);
    if (o.natural) {
        const SolveMethod method =
            o.method == "nelder-mead" ? SolveMethod::nelder_mead : SolveMethod::newton;
        estimate_natural(rep, fam, method);
    }
    json res;
    res["n"] = rep.n;
    res["eta_hat"] = json_vector(rep.eta_hat);
    if (rep.theta_hat) res["theta_hat"] = json_vector(*rep.theta_hat);
    if (!rep.diagnostic.empty()) res["diagnostic"] = rep.diagnostic;
    return res;
}

inline json run_estimate_curved(Options& o) {
    Resolved r = resolve_model(o);
    const CurvedFamily& cf = need_curved(r);
    const Trajectory traj = load_trajectory(o.data_path, o);
    CurvedEstimateOptions opt;
    if (o.eval_path == "stationary") opt.path = EvalPath::stationary;
    else if (o.eval_path != "bregman")
        throw input_error("--eval-path must be bregman or stationary");
    const EstimateReport rep = estimate_curved(traj, cf, opt);
    json res;
    res["n"] = rep.n;
    res["eta_hat"] = json_vector(rep.eta_hat);
    res["eval_path"] = o.eval_path;
    if (rep.xi_hat) {
        res["xi_hat"] = json_vector(*rep.xi_hat);
        res["divergence"] = rep.curved_divergence;
    }
    if (!rep.diagnostic.empty()) res["diagnostic"] = rep.diagnostic;
    return res;
}

inline json run_simulate(Options& o) {
    Resolved r = resolve_model(o);
    const TransitionKernel& k = need_kernel(r);
    if (o.n < 1) throw input_error("simulate needs --n");
    SamplerConfig cfg{k, parse_initial(o, r), o.n, o.seed, o.trials, o.threads};
    json res;
    res["n"] = o.n;
    res["trials"] = o.trials;
    if (o.emit_trajectory) {
        if (o.trials != 1) throw input_error("--emit-trajectory needs --trials 1");
        const Trajectory t = sample(cfg, 0);
        json states = json::array();
        for (int s : t.states) states.push_back(s);
        res["trajectory"] = states;
        return res;
    }
    const ExpFamily& fam = need_family(r);
    MonteCarloReport rep = run_monte_carlo(cfg, fam.generators());
    if (!o.theta_csv.empty()) {
        const Vector theta = parse_csv_vector(o.theta_csv, "theta");
        rep.target_eta = fam.point(theta).eta;
        rep.target_fisher = fam.fisher(theta).entries;
    }
    res["mean"] = json_vector(rep.mean);
    res["covariance_defined"] = rep.covariance_defined;
    res["covariance"] = json_matrix(rep.covariance);
    res["n_times_variance"] = json_matrix(rep.n_times_variance);
    if (rep.target_eta) res["target_eta"] = json_vector(*rep.target_eta);
    if (rep.target_fisher) res["target_fisher"] = json_matrix(*rep.target_fisher);
    if (!o.csv_path.empty()) {
        std::ofstream out(o.csv_path, std::ios::binary);
        if (!out) throw input_error("cannot open CSV output '" + o.csv_path + "'");
        write_trials_csv(out, rep);
        res["csv"] = o.csv_path;
    }
    res["runtime_seconds"] = rep.runtime_seconds;
    return res;
}

inline json run_oracle(Options& o) {
    Resolved r = resolve_model(o);
    if (o.n < 1) throw input_error("oracle subtools need --n");
    json res;
    res["tool"] = o.oracle_tool;
    res["n"] = o.n;
    if (o.oracle_tool == "moments") {
        const ExpFamily& fam = need_family(r);
        const Vector theta = need_theta(o, fam);
        const FamilyPoint p = fam.point(theta);
        const auto mom =
            exhaustive_moments(p.kernel, parse_initial(o, r), fam.generators(), o.n);
        res["theta"] = json_vector(theta);
        res["mean"] = json_vector(mom.mean);
        res["cov"] = json_matrix(mom.cov);
    } else if (o.oracle_tool == "fisher") {
        const ExpFamily& fam = need_family(r);
        const Vector theta = need_theta(o, fam);
        res["theta"] = json_vector(theta);
        res["fisher"] = json_matrix(exhaustive_fisher(fam, theta, parse_initial(o, r), o.n));
    } else if (o.oracle_tool == "divergence-rate") {
        const TransitionKernel& w = need_kernel(r);
        const TransitionKernel& v = need_kernel2(r);
        const Vector p_init =
            parse_initial(o, r).value_or(stationary_distribution(w));
        const Vector q_init = stationary_distribution(v);
        const std::optional<double> s =
            o.s_given ? std::optional<double>(o.s) : std::nullopt;
        const double rate = joint_divergence_rate(w, v, p_init, q_init, o.n, s);
        res["finite"] = std::isfinite(rate);
        res["rate"] = rate;
        if (s) res["s"] = *s;
    } else {
        throw input_error("oracle tool must be moments, fisher, or divergence-rate");
    }
    return res;
}

inline json run_model(Options& o) {
    Resolved r = resolve_model(o);
    json res;
    res["source"] = r.description.empty() ? "none" : r.description;
    if (r.bisto) {
        const auto& b = *r.bisto;
        res["states"] = b.m + 1;
        res["permutation_count"] = static_cast<int>(b.perms.size());
        res["constraint_count"] = b.m;
        res["mixture_dimension"] = static_cast<int>(b.perms.size()) + b.m;
        res["dual_check_error"] = b.dual_check_error;
        return res;
    }
    const TransitionKernel& k = need_kernel(r);
    res["states"] = k.size();
    res["kernel"] = json_matrix_rows(k.matrix());
    res["irreducible"] = k.irreducible();
    res["ergodic"] = k.ergodic();
    if (r.family) {
        const auto& cert = r.family->certificate();
        res["dimension"] = r.family->dim();
        res["independence"] = {{"independent", cert.independent},
                               {"min_singular_value", cert.min_singular_value}};
        if (r.file && !r.file->generators.empty()) {
            json names = json::array();
            for (const auto& [name, g] : r.file->generators) names.push_back(name);
            res["generator_names"] = names;
        }
    }
    return res;
}

// --- driver ----------------------------------------------------------------

inline json make_report(const std::string& command, const Options& o, const json& results,
                        const json& diagnostics) {
    std::string blob = command;
    for (const auto& part : o.digest_parts) {
        blob += '\x1f';
        blob += part;
    }
    json rep;
    rep["command"] = command;
    rep["inputs_digest"] = fnv1a_hex(blob);
    rep["results"] = results;
    rep["diagnostics"] = diagnostics;
    if (o.seed_given) rep["seed"] = o.seed;
    else rep["seed"] = nullptr;
    return rep;
}

inline int cli_main(int argc, const char* const* argv) {
    CLI::App app{"information geometry of finite-state transition kernels"};
    app.require_subcommand(1);
    Options o;
    for (int i = 1; i < argc; ++i) {
        const std::string tok = argv[i];
        // the digest tracks inputs that determine results; the worker count is
        // an execution knob and reports must not depend on it
        if (tok == "--threads") { ++i; continue; }
        if (tok.rfind("--threads=", 0) == 0) continue;
        o.digest_parts.push_back(tok);
    }

    auto add_common = [&](CLI::App* s) {
        s->add_option("--model", o.model_name, "built-in model: m2|full|restricted|bistochastic");
        s->add_option("--model-file", o.model_file, "JSON model file");
        s->add_option("--model-file2", o.model_file2, "second kernel source");
        s->add_option("--model-file3", o.model_file3, "third kernel source");
        s->add_option("--states", o.states, "state count for built-in models");
        s->add_option("--theta", o.theta_csv, "natural parameter, comma-separated");
        s->add_option("--tol", o.tol, "eigen-solver tolerance");
        s->add_option("--initial", o.initial_csv, "initial law (comma list) or 'stationary'");
        return s;
    };

    add_common(app.add_subcommand("pf", "support structure, principal eigenpair, stationary law"));
    add_common(app.add_subcommand("phi", "potential and tilted matrix at theta"));
    add_common(app.add_subcommand("eta", "family point: kernel, stationary law, expectations"));
    auto* fisher_cmd =
        add_common(app.add_subcommand("fisher", "Fisher information and related bounds"));
    fisher_cmd->add_flag("--from-divergence", o.from_divergence,
                         "recover the quadratic form from divergences along --c");
    fisher_cmd->add_option("--c", o.c_csv, "direction for --from-divergence");
    fisher_cmd->add_option("--s", o.s, "Renyi order for --from-divergence")
        ->each([&](const std::string&) { o.s_given = true; });
    fisher_cmd->add_option("--cr-n", o.cr_n, "add the information accounting for length n");
    fisher_cmd->add_option("--xi", o.xi_csv, "embedded parameter for the curved Fisher matrix");
    auto* tfe = add_common(app.add_subcommand("theta-from-eta", "invert the gradient map"));
    tfe->add_option("--eta", o.eta_csv, "target expectation vector");
    tfe->add_option("--method", o.method, "newton|nelder-mead");
    auto* div = add_common(app.add_subcommand("divergence", "relative entropy rate"));
    div->add_option("--divergence-method", o.divergence_method, "eigen|stationary|both");
    div->add_flag("--properties-check", o.properties_check,
                  "divergence convexity check (both mixture inequalities)");
    div->add_option("--p", o.p, "mixture weight for --properties-check");
    auto* ren = add_common(app.add_subcommand("renyi", "Renyi divergence rate of order 1+s"));
    ren->add_option("--s", o.s, "order parameter")->each([&](const std::string&) {
        o.s_given = true;
    });
    auto* pyth = add_common(
        app.add_subcommand("pythagoras-check", "mixed-coordinate point and additivity gap"));
    pyth->add_option("--theta-prime", o.theta_prime_csv, "first parameter");
    pyth->add_option("--theta-dprime", o.theta_dprime_csv, "second parameter");
    pyth->add_option("--k", o.k, "number of expectation coordinates to pin");
    auto* pm = add_common(
        app.add_subcommand("project-mixture", "divergence minimizer over a mixture set"));
    pm->add_option("--targets", o.targets_csv, "constraint expectations");
    add_common(app.add_subcommand("project-exp",
                                  "divergence minimizer over the family (projects kernel2)"));
    auto* est = add_common(app.add_subcommand("estimate", "estimators from a recorded path"));
    est->add_option("--data", o.data_path, "trajectory file (integers)");
    est->add_flag("--natural", o.natural, "also invert to the natural parameter");
    est->add_option("--method", o.method, "newton|nelder-mead");
    auto* estc = add_common(
        app.add_subcommand("estimate-curved", "estimator constrained to the curved family"));
    estc->add_option("--data", o.data_path, "trajectory file (integers)");
    estc->add_option("--eval-path", o.eval_path, "bregman|stationary");
    auto* sim = add_common(app.add_subcommand("simulate", "trajectory sampling and Monte Carlo"));
    sim->add_option("--n", o.n, "transitions per trajectory");
    sim->add_option("--trials", o.trials, "number of independent trials");
    sim->add_option("--seed", o.seed, "master seed")->each([&](const std::string&) {
        o.seed_given = true;
    });
    sim->add_option("--threads", o.threads, "worker threads (result is thread-count invariant)");
    sim->add_option("--csv", o.csv_path, "write per-trial estimates as CSV");
    sim->add_flag("--emit-trajectory", o.emit_trajectory, "report the sampled path (trials=1)");
    auto* orc = add_common(app.add_subcommand("oracle", "exhaustive-enumeration checks"));
    orc->add_option("tool", o.oracle_tool, "moments|fisher|divergence-rate")->required();
    orc->add_option("--n", o.n, "transitions per trajectory");
    orc->add_option("--s", o.s, "Renyi order for divergence-rate")
        ->each([&](const std::string&) { o.s_given = true; });
    add_common(app.add_subcommand("model", "describe a model and its certificates"));

    try {
        app.parse(argc, const_cast<char**>(argv));
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 2;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        json results;
        if (sub == "pf") results = run_pf(o);
        else if (sub == "phi") results = run_phi(o);
        else if (sub == "eta") results = run_eta(o);
        else if (sub == "fisher") results = run_fisher(o);
        else if (sub == "theta-from-eta") results = run_theta_from_eta(o);
        else if (sub == "divergence") results = run_divergence(o);
        else if (sub == "renyi") results = run_renyi(o);
        else if (sub == "pythagoras-check") results = run_pythagoras(o);
        else if (sub == "project-mixture") results = run_project_mixture(o);
        else if (sub == "project-exp") results = run_project_exp(o);
        else if (sub == "estimate") results = run_estimate(o);
        else if (sub == "estimate-curved") results = run_estimate_curved(o);
        else if (sub == "simulate") results = run_simulate(o);
        else if (sub == "oracle") results = run_oracle(o);
        else if (sub == "model") results = run_model(o);
        else throw input_error("unknown subcommand '" + sub + "'");
        std::cout << dump_report(make_report(sub, o, results, json::array()));
        return 0;
    } catch (const input_error& e) {
        std::cerr << "input error: " << e.what() << "\n"
                  << "run 'markovig " << sub << " --help' for usage\n";
        return 2;
    } catch (const structural_error& e) {
        std::cerr << "input error: " << e.what() << "\n"
                  << "run 'markovig " << sub << " --help' for usage\n";
        return 2;
    } catch (const error& e) {
        json diag = json::array();
        diag.push_back(e.what());
        std::cout << dump_report(make_report(sub, o, nullptr, diag));
        return 3;
    }
}

}  // namespace migcli
