#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "ril/errors.hpp"

namespace ril::cli {

namespace {

template <class Range, class Tag>
std::string tag_list(const Range& items, Tag tag) {
    std::string out;
    for (const auto& x : items) {
        if (!out.empty()) out += ", ";
        out += tag(x);
    }
    return out;
}

namespace fs = std::filesystem;

template <class T>
void read_field(const Json& j, const char* key, T& into, std::vector<std::string>& bad) {
    if (!j.contains(key)) return;
    try {
        into = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        bad.push_back(std::string(key) + ": wrong type");
    }
}

// Options every subcommand accepts. Unset ones leave the config alone.
struct CommonFlags {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<double> tol;
    std::string out;
    std::string config;

    void attach(CLI::App* app) {
        app->add_option("--seed", seed, "experiment seed");
        app->add_option("--trials", trials, "trials per check")->check(CLI::PositiveNumber);
        app->add_option("--tol", tol, "relative payload tolerance")->check(CLI::PositiveNumber);
        app->add_option("--out", out, "report path (stdout when omitted)");
        app->add_option("--config", config, "experiment config JSON")->check(CLI::ExistingFile);
    }
};

struct Run {
    ExperimentConfig config;
    Json inputs = Json::array();

    void add_input(const std::string& path) {
        inputs.push_back({{"path", path}, {"sha256", file_sha256(path)}});
    }
};

Run prepare(const CommonFlags& f, bool trials_are_order = false) {
    Run r;
    if (!f.config.empty()) {
        r.config = config_from_json(read_json_file(f.config));
        r.add_input(f.config);
    }
    if (f.seed) r.config.seed = *f.seed;
    if (f.trials) (trials_are_order ? r.config.order_trials : r.config.trials) = *f.trials;
    if (f.tol) r.config.tolerance = *f.tol;
    r.config.validate();
    return r;
}

void emit(const std::string& command, const Run& run, Json verdicts, double seconds,
          const std::string& out_path, const ExperimentConfig& config, std::ostream& out) {
    Json report;
    report["tool"] = "ril";
    report["version"] = kVersion;
    report["command"] = command;
    report["config"] = config_to_json(config);
    report["inputs"] = run.inputs;
    report["verdicts"] = std::move(verdicts);
    report["timings"] = {{"wall_seconds", seconds}};
    if (out_path.empty()) {
        out << report.dump(2) << "\n";
        return;
    }
    fs::path p(out_path);
    if (p.is_relative() && !config.output_dir.empty()) p = fs::path(config.output_dir) / p;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    write_json_file(p, report);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Json solve_report(const Mdp& m, const SolverParams& sp) {
    const Policy uniform = Policy::uniform(m.num_states(), m.num_actions());
    ValueTables qpi = policy_q(m, uniform);
    qpi.j = policy_value(m, uniform);
    const ValueTables qstar = optimal_q(m, sp);
    const ValueTables qsoft = soft_q(m, sp);
    const Policy boltz = boltzmann_rational_policy(qstar, sp.beta);
    const Policy mce = mce_policy(qsoft, sp.beta);
    const ActionSets sets = optimal_action_sets(qstar, tie_tolerance(m, sp));
    const Policy supportive = uniform_over(sets, m.num_actions());

    Json v;
    v["q_uniform"] = value_tables_to_json(qpi);
    v["q_star"] = value_tables_to_json(qstar);
    v["q_soft"] = value_tables_to_json(qsoft);
    v["optimal_action_sets"] = action_sets_to_json(sets);
    Json pols;
    for (const auto& [name, pi] : {std::pair<const char*, const Policy*>{"uniform", &uniform},
                                   {"boltzmann", &boltz},
                                   {"mce", &mce},
                                   {"supportive_optimal", &supportive}}) {
        pols[name] = {{"table", policy_to_json(*pi)}, {"j", policy_value(m, *pi)}};
    }
    v["policies"] = std::move(pols);
    v["iterations"] = {{"q_star", qstar.iterations}, {"q_soft", qsoft.iterations}};
    return v;
}

std::optional<Mark> expected_mark(ObjectKind kind, TransformClass cls) {
    const auto t = expected_directory_table();
    for (const auto& row : t.rows)
        if (std::find(row.kinds.begin(), row.kinds.end(), kind) != row.kinds.end())
            for (std::size_t c = 0; c < t.columns.size(); ++c)
                if (t.columns[c] == cls) return row.marks[c];
    return std::nullopt;
}

std::vector<std::optional<double>> targets_from_json(const Json& j, std::size_t states,
                                                     std::size_t actions) {
    const Json& t = j.is_object() ? j.at("targets") : j;
    std::vector<std::string> bad;
    std::vector<std::optional<double>> out(states * actions);
    if (!t.is_array() || t.size() != states) throw ParseError("bad L file", {"targets must have one row per state"});
    for (std::size_t s = 0; s < states; ++s) {
        if (!t[s].is_array() || t[s].size() != actions) {
            bad.push_back("targets[" + std::to_string(s) + "] must have one entry per action");
            continue;
        }
        for (std::size_t a = 0; a < actions; ++a) {
            const Json& e = t[s][a];
            if (e.is_null()) continue;
            if (!e.is_number() || !std::isfinite(e.get<double>())) {
                bad.push_back("targets[" + std::to_string(s) + "][" + std::to_string(a) + "] not a finite number");
                continue;
            }
            out[s * actions + a] = e.get<double>();
        }
    }
    if (!bad.empty()) throw ParseError("bad L file", bad);
    return out;
}

double max_abs_diff(const Table2& a, const Table2& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.flat().size(); ++i) d = std::max(d, std::abs(a.flat()[i] - b.flat()[i]));
    return d;
}

Json transfer_report(const Mdp& m, const Table3& tau_prime, const std::vector<std::optional<double>>& targets,
                     const SolverParams& sp) {
    TransferTarget target{tau_prime, targets};
    const Table3 r2 = transfer_redistribution(m, target);
    const Mdp moved = m.with_tau(tau_prime);
    const Table2 e1 = expected_rewards(m.tau(), m.reward());
    const Table2 e2 = expected_rewards(m.tau(), r2);
    const Table2 e2_prime = expected_rewards(tau_prime, r2);
    double target_err = 0.0;
    for (StateId s = 0; s < m.num_states(); ++s)
        for (ActionId a = 0; a < m.num_actions(); ++a)
            if (const auto l = target.target(s, a)) target_err = std::max(target_err, std::abs(e2_prime(s, a) - *l));

    const ActionSets before = optimal_action_sets(moved, sp);
    const ActionSets after = optimal_action_sets(moved.with_reward(r2), sp);
    Json flips = Json::array();
    for (StateId s = 0; s < m.num_states(); ++s)
        if (before[s] != after[s]) flips.push_back(s);

    Json v;
    v["r2"] = table_to_json(r2);
    v["expectation_under_tau_error"] = max_abs_diff(e1, e2);
    v["target_under_tau_prime_error"] = target_err;
    v["checks_pass"] = max_abs_diff(e1, e2) <= 1e-10 && target_err <= 1e-10;
    v["optimal_sets_tau_prime_r1"] = action_sets_to_json(before);
    v["optimal_sets_tau_prime_r2"] = action_sets_to_json(after);
    v["flipped_states"] = std::move(flips);
    return v;
}

} // namespace

void ExperimentConfig::validate() const {
    std::vector<std::string> bad;
    if (trials == 0) bad.push_back("trials must be positive");
    if (budget == 0) bad.push_back("budget must be positive");
    if (mixed_samples == 0) bad.push_back("mixed_samples must be positive");
    if (order_trials == 0) bad.push_back("order_trials must be positive");
    if (!(tolerance > 0.0) || !std::isfinite(tolerance)) bad.push_back("tolerance must be positive");
    if (!(beta > 0.0) || !std::isfinite(beta)) bad.push_back("beta must be positive");
    if (resolution.max_cycle == 0) bad.push_back("max_cycle must be positive");
    if (resolution.cap == 0) bad.push_back("cap must be positive");
    try {
        sampler.validate();
    } catch (const ContractError& e) {
        bad.push_back(e.what());
    }
    if (!bad.empty()) throw ParseError("invalid experiment config", bad);
}

ExperimentParams ExperimentConfig::params() const {
    ExperimentParams p;
    p.seed = seed;
    p.sampler = sampler;
    p.objects.tolerance = tolerance;
    p.objects.resolution = resolution;
    p.objects.solver.beta = beta;
    return p;
}

ExperimentConfig config_from_json(const Json& j) {
    if (!j.is_object()) throw ParseError("config must be a JSON object");
    ExperimentConfig c;
    std::vector<std::string> bad;
    static const std::set<std::string> known{"seed",      "sampler",    "trials",     "budget",
                                             "mixed_samples", "order_trials", "tolerance", "beta",
                                             "resolution", "output_dir", "kinds",      "classes",
                                             "rows"};
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) bad.push_back("unknown key: " + key);
    read_field(j, "seed", c.seed, bad);
    read_field(j, "trials", c.trials, bad);
    read_field(j, "budget", c.budget, bad);
    read_field(j, "mixed_samples", c.mixed_samples, bad);
    read_field(j, "order_trials", c.order_trials, bad);
    read_field(j, "tolerance", c.tolerance, bad);
    read_field(j, "beta", c.beta, bad);
    read_field(j, "output_dir", c.output_dir, bad);
    read_field(j, "rows", c.rows, bad);
    if (j.contains("sampler")) {
        try {
            c.sampler = sampler_from_json(j.at("sampler"));
        } catch (const ParseError& e) {
            for (const auto& v : e.violations()) bad.push_back("sampler: " + v);
        }
    }
    if (j.contains("resolution")) {
        const Json& r = j.at("resolution");
        read_field(r, "max_fragment_len", c.resolution.max_fragment_len, bad);
        read_field(r, "max_prefix", c.resolution.max_prefix, bad);
        read_field(r, "max_cycle", c.resolution.max_cycle, bad);
        read_field(r, "cap", c.resolution.cap, bad);
    }
    std::vector<std::string> tags;
    tags.clear();
    read_field(j, "kinds", tags, bad);
    for (const auto& t : tags) {
        if (auto k = parse_kind(t)) c.kinds.push_back(*k);
        else bad.push_back("unknown object kind: " + t);
    }
    tags.clear();
    read_field(j, "classes", tags, bad);
    for (const auto& t : tags) {
        if (auto k = parse_class(t)) c.classes.push_back(*k);
        else bad.push_back("unknown transform class: " + t);
    }
    const auto table = expected_directory_table();
    for (const auto& r : c.rows)
        if (std::none_of(table.rows.begin(), table.rows.end(), [&](const TableRow& t) { return t.name == r; }))
            bad.push_back("unknown table row: " + r);
    if (!bad.empty()) throw ParseError("invalid experiment config", bad);
    c.validate();
    return c;
}

Json config_to_json(const ExperimentConfig& c) {
    Json j;
    j["seed"] = c.seed;
    j["sampler"] = sampler_to_json(c.sampler);
    j["trials"] = c.trials;
    j["budget"] = c.budget;
    j["mixed_samples"] = c.mixed_samples;
    j["order_trials"] = c.order_trials;
    j["tolerance"] = c.tolerance;
    j["beta"] = c.beta;
    j["resolution"] = {{"max_fragment_len", c.resolution.max_fragment_len},
                       {"max_prefix", c.resolution.max_prefix},
                       {"max_cycle", c.resolution.max_cycle},
                       {"cap", c.resolution.cap}};
    j["output_dir"] = c.output_dir;
    Json kinds = Json::array(), classes = Json::array();
    for (ObjectKind k : c.kinds) kinds.push_back(kind_tag(k));
    for (TransformClass k : c.classes) classes.push_back(class_tag(k));
    j["kinds"] = std::move(kinds);
    j["classes"] = std::move(classes);
    j["rows"] = c.rows;
    return j;
}

std::string file_sha256(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string data = buf.str();
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return hex.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Reward identifiability experiments", "ril"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    CommonFlags solve_f, transform_f, check_f, table_f, order_f, transfer_f;

    auto* solve = app.add_subcommand("solve", "value tables and policies of one MDP");
    std::string mdp_path;
    SolverParams sp;
    solve->add_option("mdp", mdp_path, "MDP JSON")->required()->check(CLI::ExistingFile);
    solve->add_option("--beta", sp.beta, "inverse temperature")->check(CLI::PositiveNumber);
    solve->add_option("--epsilon", sp.epsilon, "value iteration accuracy")->check(CLI::PositiveNumber);
    solve->add_option("--max-iters", sp.max_iters, "iteration budget")->check(CLI::PositiveNumber);
    solve_f.attach(solve);

    auto* transform = app.add_subcommand("transform", "sample or apply a reward transformation");
    std::string t_mdp, t_class, t_chain;
    bool t_strict = false;
    transform->add_option("mdp", t_mdp, "MDP JSON")->required()->check(CLI::ExistingFile);
    auto* cls_opt = transform->add_option("--class", t_class, "class tag to sample from");
    auto* chain_opt = transform->add_option("--chain", t_chain, "transform chain JSON")->check(CLI::ExistingFile);
    cls_opt->excludes(chain_opt);
    transform->add_flag("--strict", t_strict, "exclude members of smaller classes");
    transform_f.attach(transform);

    auto* check = app.add_subcommand("check", "invariance check or counterexample search for one cell");
    std::string c_kind, c_class, c_mode = "auto", c_mdp;
    std::optional<std::size_t> c_budget;
    check->add_option("--kind", c_kind, "object kind: " + tag_list(kAllKinds, kind_tag))->required();
    check->add_option("--class", c_class, "transform class: " + tag_list(kAllClasses, class_tag))->required();
    check->add_option("--mode", c_mode, "auto, invariance or search")
        ->check(CLI::IsMember({"auto", "invariance", "search"}));
    check->add_option("--budget", c_budget, "counterexample budget")->check(CLI::PositiveNumber);
    check->add_option("--mdp", c_mdp, "run on this MDP instead of sampled ones")->check(CLI::ExistingFile);
    check_f.attach(check);

    auto* table = app.add_subcommand("table", "reproduce the invariance table");
    table_f.attach(table);

    auto* order = app.add_subcommand("order", "ambiguity refinement order as DOT and JSON");
    std::string dot_path;
    std::vector<std::string> roster;
    order->add_option("--dot", dot_path, "DOT output path");
    order->add_option("--kinds", roster, "object roster");
    order_f.attach(order);

    auto* transfer = app.add_subcommand("transfer-demo", "redistribution that meets targets under new dynamics");
    std::string x_mdp, x_tau, x_targets;
    transfer->add_option("mdp", x_mdp, "MDP JSON")->required()->check(CLI::ExistingFile);
    transfer->add_option("tau_prime", x_tau, "new dynamics [s][a][s'] JSON")->required()->check(CLI::ExistingFile);
    transfer->add_option("targets", x_targets, "L as [s][a] JSON, null for no target")
        ->required()
        ->check(CLI::ExistingFile);
    transfer_f.attach(transfer);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    }

    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (solve->parsed()) {
            Run r = prepare(solve_f);
            r.add_input(mdp_path);
            if (!solve->count("--beta")) sp.beta = r.config.beta;
            const Mdp m = load_mdp(mdp_path);
            emit("solve", r, solve_report(m, sp), seconds_since(t0), solve_f.out, r.config, out);
            return kOk;
        }
        if (transform->parsed()) {
            Run r = prepare(transform_f);
            r.add_input(t_mdp);
            const Mdp m = load_mdp(t_mdp);
            Json v;
            TransformChain chain;
            if (!t_chain.empty()) {
                r.add_input(t_chain);
                chain = chain_from_json(read_json_file(t_chain));
            } else {
                const auto cls = parse_class(t_class);
                if (!cls) throw ParseError("unknown transform class: " + t_class);
                SampleOptions opts;
                opts.strict = t_strict;
                opts.solver.beta = r.config.beta;
                auto s = sample_transform(*cls, m, r.config.seed, opts);
                v["class"] = class_tag(*cls);
                v["nondegenerate"] = s.nondegenerate;
                if (!s.notice.empty()) v["notice"] = s.notice;
                chain.push_back(std::move(s.spec));
            }
            const Mdp m2 = apply_chain(m, chain);
            v["chain"] = chain_to_json(chain);
            v["mdp"] = mdp_to_json(m2);
            v["sprime_redistribution"] = is_sprime_redistribution(m, m.reward(), m2.reward());
            v["zero_preserving_monotone"] = is_zero_preserving_monotone(m.reward(), m2.reward());
            emit("transform", r, std::move(v), seconds_since(t0), transform_f.out, r.config, out);
            return kOk;
        }
        if (check->parsed()) {
            Run r = prepare(check_f);
            const auto kind = parse_kind(c_kind);
            const auto cls = parse_class(c_class);
            std::vector<std::string> bad;
            if (!kind) bad.push_back("unknown object kind: " + c_kind);
            if (!cls) bad.push_back("unknown transform class: " + c_class);
            if (!bad.empty()) throw ParseError("bad check arguments", bad);
            std::optional<Mdp> fixture;
            if (!c_mdp.empty()) {
                r.add_input(c_mdp);
                fixture = load_mdp(c_mdp);
            }
            const auto mark = expected_mark(*kind, *cls);
            bool search = c_mode == "search";
            if (c_mode == "auto") search = mark == Mark::Not;
            const ExperimentParams p = r.config.params();
            const Mdp* fx = fixture ? &*fixture : nullptr;
            Json v;
            if (search) {
                const std::size_t budget = c_budget.value_or(r.config.budget);
                auto res = search_counterexample(*kind, *cls, p, budget, fx);
                InvarianceVerdict verdict{*kind, *cls, res.witness ? VerdictStatus::CounterexampleFound
                                                                   : VerdictStatus::Invariant,
                                          res.trials_run, res.draws, std::move(res.witness), {}};
                if (!verdict.witness) verdict.reason = "budget exhausted";
                if (res.trials_run == 0) verdict.status = VerdictStatus::Skipped;
                v = verdict_to_json(verdict);
                v["mode"] = "search";
                v["budget"] = budget;
            } else {
                v = verdict_to_json(check_invariance(*kind, *cls, p, r.config.trials, fx));
                v["mode"] = "invariance";
            }
            v["expected_mark"] = mark ? Json(mark_tag(*mark)) : Json(nullptr);
            emit("check", r, std::move(v), seconds_since(t0), check_f.out, r.config, out);
            return kOk;
        }
        if (table->parsed()) {
            Run r = prepare(table_f);
            TableConfig tc;
            tc.params = r.config.params();
            tc.trials = r.config.trials;
            tc.budget = r.config.budget;
            tc.mixed_samples = r.config.mixed_samples;
            tc.rows = r.config.rows;
            tc.columns = r.config.classes;
            const TableReport rep = reproduce_directory_table(tc);
            emit("table", r, table_report_to_json(rep), seconds_since(t0), table_f.out, r.config, out);
            if (rep.diffs() != 0) {
                err << rep.diffs() << " cell(s) differ from the expected table\n";
                return kTableDiff;
            }
            return kOk;
        }
        if (order->parsed()) {
            Run r = prepare(order_f, true);
            if (!roster.empty()) {
                std::vector<ObjectKind> kinds;
                std::vector<std::string> bad;
                for (const auto& t : roster) {
                    if (auto k = parse_kind(t)) kinds.push_back(*k);
                    else bad.push_back("unknown object kind: " + t);
                }
                if (!bad.empty()) throw ParseError("bad roster", bad);
                r.config.kinds = std::move(kinds);
            }
            std::vector<ObjectKind> kinds = r.config.kinds;
            if (kinds.empty()) kinds.assign(std::begin(kAllKinds), std::end(kAllKinds));
            const HasseDiagram h = hasse_edges(kinds, r.config.params(), r.config.order_trials);
            const OrderDiff diff = compare_order(h, expected_order());
            Json v = hasse_to_json(h);
            v["expected_match"] = diff.matches();
            v["problems"] = diff.problems;
            const std::string dot = to_dot(h);
            v["dot"] = dot;
            if (!dot_path.empty()) {
                std::ofstream f(dot_path);
                if (!f) throw ParseError("cannot write " + dot_path);
                f << dot;
            }
            emit("order", r, std::move(v), seconds_since(t0), order_f.out, r.config, out);
            if (!diff.matches()) {
                for (const auto& s : diff.problems) err << s << "\n";
                return kTableDiff;
            }
            return kOk;
        }
        if (transfer->parsed()) {
            Run r = prepare(transfer_f);
            r.add_input(x_mdp);
            r.add_input(x_tau);
            r.add_input(x_targets);
            const Mdp m = load_mdp(x_mdp);
            const Table3 tau_prime = table3_from_json(read_json_file(x_tau), m.num_states(), m.num_actions(), "tau_prime");
            const auto report = validate_mdp(m.with_tau(tau_prime));
            if (!report.empty()) throw ParseError("tau_prime is not a valid transition table", report);
            const auto targets = targets_from_json(read_json_file(x_targets), m.num_states(), m.num_actions());
            SolverParams tsp;
            tsp.beta = r.config.beta;
            emit("transfer-demo", r, transfer_report(m, tau_prime, targets, tsp), seconds_since(t0),
                 transfer_f.out, r.config, out);
            return kOk;
        }
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        for (const auto& v : e.violations()) err << "  " << v << "\n";
        return kInputError;
    } catch (const ContractError& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const ConvergenceError& e) {
        err << "numerical failure: " << e.what() << " (residual " << e.residual() << " after "
            << e.iterations() << " iterations)\n";
        return kNumericalFailure;
    } catch (const CapExceeded& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumericalFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    }
    return kInputError;
}

} // namespace ril::cli
