#include "ril/json_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ril/errors.hpp"

namespace ril {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kParseRowTol = 1e-9;

class Violations {
public:
    template <class... Parts>
    void add(Parts&&... parts) {
        std::ostringstream os;
        (os << ... << parts);
        list_.push_back(os.str());
    }
    bool empty() const { return list_.empty(); }
    void raise(const std::string& what) {
        if (!list_.empty()) throw ParseError(what, std::move(list_));
    }

private:
    std::vector<std::string> list_;
};

double number(const Json& j, const std::string& where, Violations& v) {
    if (!j.is_number()) {
        v.add(where, " is not a number");
        return 0.0;
    }
    const double x = j.get<double>();
    if (!std::isfinite(x)) v.add(where, " is not finite");
    return x;
}

Table3 read_table3(const Json& j, std::size_t n, std::size_t k, const std::string& field,
                   Violations& v) {
    Table3 t(n, k);
    if (!j.is_array() || j.size() != n) {
        v.add(field, " must have ", n, " rows");
        return t;
    }
    for (StateId s = 0; s < n; ++s) {
        if (!j[s].is_array() || j[s].size() != k) {
            v.add(field, "[", s, "] must have ", k, " entries");
            continue;
        }
        for (ActionId a = 0; a < k; ++a) {
            const Json& row = j[s][a];
            if (!row.is_array() || row.size() != n) {
                v.add(field, "[", s, "][", a, "] must have ", n, " entries");
                continue;
            }
            for (StateId t2 = 0; t2 < n; ++t2)
                t(s, a, t2) = number(row[t2], field + "[" + std::to_string(s) + "][" +
                                                  std::to_string(a) + "][" + std::to_string(t2) + "]",
                                     v);
        }
    }
    return t;
}

/// Checks a probability vector and rescales it to an exact sum.
void normalize(std::span<double> p, const std::string& where, Violations& v) {
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0) v.add(where, "[", i, "] = ", p[i], " is negative");
        sum += p[i];
    }
    if (std::abs(sum - 1.0) > kParseRowTol) {
        v.add(where, " row sum ", sum, " != 1");
        return;
    }
    for (double& x : p) x /= sum;
}

std::vector<std::string> names(const Json& j, const char* field, Violations& v) {
    std::vector<std::string> out;
    if (!j.contains(field) || !j[field].is_array() || j[field].empty()) {
        v.add("'", field, "' must be a nonempty array of names");
        return out;
    }
    for (const auto& x : j[field]) {
        if (!x.is_string()) v.add("'", field, "' entries must be strings");
        else out.push_back(x.get<std::string>());
    }
    return out;
}

Json transitions_to_json(const std::vector<Transition>& ts) {
    Json out = Json::array();
    for (const auto& t : ts) out.push_back({t.s, t.a, t.next});
    return out;
}

std::vector<Transition> transitions_from_json(const Json& j) {
    std::vector<Transition> out;
    for (const auto& t : j) out.push_back({t.at(0).get<StateId>(), t.at(1).get<ActionId>(), t.at(2).get<StateId>()});
    return out;
}

Table2 table2_from_json(const Json& j) {
    const std::size_t n = j.size();
    const std::size_t k = n ? j.at(0).size() : 0;
    Table2 t(n, k);
    for (StateId s = 0; s < n; ++s)
        for (ActionId a = 0; a < k; ++a) t(s, a) = j.at(s).at(a).get<double>();
    return t;
}

Table3 table3_plain(const Json& j) {
    const std::size_t n = j.size();
    const std::size_t k = n ? j.at(0).size() : 0;
    Violations v;
    Table3 t = read_table3(j, n, k, "table", v);
    v.raise("malformed table");
    return t;
}

} // namespace

Json table_to_json(const Table3& t) {
    Json out = Json::array();
    for (StateId s = 0; s < t.states(); ++s) {
        Json per_action = Json::array();
        for (ActionId a = 0; a < t.actions(); ++a) {
            const auto row = t.row(s, a);
            per_action.push_back(std::vector<double>(row.begin(), row.end()));
        }
        out.push_back(std::move(per_action));
    }
    return out;
}

Json table_to_json(const Table2& t) {
    Json out = Json::array();
    for (StateId s = 0; s < t.states(); ++s) {
        const auto row = t.row(s);
        out.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return out;
}

Json mdp_to_json(const Mdp& m) {
    Json out;
    out["states"] = m.state_names();
    out["actions"] = m.action_names();
    out["gamma"] = m.gamma();
    out["mu0"] = std::vector<double>(m.mu0().begin(), m.mu0().end());
    out["tau"] = table_to_json(m.tau());
    out["reward"] = table_to_json(m.reward());
    return out;
}

Mdp mdp_from_json(const Json& j) {
    Violations v;
    if (!j.is_object()) throw ParseError("MDP file must hold a JSON object", {"top level is not an object"});
    for (const char* key : {"states", "actions", "gamma", "mu0", "tau", "reward"})
        if (!j.contains(key)) v.add("missing field '", key, "'");
    v.raise("invalid MDP file");
    const auto states = names(j, "states", v);
    const auto actions = names(j, "actions", v);
    v.raise("invalid MDP file");
    const std::size_t n = states.size();
    const std::size_t k = actions.size();
    const double gamma = number(j["gamma"], "gamma", v);
    if (!(gamma > 0.0 && gamma < 1.0)) v.add("gamma ", gamma, " out of (0,1)");
    std::vector<double> mu0(n, 0.0);
    if (!j["mu0"].is_array() || j["mu0"].size() != n) {
        v.add("mu0 must have ", n, " entries");
    } else {
        for (StateId s = 0; s < n; ++s) mu0[s] = number(j["mu0"][s], "mu0[" + std::to_string(s) + "]", v);
        normalize(mu0, "mu0", v);
    }
    Table3 tau = read_table3(j["tau"], n, k, "tau", v);
    Table3 reward = read_table3(j["reward"], n, k, "reward", v);
    if (v.empty())
        for (StateId s = 0; s < n; ++s)
            for (ActionId a = 0; a < k; ++a)
                normalize(tau.row(s, a), "tau[" + std::to_string(s) + "][" + std::to_string(a) + "]", v);
    v.raise("invalid MDP file");
    return Mdp(states, actions, std::move(tau), std::move(mu0), std::move(reward), gamma);
}

Table3 table3_from_json(const Json& j, std::size_t states, std::size_t actions,
                        const std::string& field) {
    Violations v;
    Table3 t = read_table3(j, states, actions, field, v);
    v.raise("invalid " + field);
    return t;
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string(), {"file not readable: " + path.string()});
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("malformed JSON in " + path.string(), {e.what()});
    }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

Mdp load_mdp(const std::filesystem::path& path) { return mdp_from_json(read_json_file(path)); }

Json policy_to_json(const Policy& p) { return table_to_json(p.table()); }

Json value_tables_to_json(const ValueTables& v) {
    Json out;
    out["q"] = table_to_json(v.q);
    out["v"] = v.v;
    out["adv"] = table_to_json(v.adv);
    if (v.j) out["j"] = *v.j;
    return out;
}

Json action_sets_to_json(const ActionSets& sets) {
    Json out = Json::array();
    for (const auto& s : sets) out.push_back(s);
    return out;
}

Json spec_to_json(const TransformSpec& spec) {
    Json out;
    out["tag"] = std::string(spec_tag(spec));
    std::visit(Overloaded{
                   [](const Identity&) {},
                   [&](const PotentialShaping& p) {
                       out["potential"] = p.potential;
                       if (p.k_initial) out["k_initial"] = *p.k_initial;
                   },
                   [&](const SPrimeRedistribution& d) { out["delta"] = table_to_json(d.delta); },
                   [&](const PositiveLinearScaling& c) { out["c"] = c.c; },
                   [&](const ZeroPreservingMonotone& f) {
                       Json b = Json::array();
                       for (const auto& [x, y] : f.breakpoints) b.push_back({x, y});
                       out["breakpoints"] = std::move(b);
                   },
                   [&](const Mask& x) {
                       out["transitions"] = transitions_to_json(x.transitions);
                       out["replacement"] = x.replacement;
                   },
                   [&](const OptimalityPreserving& o) {
                       out["optimal"] = action_sets_to_json(o.optimal);
                       out["psi"] = o.psi;
                       out["gaps"] = table_to_json(o.gaps);
                       out["split"] = table_to_json(o.split);
                   },
               },
               spec);
    return out;
}

TransformSpec spec_from_json(const Json& j) {
    try {
        const std::string tag = j.at("tag").get<std::string>();
        if (tag == "identity") return Identity{};
        if (tag == "potential_shaping") {
            PotentialShaping p;
            p.potential = j.at("potential").get<std::vector<double>>();
            if (j.contains("k_initial")) p.k_initial = j["k_initial"].get<double>();
            return p;
        }
        if (tag == "sprime_redistribution") return SPrimeRedistribution{table3_plain(j.at("delta"))};
        if (tag == "positive_linear_scaling") return PositiveLinearScaling{j.at("c").get<double>()};
        if (tag == "zero_preserving_monotone") {
            ZeroPreservingMonotone f;
            for (const auto& b : j.at("breakpoints"))
                f.breakpoints.emplace_back(b.at(0).get<double>(), b.at(1).get<double>());
            return f;
        }
        if (tag == "mask")
            return Mask{transitions_from_json(j.at("transitions")),
                        j.at("replacement").get<std::vector<double>>()};
        if (tag == "optimality_preserving") {
            OptimalityPreserving o;
            for (const auto& s : j.at("optimal")) o.optimal.push_back(s.get<std::vector<ActionId>>());
            o.psi = j.at("psi").get<std::vector<double>>();
            o.gaps = table2_from_json(j.at("gaps"));
            o.split = table3_plain(j.at("split"));
            return o;
        }
        throw ParseError("unknown transform tag", {"unknown tag '" + tag + "'"});
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("malformed transform", {e.what()});
    }
}

Json chain_to_json(const TransformChain& chain) {
    Json out = Json::array();
    for (const auto& s : chain) out.push_back(spec_to_json(s));
    return out;
}

TransformChain chain_from_json(const Json& j) {
    TransformChain out;
    if (j.is_object()) {
        out.push_back(spec_from_json(j));
        return out;
    }
    for (const auto& s : j) out.push_back(spec_from_json(s));
    return out;
}

Json sampler_to_json(const MdpSamplerConfig& c) {
    Json out;
    out["min_states"] = c.min_states;
    out["max_states"] = c.max_states;
    out["min_actions"] = c.min_actions;
    out["max_actions"] = c.max_actions;
    out["sparsity"] = c.sparsity;
    out["orphan_prob"] = c.orphan_prob;
    out["terminal_prob"] = c.terminal_prob;
    out["max_initial"] = c.max_initial;
    out["gammas"] = c.gammas;
    out["reward_low"] = c.reward_low;
    out["reward_high"] = c.reward_high;
    return out;
}

MdpSamplerConfig sampler_from_json(const Json& j) {
    MdpSamplerConfig c;
    try {
        c.min_states = j.value("min_states", c.min_states);
        c.max_states = j.value("max_states", c.max_states);
        c.min_actions = j.value("min_actions", c.min_actions);
        c.max_actions = j.value("max_actions", c.max_actions);
        c.sparsity = j.value("sparsity", c.sparsity);
        c.orphan_prob = j.value("orphan_prob", c.orphan_prob);
        c.terminal_prob = j.value("terminal_prob", c.terminal_prob);
        c.max_initial = j.value("max_initial", c.max_initial);
        c.gammas = j.value("gammas", c.gammas);
        c.reward_low = j.value("reward_low", c.reward_low);
        c.reward_high = j.value("reward_high", c.reward_high);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("malformed sampler config", {e.what()});
    }
    try {
        c.validate();
    } catch (const ContractError& e) {
        throw ParseError("invalid sampler config", {e.what()});
    }
    return c;
}

} // namespace ril
