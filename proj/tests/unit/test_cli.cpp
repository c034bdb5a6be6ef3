#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "ril/kernels.hpp"

using namespace ril;

namespace fs = std::filesystem;

namespace {

const std::string kData = RIL_DATA_DIR;

std::string mdp(const std::string& name) { return kData + "/mdps/" + name; }

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

Json verdicts(const Result& r) { return Json::parse(r.out).at("verdicts"); }

fs::path scratch() {
    const fs::path p = fs::temp_directory_path() / "ril_cli_test";
    fs::create_directories(p);
    return p;
}

std::string write_file(const std::string& name, const std::string& text) {
    const fs::path p = scratch() / name;
    std::ofstream(p) << text;
    return p.string();
}

} // namespace

TEST_CASE("solve") {
    const auto r = run({"solve", mdp("loop.json")});
    REQUIRE(r.code == 0);
    const Json v = verdicts(r);
    CHECK(std::abs(v["q_star"]["v"][0].get<double>() - 10.0) < 1e-10);
    CHECK(v["policies"].contains("mce"));

    const auto two = verdicts(run({"solve", mdp("two_action.json")}));
    CHECK(std::abs(two["q_star"]["q"][0][0].get<double>() - 2.5) < 1e-10);
    CHECK(std::abs(two["q_star"]["q"][0][1].get<double>() - 3.0) < 1e-10);
    CHECK(two["optimal_action_sets"] == Json::parse("[[1]]"));

    const auto bad = run({"solve", mdp("bad_row_sum.json")});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("row sum") != std::string::npos);

    const auto slow = run({"solve", mdp("slow.json"), "--max-iters", "5"});
    CHECK(slow.code == 3);
    CHECK(slow.err.find("5 iterations") != std::string::npos);
}

TEST_CASE("unknown flags and bad arguments exit 2") {
    CHECK(run({}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    for (const auto& cmd : std::vector<std::vector<std::string>>{
             {"solve", mdp("loop.json")},
             {"transform", mdp("loop.json"), "--class", "identity"},
             {"check", "--kind", "q_star", "--class", "identity"},
             {"table"},
             {"order"},
             {"transfer-demo", mdp("transfer.json"), mdp("transfer_tau_prime.json"), mdp("transfer_targets.json")}}) {
        auto args = cmd;
        args.push_back("--no-such-flag");
        CAPTURE(cmd[0]);
        CHECK(run(args).code == 2);
    }
    CHECK(run({"check", "--kind", "nope", "--class", "identity"}).code == 2);
    CHECK(run({"transform", mdp("loop.json"), "--class", "nope"}).code == 2);
    CHECK(run({"order", "--kinds", "q_star", "nope"}).code == 2);
    CHECK(run({"table", "--trials", "0"}).code == 2);
    CHECK(run({"table", "--tol", "-1"}).code == 2);
}

TEST_CASE("common flags are accepted by every subcommand") {
    const std::string out = (scratch() / "common.json").string();
    const std::vector<std::string> common{"--seed", "7", "--trials", "3", "--tol", "1e-8", "--out", out};
    for (auto cmd : std::vector<std::vector<std::string>>{
             {"solve", mdp("loop.json")},
             {"transform", mdp("two_action.json"), "--class", "positive_linear_scaling"},
             {"check", "--kind", "q_star", "--class", "sprime_redistribution"},
             {"order", "--kinds", "q_star"},
             {"transfer-demo", mdp("transfer.json"), mdp("transfer_tau_prime.json"), mdp("transfer_targets.json")}}) {
        cmd.insert(cmd.end(), common.begin(), common.end());
        fs::remove(out);
        CAPTURE(cmd[0]);
        CHECK(run(cmd).code == 0);
        REQUIRE(fs::exists(out));
        const Json report = read_json_file(out);
        CHECK(report["config"]["seed"] == 7);
        CHECK(report["version"] == cli::kVersion);
        CHECK(report.contains("timings"));
    }
}

TEST_CASE("transfer-demo") {
    const auto base = verdicts(run({"transfer-demo", mdp("transfer.json"), mdp("transfer_tau_prime.json"),
                                    mdp("transfer_targets.json")}));
    CHECK(std::abs(base["r2"][0][0][0].get<double>() + 9.0) < 1e-9);
    CHECK(std::abs(base["r2"][0][0][1].get<double>() - 11.0) < 1e-9);
    CHECK(base["checks_pass"] == true);

    const auto same = verdicts(run({"transfer-demo", mdp("transfer.json"), mdp("transfer_tau_prime.json"),
                                    mdp("transfer_targets_matching.json")}));
    CHECK(same["checks_pass"] == true);
    CHECK(same["flipped_states"].empty());

    const auto adv = verdicts(run({"transfer-demo", mdp("transfer.json"), mdp("transfer_tau_prime.json"),
                                   mdp("transfer_targets_adversarial.json")}));
    CHECK(adv["checks_pass"] == true);
    CHECK(adv["flipped_states"] == Json::parse("[0]"));
    CHECK(adv["optimal_sets_tau_prime_r2"][0] == Json::parse("[0]"));

    // a target on a row whose dynamics did not change
    const std::string bad_l = write_file("bad_l.json", R"({"targets": [[null, 3.0], [null, null]]})");
    CHECK(run({"transfer-demo", mdp("transfer.json"), mdp("transfer_tau_prime.json"), bad_l}).code == 2);
    const std::string bad_tau = write_file("bad_tau.json", "[[[0.3, 0.3], [1.0, 0.0]], [[0.0, 1.0], [0.0, 1.0]]]");
    CHECK(run({"transfer-demo", mdp("transfer.json"), bad_tau, mdp("transfer_targets.json")}).code == 2);
}

TEST_CASE("check and transform") {
    const auto inv = verdicts(run({"check", "--kind", "q_star", "--class", "sprime_redistribution", "--trials", "20"}));
    CHECK(inv["status"] == "invariant");
    CHECK(inv["trials_run"] == 20);
    CHECK(inv["expected_mark"] == "inv");

    const auto cx = verdicts(run({"check", "--kind", "q_star", "--class", "potential_shaping"}));
    CHECK(cx["mode"] == "search");
    CHECK(cx["status"] == "counterexample_found");
    CHECK(cx["witness"].is_object());

    const auto fx = verdicts(run({"check", "--kind", "noiseless_cmp_fragments", "--class",
                                  "zero_preserving_monotone", "--mode", "invariance", "--mdp",
                                  mdp("zpmt_chain.json"), "--trials", "20"}));
    CHECK(fx["status"] == "invariant");

    const auto t = verdicts(run({"transform", mdp("two_action.json"), "--class", "positive_linear_scaling",
                                 "--strict", "--seed", "4"}));
    CHECK(t["nondegenerate"] == true);
    CHECK(t["zero_preserving_monotone"] == true);
    const std::string chain = write_file("chain.json", t["chain"].dump());
    const auto again = verdicts(run({"transform", mdp("two_action.json"), "--chain", chain}));
    CHECK(again["mdp"] == t["mdp"]);
}

TEST_CASE("config files") {
    const std::string ok = write_file("ok.json", R"({"trials": 5, "rows": ["Q"], "classes": ["identity"]})");
    const auto r = run({"table", "--config", ok});
    CHECK(r.code == 0);
    CHECK(verdicts(r)["cells"].size() == 1);
    CHECK(Json::parse(r.out)["inputs"][0]["sha256"].get<std::string>().size() == 64);

    for (const char* text : {R"({"trials": 0})", R"({"kinds": ["nope"]})", R"({"rows": ["nope"]})",
                             R"({"surprise": 1})", R"({"sampler": {"min_states": 9}})", R"({"tolerance": "x"})",
                             "[1, 2]"}) {
        CAPTURE(text);
        CHECK(run({"table", "--config", write_file("bad.json", text)}).code == 2);
    }
}

TEST_CASE("file_sha256") {
    CHECK(cli::file_sha256(write_file("abc.txt", "abc")) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK_THROWS(cli::file_sha256((scratch() / "missing").string()));
}

TEST_CASE("table exit codes and determinism") {
    const std::string cfg =
        write_file("small.json", R"({"trials": 15, "budget": 60, "mixed_samples": 10, "rows": ["pi_star", "pref_star_zeta", "pref_star_xi"]})");
    set_worker_threads(1);
    const auto a = run({"table", "--config", cfg});
    set_worker_threads(4);
    const auto b = run({"table", "--config", cfg});
    set_worker_threads(0);
    CHECK(a.code == 0);
    CHECK(b.code == 0);
    CHECK(verdicts(a).dump() == verdicts(b).dump());

    const std::string tight = write_file("tight.json", R"({"trials": 30, "rows": ["G_xi", "lottery"], "tolerance": 1e-15})");
    const auto t = run({"table", "--config", tight});
    CHECK(t.code == 1);
    for (const auto& d : verdicts(t)["diffs"]) CHECK(d["expected"].get<std::string>().rfind("inv", 0) == 0);
}

TEST_CASE("order") {
    const auto one = verdicts(run({"order", "--kinds", "q_star", "--trials", "5"}));
    CHECK(one["edges"].empty());
    CHECK(one["groups"].size() == 1);

    const std::string dot = (scratch() / "pair.dot").string();
    const auto pair = run({"order", "--kinds", "q_star", "return_trajectories", "--trials", "30", "--dot", dot});
    CHECK(pair.code == 0);
    const Json v = verdicts(pair);
    CHECK(v["groups"].size() == 2);
    CHECK(v["edges"].empty());
    CHECK(v["incomparable"].size() == 1);
    std::ifstream in(dot);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("->") == std::string::npos);
    CHECK(text.find("q_star") != std::string::npos);
}
