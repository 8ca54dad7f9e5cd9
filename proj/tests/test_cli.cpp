#include "finsler/cli.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using finsler::cli::Json;
using finsler::cli::UsageError;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run_args(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    const int code = finsler::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> words(const std::string& line)
{
    std::istringstream is(line);
    std::vector<std::string> out;
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

/// Runs the installed binary through the shell; returns stdout.
std::string spawn(const std::string& env, const std::string& args, int* code)
{
    const std::string cmd = env + " " + FINSLER_BINARY + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    std::array<char, 4096> buf{};
    std::size_t got = 0;
    while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), got);
    const int status = pclose(pipe);
    *code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return out;
}

/// Strips run-dependent fields, keeping payload and verdicts.
Json stable(const Json& envelope)
{
    return Json{{"payload", envelope.at("payload")}, {"verdicts", envelope.at("verdicts")}, {"pass", envelope.at("pass")}};
}

void compare(const Json& got, const Json& want, const std::string& path, std::vector<std::string>& diffs)
{
    if (want.is_number() && got.is_number()) {
        const double a = got.get<double>(), b = want.get<double>();
        if (std::abs(a - b) > 1e-9 * std::abs(b) + 1e-12) diffs.push_back(path);
        return;
    }
    if (got.type() != want.type()) {
        diffs.push_back(path + " (type)");
        return;
    }
    if (want.is_object()) {
        if (got.size() != want.size()) diffs.push_back(path + " (keys)");
        for (const auto& [k, v] : want.items()) {
            if (!got.contains(k)) {
                diffs.push_back(path + "." + k + " (missing)");
                continue;
            }
            compare(got.at(k), v, path + "." + k, diffs);
        }
    } else if (want.is_array()) {
        if (got.size() != want.size()) {
            diffs.push_back(path + " (length)");
            return;
        }
        for (std::size_t i = 0; i < want.size(); ++i) compare(got[i], want[i], path + "[" + std::to_string(i) + "]", diffs);
    } else if (got != want) {
        diffs.push_back(path);
    }
}

struct Golden {
    const char* name;
    const char* args;
};

const Golden kGoldens[] = {
    {"curvature-certify", "curvature-certify --samples 5 --seed 7"},
    {"geodesic-trace", "geodesic-trace --step 0.01"},
    {"quadric-eval", "quadric-eval --samples 50 --seed 3"},
    {"hilbert-eval", "hilbert-eval --samples 10 --seed 3"},
    {"zoll-check", "zoll-check --grid 64 --step 0.005"},
    {"beta-geodesic", "beta-geodesic --step 0.005"},
    {"structure-residual", "structure-residual --grids 32,48"},
    {"cartan-characters", "cartan-characters --n 3"},
    {"reversibility", "reversibility --samples 20 --seed 1 --expect irreversible"},
};

} // namespace

TEST_CASE("config validation names the offending field")
{
    const auto ok = finsler::cli::config_from_json("cartan-characters", Json{{"n", 3}});
    CHECK(ok.integer("n") == 3);
    CHECK(ok.integer("n_max") == 12);

    auto message = [](const std::string& sub, const Json& j) {
        try {
            finsler::cli::config_from_json(sub, j);
        } catch (const UsageError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message("curvature-certify", Json{{"seed", 1}, {"p", {0.9, 0.4}}}).find("p") == 0);
    CHECK(message("curvature-certify", Json{{"seed", 1}, {"p", {0.4, 3.5}}}).find("p") == 0);
    CHECK(message("quadric-eval", Json{{"seed", 1}, {"bogus", 2}}).find("bogus") != std::string::npos);
    CHECK(message("curvature-certify", Json::object()).find("seed") != std::string::npos);
    CHECK(message("hilbert-eval", Json{{"seed", 1}, {"samples", -4}}).find("samples") != std::string::npos);
}

TEST_CASE("flags override the config file")
{
    const auto path = std::filesystem::temp_directory_path() / "finsler_cli_config.json";
    {
        std::ofstream f(path);
        f << R"({"samples": 40, "seed": 9, "p": [0.2, 0.5]})";
    }
    const auto cfg = finsler::cli::load_config({"quadric-eval", "--config", path.string(), "--samples", "7"});
    std::filesystem::remove(path);
    CHECK(cfg.integer("samples") == 7);
    CHECK(cfg.integer("seed") == 9);
    CHECK(cfg.numbers("p") == std::vector<double>{0.2, 0.5});
}

TEST_CASE("exit codes")
{
    CHECK(run_args(words("cartan-characters --n 3")).code == finsler::cli::kPass);
    CHECK(run_args(words("geodesic-trace --step 0.01 --tol closure_defect=1e-30")).code == finsler::cli::kVerdictFail);
    CHECK(run_args(words("structure-residual --grids 24,32 --i-offset 0.3")).code == finsler::cli::kVerdictFail);

    const auto usage = run_args(words("curvature-certify --samples 5"));
    CHECK(usage.code == finsler::cli::kUsage);
    CHECK(usage.err.find("seed") != std::string::npos);
    CHECK(run_args(words("no-such-command")).code == finsler::cli::kUsage);
    CHECK(run_args({}).code == finsler::cli::kUsage);

    const auto help = run_args(words("curvature-certify --help"));
    CHECK(help.code == finsler::cli::kPass);
    CHECK(help.out.find("--seed") != std::string::npos);

    const auto numerical = run_args(words("geodesic-trace --step 1 --length 6"));
    CHECK(numerical.code == finsler::cli::kNumerical);
    CHECK(numerical.out.empty());
}

TEST_CASE("trajectory csv columns")
{
    const auto r = run_args(words("geodesic-trace --step 0.1 --length 2 --format csv"));
    REQUIRE(r.code == finsler::cli::kPass);
    CHECK(r.out.rfind("s,u1,u2,y1,y2\n", 0) == 0);
    const auto b = run_args(words("beta-geodesic --step 0.01 --length 2 --format csv"));
    REQUIRE(b.code == finsler::cli::kPass);
    CHECK(b.out.rfind("s,u1,u2,y1,y2\n", 0) == 0);
}

TEST_CASE("golden outputs")
{
    const bool update = std::getenv("FINSLER_UPDATE_GOLDEN") != nullptr;
    for (const auto& g : kGoldens) {
        CAPTURE(g.name);
        const auto r = run_args(words(g.args));
        REQUIRE(r.code == finsler::cli::kPass);
        const Json got = stable(Json::parse(r.out));
        const std::string path = std::string(FINSLER_GOLDEN_DIR) + "/" + g.name + ".json";
        if (update) {
            std::ofstream(path) << got.dump(2) << "\n";
            continue;
        }
        std::ifstream f(path);
        REQUIRE_MESSAGE(f.good(), "missing golden " << path);
        const Json want = Json::parse(f);
        std::vector<std::string> diffs;
        compare(got, want, "", diffs);
        std::string joined;
        for (const auto& d : diffs) joined += d + " ";
        CHECK_MESSAGE(diffs.empty(), "differs at " << joined);
    }
}

TEST_CASE("repeated runs give identical payloads")
{
    const std::string args = "curvature-certify --samples 24 --seed 11";
    int c1 = 0, c2 = 0, c3 = 0;
    const auto a = spawn("FINSLER_THREADS=1", args, &c1);
    const auto b = spawn("FINSLER_THREADS=1", args, &c2);
    const auto c = spawn("FINSLER_THREADS=3", args, &c3);
    REQUIRE(c1 == 0);
    REQUIRE(c2 == 0);
    REQUIRE(c3 == 0);
    const auto pa = Json::parse(a).at("payload").dump();
    CHECK(pa == Json::parse(b).at("payload").dump());
    CHECK(pa == Json::parse(c).at("payload").dump());

    int h1 = 0, h2 = 0;
    const auto ha = spawn("FINSLER_THREADS=1", "hilbert-eval --samples 12 --seed 5", &h1);
    const auto hb = spawn("FINSLER_THREADS=4", "hilbert-eval --samples 12 --seed 5", &h2);
    REQUIRE(h1 == 0);
    REQUIRE(h2 == 0);
    CHECK(Json::parse(ha).at("payload").dump() == Json::parse(hb).at("payload").dump());
}
