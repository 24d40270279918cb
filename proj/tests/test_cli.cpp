#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "qc/config.hpp"
#include "qc/error.hpp"
#include "qc/experiments.hpp"

using namespace qc;
namespace fs = std::filesystem;

namespace {
struct Proc {
    int status = -1;
    std::string out;
};

Proc run(const std::string& args)
{
    std::string cmd = std::string(QC_CLI_PATH) + " " + args + " 2>&1";
    Proc p;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) p.out.append(buf.data(), n);
    int st = pclose(pipe);
    p.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return p;
}

std::string cfg(const std::string& name) { return std::string(QC_CONFIG_DIR) + "/" + name; }

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int error_line(const std::string& text)
{
    try {
        Config::parse(text);
    } catch (const ConfigError& e) {
        return e.line;
    }
    return -1;
}
} // namespace

TEST_SUITE("cli")
{
    TEST_CASE("config parsing")
    {
        Config c = Config::parse("experiment = \"solve-A\"\nseed = 7\n[solver]\nepsilon = 0.3\nresolution = 16\n"
                                 "[expect]\nu = [0.0, 0.0, 0.02]\n");
        CHECK(c.get_string("", "experiment", "") == "solve-A");
        CHECK(c.get_int("", "seed", 0) == 7);
        CHECK(c.get_real("solver", "epsilon", 0.0) == 0.3);
        CHECK(c.get_reals("expect", "u", {}) == std::vector<double>{0.0, 0.0, 0.02});
        CHECK(c.line("solver", "resolution") == 5);
        CHECK(c.get_real("solver", "fixpoint_tol", 1e-10) == 1e-10);
    }

    TEST_CASE("config errors carry line numbers")
    {
        CHECK(error_line("experiment = \"solve-A\"\nbogus = 1\n") == 2);
        CHECK(error_line("[solver]\nepsilon = -1\n") == 2);
        CHECK(error_line("[solver]\n\nresolution = 0.5\n") == 3);
        CHECK(error_line("[nowhere]\n") == 1);
        CHECK(error_line("experiment = \"solve-A\"\nseed = \n") == 2);
        CHECK(error_line("experiment = \"solve-A\"\n[solver]\nepsilon = 0.3\nepsilon = 0.2\n") == 4);
    }

    TEST_CASE("every shipped config parses")
    {
        for (const auto& e : fs::directory_iterator(QC_CONFIG_DIR)) {
            if (e.path().filename() == "bad_epsilon.toml") continue;
            CAPTURE(e.path().string());
            CHECK_NOTHROW(Config::load(e.path().string()));
        }
    }

    TEST_CASE("catalog listing")
    {
        Proc p = run("list-catalog");
        CHECK(p.status == 0);
        for (const char* k : {"linear", "skew_product", "perturbed", "suspension_time1"})
            CHECK(p.out.find(k) != std::string::npos);
        Proc j = run("list-catalog --json");
        CHECK(j.status == 0);
        nlohmann::json arr = nlohmann::json::parse(j.out);
        CHECK(arr.is_array());
        CHECK(arr.size() >= 4);
    }

    TEST_CASE("exit codes")
    {
        Proc u = run("frobnicate");
        CHECK(u.status == 2);
        CHECK(u.out.find("Usage") != std::string::npos);
        Proc bad = run("run " + cfg("bad_epsilon.toml") + " --out-dir bad_eps_out");
        CHECK(bad.status == 2);
        CHECK(bad.out.find("line 15") != std::string::npos);
        Proc neg = run("run " + cfg("negative_control.toml") + " --out-dir neg_out");
        CHECK(neg.status == 1);
        CHECK(neg.out.find("FAIL") != std::string::npos);
    }

    TEST_CASE("skew rotation run writes u and is bit-identical across reruns")
    {
        fs::remove_all("cli_a");
        fs::remove_all("cli_b");
        Proc a = run("run " + cfg("skew_rotation.toml") + " --resolution 16 --out-dir cli_a");
        Proc b = run("run " + cfg("skew_rotation.toml") + " --resolution 16 --out-dir cli_b");
        CHECK(a.status == 0);
        CHECK(b.status == 0);
        nlohmann::json j = nlohmann::json::parse(slurp("cli_a/quasiconj.json"));
        CHECK(j["u_max"][2].get<double>() == doctest::Approx(0.02).epsilon(1e-9));
        CHECK(j["u_min"][2].get<double>() == doctest::Approx(0.02).epsilon(1e-9));
        CHECK(j["pass"].get<bool>());
        CHECK(slurp("cli_a/quasiconj.json") == slurp("cli_b/quasiconj.json"));
        CHECK(slurp("cli_a/results.csv") == slurp("cli_b/results.csv"));
    }

    TEST_CASE("csv format")
    {
        std::vector<CsvRow> rows{{"cat", "residual_sup", 1e-9, 1e-6, true}};
        std::string t = csv_text(rows);
        CHECK(t.rfind("system,quantity,value,tolerance,pass", 0) == 0);
        CHECK(t.find("cat,residual_sup") != std::string::npos);
    }
}
