#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;  // stdout and stderr together
};

Run leglab(const std::string& args, const std::string& env = "")
{
    const std::string cmd = env + (env.empty() ? "" : " ") + "'" LEGLAB_CLI_PATH "' " + args + " 2>&1";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, p))
        r.out.append(buf, n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name)
{
    const fs::path d = fs::temp_directory_path() / ("leglab-cli-test-" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void write(const fs::path& p, const std::string& text)
{
    std::ofstream(p, std::ios::binary) << text;
}

std::string scenario(const std::string& name)
{
    return std::string(LEGLAB_SCENARIO_DIR) + "/" + name + ".json";
}

int data_rows(const std::string& csv)
{
    int rows = 0;
    std::istringstream in(csv);
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        if (!header) {
            header = true;
            continue;
        }
        ++rows;
    }
    return rows;
}

}  // namespace

TEST_CASE("run writes a report and exits 0 on a passing scenario")
{
    const auto dir = scratch("pass");
    const auto r = leglab("--out '" + dir.string() + "' run '" + scenario("tetragon-k2") + "'");
    CHECK(r.code == 0);
    CHECK(r.out.find("PASS tetragon-k2") != std::string::npos);
    const auto report = slurp(dir / "tetragon-k2.json");
    CHECK(report.find("\"scenario\"") != std::string::npos);
    CHECK(fs::exists(dir / "tetragon-k2" / "tetragon.csv"));
}

TEST_CASE("reports are byte-identical across runs and job counts")
{
    for (const char* name : {"barcode-random-grid", "tb-annulus", "disjoin-drift-0.3"}) {
        CAPTURE(name);
        const auto a = scratch("det-a"), b = scratch("det-b");
        REQUIRE(leglab("--jobs 1 --out '" + a.string() + "' run '" + scenario(name) + "'").code == 0);
        REQUIRE(leglab("--jobs 4 --out '" + b.string() + "' run '" + scenario(name) + "'").code == 0);
        const auto ra = slurp(a / (std::string(name) + ".json"));
        CHECK(!ra.empty());
        CHECK(ra == slurp(b / (std::string(name) + ".json")));
    }
}

TEST_CASE("a failed expectation exits 1")
{
    const auto dir = scratch("fail");
    auto text = slurp(scenario("tetragon-k2"));
    const std::string from = "\"op\": \"<\", \"value\": 1e-6}";
    const auto at = text.find(from);
    REQUIRE(at != std::string::npos);
    text.replace(at, from.size(), "\"op\": \">\", \"value\": 1}");
    write(dir / "fail.json", text);
    const auto r = leglab("--out '" + dir.string() + "' run '" + (dir / "fail.json").string() + "'");
    CHECK(r.code == 1);
    CHECK(r.out.find("FAIL") != std::string::npos);
    CHECK(fs::exists(dir / "tetragon-k2.json"));
}

TEST_CASE("malformed scenarios exit 2 with a location")
{
    const auto dir = scratch("bad");
    write(dir / "syntax.json", "{\n  \"name\": \"x\",\n  \"operation\": \"tetragon\",\n  \"params\": {\"k\": 2,, }\n}\n");
    auto r = leglab("--out '" + dir.string() + "' run '" + (dir / "syntax.json").string() + "'");
    CHECK(r.code == 2);
    CHECK(r.out.find("syntax.json:4:21") != std::string::npos);

    write(dir / "field.json", R"({"name": "y", "operation": "tetragon", "params": {"k": "two"}})");
    r = leglab("--out '" + dir.string() + "' run '" + (dir / "field.json").string() + "'");
    CHECK(r.code == 2);
    CHECK(r.out.find("/params/k") != std::string::npos);

    write(dir / "op.json", R"({"name": "z", "operation": "no-such-op", "params": {}})");
    CHECK(leglab("--out '" + dir.string() + "' run '" + (dir / "op.json").string() + "'").code == 2);

    CHECK(leglab("run '" + (dir / "missing.json").string() + "'").code == 2);
}

TEST_CASE("suite exits with the worst scenario code")
{
    const auto dir = scratch("suite"), out = scratch("suite-out");
    fs::copy_file(scenario("tetragon-k2"), dir / "a.json");
    fs::copy_file(scenario("barcode-circle"), dir / "b.json");
    auto r = leglab("--out '" + out.string() + "' suite '" + dir.string() + "'");
    CHECK(r.code == 0);
    CHECK(r.out.find("2/2 scenarios passed") != std::string::npos);

    write(dir / "c.json", "{");
    r = leglab("--out '" + out.string() + "' suite '" + dir.string() + "'");
    CHECK(r.code == 2);
    CHECK(r.out.find("2/3 scenarios passed") != std::string::npos);

    CHECK(leglab("suite '" + (dir / "nowhere").string() + "'").code == 2);
}

TEST_CASE("the environment variable overrides --out")
{
    const auto env_dir = scratch("env"), flag_dir = scratch("flag");
    const auto r = leglab("--out '" + flag_dir.string() + "' run '" + scenario("barcode-circle") + "'",
                          "LEGLAB_OUTPUT_DIR='" + env_dir.string() + "'");
    CHECK(r.code == 0);
    CHECK(fs::exists(env_dir / "barcode-circle.json"));
    CHECK_FALSE(fs::exists(flag_dir / "barcode-circle.json"));
}

TEST_CASE("emit-plots")
{
    const auto dir = scratch("plots");
    REQUIRE(leglab("--out '" + dir.string() + "' run '" + scenario("barcode-circle") + "'").code == 0);
    REQUIRE(leglab("--out '" + dir.string() + "' run '" + scenario("cerf-fold") + "'").code == 0);

    SUBCASE("barcode of the circle has three rows")
    {
        const auto again = scratch("plots-again");
        const auto r = leglab("--out '" + again.string() + "' emit-plots '" + (dir / "barcode-circle.json").string() + "'");
        CHECK(r.code == 0);
        const auto csv = slurp(again / "barcode-circle" / "barcode.csv");
        CHECK(csv.rfind("# leglab-barcode/1", 0) == 0);
        CHECK(data_rows(csv) == 3);
        CHECK(csv == slurp(dir / "barcode-circle" / "barcode.csv"));
    }
    SUBCASE("fold family shows a branch birth")
    {
        const auto csv = slurp(dir / "cerf-fold" / "cerf_branches.csv");
        REQUIRE(data_rows(csv) > 0);
        // The first data row starts after t = 0.
        std::istringstream in(csv);
        std::string line;
        std::getline(in, line);
        std::getline(in, line);
        std::getline(in, line);
        const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
        CHECK(std::stod(line.substr(c1 + 1, c2 - c1 - 1)) > 0.0);
    }
    SUBCASE("empty report writes nothing")
    {
        const auto empty = scratch("plots-empty");
        write(empty / "empty.json", "{}");
        const auto r = leglab("--out '" + (empty / "o").string() + "' emit-plots '" + (empty / "empty.json").string() + "'");
        CHECK(r.code == 0);
        CHECK(r.out.find("0 files written") != std::string::npos);
        CHECK_FALSE(fs::exists(empty / "o"));
    }
    SUBCASE("failed steps are listed as skipped")
    {
        const auto sk = scratch("plots-skip");
        write(sk / "r.json", R"({"scenario": "s", "plot_data": {"frames": {"skipped": "lift failed"}}})");
        const auto r = leglab("--out '" + sk.string() + "' emit-plots '" + (sk / "r.json").string() + "'");
        CHECK(r.code == 0);
        CHECK(r.out.find("skipped") != std::string::npos);
        CHECK(r.out.find("0 files written") != std::string::npos);
    }
    SUBCASE("unreadable report")
    {
        CHECK(leglab("emit-plots '" + (dir / "missing.json").string() + "'").code == 2);
    }
}
