#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("heavytail_cli_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
    const fs::path p = workdir() / name;
    std::ofstream(p) << text;
    return p;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Runs the CLI with stdout and stderr captured to files; returns the exit code.
int cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " \"" HEAVYTAIL_CLI_PATH "\" " + args + " > \"" + (workdir() / "stdout.txt").string() +
                            "\" 2> \"" + (workdir() / "stderr.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string err_text() { return read_file(workdir() / "stderr.txt"); }

const char* kSmallLd = R"({"experiment": "large_deviation",
  "model": {"kind": "pareto", "alpha": 2.5},
  "n": [10, 20], "b": [60], "N": 300})";

} // namespace

TEST_CASE("usage errors exit with 1") {
    CHECK(cli("") == 1);
    CHECK(cli("--preset table1 --config x.json") == 1);
    CHECK(cli("--preset table1 --threads -2") == 1);
    CHECK(cli("--bogus") == 1);
}

TEST_CASE("config errors exit with 2 and write nothing") {
    const fs::path out = workdir() / "never.csv";
    fs::remove(out);
    const auto empty = write_file("empty.json", R"({"experiment": "large_deviation",
      "model": {"kind": "pareto", "alpha": 2.5}, "n": [], "b": [60], "N": 100})");
    CHECK(cli("--config " + empty.string() + " --out " + out.string()) == 2);
    CHECK(err_text().find("empty n grid") != std::string::npos);
    CHECK_FALSE(fs::exists(out));

    const auto broken = write_file("broken.json", R"({"experiment": "large_deviation", "n": [1,)");
    CHECK(cli("--config " + broken.string() + " --out " + out.string()) == 2);
    CHECK(err_text().find("not valid JSON") != std::string::npos);

    const auto unknown = write_file("unknown.json", R"({"experiment": "large_deviation", "model": {"kind": "pareto"},
      "n": [10], "b": [60], "N": 100, "colour": "red"})");
    CHECK(cli("--config " + unknown.string()) == 2);
    CHECK(err_text().find("colour") != std::string::npos);

    CHECK(cli("--preset nosuch") == 2);
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("regime violations exit with 3") {
    const fs::path out = workdir() / "regime.csv";
    fs::remove(out);
    const auto cfg = write_file("regime.json", R"({"experiment": "level_crossing",
      "model": {"kind": "pareto", "alpha": 1.4, "location": 1.0},
      "b": [100], "r": [2], "mu": 1.0, "regime": "strong_efficiency", "N": 100})");
    CHECK(cli("--config " + cfg.string() + " --out " + out.string()) == 3);
    CHECK(err_text().find("impossibility") != std::string::npos);
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("CSV output is byte-stable without timing") {
    const auto cfg = write_file("small.json", kSmallLd);
    const fs::path a = workdir() / "a.csv", b = workdir() / "b.csv";
    REQUIRE(cli("--config " + cfg.string() + " --no-timing --seed 5 --threads 1 --quiet --out " + a.string()) == 0);
    REQUIRE(cli("--config " + cfg.string() + " --no-timing --seed 5 --threads 3 --quiet --out " + b.string()) == 0);
    const std::string text = read_file(a);
    CHECK(text == read_file(b));
    CHECK(text.rfind("experiment,n,b,r,regime,N,estimate,std_error,cv,mean_work,max_work,seed,wall_seconds\n", 0) == 0);
    int lines = 0;
    for (char ch : text) lines += ch == '\n';
    CHECK(lines == 3);
    CHECK(text.find(",5,\n") != std::string::npos);  // seed column, empty timing column

    const fs::path t = workdir() / "t.csv";
    REQUIRE(cli("--config " + cfg.string() + " --seed 5 --quiet --out " + t.string()) == 0);
    CHECK(read_file(t).find(",5,\n") == std::string::npos);
}

TEST_CASE("seed precedence") {
    const auto cfg = write_file("seeded.json", kSmallLd);
    const fs::path flag = workdir() / "flag.csv", env = workdir() / "env.csv", dflt = workdir() / "default.csv";
    REQUIRE(cli("--config " + cfg.string() + " --no-timing --quiet --seed 99 --out " + flag.string()) == 0);
    REQUIRE(cli("--config " + cfg.string() + " --no-timing --quiet --out " + env.string(), "HEAVYTAIL_SEED=99") == 0);
    REQUIRE(cli("--config " + cfg.string() + " --no-timing --quiet --out " + dflt.string(), "env -u HEAVYTAIL_SEED") == 0);
    CHECK(read_file(flag) == read_file(env));
    CHECK(read_file(flag) != read_file(dflt));
    CHECK(read_file(dflt).find(",20240601,") != std::string::npos);
    CHECK(cli("--config " + cfg.string() + " --quiet", "HEAVYTAIL_SEED=abc") == 2);
}

TEST_CASE("plots and the property suite") {
    const auto cfg = write_file("plot.json", kSmallLd);
    const fs::path svg = workdir() / "plot.svg";
    REQUIRE(cli("--config " + cfg.string() + " --quiet --emit-plots " + svg.string()) == 0);
    const std::string text = read_file(svg);
    CHECK(text.find("<svg") != std::string::npos);
    CHECK(text.find("</svg>") != std::string::npos);

    CHECK(cli("--preset property_suite --quiet") == 0);
    const std::string out = read_file(workdir() / "stdout.txt");
    CHECK(out.find("FAIL") == std::string::npos);
    CHECK(out.find("PASS") != std::string::npos);
}
