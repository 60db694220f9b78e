#include <doctest.h>

#include "acflab/cli.hpp"
#include "acflab/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace acflab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "acflab");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("acflab_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

json read_json(const fs::path& p) {
  std::ifstream is(p);
  return json::parse(is);
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

std::string config_path(const std::string& name) { return std::string(ACFLAB_SOURCE_DIR) + "/configs/" + name; }

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

}  // namespace

TEST_CASE("number parsing") {
  CHECK(parse_number("0.25") == 0.25);
  CHECK(parse_number("1/128") == 1.0 / 128);
  CHECK(parse_number("-3e-2") == -0.03);
  CHECK_THROWS_AS(parse_number("abc"), UsageError);
  CHECK_THROWS_AS(parse_number("1/0"), UsageError);
  CHECK_THROWS_AS(parse_number("0.5x"), UsageError);
  CHECK(parse_list("0.4,0.2,1/10") == std::vector<double>{0.4, 0.2, 0.1});
}

TEST_CASE("modulus configuration") {
  CHECK(modulus_from_json(json{{"family", "zero"}}, "/m").name() == "zero");
  const auto h = modulus_from_json(json{{"family", "hoelder"}, {"alpha", 0.5}, {"coefficient", 2}}, "/m");
  CHECK(h.dini_integral() == doctest::Approx(4.0));
  CHECK(modulus_from_json(json{{"family", "log_squared"}}, "/m").name() == "log_squared");
  try {
    modulus_from_json(json{{"family", "bogus"}}, "/experiments/0/touch/modulus");
    FAIL("expected a usage error");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("/experiments/0/touch/modulus") == 0);
  }
}

TEST_CASE("usage errors") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  const auto unknown = cli({"oracle", "nonsense", "--out", (scratch("unknown") / "f").string()});
  CHECK(unknown.code == kExitUsage);
  CHECK(unknown.err.find("nonsense") != std::string::npos);
  CHECK(cli({"report"}).code == kExitUsage);
  CHECK(cli({"report", "--config", "/nonexistent/config.json"}).code != 0);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("oracle subcommand") {
  const fs::path dir = scratch("oracle");
  SUBCASE("half plane") {
    const auto r = cli({"oracle", "half-plane", "--a", "1", "--h", "1/16", "--out", (dir / "hp").string()});
    REQUIRE(r.code == 0);
    const auto f = load_sfld((dir / "hp.sfld").string());
    for (Index i = 0; i < f.size(); ++i) CHECK(f[i] == std::max(f.grid().node(i)[0], 0.0));
    const auto gx = load_sfld((dir / "hp.grad1.sfld").string());
    CHECK(gx[f.grid().nearest(make_point({0.5, 0.5}))] == 1.0);
  }
  SUBCASE("cone field metadata") {
    const auto r = cli({"oracle", "alt-caffarelli", "--h", "1/8", "--out", (dir / "ac").string()});
    REQUIRE(r.code == 0);
    const auto meta = read_json(dir / "ac.json");
    CHECK(std::abs(meta["theta0_deg"].get<double>() - 33.534) < 0.01);
    CHECK(meta.contains("fprime_theta0"));
    CHECK(load_sfld((dir / "ac.sfld").string()).grid().dim == 3);
  }
  SUBCASE("annulus") {
    const auto r = cli({"oracle", "annulus", "--rin", "0.25", "--rout", "1", "--h", "1/32", "--out", (dir / "an").string()});
    REQUIRE(r.code == 0);
    const auto f = load_sfld((dir / "an.sfld").string());
    for (Index i = 0; i < f.size(); ++i) {
      const double rho = f.grid().node(i).norm();
      if (rho > 0.3 && rho < 0.95) CHECK(std::abs(f[i] - std::log(rho) / std::log(0.25)) < 0.02);
    }
  }
}

TEST_CASE("sweep subcommand") {
  const fs::path dir = scratch("sweep");
  REQUIRE(cli({"oracle", "half-plane", "--a", "1", "--h", "1/128", "--out", (dir / "hp").string()}).code == 0);
  const std::string field = (dir / "hp.sfld").string();
  SUBCASE("half plane through the origin") {
    const auto r = cli({"sweep", "--field", field, "--y", "0,0", "--radii", "0.4,0.28,0.2,0.14,0.1", "--out",
                        (dir / "s").string()});
    REQUIRE(r.code == 0);
    const auto j = read_json(dir / "s.json");
    CHECK(std::abs(j["gradient_estimate"].get<double>() - 1) < 0.03);
    std::ifstream csv(dir / "s.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header.rfind("r,", 0) == 0);
  }
  SUBCASE("constant field") {
    const GridSpec g = GridSpec::cube(2, -1, 1, 1.0 / 64);
    save_sfld((dir / "c.sfld").string(), sample(g, [](const Point&) { return 0.5; }));
    const auto r = cli({"sweep", "--field", (dir / "c.sfld").string(), "--y", "0.1,0", "--radii", "0.4,0.2,0.1,0.05",
                        "--out", (dir / "c").string()});
    REQUIRE(r.code == 0);
    CHECK(read_json(dir / "c.json")["gradient_estimate"].get<double>() == 0.0);
  }
  SUBCASE("inadmissible radius lists the admissible range") {
    const auto r = cli({"sweep", "--field", field, "--y", "0,0", "--radii", "0.4,0.2,0.1,0.01", "--out",
                        (dir / "bad").string()});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("0.0234375") != std::string::npos);
  }
  SUBCASE("cone field on the free boundary") {
    REQUIRE(cli({"oracle", "alt-caffarelli", "--h", "1/64", "--lower", "-0.25", "--upper", "0.75", "--out",
                 (dir / "ac").string()})
                .code == 0);
    const double t0 = read_json(dir / "ac.json")["theta0_rad"].get<double>();
    std::ostringstream y;
    y.precision(17);
    y << 0.5 * std::sin(t0) << ",0," << 0.5 * std::cos(t0);
    const auto r = cli({"sweep", "--field", (dir / "ac.sfld").string(), "--y", y.str(), "--level", "0", "--radii",
                        "0.2,0.14,0.1,0.07,0.05", "--out", (dir / "acs").string()});
    REQUIRE(r.code == 0);
    CHECK(std::abs(read_json(dir / "acs.json")["gradient_estimate"].get<double>() - 1) < 0.05);
  }
}

TEST_CASE("report subcommand") {
  SUBCASE("linear usc config passes and is deterministic") {
    const fs::path a = scratch("report_a"), b = scratch("report_b");
    const auto ra = cli({"report", "--config", config_path("linear_usc.json"), "--out", a.string()});
    const auto rb = cli({"report", "--config", config_path("linear_usc.json"), "--out", b.string()});
    REQUIRE(ra.code == 0);
    REQUIRE(rb.code == 0);
    int files = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
      ++files;
      CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
    }
    CHECK(files >= 3);
    const auto usc = read_json(a / "00_usc.json");
    CHECK(usc["verdict"] == "pass");
    for (const auto& m : usc["margins"])
      CHECK(std::abs(m["shell_max"].get<double>() / 1.5 - 1) <= 0.03);
  }
  SUBCASE("subcommands select experiment types") {
    const fs::path d = scratch("report_usc");
    json j = read_json(config_path("linear_usc.json"));
    j["experiments"].push_back(json{{"type", "subsolution"}, {"lower_bound", 0}});
    const auto r = cli({"usc", "--config", write_config(d, j).string(), "--out", (d / "out").string()});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(d / "out" / "00_usc.json"));
    CHECK(fs::exists(d / "out" / "01_directional.json"));
    CHECK_FALSE(fs::exists(d / "out" / "02_subsolution.json"));
    CHECK(r.err.find("00_usc: ") != std::string::npos);
  }
  SUBCASE("seed changes the samples") {
    const fs::path a = scratch("seed_a"), b = scratch("seed_b");
    REQUIRE(cli({"usc", "--config", config_path("linear_usc.json"), "--out", a.string(), "--seed", "9"}).code == 0);
    REQUIRE(cli({"usc", "--config", config_path("linear_usc.json"), "--out", b.string()}).code == 0);
    CHECK(slurp(a / "00_usc.json") != slurp(b / "00_usc.json"));
  }
  SUBCASE("superharmonic field fails the subsolution check") {
    const fs::path d = scratch("report_sub");
    CHECK(cli({"report", "--config", config_path("superharmonic.json"), "--out", d.string()}).code == 2);
    CHECK(read_json(d / "00_subsolution.json")["verdict"] == "fail");
  }
  SUBCASE("zig-zag records the violated hypothesis and exits 0") {
    const fs::path d = scratch("report_zz");
    const auto r = cli({"dirichlet", "--config", config_path("zigzag_dirichlet.json"), "--out", d.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("hypothesis violated") != std::string::npos);
    CHECK(read_json(d / "00_dirichlet.json")["verdict"] == "hypothesis violated");
  }
}

TEST_CASE("schema violations name the offending field") {
  const fs::path d = scratch("schema");
  json base = read_json(config_path("linear_usc.json"));
  auto expect_error = [&](const json& j, const std::string& path) {
    const auto r = cli({"report", "--config", write_config(d, j).string(), "--out", (d / "out").string()});
    CHECK(r.code == kExitUsage);
    CHECK_MESSAGE(r.err.find(path) != std::string::npos, r.err);
  };
  json bad = base;
  bad["experiments"][0]["eps"] = "x";
  expect_error(bad, "/experiments/0/eps");
  bad = base;
  bad["schema"] = "acflab-run/0";
  expect_error(bad, "/schema");
  bad = base;
  bad["experiments"][1]["type"] = "teleport";
  expect_error(bad, "/experiments/1/type");
  bad = base;
  bad["fixture"]["type"] = "teleport";
  expect_error(bad, "/fixture/type");
  bad = base;
  bad["grid"]["h"] = -1;
  expect_error(bad, "/grid/h");
}

TEST_CASE("solve subcommand") {
  const fs::path d = scratch("solve");
  const auto r = cli({"solve", "--problem", "capacitor", "--h", "1/64", "--out", (d / "cap").string()});
  REQUIRE(r.code == 0);
  const auto f = load_sfld((d / "cap.sfld").string());
  CHECK(std::abs(interpolate(f, make_point({0.5, 0})) - 0.5) < 0.02);
  CHECK(read_json(d / "cap.json")["solve"]["converged"] == true);
  CHECK(cli({"solve", "--problem", "nothing", "--out", (d / "x").string()}).code == kExitUsage);
}
