#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "dnorm/io.hpp"
#include "support/corpus.hpp"

using namespace dnorm;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() /
                 ("dnorm_io_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string write_scratch(const std::string& name, const std::string& text) {
    const auto path = (scratch_dir() / name).string();
    std::ofstream out(path, std::ios::binary);
    out << text;
    return path;
}

}  // namespace

TEST_CASE("parsing a discrete generator") {
    const auto j = nlohmann::json::parse(
        R"({"dimension":2,"kind":"discrete","atoms":[[2,0],[0,2]],"probs":[0.5,0.5]})");
    const auto g = parse_generator(j);
    REQUIRE(std::holds_alternative<DiscreteGenerator>(g));
    CHECK(std::get<DiscreteGenerator>(g) == permutation_generator(2));
}

TEST_CASE("parsing a named sampler") {
    const auto j = nlohmann::json::parse(
        R"({"kind":"sampler","sampler":{"name":"independent_uniform_2u"},"dimension":2,"bound":2})");
    const auto g = parse_generator(j);
    REQUIRE(std::holds_alternative<SamplerGenerator>(g));
    const auto& s = std::get<SamplerGenerator>(g);
    CHECK(s.dimension == 2);
    CHECK(s.bound == 2.0);
    CHECK(s.name == "independent_uniform_2u");
}

TEST_CASE("validation failures carry the numeric residual") {
    const auto j = nlohmann::json::parse(
        R"({"dimension":2,"kind":"discrete","atoms":[[2,0],[0,2]],"probs":[0.5,0.4]})");
    try {
        parse_generator(j);
        FAIL("expected a validation error");
    } catch (const std::invalid_argument& e) {
        const std::string what = e.what();
        CHECK(what.find("residual") != std::string::npos);
        CHECK(what.find("-0.1") != std::string::npos);
    }
}

TEST_CASE("unknown samplers and malformed specs are rejected") {
    CHECK_THROWS_WITH(
        parse_generator(nlohmann::json::parse(
            R"({"kind":"sampler","sampler":{"name":"nope"},"dimension":2})")),
        Catch::Matchers::ContainsSubstring("unknown sampler"));
    CHECK_THROWS_AS(parse_generator(nlohmann::json::parse(R"({"dimension":2})")),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_generator(nlohmann::json::parse(R"({"kind":"discrete"})")),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        parse_generator(nlohmann::json::parse(
            R"({"dimension":0,"kind":"discrete","atoms":[[1]],"probs":[1]})")),
        std::invalid_argument);
}

TEST_CASE("parse errors report line and column") {
    const auto path = write_scratch("broken.json", "{\n  \"dimension\": 2,\n  oops\n}\n");
    try {
        parse_generator_file(path);
        FAIL("expected a parse error");
    } catch (const std::invalid_argument& e) {
        const std::string what = e.what();
        CHECK(what.find(path) != std::string::npos);
        CHECK(what.find(":3:") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_generator_file("/no/such/file.json"), std::invalid_argument);
}

TEST_CASE("emit and parse round-trip discrete generators exactly") {
    Xoshiro256 rng(corpus::kCorpusSeed + 40);
    for (int rep = 0; rep < 25; ++rep) {
        const int d = 1 + static_cast<int>(rng() % 4);
        const auto g = corpus::random_generator(rng, d, 8);
        const auto j = emit_generator(g);
        const auto back = parse_generator(nlohmann::json::parse(j.dump()));
        REQUIRE(std::holds_alternative<DiscreteGenerator>(back));
        CHECK(std::get<DiscreteGenerator>(back) == g);
    }

    // Atom order is preserved verbatim.
    DiscreteGenerator g;
    g.dimension = 2;
    g.atoms = {0, 2, 2, 0};
    g.probs = {0.5, 0.5};
    const auto back = std::get<DiscreteGenerator>(
        parse_generator(nlohmann::json::parse(emit_generator(g).dump())));
    CHECK(back.atoms == g.atoms);
}

TEST_CASE("emitting samplers covers exactly the named registry") {
    const auto j = emit_generator(comonotone_2u(3));
    const auto back = parse_generator(nlohmann::json::parse(j.dump()));
    CHECK(std::get<SamplerGenerator>(back).name == "comonotone_2u");
    CHECK_THROWS_AS(
        emit_generator(product_sampler(independent_uniform_2u(2), independent_uniform_2u(2))),
        std::invalid_argument);
}

TEST_CASE("doubles serialize with 17 significant digits in CSV output") {
    CHECK(format_double(1.0 / 3.0) == "0.33333333333333331");
    CHECK(format_double(2.0) == "2");
    CHECK(std::stod(format_double(40.0 / 27.0)) == 40.0 / 27.0);
}

TEST_CASE("grid specifications") {
    CHECK(parse_grid_spec("simplex:4", 2).size() == 5);
    CHECK(parse_grid_spec("default", 3).size() == 45);
    CHECK(parse_grid_spec("", 3).size() == 45);

    const auto path = write_scratch("grid.csv", "x1,x2\n-1,-1\n-0.5,-2\n");
    const auto grid = parse_grid_spec(path, 2);
    REQUIRE(grid.size() == 2);
    CHECK(grid[0] == std::vector<double>{-1, -1});
    CHECK(grid[1] == std::vector<double>{-0.5, -2});
    CHECK_THROWS_AS(parse_grid_spec(path, 3), std::invalid_argument);
}

TEST_CASE("sample CSV round trip") {
    std::vector<SmsSample> batch{{{-0.5, -1.25}, 3}, {{-2.0, -0.125}, 17}};
    const auto text = samples_csv(batch);
    CHECK(text.rfind("sample,eta1,eta2,points_used\n", 0) == 0);
    // d + 2 columns per row.
    const auto first_row = text.substr(text.find('\n') + 1);
    CHECK(std::count(first_row.begin(), first_row.begin() +
                     static_cast<long>(first_row.find('\n')), ',') == 3);

    const auto path = write_scratch("samples.csv", text);
    const auto back = read_samples_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].eta == batch[0].eta);
    CHECK(back[1].eta == batch[1].eta);
    CHECK(back[1].points_used == 17);
}

TEST_CASE("track CSV layout") {
    TrackReport report;
    report.grid = {{1.0, 0.0}, {0.5, 0.5}};
    report.iterations = {{{1.0, 0, 0}, {0.75, 0, 0}}, {{1.0, 0, 0}, {0.875, 0, 0}}};
    const auto text = track_csv(report);
    CHECK(text == "step,point,value\n1,0,1\n1,1,0.75\n2,0,1\n2,1,0.875\n");
}

TEST_CASE("dependence-function traces") {
    const auto D = DNorm::exact(permutation_generator(2));
    const auto text = pickands_csv(D, 4);
    CHECK(text.rfind("t,D(t)\n", 0) == 0);
    // The L1 dependence function is constant one.
    std::stringstream ss(text);
    std::string line;
    std::getline(ss, line);
    while (std::getline(ss, line))
        CHECK(line.substr(line.find(',') + 1) == "1");

    const auto D3 = DNorm::exact(constant_generator(3));
    CHECK(pickands_csv(D3, 2).rfind("t1,t2,D(t)\n", 0) == 0);
}

TEST_CASE("scalar law files") {
    const auto law = parse_law(nlohmann::json::parse(
        R"({"support":[-1,0,1],"probs":[0.3333333333333333,0.3333333333333333,0.3333333333333334]})"));
    CHECK(law.support.size() == 3);
    CHECK(law.bound == 1.0);
    CHECK_THROWS_AS(parse_law(nlohmann::json::parse(R"({"support":[1],"probs":[1]})")),
                    std::invalid_argument);
}

TEST_CASE("run configuration and the environment seed override") {
    RunConfig config;
    config.tol = -1.0;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config.tol = 1e-6;
    config.samples = 1;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config.samples = 100;
    config.validate();

    ::setenv("DNORM_SEED", "12345", 1);
    apply_env_seed(config);
    CHECK(config.seed == 12345);
    ::setenv("DNORM_SEED", "bogus", 1);
    CHECK_THROWS_AS(apply_env_seed(config), std::invalid_argument);
    ::unsetenv("DNORM_SEED");
}
