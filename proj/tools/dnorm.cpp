// Command line frontend: evaluation, norm algebra, track iteration,
// idempotency classification, max-stable simulation, and diagnostics.
//
// Exit codes: 0 success, 1 domain error, 2 usage error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dnorm/dnorm.hpp"

namespace {

using nlohmann::ordered_json;

std::vector<double> parse_point(const std::string& text, int dimension) {
    std::vector<double> point;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) point.push_back(std::stod(cell));
    if (point.size() != static_cast<std::size_t>(dimension))
        throw std::invalid_argument("point has " + std::to_string(point.size()) +
                                    " coordinates, generator has dimension " +
                                    std::to_string(dimension));
    return point;
}

dnorm::DNorm make_norm(const dnorm::GeneratorValue& g, std::size_t samples, std::uint64_t seed,
                       bool force_mc) {
    if (const auto* disc = std::get_if<dnorm::DiscreteGenerator>(&g)) {
        if (force_mc) return dnorm::DNorm::monte_carlo(*disc, {samples, seed});
        return dnorm::DNorm::exact(*disc);
    }
    return dnorm::DNorm::monte_carlo(std::get<dnorm::SamplerGenerator>(g), {samples, seed});
}

ordered_json frame_json(const dnorm::PartitionFrame& frame) {
    auto blocks = ordered_json::array();
    for (const auto& block : frame.blocks) {
        auto row = ordered_json::array();
        for (int i : block) row.push_back(i + 1);  // 1-based in artifacts
        blocks.push_back(std::move(row));
    }
    return blocks;
}

int run(int argc, char** argv) {
    CLI::App app{"D-norm toolkit"};
    app.require_subcommand(1);

    dnorm::RunConfig config;
    bool seed_given = false;

    // eval
    std::string eval_generator, eval_point, eval_trace;
    int eval_trace_steps = 64;
    bool eval_force_mc = false;
    auto* eval = app.add_subcommand("eval", "evaluate a norm at a point");
    eval->add_option("--generator", eval_generator, "generator JSON file")->required();
    eval->add_option("--point", eval_point, "comma separated coordinates");
    eval->add_option("--samples", config.samples, "Monte Carlo sample size");
    eval->add_option("--seed", config.seed, "master seed")->each([&](const std::string&) {
        seed_given = true;
    });
    eval->add_flag("--mc", eval_force_mc, "sample a discrete generator instead of exact sums");
    eval->add_option("--pickands", eval_trace, "write a dependence-function trace CSV");
    eval->add_option("--trace-steps", eval_trace_steps, "trace resolution");

    // multiply
    std::vector<std::string> multiply_inputs;
    std::string multiply_out;
    auto* mul = app.add_subcommand("multiply", "product of two discrete generators");
    mul->add_option("inputs", multiply_inputs, "two generator JSON files")->expected(2);
    mul->add_option("-o,--out", multiply_out, "output generator JSON")->required();

    // power
    std::string power_input, power_out;
    int power_n = 2;
    auto* pow_cmd = app.add_subcommand("power", "n-fold product of a discrete generator");
    pow_cmd->add_option("input", power_input, "generator JSON file")->required();
    pow_cmd->add_option("-n,--exponent", power_n, "fold count");
    pow_cmd->add_option("-o,--out", power_out, "output generator JSON")->required();

    // track
    std::string track_generator, track_out;
    int track_min_steps = 1;
    auto* track_cmd = app.add_subcommand("track", "iterate the norm against itself");
    track_cmd->add_option("--generator", track_generator, "generator JSON file")->required();
    track_cmd->add_option("--tol", config.tol, "convergence tolerance");
    track_cmd->add_option("--max-steps", config.max_steps, "iteration cap");
    track_cmd->add_option("--min-steps", track_min_steps, "steps before testing convergence");
    track_cmd->add_option("--samples", config.samples, "Monte Carlo sample size");
    track_cmd->add_option("--seed", config.seed, "master seed");
    track_cmd->add_option("--grid", config.grid_spec, "default | simplex:k | points CSV");
    track_cmd->add_option("--out", track_out, "track CSV output")->required();

    // classify
    std::string classify_generator;
    double classify_tol = 1e-9;
    auto* classify_cmd = app.add_subcommand("classify", "idempotency classification");
    classify_cmd->add_option("--generator", classify_generator, "generator JSON file")
        ->required();
    classify_cmd->add_option("--tol", classify_tol, "grid comparison tolerance");
    classify_cmd->add_option("--grid", config.grid_spec, "default | simplex:k | points CSV");
    classify_cmd->add_option("--samples", config.samples, "Monte Carlo sample size");
    classify_cmd->add_option("--seed", config.seed, "master seed");

    // simulate
    std::string sim_generator, sim_out;
    std::size_t sim_n = 1000;
    auto* sim_cmd = app.add_subcommand("simulate", "draw standard max-stable samples");
    sim_cmd->add_option("--generator", sim_generator, "generator JSON file")->required();
    sim_cmd->add_option("-n,--count", sim_n, "number of samples");
    sim_cmd->add_option("--seed", config.seed, "master seed");
    sim_cmd->add_option("--out", sim_out, "samples CSV output")->required();

    // check
    std::string check_samples, check_generator, check_grid;
    int check_block = 5;
    auto* check_cmd = app.add_subcommand("check", "diagnostics for simulated samples");
    check_cmd->add_option("--samples", check_samples, "samples CSV")->required();
    check_cmd->add_option("--generator", check_generator, "generator JSON file")->required();
    check_cmd->add_option("--grid", check_grid, "CSV of nonpositive grid points")->required();
    check_cmd->add_option("--block-size", check_block, "block size for the max-stability check");

    // oracle
    auto* oracle_cmd = app.add_subcommand("oracle", "reference enumerations");
    std::string law_path;
    auto* lemma_cmd = oracle_cmd->add_subcommand("lemma", "mean-zero absolute-sum check");
    lemma_cmd->add_option("--law", law_path, "scalar law JSON file")->required();
    oracle_cmd->require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    dnorm::apply_env_seed(config);

    if (*eval) {
        auto g = dnorm::parse_generator_file(eval_generator);
        auto D = make_norm(g, config.samples, config.seed, eval_force_mc);
        if (!eval_trace.empty()) {
            dnorm::write_text_file(eval_trace, dnorm::pickands_csv(D, eval_trace_steps));
            return 0;
        }
        if (eval_point.empty())
            throw std::invalid_argument("eval needs --point or --pickands");
        const auto x = parse_point(eval_point, D.dimension());
        const auto est = dnorm::norm(D, x);
        ordered_json out;
        out["value"] = est.value;
        out["se"] = est.standard_error;
        out["n"] = est.sample_count;
        std::cout << out.dump() << '\n';
        return 0;
    }

    if (*mul) {
        auto a = dnorm::parse_generator_file(multiply_inputs[0]);
        auto b = dnorm::parse_generator_file(multiply_inputs[1]);
        const auto* da = std::get_if<dnorm::DiscreteGenerator>(&a);
        const auto* db = std::get_if<dnorm::DiscreteGenerator>(&b);
        if (!da || !db)
            throw std::invalid_argument("multiply writes a generator file and therefore "
                                        "needs discrete inputs");
        dnorm::write_json_file(multiply_out,
                               dnorm::emit_generator(dnorm::product_generator(*da, *db)));
        return 0;
    }

    if (*pow_cmd) {
        auto g = dnorm::parse_generator_file(power_input);
        const auto* disc = std::get_if<dnorm::DiscreteGenerator>(&g);
        if (!disc) throw std::invalid_argument("power needs a discrete generator");
        auto D = dnorm::power(dnorm::DNorm::exact(*disc), power_n);
        dnorm::write_json_file(power_out, dnorm::emit_generator(*D.discrete()));
        return 0;
    }

    if (*track_cmd) {
        config.validate();
        auto g = dnorm::parse_generator_file(track_generator);
        auto D = make_norm(g, config.samples, config.seed, false);
        dnorm::TrackOptions opts;
        opts.max_steps = config.max_steps;
        opts.tol = config.tol;
        opts.min_steps = track_min_steps;
        if (!D.exact_policy()) opts.mc = D.policy();
        const auto grid = dnorm::parse_grid_spec(config.grid_spec, D.dimension());
        const auto report = dnorm::track_same(D, grid, opts);
        dnorm::write_text_file(track_out, dnorm::track_csv(report));
        ordered_json out;
        out["converged"] = report.converged;
        out["steps"] = report.steps;
        out["final_sup_diff"] = report.final_sup_diff;
        out["limit_frame"] = report.limit_frame ? frame_json(*report.limit_frame)
                                                : ordered_json::array();
        std::cout << out.dump() << '\n';
        return 0;
    }

    if (*classify_cmd) {
        auto g = dnorm::parse_generator_file(classify_generator);
        auto D = make_norm(g, config.samples, config.seed, false);
        const auto grid = dnorm::parse_grid_spec(config.grid_spec, D.dimension());
        const auto result = dnorm::classify_idempotent(D, grid, classify_tol);
        ordered_json out;
        out["idempotent"] = result.idempotency.idempotent;
        if (result.verdict == dnorm::ClassifyResult::Verdict::frame)
            out["frame"] = frame_json(*result.frame);
        else
            out["frame"] = nullptr;
        if (result.verdict == dnorm::ClassifyResult::Verdict::violation)
            out["violation"] = true;
        ordered_json witness;
        witness["point"] = result.idempotency.witness;
        witness["value"] = result.idempotency.base.value;
        witness["squared"] = result.idempotency.squared.value;
        witness["deviation"] = result.idempotency.max_deviation;
        out["witness"] = std::move(witness);
        std::cout << out.dump() << '\n';
        return 0;
    }

    if (*sim_cmd) {
        auto g = dnorm::parse_generator_file(sim_generator);
        std::vector<dnorm::SmsSample> batch;
        if (const auto* disc = std::get_if<dnorm::DiscreteGenerator>(&g))
            batch = dnorm::sample_batch(*disc, sim_n, config.seed);
        else
            batch = dnorm::sample_batch(std::get<dnorm::SamplerGenerator>(g), sim_n,
                                        config.seed);
        dnorm::write_text_file(sim_out, dnorm::samples_csv(batch));
        return 0;
    }

    if (*check_cmd) {
        auto g = dnorm::parse_generator_file(check_generator);
        auto D = make_norm(g, config.samples, config.seed, false);
        const auto batch = dnorm::read_samples_csv(check_samples);
        const auto grid = dnorm::read_points_csv(check_grid, D.dimension());

        ordered_json out;
        auto margins = ordered_json::array();
        for (int j = 0; j < D.dimension(); ++j) {
            const auto m = dnorm::margin_check(batch, j);
            margins.push_back(ordered_json{{"coordinate", j + 1},
                                           {"ks_distance", m.ks_distance},
                                           {"p_value", m.p_value}});
        }
        out["margins"] = std::move(margins);

        auto joint = ordered_json::array();
        for (const auto& row : dnorm::joint_cdf_check(batch, D, grid))
            joint.push_back(ordered_json{{"x", row.x},
                                         {"empirical", row.empirical},
                                         {"theoretical", row.theoretical},
                                         {"se", row.se},
                                         {"z", row.z}});
        out["joint_cdf"] = std::move(joint);

        if (check_block > 1) {
            const auto ms = dnorm::max_stability_check(batch, check_block, grid);
            auto rows = ordered_json::array();
            for (const auto& row : ms.rows)
                rows.push_back(ordered_json{{"x", row.x},
                                            {"raw", row.p_first},
                                            {"blocks", row.p_second},
                                            {"pooled_se", row.pooled_se},
                                            {"z", row.z}});
            out["max_stability"] =
                ordered_json{{"block", ms.block}, {"max_z", ms.max_z}, {"rows", std::move(rows)}};
        }
        std::cout << out.dump(2) << '\n';
        return 0;
    }

    if (*oracle_cmd) {
        const auto law = dnorm::parse_law(dnorm::parse_json_file(law_path));
        const auto verdict = dnorm::lemma_classify(law);
        ordered_json out;
        out["e_abs_sum"] = verdict.e_abs_sum;
        out["e_abs"] = verdict.e_abs;
        out["equality"] = verdict.equality;
        out["two_point_or_zero"] = verdict.two_point_or_zero;
        out["consistent"] = verdict.consistent();
        std::cout << out.dump() << '\n';
        return 0;
    }

    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
