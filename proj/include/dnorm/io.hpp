#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "generator.hpp"
#include "norm.hpp"
#include "oracles.hpp"
#include "sampler.hpp"
#include "simulate.hpp"

namespace dnorm {

using GeneratorValue = std::variant<DiscreteGenerator, SamplerGenerator>;

inline int generator_dimension(const GeneratorValue& g) {
    return std::visit([](const auto& v) { return v.dimension; }, g);
}

/// Built-in sampler registry; the names are part of the file format.
inline SamplerGenerator make_named_sampler(const std::string& name, int d) {
    if (name == "independent_uniform_2u") return independent_uniform_2u(d);
    if (name == "comonotone_2u") return comonotone_2u(d);
    if (name == "iid_exponential") return iid_exponential(d);
    throw std::invalid_argument("unknown sampler name: " + name);
}

namespace detail {

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text,
                                                       std::size_t byte) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

}  // namespace detail

inline nlohmann::json parse_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const auto [line, column] = detail::line_column(text, e.byte > 0 ? e.byte - 1 : 0);
        std::ostringstream os;
        os << path << ":" << line << ":" << column << ": " << e.what();
        throw std::invalid_argument(os.str());
    }
}

/// Reads a generator from its JSON form. Discrete generators are fully
/// validated; samplers get a determinism and nonnegativity probe.
inline GeneratorValue parse_generator(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("generator spec must be a JSON object");
    if (!j.contains("dimension") || !j["dimension"].is_number_integer())
        throw std::invalid_argument("generator spec needs an integer \"dimension\"");
    const int d = j["dimension"].get<int>();
    if (d < 1) throw std::invalid_argument("generator dimension must be >= 1");
    const std::string kind = j.value("kind", std::string{});

    if (kind == "discrete") {
        if (!j.contains("atoms") || !j.contains("probs"))
            throw std::invalid_argument("discrete generator needs \"atoms\" and \"probs\"");
        DiscreteGenerator g;
        g.dimension = d;
        for (const auto& row : j["atoms"]) {
            if (!row.is_array() || row.size() != static_cast<std::size_t>(d))
                throw std::invalid_argument("every atom must be an array of d numbers");
            for (const auto& v : row) g.atoms.push_back(v.get<double>());
        }
        for (const auto& p : j["probs"]) g.probs.push_back(p.get<double>());
        auto report = validate_generator(g);
        if (!report.ok())
            throw std::invalid_argument("invalid generator:\n" + report.to_string());
        return g;
    }

    if (kind == "sampler") {
        if (!j.contains("sampler") || !j["sampler"].contains("name"))
            throw std::invalid_argument("sampler generator needs \"sampler\": {\"name\": ...}");
        SamplerGenerator s = make_named_sampler(j["sampler"]["name"].get<std::string>(), d);
        if (j.contains("bound") && !j["bound"].is_null()) {
            const double b = j["bound"].get<double>();
            if (!(b >= 1.0)) throw std::invalid_argument("declared bound must be >= 1");
            s.bound = b;
        }
        // Probe: identical (seed, count) must give identical output, all >= 0.
        const auto a = s.sample(0x51ed0cafeULL, 64);
        const auto b = s.sample(0x51ed0cafeULL, 64);
        if (a != b) throw std::invalid_argument("sampler probe failed: not deterministic");
        for (double v : a)
            if (!(v >= 0.0)) throw std::invalid_argument("sampler probe emitted a negative value");
        return s;
    }

    throw std::invalid_argument("generator \"kind\" must be \"discrete\" or \"sampler\"");
}

inline GeneratorValue parse_generator_file(const std::string& path) {
    return parse_generator(parse_json_file(path));
}

inline nlohmann::ordered_json emit_generator(const DiscreteGenerator& g) {
    nlohmann::ordered_json j;
    j["dimension"] = g.dimension;
    j["kind"] = "discrete";
    auto atoms = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < g.atom_count(); ++k) {
        auto row = nlohmann::ordered_json::array();
        for (double v : g.atom(k)) row.push_back(v);
        atoms.push_back(std::move(row));
    }
    j["atoms"] = std::move(atoms);
    j["probs"] = g.probs;
    double top = 0.0;
    for (double v : g.atoms) top = std::max(top, v);
    j["bound"] = top;
    return j;
}

inline nlohmann::ordered_json emit_generator(const SamplerGenerator& s) {
    if (s.factors || (s.name != "independent_uniform_2u" && s.name != "comonotone_2u" &&
                      s.name != "iid_exponential"))
        throw std::invalid_argument("only named built-in samplers have a file form");
    nlohmann::ordered_json j;
    j["dimension"] = s.dimension;
    j["kind"] = "sampler";
    j["sampler"] = nlohmann::ordered_json{{"name", s.name}};
    if (s.bound)
        j["bound"] = *s.bound;
    else
        j["bound"] = nullptr;
    return j;
}

inline nlohmann::ordered_json emit_generator(const GeneratorValue& g) {
    return std::visit([](const auto& v) { return emit_generator(v); }, g);
}

inline DiscreteScalarLaw parse_law(const nlohmann::json& j) {
    if (!j.contains("support") || !j.contains("probs"))
        throw std::invalid_argument("law spec needs \"support\" and \"probs\"");
    DiscreteScalarLaw law;
    for (const auto& v : j["support"]) law.support.push_back(v.get<double>());
    for (const auto& p : j["probs"]) law.probs.push_back(p.get<double>());
    if (j.contains("bound") && !j["bound"].is_null())
        law.bound = j["bound"].get<double>();
    else {
        law.bound = 0.0;
        for (double v : law.support) law.bound = std::max(law.bound, std::abs(v));
        if (law.bound == 0.0) law.bound = 1.0;
    }
    validate_law(law);
    return law;
}

/// 17 significant digits; pins the bulk CSV number format.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
}

inline void write_json_file(const std::string& path, const nlohmann::ordered_json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

/// Grid specs: "default", "simplex:k", or a path to a CSV point file (header
/// row, one point per line).
inline std::vector<std::vector<double>> read_points_csv(const std::string& path, int d) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument(path + " is empty");
    std::vector<std::vector<double>> points;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> p;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) p.push_back(std::stod(cell));
        if (p.size() != static_cast<std::size_t>(d))
            throw std::invalid_argument(path + ": point with wrong dimension");
        points.push_back(std::move(p));
    }
    if (points.empty()) throw std::invalid_argument(path + " contains no points");
    return points;
}

inline std::vector<std::vector<double>> parse_grid_spec(const std::string& spec, int d) {
    if (spec == "default" || spec.empty()) return default_grid(d);
    if (spec.rfind("simplex:", 0) == 0) {
        const int k = std::stoi(spec.substr(8));
        return simplex_grid(d, k);
    }
    return read_points_csv(spec, d);
}

inline std::string samples_csv(const std::vector<SmsSample>& batch) {
    if (batch.empty()) throw std::invalid_argument("no samples to write");
    const std::size_t d = batch.front().eta.size();
    std::ostringstream os;
    os << "sample";
    for (std::size_t i = 1; i <= d; ++i) os << ",eta" << i;
    os << ",points_used\n";
    for (std::size_t r = 0; r < batch.size(); ++r) {
        os << r;
        for (double v : batch[r].eta) os << ',' << format_double(v);
        os << ',' << batch[r].points_used << '\n';
    }
    return os.str();
}

inline std::vector<SmsSample> read_samples_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument(path + " is empty");
    std::size_t columns = 1;
    for (char c : line)
        if (c == ',') ++columns;
    if (columns < 3) throw std::invalid_argument(path + ": expected sample,eta...,points_used");
    const std::size_t d = columns - 2;
    std::vector<SmsSample> batch;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != columns)
            throw std::invalid_argument(path + ": row with wrong column count");
        SmsSample s;
        for (std::size_t i = 0; i < d; ++i) s.eta.push_back(std::stod(cells[1 + i]));
        s.points_used = std::stoull(cells.back());
        batch.push_back(std::move(s));
    }
    if (batch.empty()) throw std::invalid_argument(path + " contains no samples");
    return batch;
}

inline std::string track_csv(const TrackReport& report) {
    std::ostringstream os;
    os << "step,point,value\n";
    for (std::size_t step = 0; step < report.iterations.size(); ++step)
        for (std::size_t q = 0; q < report.grid.size(); ++q)
            os << step + 1 << ',' << q << ','
               << format_double(report.iterations[step][q].value) << '\n';
    return os.str();
}

inline std::string pickands_csv(const DNorm& D, int steps) {
    if (steps < 1) throw std::invalid_argument("trace needs >= 1 steps");
    const int d = D.dimension();
    if (d < 2) throw std::invalid_argument("trace needs dimension >= 2");
    std::ostringstream os;
    if (d == 2) {
        os << "t,D(t)\n";
        for (int a = 0; a <= steps; ++a) {
            const double t = static_cast<double>(a) / static_cast<double>(steps);
            const std::vector<double> tv{t};
            os << format_double(t) << ',' << format_double(pickands(D, tv)) << '\n';
        }
        return os.str();
    }
    for (int i = 1; i < d; ++i) os << 't' << i << (i + 1 < d ? "," : "");
    os << ",D(t)\n";
    for (const auto& p : simplex_grid(d - 1, steps)) {
        double sum = 0.0;
        for (double v : p) sum += v;
        if (sum > 1.0 + 1e-12) continue;
        for (std::size_t i = 0; i < p.size(); ++i) os << format_double(p[i]) << ',';
        os << format_double(pickands(D, p)) << '\n';
    }
    return os.str();
}

struct RunConfig {
    std::uint64_t seed = 0;
    std::size_t samples = 100'000;
    double tol = 1e-6;
    int max_steps = 64;
    std::string grid_spec = "default";

    void validate() const {
        if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
        if (samples < 2) throw std::invalid_argument("samples must be >= 2");
        if (max_steps < 1) throw std::invalid_argument("max-steps must be >= 1");
    }
};

/// DNORM_SEED, when set, overrides the configured seed.
inline void apply_env_seed(RunConfig& config) {
    if (const char* env = std::getenv("DNORM_SEED")) {
        try {
            config.seed = std::stoull(env);
        } catch (const std::exception&) {
            throw std::invalid_argument("DNORM_SEED is not an unsigned integer");
        }
    }
}

}  // namespace dnorm
