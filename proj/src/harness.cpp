#include "byzsim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "byzsim/errors.hpp"
#include "byzsim/scenarios.hpp"

namespace byzsim::harness {

namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& items, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += sep;
        out += items[i];
    }
    return out;
}

bool is_index(const json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
}

/// Typed field access that accumulates "path: message" problems instead of throwing.
class Reader {
public:
    Reader(const json& node, std::string path, std::vector<std::string>& problems)
        : node_(node), path_(std::move(path)), problems_(problems) {}

    std::string field(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    bool has(const std::string& key) const { return node_.is_object() && node_.contains(key); }

    void fail(const std::string& key, const std::string& message) const {
        problems_.push_back(field(key) + ": " + message);
    }

    std::optional<std::size_t> count(const std::string& key,
                                     std::optional<std::size_t> fallback = {}) const {
        if (!has(key)) {
            if (!fallback) fail(key, "required unsigned integer is missing");
            return fallback;
        }
        const json& v = node_.at(key);
        if (!is_index(v)) {
            fail(key, "expected a non-negative integer, got " + v.dump());
            return std::nullopt;
        }
        return v.get<std::size_t>();
    }

    std::optional<double> real(const std::string& key, std::optional<double> fallback = {}) const {
        if (!has(key)) {
            if (!fallback) fail(key, "required number is missing");
            return fallback;
        }
        const json& v = node_.at(key);
        if (!v.is_number()) {
            fail(key, "expected a number, got " + v.dump());
            return std::nullopt;
        }
        const double x = v.get<double>();
        if (!std::isfinite(x)) {
            fail(key, "must be finite");
            return std::nullopt;
        }
        return x;
    }

    std::optional<double> positive(const std::string& key, std::optional<double> fallback = {}) const {
        auto x = real(key, fallback);
        if (x && !(*x > 0.0)) {
            fail(key, "must be positive");
            return std::nullopt;
        }
        return x;
    }

    std::optional<std::string> text(const std::string& key,
                                    std::optional<std::string> fallback = {}) const {
        if (!has(key)) {
            if (!fallback) fail(key, "required string is missing");
            return fallback;
        }
        const json& v = node_.at(key);
        if (!v.is_string()) {
            fail(key, "expected a string, got " + v.dump());
            return std::nullopt;
        }
        return v.get<std::string>();
    }

    std::optional<ParamVector> vector(const std::string& key) const {
        if (!has(key)) {
            fail(key, "required vector is missing");
            return std::nullopt;
        }
        return to_vector(node_.at(key), field(key));
    }

    std::optional<ParamVector> to_vector(const json& v, const std::string& where) const {
        ParamVector out;
        if (v.is_number()) {
            out.push_back(v.get<double>());
        } else if (v.is_array() && !v.empty()) {
            for (const auto& e : v) {
                if (!e.is_number()) {
                    problems_.push_back(where + ": vector entries must be numbers");
                    return std::nullopt;
                }
                out.push_back(e.get<double>());
            }
        } else {
            problems_.push_back(where + ": expected a number or non-empty numeric array");
            return std::nullopt;
        }
        if (!all_finite(out)) {
            problems_.push_back(where + ": entries must be finite");
            return std::nullopt;
        }
        return out;
    }

    const json& node() const { return node_; }
    const std::string& path() const { return path_; }
    std::vector<std::string>& problems() const { return problems_; }

private:
    const json& node_;
    std::string path_;
    std::vector<std::string>& problems_;
};

std::optional<AttackSpec> parse_attack(const Reader& r, const std::string& key) {
    if (!r.has(key) || !r.node().at(key).is_object()) {
        r.fail(key, "required object is missing");
        return std::nullopt;
    }
    Reader a(r.node().at(key), r.field(key), r.problems());
    const auto type = a.text("type");
    if (!type) return std::nullopt;
    if (*type == "sign_flip") {
        if (auto k = a.real("kappa", 1.0)) return AttackSpec{AttackSpec::SignFlip{*k}};
    } else if (*type == "fixed_vector") {
        if (auto v = a.vector("v")) return AttackSpec{AttackSpec::FixedVector{*v}};
    } else if (*type == "inner_product_max") {
        if (auto m = a.real("magnitude")) return AttackSpec{AttackSpec::InnerProductMax{*m}};
    } else if (*type == "anti_trimmed_mean") {
        if (auto m = a.real("magnitude")) return AttackSpec{AttackSpec::AntiTrimmedMean{*m}};
    } else {
        a.fail("type", "unknown attack '" + *type +
                           "' (sign_flip, fixed_vector, inner_product_max, anti_trimmed_mean)");
    }
    return std::nullopt;
}

/// Outcome of reading the scenario block.
struct ScenarioBuild {
    std::optional<ProblemInstance> instance;
    std::optional<PartialPoisonScenario> partial;
    PartialPoisonScenario::Case partial_case = PartialPoisonScenario::Case::clean_low;
};

std::optional<DataSource> parse_source(const json& node, const std::string& where,
                                       const Reader& r) {
    if (!node.is_object() || node.size() != 1) {
        r.problems().push_back(where + ": expected an object with one of dirac, two_point, "
                                       "empirical, gaussian");
        return std::nullopt;
    }
    const auto& [kind, body] = *node.items().begin();
    const std::string at = where + "." + kind;
    try {
        if (kind == "dirac") {
            if (auto p = r.to_vector(body, at)) return DataSource::dirac(*p);
        } else if (kind == "two_point") {
            Reader b(body, at, r.problems());
            auto a = b.vector("a");
            auto p = b.real("prob_a");
            auto bb = b.vector("b");
            if (a && p && bb) return DataSource::two_point(*a, *p, *bb);
        } else if (kind == "empirical") {
            if (!body.is_array() || body.empty()) {
                r.problems().push_back(at + ": expected a non-empty array of points");
                return std::nullopt;
            }
            std::vector<ParamVector> points;
            for (std::size_t j = 0; j < body.size(); ++j) {
                auto p = r.to_vector(body[j], at + "[" + std::to_string(j) + "]");
                if (!p) return std::nullopt;
                points.push_back(*p);
            }
            return DataSource::empirical(std::move(points));
        } else if (kind == "gaussian") {
            Reader b(body, at, r.problems());
            auto mean = b.vector("mean");
            auto var = b.real("variance");
            if (mean && var) return DataSource::gaussian(*mean, *var);
        } else {
            r.problems().push_back(where + ": unknown source kind '" + kind + "'");
        }
    } catch (const InputError& e) {
        r.problems().push_back(at + ": " + e.what());
    }
    return std::nullopt;
}

ScenarioBuild build_scenario(const Reader& root, std::size_t T) {
    ScenarioBuild out;
    if (!root.has("scenario") || !root.node().at("scenario").is_object()) {
        root.fail("scenario", "required object is missing");
        return out;
    }
    Reader s(root.node().at("scenario"), "scenario", root.problems());
    const auto generator = s.text("generator");
    if (!generator) return out;
    const std::size_t before = s.problems().size();

    try {
        if (*generator == "heterogeneous_dirac") {
            auto n = s.count("n");
            auto f = s.count("f");
            auto zeta = s.positive("zeta");
            auto mu = s.positive("mu");
            auto execution = s.count("execution", 1);
            if (n && f && *f == 0) s.fail("f", "must be positive for this construction");
            if (n && f && 2 * *f >= *n) s.fail("f", "must satisfy 2f < n");
            if (execution && *execution != 1 && *execution != 2) s.fail("execution", "must be 1 or 2");
            if (s.problems().size() == before) {
                out.instance = heterogeneous_dirac_scenario(*n, *f, *zeta, *mu,
                                                            static_cast<int>(*execution))
                                   .instance;
            }
        } else if (*generator == "gaussian") {
            auto n = s.count("n");
            auto f = s.count("f", 0);
            auto mu = s.positive("mu");
            auto variance = s.real("variance");
            auto dim = s.count("dim", 1);
            auto mean = s.real("mean", 0.0);
            auto spread = s.real("spread", 0.0);
            if (n && *n == 0) s.fail("n", "must be positive");
            if (n && f && 2 * *f >= *n) s.fail("f", "must satisfy 2f < n");
            if (variance && *variance < 0.0) s.fail("variance", "must be >= 0");
            if (dim && *dim == 0) s.fail("dim", "must be positive");
            if (s.problems().size() == before) {
                std::vector<DataSource> sources;
                for (std::size_t i = 0; i < *n; ++i) {
                    ParamVector center(*dim, *mean);
                    center[0] += (i % 2 == 0 ? 1.0 : -1.0) * *spread;
                    sources.push_back(DataSource::gaussian(std::move(center), *variance));
                }
                std::vector<std::size_t> honest;
                for (std::size_t i = 0; i < *n - *f; ++i) honest.push_back(i);
                out.instance = ProblemInstance(LossModel::quadratic(*mu), std::move(sources),
                                               std::move(honest));
            }
        } else if (*generator == "partial_poison") {
            auto m = s.count("m");
            auto b = s.count("b");
            auto sigma = s.real("sigma");
            auto mu = s.positive("mu");
            auto n = s.count("n", 1);
            auto f = s.count("f", 0);
            auto which = s.count("case", 1);
            if (m && b && (*b == 0 || 2 * *b >= *m)) s.fail("b", "must satisfy 0 < b < m/2");
            if (n && f && 2 * *f >= *n) s.fail("f", "must satisfy 2f < n");
            if (sigma && *sigma < 0.0) s.fail("sigma", "must be >= 0");
            if (which && *which != 1 && *which != 2) s.fail("case", "must be 1 or 2");
            if (s.problems().size() == before) {
                out.partial = partial_poison_scenario(*m, *b, *sigma, *mu, *n, *f);
                out.partial_case = static_cast<PartialPoisonScenario::Case>(*which);
                out.instance = out.partial->instance(out.partial_case);
            }
        } else if (*generator == "indistinguishable_pair") {
            auto n = s.count("n");
            auto f = s.count("f");
            auto sigma = s.real("sigma");
            auto mu = s.positive("mu");
            auto which = s.text("which", std::string("Dprime"));
            if (n && f && (*f == 0 || 2 * *f >= *n)) s.fail("f", "must satisfy 0 < f < n/2");
            if (which && *which != "D" && *which != "Dprime") s.fail("which", "must be D or Dprime");
            if (n && f && *f > 0 && 2.0 * static_cast<double>(*f) >
                                        static_cast<double>(*n) * static_cast<double>(T)) {
                s.fail("f", "spike probability 2f/(nT) exceeds 1");
            }
            if (s.problems().size() == before) {
                auto pair = indistinguishable_pair_scenario(*n, *f, T, *sigma, *mu);
                out.instance = *which == "D" ? pair.instance_D : pair.instance_Dprime;
            }
        } else if (*generator == "explicit") {
            auto mu = s.positive("mu");
            std::vector<DataSource> sources;
            if (!s.has("sources") || !s.node().at("sources").is_array() ||
                s.node().at("sources").empty()) {
                s.fail("sources", "required non-empty array is missing");
            } else {
                const json& arr = s.node().at("sources");
                for (std::size_t i = 0; i < arr.size(); ++i) {
                    if (auto src = parse_source(arr[i], s.field("sources") + "[" + std::to_string(i) + "]", s)) {
                        sources.push_back(*src);
                    }
                }
            }
            std::vector<std::size_t> honest;
            if (!s.has("honest") || !s.node().at("honest").is_array()) {
                s.fail("honest", "required array of worker indices is missing");
            } else {
                for (const auto& v : s.node().at("honest")) {
                    if (!is_index(v)) {
                        s.fail("honest", "indices must be non-negative integers");
                        break;
                    }
                    honest.push_back(v.get<std::size_t>());
                }
            }
            if (s.problems().size() == before) {
                out.instance = ProblemInstance(LossModel::quadratic(*mu), std::move(sources),
                                               std::move(honest));
            }
        } else {
            s.fail("generator", "unknown generator '" + *generator +
                                    "' (heterogeneous_dirac, gaussian, partial_poison, "
                                    "indistinguishable_pair, explicit)");
        }
    } catch (const InputError& e) {
        s.problems().push_back("scenario: " + std::string(e.what()));
        out.instance.reset();
    }
    return out;
}

json* resolve_path(json& root, const std::string& dotted) {
    json* node = &root;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = dotted.find('.', start);
        const std::string key = dotted.substr(start, dot == std::string::npos ? dot : dot - start);
        if (!node->is_object() || key.empty()) return nullptr;
        if (dot == std::string::npos) return &(*node)[key];
        if (!node->contains(key)) return nullptr;
        node = &(*node)[key];
        start = dot + 1;
    }
}

PreparedPoint prepare_point(const json& config, std::optional<json> sweep_value,
                            std::vector<std::string>& problems, const std::string& where) {
    const std::size_t before = problems.size();
    Reader r(config, "", problems);
    PreparedPoint point{config, std::move(sweep_value), Algorithm::dsgd_robust,
                        RunConfig{ProblemInstance(LossModel::quadratic(1.0),
                                                  {DataSource::dirac({0.0})}, {0}),
                                  {}, {}, {}, {}, 0, true, 0, kDivergenceThreshold},
                        {}, {}, {}};
    auto tag = [&](std::size_t from) {
        if (where.empty()) return;
        for (std::size_t i = from; i < problems.size(); ++i) problems[i] = where + problems[i];
    };

    const auto T = r.count("T");
    if (T && *T < 2) r.fail("T", "must be >= 2");
    if (T && *T > kMaxScheduleLength) r.fail("T", "exceeds the schedule length cap");

    if (!r.has("seeds") || !config.at("seeds").is_array() || config.at("seeds").empty()) {
        r.fail("seeds", "required non-empty list of unsigned integers");
    } else {
        for (const auto& v : config.at("seeds")) {
            if (!is_index(v)) {
                r.fail("seeds", "entries must be unsigned integers, got " + v.dump());
                break;
            }
            point.seeds.push_back(v.get<std::uint64_t>());
        }
    }

    const auto algo = r.text("algorithm");
    if (algo) {
        if (*algo == "dsgd_robust") point.algorithm = Algorithm::dsgd_robust;
        else if (*algo == "dgd_robust") point.algorithm = Algorithm::dgd_robust;
        else if (*algo == "baseline") point.algorithm = Algorithm::baseline;
        else r.fail("algorithm", "unknown algorithm '" + *algo + "' (dsgd_robust, dgd_robust, baseline)");
    }

    ScenarioBuild scenario = build_scenario(r, T.value_or(2));
    if (problems.size() != before || !scenario.instance || !algo) {
        tag(before);
        return point;
    }
    const ProblemInstance& inst = *scenario.instance;
    const bool full_batch = point.algorithm == Algorithm::dgd_robust;
    if (full_batch && !scenario.partial) {
        r.fail("algorithm", "dgd_robust requires the partial_poison scenario");
    }
    if (!full_batch && scenario.partial) {
        r.fail("algorithm", "the partial_poison scenario runs with dgd_robust");
    }

    const std::size_t n = inst.n();
    const auto trim = r.count("trim", inst.f());
    if (trim && n <= 2 * *trim) {
        r.fail("trim", "must satisfy 2 * trim < n (n = " + std::to_string(n) + ")");
    }
    std::size_t local_trim = 0;
    if (full_batch && scenario.partial) {
        const auto lt = r.count("local_trim", scenario.partial->b);
        if (lt && scenario.partial->m <= 2 * *lt) r.fail("local_trim", "must satisfy 2 * local_trim < m");
        local_trim = lt.value_or(0);
    } else if (r.has("local_trim")) {
        r.fail("local_trim", "only used by dgd_robust");
    }

    // Adversary: what the workers outside H do.
    std::optional<AttackSpec> attack;
    if (r.has("adversary")) {
        Reader a(config.at("adversary"), "adversary", problems);
        const auto kind = a.text("kind");
        if (kind && *kind == "byzantine") {
            attack = parse_attack(a, "attack");
        } else if (kind && *kind != "fully_poisoned") {
            a.fail("kind", "must be byzantine or fully_poisoned");
        }
    }

    ParamVector theta0;
    if (r.has("theta0")) {
        if (auto v = r.vector("theta0")) {
            if (v->size() != inst.dim()) r.fail("theta0", "dimension must match the scenario");
            theta0 = *v;
        }
    }

    Schedule schedule;
    const double L = inst.loss().smoothness();
    const double mu = inst.loss().mu();
    if (T && *T >= 2 && *T <= kMaxScheduleLength) {
        try {
            if (!r.has("schedule") || (config.at("schedule").is_string() &&
                                       config.at("schedule").get<std::string>() == "auto")) {
                schedule = full_batch ? constant_schedule(*T, 1.0 / L) : auto_schedule(*T, L, mu);
            } else if (config.at("schedule").is_string()) {
                const auto name = config.at("schedule").get<std::string>();
                if (full_batch) r.fail("schedule", "dgd_robust takes \"auto\" or {\"constant\": gamma}");
                else if (name == "option1") schedule = option1_schedule(*T, L);
                else if (name == "option2") schedule = option2_schedule(*T, L, mu);
                else r.fail("schedule", "unknown schedule '" + name + "'");
            } else if (config.at("schedule").is_object()) {
                Reader sc(config.at("schedule"), "schedule", problems);
                if (auto g = sc.positive("constant")) schedule = constant_schedule(*T, *g);
            } else {
                r.fail("schedule", "expected a name or {\"constant\": gamma}");
            }
        } catch (const InputError& e) {
            r.fail("schedule", e.what());
        }
    }

    if (problems.size() != before) {
        tag(before);
        return point;
    }

    std::vector<WorkerSpec> workers;
    if (full_batch) {
        workers = scenario.partial->workers(scenario.partial_case, attack);
    } else {
        workers = workers_from_instance(inst);
        if (attack) {
            for (std::size_t i = 0; i < n; ++i) {
                if (!inst.is_honest(i)) workers[i] = WorkerSpec::byzantine(*attack);
            }
        }
        if (attack) {
            if (const auto* fv = std::get_if<AttackSpec::FixedVector>(&attack->kind);
                fv != nullptr && fv->v.size() != inst.dim()) {
                r.fail("adversary.attack.v", "dimension must match the scenario");
            }
        }
    }

    const AggregatorSpec aggregator = point.algorithm == Algorithm::baseline
                                          ? AggregatorSpec::average()
                                          : AggregatorSpec::trimmed_mean(*trim);
    point.run = RunConfig{inst,   std::move(workers), aggregator, std::move(schedule),
                          theta0, 0,                  true,       local_trim,
                          kDivergenceThreshold};

    try {
        const AssumptionConstants c = verify_assumptions(inst);
        BoundConstants& bc = point.constants;
        bc.mu = mu;
        bc.L = L;
        bc.sigma_sq = c.sigma_sq;
        bc.zeta_sq = c.zeta_sq;
        bc.n = n;
        bc.f = inst.f();
        bc.lambda = lambda_coeff(n, aggregator.trim);
        bc.Q0 = inst.gap(theta0.empty() ? ParamVector(inst.dim(), 0.0) : theta0);
        const double het = heterogeneity_floor(n, inst.f(), c.zeta_sq, mu);
        if (full_batch) {
            bc.bound_kind = "full_batch";
            bc.m = scenario.partial->m;
            bc.b = local_trim;
            bc.lambda_prime = lambda_prime_coeff(bc.m, bc.b);
            bc.floor = std::max(het, partial_poison_floor(bc.m, scenario.partial->b, c.sigma_sq, mu));
        } else {
            bc.bound_kind = "momentum_sgd";
            bc.floor = het;
        }
    } catch (const InputError& e) {
        r.fail("scenario", e.what());
    }

    point.fingerprint = fingerprint(config);
    tag(before);
    return point;
}

void append_number(std::string& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os << content;
    if (!os) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> problems)
    : std::runtime_error("invalid config:\n  " + join(problems, "\n  ")),
      problems_(std::move(problems)) {}

double BoundConstants::upper_bound(double T) const {
    if (bound_kind == "full_batch") {
        return full_batch_upper_bound(T, {Q0, mu, L, lambda, lambda_prime, sigma_sq, zeta_sq});
    }
    return sgd_upper_bound(T, {Q0, L / mu, lambda, sigma_sq, zeta_sq, mu, n, f});
}

json BoundConstants::to_json() const {
    return json{{"bound_kind", bound_kind}, {"Q0", Q0},         {"mu", mu},
                {"L", L},                   {"lambda", lambda}, {"lambda_prime", lambda_prime},
                {"sigma_sq", sigma_sq},     {"zeta_sq", zeta_sq}, {"n", n},
                {"f", f},                   {"m", m},           {"b", b},
                {"floor", floor}};
}

BoundConstants BoundConstants::from_json(const json& j) {
    BoundConstants c;
    try {
        c.bound_kind = j.at("bound_kind").get<std::string>();
        c.Q0 = j.at("Q0").get<double>();
        c.mu = j.at("mu").get<double>();
        c.L = j.at("L").get<double>();
        c.lambda = j.at("lambda").get<double>();
        c.lambda_prime = j.at("lambda_prime").get<double>();
        c.sigma_sq = j.at("sigma_sq").get<double>();
        c.zeta_sq = j.at("zeta_sq").get<double>();
        c.n = j.at("n").get<std::size_t>();
        c.f = j.at("f").get<std::size_t>();
        c.m = j.at("m").get<std::size_t>();
        c.b = j.at("b").get<std::size_t>();
        c.floor = j.at("floor").get<double>();
    } catch (const json::exception& e) {
        throw CapabilityError(std::string("summary constants incomplete: ") + e.what());
    }
    return c;
}

std::vector<PreparedPoint> prepare(const json& config, std::optional<std::uint64_t> seed_override) {
    std::vector<std::string> problems;
    if (!config.is_object()) throw ValidationError({"config: expected a JSON object"});
    json base = config;
    if (seed_override) base["seeds"] = json::array({*seed_override});

    std::vector<std::pair<json, std::optional<json>>> expanded;
    if (base.contains("sweep")) {
        const json sweep = base.at("sweep");
        base.erase("sweep");
        Reader s(sweep, "sweep", problems);
        auto parameter = s.text("parameter");
        if (!sweep.is_object() || !sweep.contains("values") || !sweep.at("values").is_array() ||
            sweep.at("values").empty()) {
            s.fail("values", "required non-empty array");
        } else if (parameter) {
            std::string path = *parameter;
            if (path.find('.') == std::string::npos && !base.contains(path) &&
                base.contains("scenario") && base.at("scenario").is_object() &&
                base.at("scenario").contains(path)) {
                path = "scenario." + path;
            }
            for (const auto& value : sweep.at("values")) {
                json point = base;
                json* slot = resolve_path(point, path);
                if (slot == nullptr) {
                    s.fail("parameter", "path '" + *parameter + "' does not name a config field");
                    break;
                }
                *slot = value;
                expanded.emplace_back(std::move(point), value);
            }
        }
    } else {
        expanded.emplace_back(base, std::nullopt);
    }
    if (!problems.empty()) throw ValidationError(problems);

    std::vector<PreparedPoint> points;
    for (std::size_t k = 0; k < expanded.size(); ++k) {
        const std::string where =
            expanded.size() > 1 ? "sweep[" + std::to_string(k) + "] " : std::string();
        points.push_back(prepare_point(expanded[k].first, expanded[k].second, problems, where));
    }
    if (!problems.empty()) throw ValidationError(problems);
    return points;
}

RunResult execute(const PreparedPoint& point, std::uint64_t seed) {
    RunConfig run = point.run;
    run.seed = seed;
    switch (point.algorithm) {
        case Algorithm::dsgd_robust:
            return run_dsgd_robust(run);
        case Algorithm::dgd_robust:
            return run_dgd_robust(run);
        case Algorithm::baseline:
            return run_baseline_dsgd(run);
    }
    throw InputError("unknown algorithm");
}

std::string format_trace_csv(std::span<const IterationRecord> trace) {
    std::string out;
    out.reserve(64 + trace.size() * 160);
    out += "# schema: ";
    out += kTraceSchema;
    out += '\n';
    out += kTraceHeader;
    out += '\n';
    for (const auto& rec : trace) {
        out += std::to_string(rec.t);
        for (double v : {rec.gamma, rec.beta, rec.loss_gap, rec.grad_norm_sq, rec.deviation_sq,
                         rec.mean_drift_sq, rec.lyapunov}) {
            out += ',';
            append_number(out, v);
        }
        out += '\n';
    }
    return out;
}

std::vector<IterationRecord> parse_trace_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != std::string("# schema: ") + kTraceSchema) {
        throw InputError("trace: missing or unsupported schema line");
    }
    if (!std::getline(in, line) || line != kTraceHeader) throw InputError("trace: bad header row");
    std::vector<IterationRecord> rows;
    std::size_t lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (cells.size() != 8) {
            throw InputError("trace line " + std::to_string(lineno) + ": expected 8 columns");
        }
        IterationRecord rec;
        auto parse = [&](const std::string& cell, auto& target) {
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), target);
            if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
                throw InputError("trace line " + std::to_string(lineno) + ": bad value '" + cell + "'");
            }
        };
        parse(cells[0], rec.t);
        double* fields[] = {&rec.gamma,        &rec.beta,          &rec.loss_gap,
                            &rec.grad_norm_sq, &rec.deviation_sq,  &rec.mean_drift_sq,
                            &rec.lyapunov};
        for (std::size_t c = 0; c < 7; ++c) parse(cells[c + 1], *fields[c]);
        if (!rows.empty() && rec.t != rows.back().t + 1) {
            throw InputError("trace line " + std::to_string(lineno) + ": non-consecutive t");
        }
        rows.push_back(rec);
    }
    return rows;
}

std::string fingerprint(const json& config) {
    // FNV-1a over the canonical dump; object keys are sorted by nlohmann::json.
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : config.dump()) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

json SummaryRecord::to_json() const {
    json gaps = json::array();
    for (const auto& g : final_gaps) gaps.push_back(g ? json(*g) : json(nullptr));
    json div = json::array();
    for (const auto& d : diverged_at) div.push_back(d ? json(*d) : json(nullptr));
    return json{{"schema", kSummarySchema},
                {"fingerprint", fingerprint},
                {"config", config},
                {"sweep_value", sweep_value ? *sweep_value : json(nullptr)},
                {"seeds", seeds},
                {"final_gaps", gaps},
                {"diverged_at", div},
                {"errors", errors},
                {"mean_final_gap", mean_final_gap ? json(*mean_final_gap) : json(nullptr)},
                {"std_final_gap", std_final_gap ? json(*std_final_gap) : json(nullptr)},
                {"bound_kind", constants.bound_kind},
                {"upper_bound", upper_bound},
                {"lower_bound_floor", constants.floor},
                {"constants", constants.to_json()},
                {"wall_seconds", wall_seconds},
                {"trace_files", trace_files}};
}

SummaryRecord SummaryRecord::from_json(const json& j) {
    if (j.value("schema", std::string()) != kSummarySchema) {
        throw InputError("summary: missing or unsupported schema");
    }
    SummaryRecord s;
    s.fingerprint = j.at("fingerprint").get<std::string>();
    s.config = j.at("config");
    if (!j.at("sweep_value").is_null()) s.sweep_value = j.at("sweep_value");
    s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    for (const auto& g : j.at("final_gaps")) {
        s.final_gaps.push_back(g.is_null() ? std::nullopt : std::optional<double>(g.get<double>()));
    }
    for (const auto& d : j.at("diverged_at")) {
        s.diverged_at.push_back(d.is_null() ? std::nullopt
                                            : std::optional<std::size_t>(d.get<std::size_t>()));
    }
    s.errors = j.at("errors").get<std::vector<std::string>>();
    if (!j.at("mean_final_gap").is_null()) s.mean_final_gap = j.at("mean_final_gap").get<double>();
    if (!j.at("std_final_gap").is_null()) s.std_final_gap = j.at("std_final_gap").get<double>();
    s.upper_bound = j.at("upper_bound").get<double>();
    s.constants = BoundConstants::from_json(j.at("constants"));
    s.wall_seconds = j.at("wall_seconds").get<double>();
    s.trace_files = j.at("trace_files").get<std::vector<std::string>>();
    return s;
}

ExperimentResult run_experiment(const json& config, const ExperimentOptions& options) {
    const std::vector<PreparedPoint> points = prepare(config, options.seed_override);
    const std::string name = config.value("name", std::string("experiment"));

    struct Job {
        std::size_t point;
        std::size_t seed_index;
    };
    struct Outcome {
        std::optional<double> final_gap;
        std::optional<std::size_t> diverged_at;
        std::string error;
        std::string trace_file;
        double seconds = 0.0;
    };
    std::vector<Job> jobs;
    for (std::size_t p = 0; p < points.size(); ++p) {
        for (std::size_t s = 0; s < points[p].seeds.size(); ++s) jobs.push_back({p, s});
    }
    std::vector<Outcome> outcomes(jobs.size());

    fs::create_directories(options.out_dir);
    if (options.write_traces) fs::create_directories(options.out_dir / "traces");
    fs::create_directories(options.out_dir / "configs");

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t j = next.fetch_add(1); j < jobs.size(); j = next.fetch_add(1)) {
            const PreparedPoint& point = points[jobs[j].point];
            const std::uint64_t seed = point.seeds[jobs[j].seed_index];
            Outcome& out = outcomes[j];
            const auto start = std::chrono::steady_clock::now();
            try {
                const RunResult result = execute(point, seed);
                out.diverged_at = result.diverged_at;
                if (!result.diverged() && std::isfinite(result.final_gap)) out.final_gap = result.final_gap;
                if (options.write_traces) {
                    out.trace_file = "traces/" + name + "-p" + std::to_string(jobs[j].point) +
                                     "-s" + std::to_string(seed) + ".csv";
                    write_file(options.out_dir / out.trace_file, format_trace_csv(result.trace));
                }
            } catch (const std::exception& e) {
                out.error = e.what();
            }
            out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }
    };
    const unsigned threads = std::max(1U, options.threads);
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    ExperimentResult result;
    std::string summary_text;
    std::size_t j = 0;
    for (std::size_t p = 0; p < points.size(); ++p) {
        const PreparedPoint& point = points[p];
        SummaryRecord rec;
        rec.fingerprint = point.fingerprint;
        rec.config = point.config;
        rec.sweep_value = point.sweep_value;
        rec.seeds = point.seeds;
        rec.constants = point.constants;
        rec.upper_bound = point.constants.upper_bound(static_cast<double>(point.run.T()));
        std::vector<double> done;
        for (std::size_t s = 0; s < point.seeds.size(); ++s, ++j) {
            const Outcome& o = outcomes[j];
            rec.final_gaps.push_back(o.final_gap);
            rec.diverged_at.push_back(o.diverged_at);
            rec.errors.push_back(o.error);
            rec.wall_seconds += o.seconds;
            if (!o.trace_file.empty()) {
                rec.trace_files.push_back(o.trace_file);
                result.trace_files.push_back(options.out_dir / o.trace_file);
            }
            if (o.final_gap) done.push_back(*o.final_gap);
        }
        if (!done.empty()) {
            double mean = 0.0;
            for (double g : done) mean += g;
            mean /= static_cast<double>(done.size());
            double var = 0.0;
            for (double g : done) var += (g - mean) * (g - mean);
            rec.mean_final_gap = mean;
            rec.std_final_gap =
                done.size() > 1 ? std::sqrt(var / static_cast<double>(done.size() - 1)) : 0.0;
        }
        write_file(options.out_dir / "configs" / (name + "-p" + std::to_string(p) + ".json"),
                   point.config.dump(2) + "\n");
        summary_text += rec.to_json().dump() + "\n";
        result.summaries.push_back(std::move(rec));
    }
    result.summary_file = options.out_dir / (name + ".summary.jsonl");
    write_file(result.summary_file, summary_text);
    return result;
}

std::vector<OverlayRow> emit_bound_overlay(const json& summary, std::span<const std::size_t> t_grid,
                                           std::span<const std::vector<IterationRecord>> traces) {
    if (!summary.contains("constants") || !summary.at("constants").is_object()) {
        throw CapabilityError("bound overlay: summary carries no instance constants");
    }
    const BoundConstants c = BoundConstants::from_json(summary.at("constants"));
    std::optional<double> final_mean;
    if (summary.contains("mean_final_gap") && summary.at("mean_final_gap").is_number()) {
        final_mean = summary.at("mean_final_gap").get<double>();
    }
    std::optional<std::size_t> T;
    if (summary.contains("config") && summary.at("config").contains("T")) {
        T = summary.at("config").at("T").get<std::size_t>();
    }

    std::vector<OverlayRow> rows;
    rows.reserve(t_grid.size());
    for (std::size_t t : t_grid) {
        OverlayRow row{t, std::nullopt, std::nullopt, c.floor};
        if (c.bound_kind == "full_batch" || t >= 2) row.bound = c.upper_bound(static_cast<double>(t));
        if (T && t == *T) {
            row.empirical_mean_gap = final_mean;
        } else if (!traces.empty()) {
            double acc = 0.0;
            std::size_t count = 0;
            for (const auto& trace : traces) {
                if (t < trace.size()) {
                    acc += trace[t].loss_gap;
                    ++count;
                }
            }
            if (count == traces.size() && count > 0) row.empirical_mean_gap = acc / static_cast<double>(count);
        }
        rows.push_back(row);
    }
    return rows;
}

std::string format_overlay_csv(std::span<const OverlayRow> rows) {
    std::string out = "t,empirical_mean_gap,bound,floor\n";
    for (const auto& row : rows) {
        out += std::to_string(row.t);
        out += ',';
        if (row.empirical_mean_gap) append_number(out, *row.empirical_mean_gap);
        out += ',';
        if (row.bound) append_number(out, *row.bound);
        out += ',';
        append_number(out, row.floor);
        out += '\n';
    }
    return out;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace byzsim::harness
