#include "dglcb/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace dglcb {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Reads an object's fields, remembering which keys were consumed so leftovers
// can be reported as unknown.
class Reader {
public:
    Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError("config key '" + path_ + "' must be an object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return node_.contains(key) && !node_.at(key).is_null();
    }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        if (!node_.contains(key)) throw ConfigError("missing config key '" + join(path_, key) + "'");
        return node_.at(key);
    }

    template <class T>
    T require(const std::string& key) {
        return convert<T>(raw(key), key);
    }

    template <class T>
    T get(const std::string& key, T fallback) {
        return has(key) ? convert<T>(node_.at(key), key) : fallback;
    }

    std::string path(const std::string& key) const { return join(path_, key); }

    void finish() const {
        for (const auto& item : node_.items()) {
            if (!seen_.count(item.key())) throw ConfigError("unknown config key '" + join(path_, item.key()) + "'");
        }
    }

private:
    template <class T>
    T convert(const json& value, const std::string& key) const {
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!value.is_number()) throw ConfigError("");
            } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
                if (!value.is_number_integer() && !value.is_number_unsigned()) throw ConfigError("");
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!value.is_boolean()) throw ConfigError("");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!value.is_string()) throw ConfigError("");
            }
            return value.get<T>();
        } catch (const std::exception&) {
            throw ConfigError("config key '" + join(path_, key) + "' has the wrong type (got " +
                              std::string(value.type_name()) + ")");
        }
    }

    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

Vector parse_vector(const json& node, const std::string& path, int d) {
    if (!node.is_array()) throw ConfigError("config key '" + path + "' must be an array of numbers");
    if (static_cast<int>(node.size()) != d) {
        throw ConfigError("config key '" + path + "' must have " + std::to_string(d) + " entries");
    }
    Vector v(d);
    for (int i = 0; i < d; ++i) {
        if (!node[static_cast<std::size_t>(i)].is_number()) throw ConfigError("config key '" + path + "' must hold numbers");
        v[i] = node[static_cast<std::size_t>(i)].get<double>();
    }
    return v;
}

json vector_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

Matrix parse_matrix(const json& node, const std::string& path) {
    if (!node.is_array() || node.empty()) throw ConfigError("config key '" + path + "' must be a non-empty array of rows");
    const std::size_t cols = node[0].is_array() ? node[0].size() : 0;
    Matrix m(static_cast<Eigen::Index>(node.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < node.size(); ++i) {
        if (!node[i].is_array() || node[i].size() != cols) throw ConfigError("config key '" + path + "' has ragged rows");
        for (std::size_t j = 0; j < cols; ++j) {
            if (!node[i][j].is_number()) throw ConfigError("config key '" + path + "' must hold numbers");
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = node[i][j].get<double>();
        }
    }
    return m;
}

json matrix_json(const Matrix& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(row);
    }
    return out;
}

// Extremes of g' and |g''| over |u| <= r.
double min_slope(const LinkFunction& link, double r) { return std::min(link.slope(r), link.slope(-r)); }
double max_slope(const LinkFunction& link, double r) {
    return link.kind == LinkKind::logistic ? 0.25 : std::max(link.slope(r), link.slope(-r));
}
double max_curvature(const LinkFunction& link, double r) {
    switch (link.kind) {
        case LinkKind::linear: return 1.0;
        case LinkKind::logistic: return r >= std::log(2.0 + std::sqrt(3.0)) ? 1.0 / (6.0 * std::sqrt(3.0)) : [&] {
            const double p = link.mean(r);
            return p * (1.0 - p) * std::abs(1.0 - 2.0 * p);
        }();
        case LinkKind::poisson: return std::exp(std::min(r, link.clamp));
    }
    return 1.0;
}

PolicyConfig parse_policy(const json& node, const std::string& path, int d, std::string& name) {
    Reader r(node, path);
    PolicyConfig p;
    try {
        p.kind = parse_policy_kind(r.require<std::string>("kind"));
        p.delta = r.get<double>("delta", 0.1);
        if (!(p.delta > 0.0 && p.delta <= 1.0)) throw ParameterError("must lie in (0, 1]");
        p.tau = r.get<int>("tau", static_cast<int>(std::ceil(d + std::log(1.0 / p.delta))));
        p.a = r.get<double>("a", 1.0);
        p.v = r.get<double>("v", 1.0);
        p.beta_variant = parse_beta_variant(r.get<std::string>("beta_variant", "sqrt-g"));
        p.ridge = r.get<double>("ridge", 1e-6);
        p.mle_refit_ratio = r.get<double>("mle_refit_ratio", 0.0);
        p.mle_warm_start = r.get<bool>("mle_warm_start", false);
        name = r.get<std::string>("name", std::string(policy_kind_name(p.kind)));
        p.validate();
    } catch (const ParameterError& e) {
        throw ConfigError("config key '" + path + "': " + e.what());
    }
    r.finish();
    return p;
}

json policy_json(const PolicyConfig& p, const std::string& name) {
    return json{{"kind", policy_kind_name(p.kind)},
                {"name", name},
                {"tau", p.tau},
                {"delta", p.delta},
                {"a", p.a},
                {"v", p.v},
                {"beta_variant", beta_variant_name(p.beta_variant)},
                {"ridge", p.ridge},
                {"mle_refit_ratio", p.mle_refit_ratio},
                {"mle_warm_start", p.mle_warm_start}};
}

std::string markov_kernel_name(delay::MarkovKernelKind kind) {
    switch (kind) {
        case delay::MarkovKernelKind::metropolis: return "metropolis";
        case delay::MarkovKernelKind::resample: return "resample";
        case delay::MarkovKernelKind::explicit_matrix: return "explicit";
    }
    return "unknown";
}

}  // namespace

DelayModel parse_delay(const json& node, const std::string& path) {
    Reader r(node, path);
    const std::string kind = r.require<std::string>("kind");
    r.has("name");
    try {
        DelayModel model = [&]() -> DelayModel {
            if (kind == "bounded") return DelayModel::bounded(r.require<std::int64_t>("d_max"));
            if (kind == "iid-envelope") {
                return DelayModel::iid_envelope(r.get<double>("mu", 0.0), r.get<double>("big_m", 0.0),
                                                r.get<double>("sigma", 1.0), r.get<double>("q", 0.0));
            }
            if (kind == "iid-exponential") {
                return DelayModel::iid_exponential(r.require<double>("mu_i"), r.get<double>("sigma_i", 1.0));
            }
            if (kind == "markov") {
                const double mu_m = r.require<double>("mu_m");
                const double lambda = r.get<double>("lambda", 0.0);
                const double sigma_m = r.get<double>("sigma_m", 1.0);
                const double q = r.get<double>("q", 1.0);
                if (r.has("kernel") && node.at("kernel").is_array()) {
                    return DelayModel::markov_explicit(parse_matrix(node.at("kernel"), r.path("kernel")), lambda, mu_m,
                                                       sigma_m, q);
                }
                const std::string kernel = r.get<std::string>("kernel", "metropolis");
                if (kernel == "metropolis") return DelayModel::markov_metropolis(mu_m, lambda, sigma_m, q);
                if (kernel == "resample") return DelayModel::markov_resample(mu_m, lambda, sigma_m, q);
                throw ParameterError("kernel must be 'metropolis', 'resample' or a matrix");
            }
            if (kind == "dependent-copula") {
                return DelayModel::dependent_copula(r.get<double>("phi", 0.0), r.get<double>("sigma_r", 1.0),
                                                    r.get<double>("q", 1.0), r.get<double>("mu_r", 0.0));
            }
            if (kind == "first-moment") {
                return DelayModel::first_moment(r.get<double>("big_m", 0.0), r.require<double>("b"),
                                                r.get<double>("alpha", 2.0));
            }
            throw ParameterError("unknown delay kind '" + kind + "'");
        }();
        r.finish();
        return model;
    } catch (const ParameterError& e) {
        throw ConfigError("config key '" + path + "': " + e.what());
    }
}

json delay_to_json(const DelayModel& model) {
    json out;
    out["kind"] = model.kind();
    if (const auto* m = model.as<delay::Bounded>()) {
        out["d_max"] = m->d_max;
    } else if (const auto* m = model.as<delay::IidEnvelope>()) {
        out["mu"] = m->mu;
        out["big_m"] = m->big_m;
        out["sigma"] = m->sigma;
        out["q"] = m->q;
    } else if (const auto* m = model.as<delay::IidExponential>()) {
        out["mu_i"] = m->mu_i;
        out["sigma_i"] = m->sigma_i;
    } else if (const auto* m = model.as<delay::Markov>()) {
        out["mu_m"] = m->mu_m;
        out["lambda"] = m->lambda;
        out["sigma_m"] = m->sigma_m;
        out["q"] = m->q;
        if (m->kernel_kind == delay::MarkovKernelKind::explicit_matrix) {
            out["kernel"] = matrix_json(m->kernel);
        } else {
            out["kernel"] = markov_kernel_name(m->kernel_kind);
        }
    } else if (const auto* m = model.as<delay::DependentCopula>()) {
        out["phi"] = m->phi;
        out["sigma_r"] = m->sigma_r;
        out["q"] = m->q;
        out["mu_r"] = m->mu_r;
    } else if (const auto* m = model.as<delay::FirstMoment>()) {
        out["big_m"] = m->big_m;
        out["b"] = m->b;
        out["alpha"] = m->alpha;
    }
    return out;
}

ExperimentConfig parse_config(const json& tree) {
    ExperimentConfig config;
    Reader top(tree, "");

    // env
    Reader env(top.raw("env"), "env");
    EnvSpec base;
    try {
        base.glm.link.kind = parse_link(env.require<std::string>("link"));
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("config key 'env.link': ") + e.what());
    }
    base.glm.link.clamp = env.get<double>("clamp", 30.0);
    base.glm.d = env.require<int>("d");
    if (base.glm.d < 1) throw ConfigError("config key 'env.d' must be >= 1");
    base.k = env.require<int>("k");
    base.glm.theta_max = env.get<double>("theta_max", 10.0);
    base.glm.sigma_hat = env.get<double>("sigma_hat", base.glm.link.kind == LinkKind::logistic ? 0.5 : 1.0);
    base.glm.kappa = env.get<double>("kappa", min_slope(base.glm.link, base.glm.theta_max));
    base.glm.l_g = env.get<double>("l_g", max_slope(base.glm.link, base.glm.theta_max));
    base.glm.m_g = env.get<double>("m_g", max_curvature(base.glm.link, base.glm.theta_max));
    try {
        base.context_law = parse_context_law(env.get<std::string>("context_law", "uniform-ball"));
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("config key 'env.context_law': ") + e.what());
    }
    if (env.has("pool")) base.pool = parse_matrix(env.raw("pool"), "env.pool");
    if (env.has("theta_star")) base.theta_star = parse_vector(env.raw("theta_star"), "env.theta_star", base.glm.d);
    if (env.has("prior")) {
        Reader prior(env.raw("prior"), "env.prior");
        GaussianPrior p;
        p.theta0 = prior.has("theta0") ? parse_vector(prior.raw("theta0"), "env.prior.theta0", base.glm.d)
                                       : Vector::Zero(base.glm.d);
        p.v2 = prior.get<double>("v2", 1.0);
        p.a = prior.get<double>("a", 1.0);
        prior.finish();
        base.prior = p;
    }
    base.horizon = env.require<std::int64_t>("horizon");

    const json& delay_node = env.raw("delay");
    std::vector<json> delay_nodes;
    if (delay_node.is_array()) {
        if (delay_node.empty()) throw ConfigError("config key 'env.delay' must not be empty");
        for (const auto& d : delay_node) delay_nodes.push_back(d);
    } else {
        delay_nodes.push_back(delay_node);
    }
    env.finish();

    for (std::size_t i = 0; i < delay_nodes.size(); ++i) {
        const std::string path = delay_node.is_array() ? "env.delay." + std::to_string(i) : "env.delay";
        EnvSpec spec = base;
        spec.delay = parse_delay(delay_nodes[i], path);
        try {
            spec.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config key 'env': ") + e.what());
        }
        config.envs.push_back(std::move(spec));
        config.env_names.push_back(delay_nodes[i].contains("name") ? delay_nodes[i].at("name").get<std::string>()
                                                                    : config.envs.back().delay.describe());
    }

    // policy
    const json& policy_node = top.raw("policy");
    if (policy_node.is_array()) {
        if (policy_node.empty()) throw ConfigError("config key 'policy' must not be empty");
        for (std::size_t i = 0; i < policy_node.size(); ++i) {
            std::string name;
            config.policies.push_back(parse_policy(policy_node[i], "policy." + std::to_string(i), base.glm.d, name));
            config.policy_names.push_back(name);
        }
    } else {
        std::string name;
        config.policies.push_back(parse_policy(policy_node, "policy", base.glm.d, name));
        config.policy_names.push_back(name);
    }
    for (const PolicyConfig& p : config.policies) {
        if (p.tau > base.horizon) throw ConfigError("config key 'policy.tau' exceeds env.horizon");
    }

    // seeds
    if (top.has("seeds")) {
        Reader seeds(top.raw("seeds"), "seeds");
        config.master_seed = seeds.get<std::uint64_t>("master", 0);
        config.seed_count = seeds.get<int>("count", 1);
        seeds.finish();
    }
    if (config.seed_count < 1) throw ConfigError("config key 'seeds.count' must be >= 1");
    config.parallelism = top.get<int>("parallelism", 1);
    if (config.parallelism < 1) throw ConfigError("config key 'parallelism' must be >= 1");

    // outputs
    if (top.has("outputs")) {
        Reader out(top.raw("outputs"), "outputs");
        config.outputs.dir = out.get<std::string>("dir", "out");
        config.outputs.emit_trace = out.get<bool>("emit_trace", false);
        config.outputs.emit_summary = out.get<bool>("emit_summary", true);
        if (out.has("checkpoints")) {
            const json& cps = out.raw("checkpoints");
            if (!cps.is_array()) throw ConfigError("config key 'outputs.checkpoints' must be an array");
            for (const auto& c : cps) {
                if (!c.is_number_integer()) throw ConfigError("config key 'outputs.checkpoints' must hold integers");
                config.outputs.checkpoints.push_back(c.get<std::int64_t>());
            }
        }
        out.finish();
    }
    auto& cps = config.outputs.checkpoints;
    if (cps.empty()) cps.push_back(base.horizon);
    for (std::size_t i = 0; i < cps.size(); ++i) {
        if (cps[i] < 1 || cps[i] > base.horizon || (i > 0 && cps[i] <= cps[i - 1])) {
            throw ConfigError("config key 'outputs.checkpoints' must be strictly increasing within [1, env.horizon]");
        }
    }
    top.finish();

    config.resolved = serialize_config(config);
    return config;
}

json serialize_config(const ExperimentConfig& config) {
    const EnvSpec& e = config.envs.front();
    json env;
    env["link"] = link_name(e.glm.link.kind);
    env["clamp"] = e.glm.link.clamp;
    env["d"] = e.glm.d;
    env["k"] = e.k;
    env["sigma_hat"] = e.glm.sigma_hat;
    env["kappa"] = e.glm.kappa;
    env["l_g"] = e.glm.l_g;
    env["m_g"] = e.glm.m_g;
    env["theta_max"] = e.glm.theta_max;
    env["context_law"] = context_law_name(e.context_law);
    if (e.context_law == ContextLaw::fixed_pool || e.pool.size() > 0) env["pool"] = matrix_json(e.pool);
    if (e.theta_star) env["theta_star"] = vector_json(*e.theta_star);
    if (e.prior) env["prior"] = json{{"theta0", vector_json(e.prior->theta0)}, {"v2", e.prior->v2}, {"a", e.prior->a}};
    env["horizon"] = e.horizon;
    json delays = json::array();
    for (std::size_t i = 0; i < config.envs.size(); ++i) {
        json d = delay_to_json(config.envs[i].delay);
        d["name"] = config.env_names[i];
        delays.push_back(d);
    }
    env["delay"] = delays.size() == 1 ? delays[0] : delays;

    json policies = json::array();
    for (std::size_t i = 0; i < config.policies.size(); ++i) {
        policies.push_back(policy_json(config.policies[i], config.policy_names[i]));
    }

    json out;
    out["env"] = env;
    out["policy"] = policies.size() == 1 ? policies[0] : policies;
    out["seeds"] = json{{"master", config.master_seed}, {"count", config.seed_count}};
    out["parallelism"] = config.parallelism;
    out["outputs"] = json{{"dir", config.outputs.dir},
                          {"emit_trace", config.outputs.emit_trace},
                          {"emit_summary", config.outputs.emit_summary},
                          {"checkpoints", config.outputs.checkpoints}};
    return out;
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
}

namespace {

json parse_value(const std::string& value) {
    try {
        return json::parse(value);
    } catch (const json::parse_error&) {
        return json(value);
    }
}

bool is_index(const std::string& s) { return !s.empty() && std::all_of(s.begin(), s.end(), ::isdigit); }

void set_path(json& node, const std::vector<std::string>& parts, std::size_t i, const json& value,
              const std::string& dotted) {
    if (i == parts.size()) {
        node = value;
        return;
    }
    const std::string& key = parts[i];
    if (node.is_array()) {
        if (is_index(key)) {
            const auto index = static_cast<std::size_t>(std::stoul(key));
            if (index >= node.size()) throw ConfigError("override '" + dotted + "': index " + key + " out of range");
            set_path(node[index], parts, i + 1, value, dotted);
        } else {
            for (auto& element : node) set_path(element, parts, i, value, dotted);
        }
        return;
    }
    if (node.is_null()) node = json::object();
    if (!node.is_object()) throw ConfigError("override '" + dotted + "': '" + key + "' is not inside an object");
    set_path(node[key], parts, i + 1, value, dotted);
}

}  // namespace

void apply_override(json& tree, const std::string& dotted_key, const std::string& value) {
    std::vector<std::string> parts;
    std::stringstream ss(dotted_key);
    for (std::string part; std::getline(ss, part, '.');) {
        if (part.empty()) throw ConfigError("override key '" + dotted_key + "' has an empty component");
        parts.push_back(part);
    }
    if (parts.empty()) throw ConfigError("empty override key");
    set_path(tree, parts, 0, parse_value(value), dotted_key);
}

void apply_seed_env(json& tree) {
    const char* env = std::getenv("DBL_SEED");
    if (env == nullptr || *env == '\0') return;
    char* end = nullptr;
    const unsigned long long seed = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw ConfigError("DBL_SEED must be a non-negative integer");
    tree["seeds"]["master"] = seed;
}

std::vector<SweepCell> build_cells(const ExperimentConfig& config) {
    std::vector<SweepCell> cells;
    const std::size_t n_policies = config.policies.size();
    for (std::size_t e = 0; e < config.envs.size(); ++e) {
        for (std::size_t p = 0; p < n_policies; ++p) {
            SweepCell cell;
            cell.index = e * n_policies + p;
            cell.name = config.policy_names[p] + "|" + config.env_names[e];
            cell.env = config.envs[e];
            cell.policy = config.policies[p];
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

DelayModel parse_model_spec(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    json node{{"kind", kind}};
    if (colon != std::string::npos) {
        std::stringstream ss(spec.substr(colon + 1));
        for (std::string item; std::getline(ss, item, ',');) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) {
                // A lone value is the model's first parameter.
                if (kind == "bounded") node["d_max"] = std::stoll(item);
                else if (kind == "iid-exponential") node["mu_i"] = std::stod(item);
                else if (kind == "markov") node["mu_m"] = std::stod(item);
                else throw ConfigError("model '" + spec + "': expected key=value pairs");
                continue;
            }
            std::string key = item.substr(0, eq);
            const std::string value = item.substr(eq + 1);
            if (key == "M") key = "big_m";
            if (key == "B") key = "b";
            if (key == "kernel") {
                node[key] = value;
            } else if (key == "d_max") {
                node[key] = std::stoll(value);
            } else {
                node[key] = std::stod(value);
            }
        }
    }
    try {
        return parse_delay(node, "model");
    } catch (const ConfigError& e) {
        throw ConfigError("model '" + spec + "': " + e.what());
    }
}

}  // namespace dglcb
