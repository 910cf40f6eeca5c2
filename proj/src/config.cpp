#include "fdrl/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "fdrl/errors.hpp"

namespace fdrl {

Profile parse_profile(std::string_view text) {
    if (text == "desk") return Profile::Desk;
    if (text == "paper") return Profile::Paper;
    throw ConfigError("unknown profile '" + std::string(text) + "'");
}

Eigen::VectorXd default_bandwidth(EnvKind env) {
    switch (env) {
        case EnvKind::Grasp2d: return Eigen::Vector4d(0.025, 0.025, 0.4, 0.4);
        case EnvKind::Bimodal1d: return Eigen::VectorXd::Constant(1, 0.025);
        case EnvKind::Rings2d: return Eigen::Vector2d(0.025, 0.025);
    }
    throw ConfigError("unknown environment");
}

namespace {

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto* begin = value.data();
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end) throw ConfigError("invalid value '" + value + "' for " + key);
    return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (const auto& item : split(value, ',')) out.push_back(parse_number<double>(key, item));
    return out;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string format_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_double(v[i]);
    }
    return out;
}

struct Field {
    std::string key;
    std::function<std::string(const TrainConfig&)> get;
    std::function<void(TrainConfig&, const std::string&)> set;
};

template <typename T>
Field int_field(std::string key, T TrainConfig::*member) {
    return {key, [member](const TrainConfig& c) { return std::to_string(c.*member); },
            [member, key](TrainConfig& c, const std::string& v) { c.*member = parse_number<T>(key, v); }};
}

Field double_field(std::string key, double TrainConfig::*member) {
    return {key, [member](const TrainConfig& c) { return format_double(c.*member); },
            [member, key](TrainConfig& c, const std::string& v) { c.*member = parse_number<double>(key, v); }};
}

Field grasp_field(std::string key, double GraspSpec::*member) {
    return {key, [member](const TrainConfig& c) { return format_double(c.grasp.*member); },
            [member, key](TrainConfig& c, const std::string& v) { c.grasp.*member = parse_number<double>(key, v); }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> all = {
        {"divergence", [](const TrainConfig& c) { return std::string(to_string(c.divergence)); },
         [](TrainConfig& c, const std::string& v) { c.divergence = parse_divergence(v); }},
        {"env", [](const TrainConfig& c) { return std::string(to_string(c.env)); },
         [](TrainConfig& c, const std::string& v) { c.env = parse_env(v); }},
        {"shapes",
         [](const TrainConfig& c) {
             std::string out;
             for (std::size_t i = 0; i < c.shapes.size(); ++i) {
                 if (i) out += ',';
                 out += to_string(c.shapes[i]);
             }
             return out;
         },
         [](TrainConfig& c, const std::string& v) {
             c.shapes.clear();
             for (const auto& item : split(v, ',')) c.shapes.push_back(parse_shape(item));
         }},
        int_field("seed", &TrainConfig::seed),
        int_field("N", &TrainConfig::N),
        int_field("M", &TrainConfig::M),
        int_field("m", &TrainConfig::m),
        int_field("U", &TrainConfig::U),
        int_field("K", &TrainConfig::K),
        int_field("L", &TrainConfig::L),
        {"sigma", [](const TrainConfig& c) { return format_list(c.sigma); },
         [](TrainConfig& c, const std::string& v) { c.sigma = parse_list("sigma", v); }},
        {"sigma_prime", [](const TrainConfig& c) { return format_list(c.sigma_prime); },
         [](TrainConfig& c, const std::string& v) { c.sigma_prime = parse_list("sigma_prime", v); }},
        int_field("capacity_positive", &TrainConfig::capacity_positive),
        int_field("capacity_negative", &TrainConfig::capacity_negative),
        int_field("interaction_steps", &TrainConfig::interaction_steps),
        int_field("critic_steps", &TrainConfig::critic_steps),
        int_field("actor_steps", &TrainConfig::actor_steps),
        int_field("total_steps", &TrainConfig::total_steps),
        int_field("prefill", &TrainConfig::prefill),
        int_field("checkpoint_interval", &TrainConfig::checkpoint_interval),
        int_field("latent_dim", &TrainConfig::latent_dim),
        int_field("hidden_width", &TrainConfig::hidden_width),
        int_field("hidden_layers", &TrainConfig::hidden_layers),
        {"activation",
         [](const TrainConfig& c) { return std::string(c.activation == Activation::Tanh ? "tanh" : "relu"); },
         [](TrainConfig& c, const std::string& v) {
             if (v == "tanh")
                 c.activation = Activation::Tanh;
             else if (v == "relu")
                 c.activation = Activation::Relu;
             else
                 throw ConfigError("unknown activation '" + v + "'");
         }},
        double_field("lr_actor", &TrainConfig::lr_actor),
        double_field("lr_critic", &TrainConfig::lr_critic),
        double_field("adam_beta1", &TrainConfig::adam_beta1),
        double_field("adam_beta2", &TrainConfig::adam_beta2),
        double_field("adam_eps", &TrainConfig::adam_eps),
        double_field("eps_p", &TrainConfig::eps_p),
        double_field("eps_v", &TrainConfig::eps_v),
        double_field("eps_c", &TrainConfig::eps_c),
        double_field("eps_r", &TrainConfig::eps_r),
        double_field("action_opt_fraction", &TrainConfig::action_opt_fraction),
        grasp_field("grasp_aperture", &GraspSpec::aperture),
        grasp_field("grasp_claw_width", &GraspSpec::claw_width),
        grasp_field("grasp_center_margin", &GraspSpec::center_margin_factor),
        grasp_field("grasp_angle_margin_deg", &GraspSpec::angle_margin_deg),
        grasp_field("grasp_presence", &GraspSpec::presence_fraction),
    };
    return all;
}

}  // namespace

Eigen::VectorXd TrainConfig::bandwidth() const {
    if (sigma.empty()) return default_bandwidth(env);
    return Eigen::Map<const Eigen::VectorXd>(sigma.data(), static_cast<Eigen::Index>(sigma.size()));
}

Eigen::VectorXd TrainConfig::proposal_bandwidth() const {
    if (sigma_prime.empty()) return 3.0 * bandwidth();
    return Eigen::Map<const Eigen::VectorXd>(sigma_prime.data(), static_cast<Eigen::Index>(sigma_prime.size()));
}

void TrainConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    require(N >= 1 && M >= 1 && m >= 1 && U >= 1 && K >= 1 && L >= 1, "N, M, m, U, K, L must be >= 1");
    require(M == m * N, "M must equal m * N");
    require(interaction_steps >= 1 && critic_steps >= 1 && actor_steps >= 1, "phase step counts must be >= 1");
    require(total_steps >= 0, "total_steps must be >= 0");
    require(capacity_positive >= 1 && capacity_negative >= 1, "memory capacities must be >= 1");
    require(latent_dim >= 1 && hidden_width >= 1 && hidden_layers >= 0, "network sizes must be positive");
    require(lr_actor > 0 && lr_critic > 0, "learning rates must be positive");
    require(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1 && adam_eps > 0,
            "invalid Adam parameters");
    require(eps_p > 0 && eps_v > 0 && eps_c > 0 && eps_c < 0.5 && eps_r > 0, "clamps must be positive");
    require(action_opt_fraction >= 0 && action_opt_fraction < 1, "action_opt_fraction must be in [0, 1)");
    require(!shapes.empty(), "shapes must not be empty");
    require(checkpoint_interval >= 0, "checkpoint_interval must be >= 0");
    const auto dim = default_bandwidth(env).size();
    const Eigen::VectorXd s = bandwidth();
    const Eigen::VectorXd sp = proposal_bandwidth();
    require(s.size() == dim, "sigma must have one entry per action dimension");
    require(sp.size() == dim, "sigma_prime must have one entry per action dimension");
    require((s.array() > 0).all(), "sigma entries must be positive");
    require((sp.array() > s.array()).all(), "sigma_prime must exceed sigma componentwise");
    grasp.validate();
}

std::string TrainConfig::to_text() const {
    std::string out;
    for (const auto& f : fields()) out += f.key + "=" + f.get(*this) + "\n";
    return out;
}

std::uint64_t TrainConfig::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : to_text()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void TrainConfig::set(const std::string& key, const std::string& value) {
    for (const auto& f : fields()) {
        if (f.key == key) {
            f.set(*this, trim(value));
            return;
        }
    }
    throw ConfigError("unknown config key '" + key + "'");
}

std::vector<std::string> TrainConfig::keys() {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
}

TrainConfig TrainConfig::for_profile(Profile profile) {
    TrainConfig c;
    if (profile == Profile::Paper) {
        c.N = 128;
        c.M = 256;
        c.m = 2;
        c.U = 64;
        c.K = 16;
        c.L = 32;
        c.capacity_positive = 160000;
        c.capacity_negative = 160000;
        c.total_steps = 1000000;
        c.prefill = 80000;
    }
    return c;
}

TrainConfig parse_config(std::istream& in, TrainConfig base) {
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(number) + ": expected key=value");
        base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return base;
}

TrainConfig load_config(const std::string& path, TrainConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in, std::move(base));
}

}  // namespace fdrl
