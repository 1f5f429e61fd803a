#include "cli/config_file.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <stdexcept>

namespace corgs::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const char* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        throw std::invalid_argument("config: cannot parse value '" + value + "' for key '" + key + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "on") {
        return true;
    }
    if (value == "false" || value == "0" || value == "off") {
        return false;
    }
    throw std::invalid_argument("config: expected a boolean for key '" + key + "', got '" + value + "'");
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct Key {
    std::function<void(TrainConfig&, CoRegHooks&, const std::string&, const std::string&)> set;
    std::function<std::string(const TrainConfig&, const CoRegHooks&)> get;
};

#define CORGS_INT_KEY(name, member)                                                                          \
    {name,                                                                                                   \
     {[](TrainConfig& c, CoRegHooks&, const std::string& k, const std::string& v) {                          \
          c.member = parse_number<decltype(c.member)>(k, v);                                                 \
      },                                                                                                     \
      [](const TrainConfig& c, const CoRegHooks&) { return std::to_string(c.member); }}}
#define CORGS_DOUBLE_KEY(name, member)                                                                       \
    {name,                                                                                                   \
     {[](TrainConfig& c, CoRegHooks&, const std::string& k, const std::string& v) {                          \
          c.member = parse_number<double>(k, v);                                                             \
      },                                                                                                     \
      [](const TrainConfig& c, const CoRegHooks&) { return fmt_double(c.member); }}}

const std::map<std::string, Key>& keys() {
    static const std::map<std::string, Key> table = {
        CORGS_INT_KEY("iterations", iterations),
        CORGS_INT_KEY("densify_from", densify_from),
        CORGS_INT_KEY("densify_until", densify_until),
        CORGS_INT_KEY("densify_every", densify_every),
        CORGS_DOUBLE_KEY("densify_grad_threshold", densify_grad_threshold),
        CORGS_DOUBLE_KEY("percent_dense", percent_dense),
        CORGS_INT_KEY("opacity_reset_every", opacity_reset_every),
        CORGS_DOUBLE_KEY("prune_opacity_threshold", prune_opacity_threshold),
        CORGS_INT_KEY("coprune_every", coprune_every_k_interleaves),
        CORGS_DOUBLE_KEY("tau_relative", tau_relative),
        CORGS_DOUBLE_KEY("lambda_dssim", lambda_dssim),
        CORGS_DOUBLE_KEY("lambda_pseudo", lambda_pseudo),
        CORGS_DOUBLE_KEY("lambda_depth", lambda_depth),
        CORGS_DOUBLE_KEY("pseudo_noise_scale", pseudo_noise_scale),
        CORGS_INT_KEY("n_fields", n_fields),
        CORGS_INT_KEY("seed", seed),
        CORGS_INT_KEY("n_init_points", n_init_points),
        CORGS_DOUBLE_KEY("init_opacity", init_opacity),
        CORGS_INT_KEY("log_every", log_every),
        CORGS_DOUBLE_KEY("lr_position", learning_rates.position),
        CORGS_DOUBLE_KEY("lr_position_final", learning_rates.position_final),
        CORGS_DOUBLE_KEY("lr_scale", learning_rates.scale),
        CORGS_DOUBLE_KEY("lr_rotation", learning_rates.rotation),
        CORGS_DOUBLE_KEY("lr_opacity", learning_rates.opacity),
        CORGS_DOUBLE_KEY("lr_color", learning_rates.color),
        {"tau",
         {[](TrainConfig& c, CoRegHooks&, const std::string& k, const std::string& v) {
              if (v == "none" || v.empty()) {
                  c.tau.reset();
              } else {
                  c.tau = parse_number<double>(k, v);
              }
          },
          [](const TrainConfig& c, const CoRegHooks&) { return c.tau ? fmt_double(*c.tau) : std::string("none"); }}},
        {"shared_rng_streams",
         {[](TrainConfig& c, CoRegHooks&, const std::string& k, const std::string& v) {
              c.shared_rng_streams = parse_bool(k, v);
          },
          [](const TrainConfig& c, const CoRegHooks&) { return std::string(c.shared_rng_streams ? "true" : "false"); }}},
        {"background",
         {[](TrainConfig& c, CoRegHooks&, const std::string& k, const std::string& v) {
              const auto a = v.find(',');
              const auto b = a == std::string::npos ? a : v.find(',', a + 1);
              if (b == std::string::npos) {
                  throw std::invalid_argument("config: background expects r,g,b");
              }
              c.background = Vec3(parse_number<double>(k, trim(v.substr(0, a))),
                                  parse_number<double>(k, trim(v.substr(a + 1, b - a - 1))),
                                  parse_number<double>(k, trim(v.substr(b + 1))));
          },
          [](const TrainConfig& c, const CoRegHooks&) {
              return fmt_double(c.background.x()) + "," + fmt_double(c.background.y()) + "," +
                     fmt_double(c.background.z());
          }}},
        {"co_pruning",
         {[](TrainConfig&, CoRegHooks& h, const std::string& k, const std::string& v) { h.co_pruning = parse_bool(k, v); },
          [](const TrainConfig&, const CoRegHooks& h) { return std::string(h.co_pruning ? "true" : "false"); }}},
        {"pseudo_view",
         {[](TrainConfig&, CoRegHooks& h, const std::string& k, const std::string& v) { h.pseudo_view = parse_bool(k, v); },
          [](const TrainConfig&, const CoRegHooks& h) { return std::string(h.pseudo_view ? "true" : "false"); }}},
        {"pearson_depth",
         {[](TrainConfig&, CoRegHooks& h, const std::string& k, const std::string& v) {
              h.pearson_depth = parse_bool(k, v);
          },
          [](const TrainConfig&, const CoRegHooks& h) { return std::string(h.pearson_depth ? "true" : "false"); }}},
    };
    return table;
}

#undef CORGS_INT_KEY
#undef CORGS_DOUBLE_KEY

}  // namespace

std::map<std::string, std::string> parse_key_values(std::istream& in) {
    std::map<std::string, std::string> out;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos || trim(line.substr(0, eq)).empty()) {
            throw std::invalid_argument("config line " + std::to_string(number) + ": expected key=value");
        }
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open config file " + path.string());
    }
    return parse_key_values(in);
}

void apply_config_entry(TrainConfig& config, CoRegHooks& hooks, const std::string& key, const std::string& value) {
    const auto it = keys().find(key);
    if (it == keys().end()) {
        throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    it->second.set(config, hooks, key, value);
}

std::map<std::string, std::string> config_snapshot(const TrainConfig& config, const CoRegHooks& hooks) {
    std::map<std::string, std::string> out;
    for (const auto& [name, key] : keys()) {
        out[name] = key.get(config, hooks);
    }
    return out;
}

}  // namespace corgs::cli
