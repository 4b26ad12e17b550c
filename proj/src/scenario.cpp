#include "gwm/sim/scenario.hpp"

#include <cmath>
#include <filesystem>

#include "gwm/errors.hpp"
#include "gwm/sim/sim.hpp"

namespace gwm::sim {

ScenarioConfig scenario_from_config(const Config& cfg) {
    std::int64_t schema = cfg.get_int("schema_version");
    if (schema != 1) {
        throw ConfigError("scenario: unsupported schema_version " + std::to_string(schema));
    }
    ScenarioConfig base;
    ScenarioConfig sc;
    sc.name = cfg.get_string("scenario.name", base.name);
    sc.category = cfg.get_string("scenario.category", base.category);
    sc.n = static_cast<std::int32_t>(cfg.get_int("scenario.n", base.n));
    sc.area = cfg.get_double("scenario.area", base.area);
    sc.horizon = static_cast<std::int32_t>(cfg.get_int("scenario.horizon", base.horizon));
    if (sc.n <= 0) throw ConfigError("scenario: scenario.n must be positive");
    if (sc.area <= 0.0) throw ConfigError("scenario: scenario.area must be positive");
    if (sc.horizon <= 0) throw ConfigError("scenario: scenario.horizon must be positive");

    sc.channel.k0 = cfg.get_double("channel.k0", base.channel.k0);
    sc.channel.pt = cfg.get_double("channel.pt", base.channel.pt);
    sc.channel.d0 = cfg.get_double("channel.d0", base.channel.d0);
    sc.channel.eta = cfg.get_double("channel.eta", base.channel.eta);
    if (cfg.has("channel.r_c") && cfg.has("channel.gamma_rx")) {
        throw ConfigError("scenario: give channel.r_c or channel.gamma_rx, not both");
    }
    if (cfg.has("channel.r_c")) {
        double rc = cfg.get_double("channel.r_c");
        if (rc <= 0.0) throw ConfigError("scenario: channel.r_c must be positive");
        sc.channel.gamma_rx =
            sc.channel.k0 * sc.channel.pt * std::pow(sc.channel.d0 / rc, sc.channel.eta);
    } else {
        sc.channel.gamma_rx = cfg.get_double("channel.gamma_rx", base.channel.gamma_rx);
    }

    sc.energy.e_init = cfg.get_double("energy.e_init", base.energy.e_init);
    sc.energy.e_elec = cfg.get_double("energy.e_elec", base.energy.e_elec);
    sc.energy.eps_amp = cfg.get_double("energy.eps_amp", base.energy.eps_amp);
    sc.energy.e_idle = cfg.get_double("energy.e_idle", base.energy.e_idle);
    sc.energy.e_ch_overhead = cfg.get_double("energy.e_ch_overhead", base.energy.e_ch_overhead);
    sc.energy.e_death = cfg.get_double("energy.e_death", base.energy.e_death);
    sc.energy.dt = cfg.get_double("energy.dt", base.energy.dt);
    if (sc.energy.e_init <= 0.0) throw ConfigError("scenario: energy.e_init must be positive");

    sc.reward.w_stab = cfg.get_double("reward.w_stab", base.reward.w_stab);
    sc.reward.w_energy = cfg.get_double("reward.w_energy", base.reward.w_energy);
    sc.reward.w_conn = cfg.get_double("reward.w_conn", base.reward.w_conn);
    sc.reward.w_ch = cfg.get_double("reward.w_ch", base.reward.w_ch);
    sc.reward.w_temp = cfg.get_double("reward.w_temp", base.reward.w_temp);
    sc.reward.w_penalty = cfg.get_double("reward.w_penalty", base.reward.w_penalty);
    sc.reward.theta = cfg.get_double("reward.theta", base.reward.theta);

    sc.mobility.speed_min = cfg.get_double("mobility.speed_min", base.mobility.speed_min);
    sc.mobility.speed_max = cfg.get_double("mobility.speed_max", base.mobility.speed_max);
    sc.mobility.pause = static_cast<std::int32_t>(cfg.get_int("mobility.pause", base.mobility.pause));
    if (sc.mobility.speed_min < 0.0 || sc.mobility.speed_max < sc.mobility.speed_min) {
        throw ConfigError("scenario: mobility speed range is invalid");
    }
    if (sc.mobility.pause < 0) throw ConfigError("scenario: mobility.pause must be >= 0");
    return sc;
}

Config scenario_to_config(const ScenarioConfig& sc) {
    Config cfg;
    cfg.set_int("schema_version", 1);
    cfg.set("scenario.name", sc.name);
    cfg.set("scenario.category", sc.category);
    cfg.set_int("scenario.n", sc.n);
    cfg.set_double("scenario.area", sc.area);
    cfg.set_int("scenario.horizon", sc.horizon);
    cfg.set_double("channel.k0", sc.channel.k0);
    cfg.set_double("channel.pt", sc.channel.pt);
    cfg.set_double("channel.d0", sc.channel.d0);
    cfg.set_double("channel.eta", sc.channel.eta);
    cfg.set_double("channel.gamma_rx", sc.channel.gamma_rx);
    cfg.set_double("energy.e_init", sc.energy.e_init);
    cfg.set_double("energy.e_elec", sc.energy.e_elec);
    cfg.set_double("energy.eps_amp", sc.energy.eps_amp);
    cfg.set_double("energy.e_idle", sc.energy.e_idle);
    cfg.set_double("energy.e_ch_overhead", sc.energy.e_ch_overhead);
    cfg.set_double("energy.e_death", sc.energy.e_death);
    cfg.set_double("energy.dt", sc.energy.dt);
    cfg.set_double("reward.w_stab", sc.reward.w_stab);
    cfg.set_double("reward.w_energy", sc.reward.w_energy);
    cfg.set_double("reward.w_conn", sc.reward.w_conn);
    cfg.set_double("reward.w_ch", sc.reward.w_ch);
    cfg.set_double("reward.w_temp", sc.reward.w_temp);
    cfg.set_double("reward.w_penalty", sc.reward.w_penalty);
    cfg.set_double("reward.theta", sc.reward.theta);
    cfg.set_double("mobility.speed_min", sc.mobility.speed_min);
    cfg.set_double("mobility.speed_max", sc.mobility.speed_max);
    cfg.set_int("mobility.pause", sc.mobility.pause);
    return cfg;
}

namespace {

ScenarioConfig preset(const char* name, const char* category, std::int32_t n, double area,
                      double speed_min, double speed_max, std::int32_t pause,
                      double e_init) {
    ScenarioConfig sc;
    sc.name = name;
    sc.category = category;
    sc.n = n;
    sc.area = area;
    sc.mobility.speed_min = speed_min;
    sc.mobility.speed_max = speed_max;
    sc.mobility.pause = pause;
    sc.energy.e_init = e_init;
    return sc;
}

std::vector<ScenarioConfig> make_catalog() {
    std::vector<ScenarioConfig> cat;
    cat.push_back(preset("default", "MANET", 50, 1000, 1, 5, 0, 100));
    cat.push_back(preset("manet_sparse", "MANET", 30, 800, 0.5, 2, 0, 100));
    cat.push_back(preset("manet_mid", "MANET", 75, 1200, 1, 5, 0, 100));
    cat.push_back(preset("manet_large", "MANET", 100, 1500, 1, 4, 0, 100));
    cat.push_back(preset("manet_mobile", "MANET", 150, 1800, 2, 8, 0, 100));
    cat.push_back(preset("manet_hotspot", "MANET", 200, 1500, 1, 5, 0, 100));
    cat.push_back(preset("manet_dense", "MANET", 400, 2000, 1, 3, 0, 100));
    cat.push_back(preset("vanet_urban", "VANET", 60, 2000, 8, 15, 0, 150));
    cat.push_back(preset("vanet_suburb", "VANET", 100, 2500, 10, 20, 0, 150));
    cat.push_back(preset("vanet_highway", "VANET", 150, 2500, 15, 30, 0, 150));
    cat.push_back(preset("vanet_grid", "VANET", 200, 3000, 12, 25, 0, 150));
    cat.push_back(preset("fanet_patrol", "FANET", 40, 1500, 10, 20, 0, 80));
    cat.push_back(preset("fanet_relay", "FANET", 80, 2000, 15, 25, 0, 80));
    cat.push_back(preset("fanet_sweep", "FANET", 120, 2500, 20, 30, 0, 80));
    cat.push_back(preset("fanet_swarm", "FANET", 300, 3000, 10, 30, 0, 80));
    cat.push_back(preset("wsn_field", "WSN", 100, 600, 0, 0, 0, 50));
    cat.push_back(preset("wsn_farm", "WSN", 300, 1000, 0, 0, 0, 50));
    cat.push_back(preset("wsn_forest", "WSN", 500, 1200, 0, 0, 0, 50));
    cat.push_back(preset("wsn_city", "WSN", 1000, 1500, 0, 0, 0, 50));
    cat.push_back(preset("tact_squad", "TACTICAL", 50, 1200, 1, 6, 10, 100));
    cat.push_back(preset("tact_convoy", "TACTICAL", 80, 1500, 2, 6, 0, 100));
    cat.push_back(preset("tact_company", "TACTICAL", 120, 2000, 2, 8, 5, 100));
    cat.push_back(preset("tact_theater", "TACTICAL", 250, 2500, 1, 5, 10, 100));
    cat.push_back(preset("dis_camp", "DISASTER", 40, 1000, 0.5, 2, 20, 60));
    cat.push_back(preset("dis_search", "DISASTER", 100, 2000, 0.5, 3, 10, 60));
    cat.push_back(preset("dis_urban", "DISASTER", 500, 3000, 1, 4, 10, 60));
    cat.push_back(preset("dis_region", "DISASTER", 1000, 4000, 0.5, 2, 20, 60));
    return cat;
}

}  // namespace

const std::vector<ScenarioConfig>& scenario_catalog() {
    static const std::vector<ScenarioConfig> cat = make_catalog();
    return cat;
}

const ScenarioConfig& find_scenario(const std::string& name) {
    for (const auto& sc : scenario_catalog()) {
        if (sc.name == name) return sc;
    }
    throw ConfigError("scenario: unknown scenario '" + name + "'");
}

ScenarioConfig load_scenario(const std::string& name_or_path) {
    if (std::filesystem::exists(name_or_path) &&
        std::filesystem::is_regular_file(name_or_path)) {
        return scenario_from_config(Config::parse_file(name_or_path));
    }
    return find_scenario(name_or_path);
}

std::vector<ScenarioConfig> collection_scenarios() {
    std::vector<ScenarioConfig> out;
    ScenarioConfig base = find_scenario("default");
    out.push_back(base);

    ScenarioConfig slow = base;
    slow.name = "default_slow";
    slow.mobility.speed_min = 0.5;
    slow.mobility.speed_max = 2.5;
    out.push_back(slow);

    ScenarioConfig fast = base;
    fast.name = "default_fast";
    fast.mobility.speed_min = 2;
    fast.mobility.speed_max = 10;
    out.push_back(fast);

    ScenarioConfig pause = base;
    pause.name = "default_pause";
    pause.mobility.pause = 10;
    out.push_back(pause);

    ScenarioConfig tight = base;
    tight.name = "default_tight";
    tight.area = 800;
    out.push_back(tight);

    ScenarioConfig wide = base;
    wide.name = "default_wide";
    wide.area = 1200;
    out.push_back(wide);
    return out;
}

}  // namespace gwm::sim
