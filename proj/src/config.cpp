#include "smt/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace smt {

using nlohmann::json;

const char* policy_kind_name(PolicyKind k) {
    switch (k) {
    case PolicyKind::Smt: return "smt";
    case PolicyKind::SmtFact: return "smt_fact";
    case PolicyKind::SmPool: return "sm_pool";
    case PolicyKind::Reactive: return "reactive";
    case PolicyKind::Random: return "random";
    }
    return "smt";
}

PolicyKind policy_kind_from_name(const std::string& s) {
    if (s == "smt") return PolicyKind::Smt;
    if (s == "smt_fact") return PolicyKind::SmtFact;
    if (s == "sm_pool") return PolicyKind::SmPool;
    if (s == "reactive") return PolicyKind::Reactive;
    if (s == "random") return PolicyKind::Random;
    throw ConfigError("policy.kind: unknown value '" + s +
                      "' (expected smt, smt_fact, sm_pool, reactive or random)");
}

const char* center_kind_name(CenterKind k) {
    switch (k) {
    case CenterKind::Fps: return "fps";
    case CenterKind::Window: return "window";
    case CenterKind::Static: return "static";
    }
    return "fps";
}

CenterKind center_kind_from_name(const std::string& s) {
    if (s == "fps") return CenterKind::Fps;
    if (s == "window") return CenterKind::Window;
    if (s == "static") return CenterKind::Static;
    throw ConfigError("policy.centers: unknown value '" + s +
                      "' (expected fps, window or static)");
}

const char* temporal_mode_name(TemporalMode m) {
    switch (m) {
    case TemporalMode::Exp: return "exp";
    case TemporalMode::Sin: return "sin";
    case TemporalMode::None: return "none";
    }
    return "exp";
}

TemporalMode temporal_mode_from_name(const std::string& s) {
    if (s == "exp") return TemporalMode::Exp;
    if (s == "sin") return TemporalMode::Sin;
    if (s == "none") return TemporalMode::None;
    throw ConfigError("model.temporal: unknown value '" + s +
                      "' (expected exp, sin or none)");
}

void apply_profile(ExperimentConfig& cfg, const std::string& profile) {
    EmbeddingConfig& emb = cfg.train.policy.emb;
    AttentionConfig& att = cfg.train.policy.att;
    if (profile == "full") {
        emb.d_image = 64;
        emb.d_pose = 16;
        emb.d_action = 16;
        emb.d_x = 128;
        att.heads = 8;
        cfg.train.policy.q_hidden = 128;
    } else if (profile == "desk") {
        emb.d_image = 32;
        emb.d_pose = 8;
        emb.d_action = 8;
        emb.d_x = 64;
        att.heads = 4;
        cfg.train.policy.q_hidden = 64;
    } else {
        throw ConfigError("profile: unknown value '" + profile +
                          "' (expected full or desk)");
    }
    att.d_x = att.d_y = att.d_k = att.d_v = emb.d_x;
    cfg.profile = profile;
}

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw ConfigError("seeds: must contain at least one seed");
    if (eval_episodes_per_plan <= 0)
        throw ConfigError("eval.episodes_per_plan: must be positive");
    if (eval_temperature <= 0.0)
        throw ConfigError("eval.temperature: must be positive");
    if (capacity_sweep.empty())
        throw ConfigError("ablation.capacity_sweep: must be non-empty");
    for (int c : capacity_sweep)
        if (c <= 0) throw ConfigError("ablation.capacity_sweep: capacities must be positive");
    for (double s : noise_sweep)
        if (s < 0.0 || !std::isfinite(s))
            throw ConfigError("ablation.noise_sweep: stds must be finite and >= 0");
    try {
        train.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

namespace {

[[noreturn]] void type_error(const std::string& path, const char* expected) {
    throw ConfigError(path + ": expected " + expected);
}

double get_num(const json& v, const std::string& path) {
    if (!v.is_number()) type_error(path, "a number");
    return v.get<double>();
}

int get_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) type_error(path, "an integer");
    return v.get<int>();
}

bool get_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) type_error(path, "a boolean");
    return v.get<bool>();
}

std::string get_str(const json& v, const std::string& path) {
    if (!v.is_string()) type_error(path, "a string");
    return v.get<std::string>();
}

/// Applies every key of `obj` through `set(key, value)`; set returns false
/// for unrecognized keys.
template <typename F>
void walk(const json& obj, const std::string& path, F set) {
    if (!obj.is_object()) type_error(path, "an object");
    for (const auto& [key, value] : obj.items()) {
        if (!set(key, value)) throw ConfigError(path + "." + key + ": unknown field");
    }
}

void parse_model(const json& obj, ExperimentConfig& cfg) {
    EmbeddingConfig& emb = cfg.train.policy.emb;
    AttentionConfig& att = cfg.train.policy.att;
    walk(obj, "model", [&](const std::string& k, const json& v) {
        const std::string p = "model." + k;
        if (k == "d_x") {
            emb.d_x = get_int(v, p);
            att.d_x = att.d_y = att.d_k = att.d_v = emb.d_x;
        } else if (k == "d_image") emb.d_image = get_int(v, p);
        else if (k == "d_pose") emb.d_pose = get_int(v, p);
        else if (k == "d_action") emb.d_action = get_int(v, p);
        else if (k == "d_k") att.d_k = get_int(v, p);
        else if (k == "d_v") att.d_v = get_int(v, p);
        else if (k == "heads") att.heads = get_int(v, p);
        else if (k == "temporal") emb.temporal = temporal_mode_from_name(get_str(v, p));
        else if (k == "lambda") emb.lambda = get_num(v, p);
        else if (k == "tau") emb.tau = get_num(v, p);
        else if (k == "mask_depth") emb.mask_depth = get_bool(v, p);
        else if (k == "mask_semantic") emb.mask_semantic = get_bool(v, p);
        else if (k == "mask_pose") emb.mask_pose = get_bool(v, p);
        else if (k == "mask_action") emb.mask_action = get_bool(v, p);
        else return false;
        return true;
    });
}

void parse_policy(const json& obj, ExperimentConfig& cfg) {
    PolicyConfig& pol = cfg.train.policy;
    walk(obj, "policy", [&](const std::string& k, const json& v) {
        const std::string p = "policy." + k;
        if (k == "kind") pol.kind = policy_kind_from_name(get_str(v, p));
        else if (k == "centers") pol.center_kind = center_kind_from_name(get_str(v, p));
        else if (k == "num_centers") pol.num_centers = get_int(v, p);
        else if (k == "capacity") pol.capacity = get_int(v, p);
        else if (k == "q_hidden") pol.q_hidden = get_int(v, p);
        else return false;
        return true;
    });
}

void parse_environment(const json& obj, ExperimentConfig& cfg) {
    DynamicsConfig& dyn = cfg.train.dyn;
    FloorplanConfig& plan = cfg.train.plan_cfg;
    walk(obj, "environment", [&](const std::string& k, const json& v) {
        const std::string p = "environment." + k;
        if (k == "wheel_radius") dyn.wheel_radius = get_num(v, p);
        else if (k == "axle_width") dyn.axle_width = get_num(v, p);
        else if (k == "wheel_noise_std") dyn.wheel_noise_std = get_num(v, p);
        else if (k == "step_size") dyn.step_size = get_num(v, p);
        else if (k == "turn_angle") dyn.turn_angle = get_num(v, p);
        else if (k == "control_duration") dyn.control_duration = get_num(v, p);
        else if (k == "substeps") dyn.substeps = get_int(v, p);
        else if (k == "depth_noise_std") dyn.depth_noise_std = get_num(v, p);
        else if (k == "depth_range") dyn.depth_range = get_num(v, p);
        else if (k == "rays") {
            dyn.rays = get_int(v, p);
            cfg.train.policy.emb.rays = dyn.rays;
        } else if (k == "fov") dyn.fov = get_num(v, p);
        else if (k == "semantic_classes") {
            dyn.semantic_classes = get_int(v, p);
            cfg.train.policy.emb.num_classes = dyn.semantic_classes;
        } else if (k == "min_rooms") plan.min_rooms = get_int(v, p);
        else if (k == "max_rooms") plan.max_rooms = get_int(v, p);
        else if (k == "min_room_cells") plan.min_room_cells = get_int(v, p);
        else if (k == "max_room_cells") plan.max_room_cells = get_int(v, p);
        else if (k == "min_classes") plan.min_classes = get_int(v, p);
        else if (k == "max_classes") plan.max_classes = get_int(v, p);
        else if (k == "canvas_cells") plan.canvas_cells = get_int(v, p);
        else if (k == "max_retries") plan.max_retries = get_int(v, p);
        else return false;
        return true;
    });
}

void parse_training(const json& obj, ExperimentConfig& cfg) {
    TrainConfig& tr = cfg.train;
    walk(obj, "training", [&](const std::string& k, const json& v) {
        const std::string p = "training." + k;
        if (k == "task") {
            try {
                tr.task = task_from_name(get_str(v, p));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(p + ": " + e.what());
            }
        } else if (k == "horizon") tr.horizon = get_int(v, p);
        else if (k == "batch_episodes") tr.batch_episodes = get_int(v, p);
        else if (k == "lr") tr.lr = get_num(v, p);
        else if (k == "gamma") tr.gamma = get_num(v, p);
        else if (k == "refresh_interval") tr.refresh_interval = get_int(v, p);
        else if (k == "target_sync_interval") tr.target_sync_interval = get_int(v, p);
        else if (k == "buffer_capacity") tr.buffer_capacity = get_int(v, p);
        else if (k == "initial_episodes") tr.initial_episodes = get_int(v, p);
        else if (k == "max_iterations") tr.max_iterations = get_int(v, p);
        else if (k == "validation_interval") tr.validation_interval = get_int(v, p);
        else if (k == "validation_episodes_per_plan")
            tr.validation_episodes_per_plan = get_int(v, p);
        else if (k == "patience") tr.patience = get_int(v, p);
        else if (k == "temp_start") tr.temp_start = get_num(v, p);
        else if (k == "temp_end") tr.temp_end = get_num(v, p);
        else if (k == "n_plans") tr.n_plans = get_int(v, p);
        else if (k == "validation_fraction") tr.validation_fraction = get_num(v, p);
        else if (k == "pretrain_max_iterations") tr.pretrain_max_iterations = get_int(v, p);
        else if (k == "pretrain") cfg.pretrain = get_bool(v, p);
        else if (k == "freeze_embeddings") cfg.freeze_embeddings = get_bool(v, p);
        else return false;
        return true;
    });
}

void parse_eval(const json& obj, ExperimentConfig& cfg) {
    walk(obj, "eval", [&](const std::string& k, const json& v) {
        const std::string p = "eval." + k;
        if (k == "episodes_per_plan") cfg.eval_episodes_per_plan = get_int(v, p);
        else if (k == "temperature") cfg.eval_temperature = get_num(v, p);
        else return false;
        return true;
    });
}

void parse_ablation(const json& obj, ExperimentConfig& cfg) {
    walk(obj, "ablation", [&](const std::string& k, const json& v) {
        const std::string p = "ablation." + k;
        if (k == "capacity_sweep") {
            if (!v.is_array()) type_error(p, "an array of integers");
            cfg.capacity_sweep.clear();
            for (const auto& e : v) cfg.capacity_sweep.push_back(get_int(e, p + "[]"));
        } else if (k == "noise_sweep") {
            if (!v.is_array()) type_error(p, "an array of numbers");
            cfg.noise_sweep.clear();
            for (const auto& e : v) cfg.noise_sweep.push_back(get_num(e, p + "[]"));
        } else return false;
        return true;
    });
}

} // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    apply_profile(cfg, cfg.profile);
    // Profile first: later keys override its presets regardless of key order.
    if (root.is_object() && root.contains("profile"))
        apply_profile(cfg, get_str(root["profile"], "profile"));
    walk(root, "config", [&](const std::string& k, const json& v) {
        if (k == "profile") return true; // handled above
        if (k == "model") parse_model(v, cfg);
        else if (k == "policy") parse_policy(v, cfg);
        else if (k == "environment") parse_environment(v, cfg);
        else if (k == "training") parse_training(v, cfg);
        else if (k == "eval") parse_eval(v, cfg);
        else if (k == "ablation") parse_ablation(v, cfg);
        else if (k == "seeds") {
            if (!v.is_array() || v.empty()) type_error("seeds", "a non-empty array of integers");
            cfg.seeds.clear();
            for (const auto& e : v) {
                if (!e.is_number_integer()) type_error("seeds[]", "an integer");
                cfg.seeds.push_back(e.get<uint64_t>());
            }
        } else return false;
        return true;
    });
    cfg.train.seed = cfg.seeds.front();
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str());
}

std::string resolved_config_json(const ExperimentConfig& cfg) {
    const PolicyConfig& pol = cfg.train.policy;
    const EmbeddingConfig& emb = pol.emb;
    const DynamicsConfig& dyn = cfg.train.dyn;
    const FloorplanConfig& plan = cfg.train.plan_cfg;
    json root;
    root["profile"] = cfg.profile;
    root["seeds"] = cfg.seeds;
    root["model"] = {
        {"d_x", emb.d_x},       {"d_image", emb.d_image},
        {"d_pose", emb.d_pose}, {"d_action", emb.d_action},
        {"d_k", pol.att.d_k},   {"d_v", pol.att.d_v},
        {"heads", pol.att.heads},
        {"temporal", temporal_mode_name(emb.temporal)},
        {"lambda", emb.lambda}, {"tau", emb.tau},
        {"mask_depth", emb.mask_depth},
        {"mask_semantic", emb.mask_semantic},
        {"mask_pose", emb.mask_pose},
        {"mask_action", emb.mask_action},
    };
    root["policy"] = {
        {"kind", policy_kind_name(pol.kind)},
        {"centers", center_kind_name(pol.center_kind)},
        {"num_centers", pol.num_centers},
        {"capacity", pol.capacity},
        {"q_hidden", pol.q_hidden},
    };
    root["environment"] = {
        {"wheel_radius", dyn.wheel_radius},
        {"axle_width", dyn.axle_width},
        {"wheel_noise_std", dyn.wheel_noise_std},
        {"step_size", dyn.step_size},
        {"turn_angle", dyn.turn_angle},
        {"control_duration", dyn.control_duration},
        {"substeps", dyn.substeps},
        {"depth_noise_std", dyn.depth_noise_std},
        {"depth_range", dyn.depth_range},
        {"rays", dyn.rays},
        {"fov", dyn.fov},
        {"semantic_classes", dyn.semantic_classes},
        {"min_rooms", plan.min_rooms},
        {"max_rooms", plan.max_rooms},
        {"min_room_cells", plan.min_room_cells},
        {"max_room_cells", plan.max_room_cells},
        {"min_classes", plan.min_classes},
        {"max_classes", plan.max_classes},
        {"canvas_cells", plan.canvas_cells},
        {"max_retries", plan.max_retries},
    };
    root["training"] = {
        {"task", task_name(cfg.train.task)},
        {"horizon", cfg.train.horizon},
        {"batch_episodes", cfg.train.batch_episodes},
        {"lr", cfg.train.lr},
        {"gamma", cfg.train.gamma},
        {"refresh_interval", cfg.train.refresh_interval},
        {"target_sync_interval", cfg.train.target_sync_interval},
        {"buffer_capacity", cfg.train.buffer_capacity},
        {"initial_episodes", cfg.train.initial_episodes},
        {"max_iterations", cfg.train.max_iterations},
        {"validation_interval", cfg.train.validation_interval},
        {"validation_episodes_per_plan", cfg.train.validation_episodes_per_plan},
        {"patience", cfg.train.patience},
        {"temp_start", cfg.train.temp_start},
        {"temp_end", cfg.train.temp_end},
        {"n_plans", cfg.train.n_plans},
        {"validation_fraction", cfg.train.validation_fraction},
        {"pretrain_max_iterations", cfg.train.pretrain_max_iterations},
        {"pretrain", cfg.pretrain},
        {"freeze_embeddings", cfg.freeze_embeddings},
    };
    root["eval"] = {
        {"episodes_per_plan", cfg.eval_episodes_per_plan},
        {"temperature", cfg.eval_temperature},
    };
    root["ablation"] = {
        {"capacity_sweep", cfg.capacity_sweep},
        {"noise_sweep", cfg.noise_sweep},
    };
    return root.dump(2) + "\n";
}

} // namespace smt
