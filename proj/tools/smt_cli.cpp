// Experiment runner: train / eval / ablate / export-trajectories.
// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.

#include "smt/artifacts.hpp"
#include "smt/config.hpp"
#include "smt/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace smt;

struct CliArgs {
    std::string config_path;
    std::string checkpoint;
    std::string out = "out";
    std::string suite;
    std::optional<uint64_t> seed;
    int workers = 0;
    bool print_resolved = false;
};

ExperimentConfig resolve_config(const CliArgs& args) {
    ExperimentConfig cfg = load_experiment_config(args.config_path);
    if (args.seed) {
        cfg.seeds = {*args.seed};
        cfg.train.seed = *args.seed;
    }
    return cfg;
}

struct EpisodeRow {
    uint64_t plan_seed = 0;
    uint64_t episode_seed = 0;
    MetricsReport report;
};

/// Fixed-seed evaluation episodes over the held-out plans, merged by index.
std::vector<EpisodeRow> run_eval_episodes(const std::vector<const Floorplan*>& plans,
                                          const ExperimentConfig& cfg,
                                          const ParamStore& store,
                                          const DynamicsConfig& dyn,
                                          bool dead_reckoned_pose,
                                          std::vector<EpisodeTrace>* traces_out = nullptr) {
    const int per_plan = cfg.eval_episodes_per_plan;
    const int total = static_cast<int>(plans.size()) * per_plan;
    std::vector<EpisodeRow> rows(total);
    std::vector<EpisodeTrace> traces(traces_out ? total : 0);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < total; ++i) {
        const int plan_idx = i / per_plan;
        const uint64_t ep_seed =
            cfg.train.seed * 10007ull + static_cast<uint64_t>(plan_idx) * 1000003ull +
            static_cast<uint64_t>(i % per_plan);
        EpisodeTrace tr = collect_episode(*plans[plan_idx], cfg.train.policy, store, dyn,
                                          cfg.train.task, cfg.train.horizon,
                                          cfg.eval_temperature, ep_seed,
                                          /*greedy=*/false, nullptr, dead_reckoned_pose);
        rows[i] = {plans[plan_idx]->seed, ep_seed, metrics(tr)};
        if (traces_out) traces[i] = std::move(tr);
    }
    if (traces_out) *traces_out = std::move(traces);
    return rows;
}

std::string episodes_csv(const std::vector<EpisodeRow>& rows) {
    CsvBuilder csv({"plan_seed", "episode_seed", "reward", "distance", "collisions",
                    "covered_cells", "found_classes", "classes_present", "found_ratio"});
    for (const auto& r : rows)
        csv.add_row_raw({std::to_string(r.plan_seed), std::to_string(r.episode_seed),
                         format_double(r.report.cumulative_reward),
                         format_double(r.report.distance),
                         std::to_string(r.report.collisions),
                         std::to_string(r.report.covered_cells),
                         std::to_string(r.report.found_classes),
                         std::to_string(r.report.classes_present),
                         format_double(r.report.found_ratio)});
    return csv.text();
}

struct EvalSummary {
    double reward = 0.0, distance = 0.0, collisions = 0.0;
    double covered_cells = 0.0, found_classes = 0.0, found_ratio = 0.0;
};

EvalSummary summarize(const std::vector<EpisodeRow>& rows) {
    EvalSummary s;
    for (const auto& r : rows) {
        s.reward += r.report.cumulative_reward;
        s.distance += r.report.distance;
        s.collisions += r.report.collisions;
        s.covered_cells += r.report.covered_cells;
        s.found_classes += r.report.found_classes;
        s.found_ratio += r.report.found_ratio;
    }
    const double n = rows.empty() ? 1.0 : static_cast<double>(rows.size());
    s.reward /= n;
    s.distance /= n;
    s.collisions /= n;
    s.covered_cells /= n;
    s.found_classes /= n;
    s.found_ratio /= n;
    return s;
}

std::string summary_csv(const EvalSummary& s, int n_rows) {
    CsvBuilder csv({"episodes", "mean_reward", "mean_distance", "mean_collisions",
                    "mean_covered_cells", "mean_found_classes", "mean_found_ratio"});
    csv.add_row_raw({std::to_string(n_rows), format_double(s.reward),
                     format_double(s.distance), format_double(s.collisions),
                     format_double(s.covered_cells), format_double(s.found_classes),
                     format_double(s.found_ratio)});
    return csv.text();
}

std::string found_curve_csv(const std::vector<EpisodeRow>& rows, int horizon) {
    CsvBuilder csv({"step", "mean_found_classes"});
    for (int t = 0; t < horizon; ++t) {
        double sum = 0.0;
        for (const auto& r : rows) {
            const auto& curve = r.report.found_curve;
            if (curve.empty()) continue;
            const size_t idx = std::min<size_t>(t, curve.size() - 1);
            sum += curve[idx];
        }
        csv.add_row({static_cast<double>(t),
                     rows.empty() ? 0.0 : sum / static_cast<double>(rows.size())});
    }
    return csv.text();
}

std::vector<Floorplan> build_plans(const ExperimentConfig& cfg) {
    return make_plans(cfg.train.seed, cfg.train.n_plans, cfg.train.plan_cfg);
}

/// Pretrain (optionally), train and return the per-seed result.
TrainResult run_training(const ExperimentConfig& cfg, uint64_t seed,
                         const std::string& out_dir) {
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    const ParamStore* initial = nullptr;
    ParamStore pre;
    if (cfg.pretrain) {
        pre = pretrain_embeddings(tc);
        if (!cfg.freeze_embeddings) set_embedding_frozen(pre, false);
        initial = &pre;
    }
    return train(tc, out_dir, initial);
}

int cmd_train(const CliArgs& args) {
    const ExperimentConfig cfg = resolve_config(args);
    if (args.print_resolved) std::cout << resolved_config_json(cfg);
    ArtifactWriter art(args.out);
    art.log("train start config=" + args.config_path);
    art.write("resolved_config.json", resolved_config_json(cfg));
    CsvBuilder best({"seed", "best_validation_reward", "iterations"});
    for (uint64_t seed : cfg.seeds) {
        const std::string sub = "seed_" + std::to_string(seed);
        const std::string dir = (std::filesystem::path(args.out) / sub).string();
        std::filesystem::create_directories(dir);
        const TrainResult res = run_training(cfg, seed, dir);
        art.record(sub + "/curves.csv");
        art.record(sub + "/checkpoint_best.ckpt");
        best.add_row_raw({std::to_string(seed), format_double(res.best_validation_reward),
                          std::to_string(res.iterations_run)});
        art.log("seed " + std::to_string(seed) + " done");
    }
    art.write("best.csv", best.text());
    art.write_manifest();
    art.log("train done");
    return 0;
}

void write_eval_outputs(ArtifactWriter& art, const std::string& prefix,
                        const std::vector<EpisodeRow>& rows, const ExperimentConfig& cfg) {
    art.write(prefix + "episodes.csv", episodes_csv(rows));
    art.write(prefix + "summary.csv",
              summary_csv(summarize(rows), static_cast<int>(rows.size())));
    if (cfg.train.task == TaskKind::Search)
        art.write(prefix + "found_curve.csv", found_curve_csv(rows, cfg.train.horizon));
}

int cmd_eval(const CliArgs& args) {
    const ExperimentConfig cfg = resolve_config(args);
    if (args.print_resolved) std::cout << resolved_config_json(cfg);
    const ParamStore store = ParamStore::load(args.checkpoint);
    const std::vector<Floorplan> plans = build_plans(cfg);
    std::vector<const Floorplan*> train_plans, val_plans;
    split_plans(plans, cfg.train.validation_fraction, train_plans, val_plans);
    ArtifactWriter art(args.out);
    art.log("eval start checkpoint=" + args.checkpoint);
    const auto rows = run_eval_episodes(val_plans, cfg, store, cfg.train.dyn, false);
    write_eval_outputs(art, "", rows, cfg);
    art.write("resolved_config.json", resolved_config_json(cfg));
    art.write_manifest();
    art.log("eval done");
    return 0;
}

int ablate_memory_capacity(const CliArgs& args, const ExperimentConfig& cfg,
                           ArtifactWriter& art) {
    const ParamStore store = ParamStore::load(args.checkpoint);
    const std::vector<Floorplan> plans = build_plans(cfg);
    std::vector<const Floorplan*> train_plans, val_plans;
    split_plans(plans, cfg.train.validation_fraction, train_plans, val_plans);
    CsvBuilder csv({"capacity", "mean_reward"});
    for (int cap : cfg.capacity_sweep) {
        ExperimentConfig c = cfg;
        c.train.policy.capacity = cap;
        const auto rows = run_eval_episodes(val_plans, c, store, c.train.dyn, false);
        csv.add_row({static_cast<double>(cap), summarize(rows).reward});
    }
    art.write("memory_capacity.csv", csv.text());
    return 0;
}

int ablate_modality_dropout(const CliArgs& args, const ExperimentConfig& cfg,
                            ArtifactWriter& art) {
    const std::vector<std::string> variants = {"none", "depth", "semantic", "pose",
                                               "action"};
    CsvBuilder csv({"masked_modality", "best_validation_reward"});
    for (const auto& v : variants) {
        ExperimentConfig c = cfg;
        EmbeddingConfig& emb = c.train.policy.emb;
        emb.mask_depth = v == "depth";
        emb.mask_semantic = v == "semantic";
        emb.mask_pose = v == "pose";
        emb.mask_action = v == "action";
        const std::string dir =
            (std::filesystem::path(args.out) / ("mask_" + v)).string();
        const TrainResult res = run_training(c, c.train.seed, dir);
        art.record("mask_" + v + "/curves.csv");
        art.record("mask_" + v + "/checkpoint_best.ckpt");
        csv.add_row_raw({v, format_double(res.best_validation_reward)});
    }
    art.write("modality_dropout.csv", csv.text());
    return 0;
}

int ablate_centers(const CliArgs& args, const ExperimentConfig& cfg, ArtifactWriter& art) {
    const std::vector<CenterKind> kinds = {CenterKind::Fps, CenterKind::Window,
                                           CenterKind::Static};
    const std::vector<TaskKind> tasks = {TaskKind::Roaming, TaskKind::Coverage,
                                         TaskKind::Search};
    CsvBuilder csv({"centers", "roaming", "coverage", "search"});
    for (CenterKind kind : kinds) {
        std::vector<std::string> row{center_kind_name(kind)};
        for (TaskKind task : tasks) {
            ExperimentConfig c = cfg;
            c.train.policy.kind = PolicyKind::SmtFact;
            c.train.policy.center_kind = kind;
            c.train.task = task;
            const std::string dir =
                (std::filesystem::path(args.out) /
                 (std::string("centers_") + center_kind_name(kind) + "_" + task_name(task)))
                    .string();
            const TrainResult res = run_training(c, c.train.seed, dir);
            row.push_back(format_double(res.best_validation_reward));
        }
        csv.add_row_raw(row);
    }
    art.write("centers.csv", csv.text());
    return 0;
}

int ablate_temporal(const CliArgs& args, const ExperimentConfig& cfg, ArtifactWriter& art) {
    const std::vector<TemporalMode> modes = {TemporalMode::Exp, TemporalMode::Sin,
                                             TemporalMode::None};
    CsvBuilder csv({"temporal", "wheel_noise_std", "mean_reward"});
    for (TemporalMode mode : modes) {
        ExperimentConfig c = cfg;
        c.train.policy.emb.temporal = mode;
        const std::string dir =
            (std::filesystem::path(args.out) /
             (std::string("temporal_") + temporal_mode_name(mode)))
                .string();
        const TrainResult res = run_training(c, c.train.seed, dir);
        art.record(std::string("temporal_") + temporal_mode_name(mode) + "/curves.csv");
        // Fig-9-style series: the trained policy sees dead-reckoned poses
        // while the wheel noise grows, so its pose estimate drifts.
        const std::vector<Floorplan> plans = build_plans(c);
        std::vector<const Floorplan*> train_plans, val_plans;
        split_plans(plans, c.train.validation_fraction, train_plans, val_plans);
        for (double std_dev : cfg.noise_sweep) {
            ExperimentConfig ce = c;
            ce.train.dyn.wheel_noise_std = std_dev;
            const auto rows =
                run_eval_episodes(val_plans, ce, res.best_store, ce.train.dyn, true);
            csv.add_row_raw({temporal_mode_name(mode), format_double(std_dev),
                             format_double(summarize(rows).reward)});
        }
    }
    art.write("temporal_embedding.csv", csv.text());
    return 0;
}

int ablate_noise_sweep(const CliArgs& args, const ExperimentConfig& cfg,
                       ArtifactWriter& art) {
    const ParamStore store = ParamStore::load(args.checkpoint);
    const std::vector<Floorplan> plans = build_plans(cfg);
    std::vector<const Floorplan*> train_plans, val_plans;
    split_plans(plans, cfg.train.validation_fraction, train_plans, val_plans);
    CsvBuilder csv({"wheel_noise_std", "mean_reward", "mean_distance", "mean_collisions",
                    "mean_covered_cells", "mean_found_classes"});
    for (double std_dev : cfg.noise_sweep) {
        ExperimentConfig c = cfg;
        c.train.dyn.wheel_noise_std = std_dev;
        // Dead-reckoned pose: at std 0 the estimate equals the true pose,
        // so this row reproduces the clean eval exactly.
        const auto rows = run_eval_episodes(val_plans, c, store, c.train.dyn, true);
        const EvalSummary s = summarize(rows);
        csv.add_row({std_dev, s.reward, s.distance, s.collisions, s.covered_cells,
                     s.found_classes});
    }
    art.write("noise_sweep.csv", csv.text());
    return 0;
}

int cmd_ablate(const CliArgs& args) {
    const ExperimentConfig cfg = resolve_config(args);
    if (args.print_resolved) std::cout << resolved_config_json(cfg);
    if ((args.suite == "memory_capacity" || args.suite == "noise_sweep") &&
        args.checkpoint.empty()) {
        std::cerr << "suite " << args.suite << " requires --checkpoint\n";
        return 2;
    }
    ArtifactWriter art(args.out);
    art.log("ablate start suite=" + args.suite);
    art.write("resolved_config.json", resolved_config_json(cfg));
    int rc;
    if (args.suite == "memory_capacity") rc = ablate_memory_capacity(args, cfg, art);
    else if (args.suite == "modality_dropout") rc = ablate_modality_dropout(args, cfg, art);
    else if (args.suite == "centers") rc = ablate_centers(args, cfg, art);
    else if (args.suite == "temporal_embedding") rc = ablate_temporal(args, cfg, art);
    else if (args.suite == "noise_sweep") rc = ablate_noise_sweep(args, cfg, art);
    else {
        std::cerr << "unknown ablation suite: " << args.suite
                  << " (expected memory_capacity, modality_dropout, centers, "
                     "temporal_embedding or noise_sweep)\n";
        return 2;
    }
    art.write_manifest();
    art.log("ablate done");
    return rc;
}

nlohmann::json trajectory_json(const EpisodeTrace& trace, const Floorplan& plan) {
    nlohmann::json j;
    j["schema"] = "smt-trajectory-v1";
    j["task"] = task_name(trace.task);
    j["plan_seed"] = trace.plan_seed;
    j["episode_seed"] = trace.episode_seed;
    j["horizon"] = trace.horizon;
    j["floorplan"] = nlohmann::json::parse(plan.to_json());
    nlohmann::json poses = nlohmann::json::array();
    for (const Pose& p : trace.poses)
        poses.push_back({p.x, p.y, p.theta});
    j["poses"] = poses;
    nlohmann::json actions = nlohmann::json::array();
    for (Action a : trace.actions) actions.push_back(static_cast<int>(a));
    j["actions"] = actions;
    j["rewards"] = trace.rewards;
    nlohmann::json collided = nlohmann::json::array();
    for (uint8_t c : trace.collided) collided.push_back(static_cast<int>(c));
    j["collided"] = collided;

    // Replay the task bookkeeping to recover covered cells and found events.
    TaskState ts = make_task_state(trace.task, trace.poses.front());
    nlohmann::json covered = nlohmann::json::array();
    nlohmann::json found = nlohmann::json::array();
    AgentState s;
    for (int t = 0; t < trace.length(); ++t) {
        const auto prev_cells = ts.visited;
        const auto prev_found = ts.found;
        s.pose = trace.poses[static_cast<size_t>(t) + 1];
        task_reward(ts, s, trace.actions[t], trace.collided[t] != 0,
                    trace.observations[static_cast<size_t>(t) + 1]);
        for (const auto& cell : ts.visited)
            if (!prev_cells.count(cell))
                covered.push_back({{"step", t}, {"cx", cell.first}, {"cy", cell.second}});
        for (int cls : ts.found)
            if (!prev_found.count(cls)) found.push_back({{"step", t}, {"class", cls}});
    }
    j["covered_cells"] = covered;
    j["found_events"] = found;
    return j;
}

int cmd_export_trajectories(const CliArgs& args) {
    const ExperimentConfig cfg = resolve_config(args);
    if (args.print_resolved) std::cout << resolved_config_json(cfg);
    const ParamStore store = ParamStore::load(args.checkpoint);
    const std::vector<Floorplan> plans = build_plans(cfg);
    std::vector<const Floorplan*> train_plans, val_plans;
    split_plans(plans, cfg.train.validation_fraction, train_plans, val_plans);
    ArtifactWriter art(args.out);
    art.log("export-trajectories start");
    std::vector<EpisodeTrace> traces;
    run_eval_episodes(val_plans, cfg, store, cfg.train.dyn, false, &traces);
    const int per_plan = cfg.eval_episodes_per_plan;
    for (size_t i = 0; i < traces.size(); ++i) {
        const Floorplan& plan = *val_plans[i / static_cast<size_t>(per_plan)];
        char name[64];
        std::snprintf(name, sizeof(name), "trajectory_%03zu.json", i);
        art.write(name, trajectory_json(traces[i], plan).dump(2) + "\n");
    }
    art.write("resolved_config.json", resolved_config_json(cfg));
    art.write_manifest();
    art.log("export-trajectories done");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scene-memory navigation experiments"};
    app.require_subcommand(1);
    CliArgs args;

    auto add_common = [&](CLI::App* sub, bool needs_checkpoint) {
        sub->add_option("--config", args.config_path, "JSON experiment config")
            ->required();
        if (needs_checkpoint)
            sub->add_option("--checkpoint", args.checkpoint, "parameter checkpoint")
                ->required();
        sub->add_option("--seed", args.seed, "override the config seed set");
        sub->add_option("--workers", args.workers, "OpenMP thread count (0 = default)");
        sub->add_option("--out", args.out, "output directory");
        sub->add_flag("--print-resolved", args.print_resolved,
                      "print the fully resolved config to stdout");
    };

    CLI::App* train = app.add_subcommand("train", "train a policy");
    add_common(train, false);
    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on held-out plans");
    add_common(eval, true);
    CLI::App* ablate = app.add_subcommand("ablate", "run an ablation suite");
    add_common(ablate, false);
    ablate->add_option("--suite", args.suite,
                       "memory_capacity | modality_dropout | centers | "
                       "temporal_embedding | noise_sweep")
        ->required();
    ablate->add_option("--checkpoint", args.checkpoint,
                       "checkpoint for evaluation-only suites");
    CLI::App* exp = app.add_subcommand("export-trajectories",
                                       "export per-episode trajectory files");
    add_common(exp, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    if (args.workers > 0) omp_set_num_threads(args.workers);

    try {
        if (app.got_subcommand(train)) return cmd_train(args);
        if (app.got_subcommand(eval)) return cmd_eval(args);
        if (app.got_subcommand(ablate)) return cmd_ablate(args);
        if (app.got_subcommand(exp)) return cmd_export_trajectories(args);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
