// Command-line driver for the full pipeline: map/dataset generation, the
// three training stages, PSRO fine-tuning, evaluation, comparisons, ablations
// and the zero-shot heatmap. All file formats are JSON / JSON-lines / CSV.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "grasper/eval.hpp"
#include "grasper/checkpoint.hpp"
#include "grasper/metrics.hpp"
#include "grasper/pretrain.hpp"

namespace {

using namespace grasper;

GameSpec load_game_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open game file " + path);
  nlohmann::json j;
  in >> j;
  return GameSpec::from_json(j);
}

struct MapFlags {
  std::string kind = "grid";
  int width = 10, height = 10;
  int nodes = 300, attach_m = 2;
  std::string file;
  double keep_prob = 1.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--map-kind", kind, "grid | scale_free | file");
    cmd->add_option("--width", width, "grid width");
    cmd->add_option("--height", height, "grid height");
    cmd->add_option("--nodes", nodes, "scale-free node count");
    cmd->add_option("--attach-m", attach_m, "scale-free edges per new node");
    cmd->add_option("--map-file", file, "map JSON path (kind=file)");
    cmd->add_option("--keep-prob", keep_prob, "edge keep probability");
  }
  MapTemplate to_template() const {
    MapTemplate t;
    if (kind == "grid") {
      t.kind = MapTemplate::Kind::grid;
      t.width = width;
      t.height = height;
    } else if (kind == "scale_free") {
      t.kind = MapTemplate::Kind::scale_free;
      t.nodes = nodes;
      t.attach_m = attach_m;
    } else if (kind == "file") {
      t.kind = MapTemplate::Kind::file;
      t.path = file;
    } else {
      throw input_error("unknown map kind " + kind);
    }
    t.edge_keep_prob = keep_prob;
    return t;
  }
};

struct NetFlags {
  int gnn_hidden = 128, gnn_layers = 2;
  int d_loc = 32, d_id = 8, d_time = 8;
  std::vector<int> actor_hidden{128, 128};
  std::vector<int> critic_hidden{128, 128};
  std::vector<int> hyper_hidden{256, 256};
  bool raw_rep = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--gnn-hidden", gnn_hidden);
    cmd->add_option("--gnn-layers", gnn_layers);
    cmd->add_option("--d-loc", d_loc);
    cmd->add_option("--actor-hidden", actor_hidden);
    cmd->add_option("--critic-hidden", critic_hidden);
    cmd->add_option("--hyper-hidden", hyper_hidden);
    cmd->add_flag("--no-rep", raw_rep, "replace the representation layer with raw features");
  }
};

ModelConfig make_model_config(const GameDataset& ds, Method method, const NetFlags& net) {
  ModelConfig cfg;
  cfg.method = method;
  cfg.n_pursuers = ds.provenance.config.n_pursuers;
  cfg.t_max = ds.provenance.config.t_max;
  cfg.gnn.hidden = net.gnn_hidden;
  cfg.gnn.layers = net.gnn_layers;
  cfg.rep.d_loc = net.d_loc;
  cfg.rep.d_id = net.d_id;
  cfg.rep.d_time = net.d_time;
  cfg.rep.n_max = cfg.n_pursuers;
  cfg.rep.t_max = cfg.t_max;
  cfg.rep.raw = net.raw_rep;
  cfg.actor_hidden = net.actor_hidden;
  cfg.critic_hidden = net.critic_hidden;
  cfg.hyper.hidden = net.hyper_hidden;
  // Shared embedding vocabulary and action head sized to the base map.
  int base_nodes = 0, max_actions = 0;
  for (const auto& spec : ds.instances) {
    base_nodes = std::max(base_nodes, spec.graph.base_node_count);
    max_actions = std::max(max_actions, spec.graph.max_degree() + 1);
  }
  cfg.rep.loc_vocab = base_nodes;
  cfg.max_actions = max_actions;
  return cfg;
}

int run(int argc, char** argv) {
  CLI::App app{"Grasper: generalist pursuit-evasion game solving toolkit"};
  app.require_subcommand(1);

  // ---- gen-maps ----
  auto* gen_maps = app.add_subcommand("gen-maps", "generate a map JSON file");
  MapFlags gm_map;
  gm_map.attach(gen_maps);
  std::string gm_out = "map.json";
  uint64_t gm_seed = 1;
  gen_maps->add_option("--out", gm_out)->required();
  gen_maps->add_option("--seed", gm_seed);
  gen_maps->callback([&] {
    Rng rng(gm_seed);
    save_map_file(build_map(gm_map.to_template(), rng), gm_out);
    std::cout << "wrote " << gm_out << "\n";
  });

  // ---- gen-games ----
  auto* gen_games = app.add_subcommand("gen-games", "generate a game dataset (JSON-lines)");
  MapFlags gg_map;
  gg_map.attach(gen_games);
  InstanceConfig gg_cfg;
  int gg_count = 1000;
  uint64_t gg_seed = 1;
  std::string gg_out = "games.jsonl";
  gen_games->add_option("--count", gg_count);
  gen_games->add_option("--min-dist", gg_cfg.min_evader_distance);
  gen_games->add_option("--exits", gg_cfg.n_exits);
  gen_games->add_option("--pursuers", gg_cfg.n_pursuers);
  gen_games->add_option("--tmin", gg_cfg.t_min);
  gen_games->add_option("--tmax", gg_cfg.t_max);
  gen_games->add_flag("--boundary-exits", gg_cfg.boundary_exits);
  gen_games->add_option("--seed", gg_seed);
  gen_games->add_option("--out", gg_out)->required();
  gen_games->callback([&] {
    const GameDataset ds = build_dataset(gg_map.to_template(), gg_cfg, gg_count, gg_seed);
    save_dataset(ds, gg_out);
    std::cout << "wrote " << ds.instances.size() << " games to " << gg_out << "\n";
  });

  // ---- pre-pretrain ----
  auto* ppt = app.add_subcommand("pre-pretrain", "Stage I: masked graph autoencoding of the GNN");
  std::string ppt_dataset, ppt_out = "gnn.ckpt", ppt_metrics;
  PrePretrainConfig ppt_cfg;
  NetFlags ppt_net;
  ppt_net.attach(ppt);
  std::string ppt_method = "grasper";
  ppt->add_option("--dataset", ppt_dataset)->required();
  ppt->add_option("--mask-ratio", ppt_cfg.mae.mask_ratio);
  ppt->add_option("--gamma", ppt_cfg.mae.gamma);
  ppt->add_option("--steps", ppt_cfg.steps);
  ppt->add_option("--batch", ppt_cfg.batch_graphs);
  ppt->add_option("--lr", ppt_cfg.lr);
  ppt->add_option("--seed", ppt_cfg.seed);
  ppt->add_option("--out", ppt_out);
  ppt->add_option("--metrics", ppt_metrics);
  ppt->add_option("--method", ppt_method, "grasper | mt_psro_aug");
  ppt->callback([&] {
    const GameDataset ds = load_dataset(ppt_dataset);
    GrasperModel model =
        init_model(make_model_config(ds, method_from_string(ppt_method), ppt_net), ppt_cfg.seed);
    std::ofstream metrics;
    if (!ppt_metrics.empty()) metrics.open(ppt_metrics);
    const PrePretrainResult result =
        pre_pretrain(model.gnn, model.mae, model.cfg.gnn, ds.instances, ppt_cfg,
                     ppt_metrics.empty() ? nullptr : &metrics);
    nlohmann::json meta{{"stage", "pre-pretrain"},
                        {"seed", ppt_cfg.seed},
                        {"steps", ppt_cfg.steps},
                        {"pre_pretrain_wall_clock_s", result.wall_clock_s},
                        {"initial_loss", result.initial_loss},
                        {"final_loss", result.final_loss}};
    meta["config_hash"] = config_hash(meta);
    save_model(model, ppt_out, meta);
    std::cout << "stage I done: loss " << result.initial_loss << " -> " << result.final_loss
              << " in " << result.wall_clock_s << " s; wrote " << ppt_out << "\n";
  });

  // ---- pretrain ----
  auto* pt = app.add_subcommand("pretrain", "Stage II: heuristic-guided multi-task pre-training");
  std::string pt_dataset, pt_gnn_ckpt, pt_out = "model.ckpt", pt_metrics, pt_method = "grasper";
  PretrainConfig pt_cfg;
  NetFlags pt_net;
  pt_net.attach(pt);
  pt->add_option("--dataset", pt_dataset)->required();
  pt->add_option("--gnn-ckpt", pt_gnn_ckpt, "Stage-I checkpoint (frozen GNN)");
  pt->add_option("--episodes", pt_cfg.episodes_total);
  pt->add_option("--alpha", pt_cfg.alpha);
  pt->add_option("--c1", pt_cfg.c1);
  pt->add_option("--c2", pt_cfg.c2);
  pt->add_option("--episodes-per-task", pt_cfg.episodes_per_task);
  pt->add_option("--seed", pt_cfg.seed);
  pt->add_option("--out", pt_out);
  pt->add_option("--metrics", pt_metrics);
  pt->add_option("--method", pt_method, "grasper | mt_psro | mt_psro_aug");
  pt->add_option("--lr", pt_cfg.ppo.lr);
  pt->add_option("--entropy-coef", pt_cfg.ppo.entropy_coef);
  pt->add_option("--ppo-epochs", pt_cfg.ppo.epochs);
  pt->add_flag("--joint-gnn", pt_cfg.joint_gnn, "train the GNN jointly (no Stage I)");
  pt->add_flag("--alpha-decay", pt_cfg.alpha_linear_decay);
  pt->callback([&] {
    const GameDataset ds = load_dataset(pt_dataset);
    const Method method = method_from_string(pt_method);
    GrasperModel model;
    double stage1_wall = 0.0;
    if (!pt_gnn_ckpt.empty()) {
      model = load_model(pt_gnn_ckpt);
      model.cfg.method = method;
      const Checkpoint ck = load_checkpoint(pt_gnn_ckpt);
      stage1_wall = ck.metadata.value("pre_pretrain_wall_clock_s", 0.0);
    } else {
      model = init_model(make_model_config(ds, method, pt_net), pt_cfg.seed);
    }
    std::ofstream metrics;
    if (!pt_metrics.empty()) metrics.open(pt_metrics);
    const PretrainResult result =
        pretrain(model, ds, pt_cfg, pt_metrics.empty() ? nullptr : &metrics);
    nlohmann::json meta{{"stage", "pretrain"},
                        {"method", pt_method},
                        {"seed", pt_cfg.seed},
                        {"episodes", result.episodes_run},
                        {"pretrain_wall_clock_s", result.wall_clock_s + stage1_wall},
                        {"train_set_size", ds.instances.size()},
                        {"alpha", pt_cfg.alpha}};
    meta["config_hash"] = config_hash(meta);
    save_model(model, pt_out, meta);
    std::cout << "stage II done: " << result.episodes_run << " episodes, return "
              << result.mean_return_first_tenth << " -> " << result.mean_return_last_tenth
              << ", wall " << result.wall_clock_s << " s; wrote " << pt_out << "\n";
  });

  // ---- finetune ----
  auto* ft = app.add_subcommand("finetune", "Stage III: PSRO fine-tuning on one game");
  std::string ft_game, ft_ckpt = "none", ft_out = "psro_metrics.csv", ft_solver = "regret_matching";
  std::string ft_method = "grasper";
  PsroConfig ft_cfg;
  uint64_t ft_seed = 1;
  NetFlags ft_net;
  ft_net.attach(ft);
  ft->add_option("--game", ft_game)->required();
  ft->add_option("--ckpt", ft_ckpt, "model checkpoint, or 'none' for scratch PSRO");
  ft->add_option("--method", ft_method, "grasper | mt_psro | mt_psro_aug | psro");
  ft->add_option("--epochs", ft_cfg.epochs);
  ft->add_option("--br-episodes", ft_cfg.br_episodes);
  ft->add_option("--payoff-episodes", ft_cfg.payoff_episodes);
  ft->add_option("--meta-solver", ft_solver);
  ft->add_option("--seed", ft_seed);
  ft->add_option("--out", ft_out);
  ft->add_flag("--exploitability", ft_cfg.compute_exploitability,
               "compute the exact best-response gap per epoch (oracle-sized games)");
  ft->callback([&] {
    const GameSpec spec = load_game_file(ft_game);
    ft_cfg.meta_solver = meta_solver_from_string(ft_solver);
    GrasperModel model;
    const GrasperModel* model_ptr = nullptr;
    Method method = method_from_string(ft_method);
    if (ft_ckpt != "none") {
      model = load_model(ft_ckpt);
      method = model.cfg.method;
      model_ptr = &model;
    } else {
      method = Method::psro;
    }
    ModelConfig scratch_cfg;
    if (model_ptr) {
      scratch_cfg = model.cfg;
    } else {
      scratch_cfg.method = Method::psro;
      scratch_cfg.n_pursuers = spec.n_pursuers();
      scratch_cfg.t_max = spec.horizon;
      scratch_cfg.max_actions = spec.graph.max_degree() + 1;
      scratch_cfg.rep.loc_vocab = spec.graph.base_node_count;
      scratch_cfg.rep.n_max = spec.n_pursuers();
      scratch_cfg.rep.t_max = spec.horizon;
    }
    const PsroResult result = run_psro(spec, model_ptr, method, scratch_cfg, ft_cfg, ft_seed);
    CsvWriter csv(ft_out, {"epoch", "wall_clock_s", "worst_case_utility", "std_error",
                           "population_size", "exploitability"});
    for (const auto& m : result.history)
      csv.row({std::to_string(m.epoch), CsvWriter::num(m.wall_clock_s),
               CsvWriter::num(m.worst_case_utility), CsvWriter::num(m.utility_std_error),
               std::to_string(m.population_size),
               std::isnan(m.exploitability) ? "" : CsvWriter::num(m.exploitability)});
    std::cout << "final worst-case utility " << result.history.back().worst_case_utility
              << "; wrote " << ft_out << "\n";
  });

  // ---- evaluate ----
  auto* ev = app.add_subcommand("evaluate", "zero-shot / meta-strategy evaluation of a checkpoint");
  std::string ev_game, ev_ckpt, ev_out, ev_replay;
  int ev_episodes = 512;
  uint64_t ev_seed = 1;
  bool ev_zero_shot = true;
  ev->add_option("--game", ev_game)->required();
  ev->add_option("--ckpt", ev_ckpt)->required();
  ev->add_option("--episodes", ev_episodes);
  ev->add_option("--seed", ev_seed);
  ev->add_option("--out", ev_out);
  ev->add_option("--replay-out", ev_replay, "dump evaluation episodes as JSON-lines");
  ev->add_flag("--zero-shot,!--no-zero-shot", ev_zero_shot);
  ev->callback([&] {
    const GameSpec spec = load_game_file(ev_game);
    const GrasperModel model = load_model(ev_ckpt);
    ZeroShotOptions opt;
    opt.eval_episodes = ev_episodes;
    const double utility = zero_shot_eval(spec, model, opt, ev_seed);
    std::cout << "zero-shot worst-case utility: " << utility << "\n";
    if (!ev_out.empty()) {
      CsvWriter csv(ev_out, {"game", "seed", "episodes", "zero_shot_utility"});
      csv.row({ev_game, std::to_string(ev_seed), std::to_string(ev_episodes),
               CsvWriter::num(utility)});
    }
    if (!ev_replay.empty()) {
      Rng rng(ev_seed);
      const PursuerPurePolicy base = base_policy(model, spec);
      std::vector<EpisodeRecord> episodes;
      std::vector<double> uniform(spec.exits.size(), 1.0 / spec.exits.size());
      for (int k = 0; k < std::min(ev_episodes, 64); ++k) {
        const EvaderPlan plan = sample_evader_plan(spec, uniform, rng);
        episodes.push_back(rollout(spec, plan, base.as_policy_fn(spec, rng)));
      }
      write_episodes_jsonl(episodes, ev_replay);
    }
  });

  // ---- compare ----
  auto* cmp = app.add_subcommand("compare", "method comparison over a test set");
  std::string cmp_set, cmp_out = "comparison.csv";
  std::string cmp_grasper, cmp_mt, cmp_mt_aug;
  std::vector<std::string> cmp_methods{"grasper", "psro", "random"};
  std::vector<uint64_t> cmp_seeds{1, 2, 3};
  PsroConfig cmp_cfg;
  cmp->add_option("--test-set", cmp_set)->required();
  cmp->add_option("--methods", cmp_methods)->delimiter(',');
  cmp->add_option("--ckpt-grasper", cmp_grasper);
  cmp->add_option("--ckpt-mt", cmp_mt);
  cmp->add_option("--ckpt-mt-aug", cmp_mt_aug);
  cmp->add_option("--epochs", cmp_cfg.epochs);
  cmp->add_option("--br-episodes", cmp_cfg.br_episodes);
  cmp->add_option("--seeds", cmp_seeds)->delimiter(',');
  cmp->add_option("--out", cmp_out);
  cmp->callback([&] {
    const GameDataset test = load_dataset(cmp_set);
    ComparisonConfig cc;
    cc.psro = cmp_cfg;
    cc.seeds = cmp_seeds;
    GrasperModel grasper_model, mt_model, mt_aug_model;
    const GrasperModel *gp = nullptr, *mp = nullptr, *ap = nullptr;
    auto offset_of = [](const std::string& path) {
      const Checkpoint ck = load_checkpoint(path);
      const double wall = ck.metadata.value("pretrain_wall_clock_s", 0.0);
      const double n = ck.metadata.value("train_set_size", 1.0);
      return wall / std::max(1.0, n);
    };
    if (!cmp_grasper.empty()) {
      grasper_model = load_model(cmp_grasper);
      gp = &grasper_model;
      cc.grasper_pretrain_offset_s = offset_of(cmp_grasper);
    }
    if (!cmp_mt.empty()) {
      mt_model = load_model(cmp_mt);
      mp = &mt_model;
      cc.mt_pretrain_offset_s = offset_of(cmp_mt);
    }
    if (!cmp_mt_aug.empty()) {
      mt_aug_model = load_model(cmp_mt_aug);
      ap = &mt_aug_model;
      cc.mt_aug_pretrain_offset_s = offset_of(cmp_mt_aug);
    }
    std::vector<Method> methods;
    for (const auto& m : cmp_methods) methods.push_back(method_from_string(m));
    ModelConfig scratch_cfg = gp ? gp->cfg : (mp ? mp->cfg : ModelConfig{});
    if (!gp && !mp && !ap) {
      scratch_cfg = ModelConfig{};
      scratch_cfg.n_pursuers = test.provenance.config.n_pursuers;
      scratch_cfg.t_max = test.provenance.config.t_max;
      int base_nodes = 0, max_actions = 0;
      for (const auto& s : test.instances) {
        base_nodes = std::max(base_nodes, s.graph.base_node_count);
        max_actions = std::max(max_actions, s.graph.max_degree() + 1);
      }
      scratch_cfg.rep.loc_vocab = base_nodes;
      scratch_cfg.rep.n_max = scratch_cfg.n_pursuers;
      scratch_cfg.rep.t_max = scratch_cfg.t_max;
      scratch_cfg.max_actions = max_actions;
    }
    const auto rows = run_comparison(test, methods, gp, mp, ap, scratch_cfg, cc);
    nlohmann::json cfg_json{{"test_set", cmp_set},
                            {"methods", cmp_methods},
                            {"epochs", cmp_cfg.epochs},
                            {"br_episodes", cmp_cfg.br_episodes}};
    write_metrics_csv(rows, cmp_out, config_hash(cfg_json));
    std::cout << "wrote " << rows.size() << " rows to " << cmp_out << "\n";
  });

  // ---- ablate ----
  auto* ab = app.add_subcommand("ablate", "HMP x representation-layer ablation grid");
  std::string ab_i1, ab_i2, ab_out = "ablation.csv";
  std::string ab_full, ab_no_rep, ab_no_hmp, ab_none;
  PsroConfig ab_cfg;
  uint64_t ab_seed = 1;
  ab->add_option("--test-set-1", ab_i1)->required();
  ab->add_option("--test-set-2", ab_i2)->required();
  ab->add_option("--ckpt-full", ab_full)->required();
  ab->add_option("--ckpt-no-rep", ab_no_rep)->required();
  ab->add_option("--ckpt-no-hmp", ab_no_hmp)->required();
  ab->add_option("--ckpt-none", ab_none)->required();
  ab->add_option("--epochs", ab_cfg.epochs);
  ab->add_option("--br-episodes", ab_cfg.br_episodes);
  ab->add_option("--seed", ab_seed);
  ab->add_option("--out", ab_out);
  ab->callback([&] {
    const GameDataset i1 = load_dataset(ab_i1);
    const GameDataset i2 = load_dataset(ab_i2);
    const GrasperModel full = load_model(ab_full);
    const GrasperModel no_rep = load_model(ab_no_rep);
    const GrasperModel no_hmp = load_model(ab_no_hmp);
    const GrasperModel none = load_model(ab_none);
    const auto cells = run_ablation(
        i1, i2, {&full, &no_rep, &no_hmp, &none},
        {{true, true}, {true, false}, {false, true}, {false, false}}, ab_cfg, ab_seed);
    write_ablation_csv(cells, ab_out);
    std::cout << "wrote " << cells.size() << " cells to " << ab_out << "\n";
  });

  // ---- heatmap ----
  auto* hm = app.add_subcommand("heatmap", "zero-shot utility per evader start node");
  std::string hm_game, hm_ckpt, hm_out = "heatmap.csv";
  int hm_episodes = 256;
  uint64_t hm_seed = 1;
  hm->add_option("--game", hm_game)->required();
  hm->add_option("--ckpt", hm_ckpt)->required();
  hm->add_option("--episodes", hm_episodes);
  hm->add_option("--seed", hm_seed);
  hm->add_option("--out", hm_out);
  hm->callback([&] {
    const GameSpec spec = load_game_file(hm_game);
    const GrasperModel model = load_model(hm_ckpt);
    ZeroShotOptions opt;
    opt.eval_episodes = hm_episodes;
    const auto cells = heatmap(spec, model, opt, hm_seed);
    write_heatmap_csv(cells, hm_out);
    std::cout << "wrote " << cells.size() << " cells to " << hm_out << "\n";
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
