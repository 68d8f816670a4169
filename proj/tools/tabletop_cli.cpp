// Command-line driver: dataset generation, training, closed-loop evaluation,
// the ablation matrix, and report rendering. All subcommands accept one flat
// key=value config file (--config) plus repeatable --set key=value overrides.
// Exit codes: 0 success, 1 user error, 2 internal error.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "tabletop/eval/ablation.hpp"
#include "tabletop/io/config_file.hpp"
#include "tabletop/io/image.hpp"
#include "tabletop/io/metrics.hpp"
#include "tabletop/train/checkpoint.hpp"

namespace {

using namespace tabletop;

TaskName parse_task(const std::string& s) {
  for (TaskName t : {TaskName::kReachTarget, TaskName::kPushButtons, TaskName::kTower})
    if (s == task_name_str(t)) return t;
  throw std::invalid_argument("unknown task '" + s +
                              "' (expected reach_target|push_buttons|tower)");
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    size_t used = 0;
    int v = std::stoi(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad integer list item: " + item);
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> parse_str_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;

  ConfigMap load() const {
    ConfigMap m = config_path.empty() ? ConfigMap{} : ConfigMap::from_file(config_path);
    for (const std::string& kv : overrides) m.set_override(kv);
    return m;
  }
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "flat key=value config file");
  cmd->add_option("--set", o.overrides, "override: key=value (repeatable)");
}

std::vector<TaskSpec> specs_for(TaskName task, const std::vector<int>& variations) {
  std::vector<TaskSpec> out;
  for (int v : variations) out.push_back(TaskSpec::make(task, v));
  return out;
}

int cmd_gen_data(const CommonOpts& common, const std::string& task,
                 const std::string& variations, int demos, uint64_t seed,
                 const std::string& out_dir, bool occluders, bool exact_scene,
                 int template_id) {
  ConfigMap m = common.load();
  DatasetConfig cfg;
  cfg.dir = out_dir;
  cfg.tasks = {parse_task(task)};
  std::vector<int> vars = parse_int_list(variations);
  if (vars.size() == 1 && variations.find(',') == std::string::npos) {
    // a single number means "the first N variations"
    cfg.variations.clear();
    for (int v = 0; v < vars[0]; ++v) cfg.variations.push_back(v);
  } else {
    cfg.variations = vars;
  }
  if (cfg.variations.empty()) throw std::invalid_argument("no variations requested");
  cfg.episodes_per_variation = demos;
  cfg.seed = seed;
  cfg.image_hw = m.integer("image_hw", cfg.image_hw);
  cfg.sim.occluders = occluders;
  cfg.sim.exact_scene = exact_scene;
  cfg.template_id = template_id;
  m.finish();
  Manifest man = build_dataset(cfg);
  std::cout << "wrote " << man.entries.size() << " episodes to " << cfg.dir << "\n";
  return 0;
}

int cmd_train(const CommonOpts& common, const std::string& data_dir,
              const std::string& ckpt_out, const std::string& log_out,
              uint64_t model_seed) {
  ConfigMap m = common.load();
  PolicyConfig pcfg = policy_config_from(m);
  TrainConfig tcfg = train_config_from(m);
  m.finish();
  Dataset data = Dataset::load(data_dir);
  if (data.manifest.image_hw != pcfg.image_hw)
    throw std::invalid_argument("dataset image size " +
                                std::to_string(data.manifest.image_hw) +
                                " does not match config image_hw " +
                                std::to_string(pcfg.image_hw));
  if (tcfg.checkpoint_path.empty()) tcfg.checkpoint_path = ckpt_out;
  Policy policy(pcfg, model_seed);
  Trainer trainer(policy, data, tcfg);
  TrainResult res = trainer.run();
  if (!ckpt_out.empty()) save_checkpoint(ckpt_out, trainer.checkpoint());
  if (!log_out.empty()) save_loss_log(log_out, res.log);
  if (!res.log.empty())
    std::cout << "trained " << res.iterations_run << " iterations; final loss "
              << res.log.back().loss.total << "\n";
  return 0;
}

int cmd_eval(const CommonOpts& common, const std::string& ckpt_path,
             const std::string& task, const std::string& seen_csv,
             const std::string& unseen_csv, int episodes, uint64_t seed,
             const std::string& split, const std::string& report_out,
             bool occluders) {
  ConfigMap m = common.load();
  m.finish();
  Checkpoint ck = load_checkpoint(ckpt_path);
  Policy policy = policy_from_checkpoint(ck);
  TaskName t = parse_task(task);
  std::vector<TaskSpec> seen = specs_for(t, parse_int_list(seen_csv));
  std::vector<TaskSpec> unseen = specs_for(t, parse_int_list(unseen_csv));
  if (split == "seen") unseen.clear();
  else if (split == "unseen") seen.clear();
  else if (split != "both")
    throw std::invalid_argument("unknown split '" + split + "' (seen|unseen|both)");
  SimOptions opts;
  opts.occluders = occluders;
  PolicyActor actor(policy);
  EvalReport r = evaluate(actor, seen, unseen, episodes, seed, policy.cfg.image_hw,
                          opts, policy.cfg.hash(), policy.cfg.t_max);
  std::cout << r.to_text();
  if (!report_out.empty()) save_report(report_out, r);
  return 0;
}

int cmd_ablate(const CommonOpts& common, const std::string& data_dir,
               const std::string& variants_csv, const std::string& task,
               const std::string& seen_csv, const std::string& unseen_csv,
               int episodes, uint64_t seed, double budget_seconds,
               const std::string& table_out) {
  ConfigMap m = common.load();
  PolicyConfig base = policy_config_from(m);
  TrainConfig tcfg = train_config_from(m);
  m.finish();
  Dataset data = Dataset::load(data_dir);
  TaskName t = parse_task(task);
  AblationTable table = run_ablation(
      data, base, tcfg, parse_str_list(variants_csv), specs_for(t, parse_int_list(seen_csv)),
      specs_for(t, parse_int_list(unseen_csv)), episodes, seed, {}, budget_seconds);
  std::cout << table.to_text();
  if (!table_out.empty()) {
    std::ofstream f(table_out);
    if (!f) throw std::runtime_error("cannot open for writing: " + table_out);
    f << table.to_text();
  }
  return 0;
}

int cmd_report(const CommonOpts& common, const std::string& loss_log,
               const std::string& eval_report, const std::string& out_dir) {
  ConfigMap m = common.load();
  m.finish();
  std::filesystem::create_directories(out_dir);
  if (loss_log.empty() && eval_report.empty())
    throw std::invalid_argument("report: provide --loss-log and/or --eval");
  if (!loss_log.empty()) {
    std::vector<LogEntry> log = load_loss_log(loss_log);
    std::vector<std::pair<int64_t, double>> pts;
    for (const LogEntry& e : log) pts.emplace_back(e.iteration, e.loss.total);
    std::string png = (std::filesystem::path(out_dir) / "loss_curve.png").string();
    render_loss_curve(pts, png);
    std::cout << "loss curve (" << pts.size() << " points) -> " << png << "\n";
  }
  if (!eval_report.empty()) {
    EvalReport r = load_report(eval_report);
    std::string png = (std::filesystem::path(out_dir) / "success_rates.png").string();
    render_success_bars({{"policy", r.seen_rate(), r.unseen_rate()}}, png);
    std::string txt = (std::filesystem::path(out_dir) / "success_rates.txt").string();
    std::ofstream f(txt);
    if (!f) throw std::runtime_error("cannot open for writing: " + txt);
    f << r.to_text();
    std::cout << r.to_text() << "tables -> " << png << ", " << txt << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tabletop: multi-view instruction-conditioned manipulation testbed"};
  app.require_subcommand(1);

  CommonOpts common;

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a demonstration dataset");
  std::string g_task = "reach_target", g_vars = "1", g_out = "data";
  int g_demos = 10, g_template = -1;
  uint64_t g_seed = 0;
  bool g_occl = false, g_exact = false;
  add_common(gen, common);
  gen->add_option("--task", g_task, "reach_target|push_buttons|tower");
  gen->add_option("--variations", g_vars, "count N (first N variations) or csv list");
  gen->add_option("--demos", g_demos, "episodes per variation");
  gen->add_option("--seed", g_seed, "base seed");
  gen->add_option("--out", g_out, "output directory");
  gen->add_flag("--occluders", g_occl, "place an occluding obstacle per scene");
  gen->add_flag("--exact-scene", g_exact, "no distractor objects");
  gen->add_option("--template", g_template, "fixed instruction template id (-1: sample)");

  // train
  auto* tr = app.add_subcommand("train", "train a policy by behavioral cloning");
  std::string t_data, t_ckpt = "checkpoint.tbck", t_log = "loss_log.txt";
  uint64_t t_model_seed = 0;
  add_common(tr, common);
  tr->add_option("--data", t_data, "dataset directory")->required();
  tr->add_option("--ckpt", t_ckpt, "checkpoint output path");
  tr->add_option("--log", t_log, "loss log output path");
  tr->add_option("--model-seed", t_model_seed, "parameter init seed");

  // eval
  auto* ev = app.add_subcommand("eval", "closed-loop rollout evaluation");
  std::string e_ckpt, e_task = "reach_target", e_seen = "0", e_unseen = "",
              e_split = "both", e_out = "eval_report.txt";
  int e_episodes = 100;
  uint64_t e_seed = 0;
  bool e_occl = false;
  add_common(ev, common);
  ev->add_option("--ckpt", e_ckpt, "checkpoint path")->required();
  ev->add_option("--task", e_task, "reach_target|push_buttons|tower");
  ev->add_option("--seen-variations", e_seen, "csv of seen variation ids");
  ev->add_option("--unseen-variations", e_unseen, "csv of held-out variation ids");
  ev->add_option("--episodes", e_episodes, "episodes per split");
  ev->add_option("--seed", e_seed, "evaluation seed");
  ev->add_option("--split", e_split, "seen|unseen|both");
  ev->add_option("--out", e_out, "report output path");
  ev->add_flag("--occluders", e_occl, "evaluate with occluding obstacles");

  // ablate
  auto* ab = app.add_subcommand("ablate", "train + evaluate ablation variants");
  std::string a_data, a_variants = "R1,R8", a_task = "reach_target", a_seen = "0",
              a_unseen = "", a_out = "ablation_table.txt";
  int a_episodes = 20;
  uint64_t a_seed = 0;
  double a_budget = 0;
  add_common(ab, common);
  ab->add_option("--data", a_data, "dataset directory")->required();
  ab->add_option("--variants", a_variants, "csv of R1..R8,no_hist,one_view");
  ab->add_option("--task", a_task, "reach_target|push_buttons|tower");
  ab->add_option("--seen-variations", a_seen, "csv of seen variation ids");
  ab->add_option("--unseen-variations", a_unseen, "csv of held-out variation ids");
  ab->add_option("--episodes", a_episodes, "eval episodes per split");
  ab->add_option("--seed", a_seed, "shared train/eval seed");
  ab->add_option("--budget", a_budget, "wall-clock budget in seconds (0: none)");
  ab->add_option("--out", a_out, "table output path");

  // report
  auto* rp = app.add_subcommand("report", "render plots and tables");
  std::string r_loss, r_eval, r_out = "report";
  add_common(rp, common);
  rp->add_option("--loss-log", r_loss, "training loss log to plot");
  rp->add_option("--eval", r_eval, "eval report to tabulate");
  rp->add_option("--out-dir", r_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed())
      return cmd_gen_data(common, g_task, g_vars, g_demos, g_seed, g_out, g_occl,
                          g_exact, g_template);
    if (tr->parsed()) return cmd_train(common, t_data, t_ckpt, t_log, t_model_seed);
    if (ev->parsed())
      return cmd_eval(common, e_ckpt, e_task, e_seen, e_unseen, e_episodes, e_seed,
                      e_split, e_out, e_occl);
    if (ab->parsed())
      return cmd_ablate(common, a_data, a_variants, a_task, a_seen, a_unseen,
                        a_episodes, a_seed, a_budget, a_out);
    if (rp->parsed()) return cmd_report(common, r_loss, r_eval, r_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ContainerError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
