// spml — command-line surface for the single-positive multi-label lab:
// synthetic benchmark generation, regime construction, training, evaluation,
// gradient checking, sweeps, and result aggregation.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "spml/evaluation.hpp"
#include "spml/io_util.hpp"
#include "spml/labelspace.hpp"
#include "spml/losses.hpp"
#include "spml/regimes.hpp"
#include "spml/regularizers.hpp"
#include "spml/rng.hpp"
#include "spml/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct MissingInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ordered_json read_json_file(const std::string& path) {
  if (!fs::exists(path)) throw MissingInput("input file not found: " + path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInput("cannot open: " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return j;
}

spml::Dataset load_dataset(const std::string& path) {
  if (!fs::exists(path)) throw MissingInput("input file not found: " + path);
  return spml::load_manifest(path);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << text;
}

template <typename T>
T get_or(const ordered_json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

// ---------------------------------------------------------------------------
// experiment configuration (sections: data / model / loss / reg / train)
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  std::string train_path, val_path, test_path;
  std::string regime_label = "target-only";
  spml::TrainConfig train;
};

spml::LossSpec parse_loss(const ordered_json& j) {
  spml::LossSpec s;
  if (j.contains("preset")) s = spml::loss_preset(j.at("preset").get<std::string>());
  if (j.contains("kind")) s.kind = spml::loss_kind_from_name(j.at("kind").get<std::string>());
  s.gamma = get_or(j, "gamma", s.gamma);
  s.eps_ls = get_or(j, "eps_ls", s.eps_ls);
  s.alpha_em = get_or(j, "alpha_em", s.alpha_em);
  s.lambda_role = get_or(j, "lambda_role", s.lambda_role);
  s.delta_rel = get_or(j, "delta_rel", s.delta_rel);
  s.expected_positives_k = get_or(j, "expected_positives_k", s.expected_positives_k);
  s.a = get_or(j, "a", s.a);
  s.b = get_or(j, "b", s.b);
  s.validate();
  return s;
}

spml::RegConfig parse_reg(const ordered_json& j) {
  spml::RegConfig r;
  r.kind = spml::reg_kind_from_name(get_or<std::string>(j, "kind", "none"));
  r.alpha = get_or(j, "alpha", r.alpha);
  r.eps_ema = get_or(j, "eps_ema", r.eps_ema);
  r.eps_ema_embed = get_or(j, "eps_ema_embed", r.eps_ema_embed);
  return r;
}

ExperimentConfig parse_experiment(const ordered_json& j) {
  ExperimentConfig e;
  if (!j.contains("data")) throw std::invalid_argument("config: missing 'data' section");
  const ordered_json& data = j.at("data");
  e.train_path = get_or<std::string>(data, "train", "");
  e.val_path = get_or<std::string>(data, "val", "");
  e.test_path = get_or<std::string>(data, "test", "");
  e.regime_label = get_or<std::string>(data, "regime", e.regime_label);
  if (e.train_path.empty()) throw std::invalid_argument("config: data.train is required");

  const ordered_json model = j.contains("model") ? j.at("model") : ordered_json::object();
  e.train.hidden_dims = get_or(model, "hidden", std::vector<int>{128});
  e.train.model_seed = get_or<std::uint64_t>(model, "seed", 0);
  e.train.last_layer_lr_mult = get_or(model, "last_layer_lr_mult", 1.0);

  e.train.loss = parse_loss(j.contains("loss") ? j.at("loss") : ordered_json::object());
  e.train.reg = parse_reg(j.contains("reg") ? j.at("reg") : ordered_json::object());

  const ordered_json train = j.contains("train") ? j.at("train") : ordered_json::object();
  e.train.epochs = get_or(train, "epochs", 10);
  e.train.batch_size = get_or(train, "batch_size", 16);
  e.train.base_lr = get_or(train, "base_lr", 1e-3);
  e.train.seed = get_or<std::uint64_t>(train, "seed", 0);
  e.train.eval_every = get_or(train, "eval_every", 1);
  e.train.validate();
  return e;
}

ordered_json resolved_experiment_json(const ExperimentConfig& e) {
  ordered_json j;
  j["data"] = ordered_json{{"train", e.train_path},
                           {"val", e.val_path},
                           {"test", e.test_path},
                           {"regime", e.regime_label}};
  j["model"] = ordered_json{{"hidden", e.train.hidden_dims},
                            {"seed", e.train.model_seed},
                            {"last_layer_lr_mult", e.train.last_layer_lr_mult}};
  const spml::LossSpec& s = e.train.loss;
  j["loss"] = ordered_json{{"kind", spml::loss_kind_name(s.kind)},
                           {"gamma", s.gamma},
                           {"eps_ls", s.eps_ls},
                           {"alpha_em", s.alpha_em},
                           {"lambda_role", s.lambda_role},
                           {"delta_rel", s.delta_rel},
                           {"expected_positives_k", s.expected_positives_k},
                           {"a", s.a},
                           {"b", s.b}};
  j["reg"] = ordered_json{{"kind", spml::reg_kind_name(e.train.reg.kind)},
                          {"alpha", e.train.reg.alpha},
                          {"eps_ema", e.train.reg.eps_ema},
                          {"eps_ema_embed", e.train.reg.eps_ema_embed}};
  j["train"] = ordered_json{{"epochs", e.train.epochs},
                            {"batch_size", e.train.batch_size},
                            {"base_lr", e.train.base_lr},
                            {"seed", e.train.seed},
                            {"eval_every", e.train.eval_every}};
  return j;
}

std::string metrics_csv(const spml::RunRecord& rec) {
  std::ostringstream out;
  out << "epoch,train_loss,val_map\n";
  for (std::size_t ep = 0; ep < rec.train_loss.size(); ++ep) {
    out << (ep + 1) << ',' << spml::format_double(rec.train_loss[ep]) << ',';
    if (rec.val_map[ep].has_value()) out << spml::format_double(*rec.val_map[ep]);
    out << '\n';
  }
  return out.str();
}

void save_flip_store(const spml::FlipStore& store, const std::string& path) {
  ordered_json j = ordered_json::array();
  for (const auto& [id, classes] : store.entries())
    for (int c : classes) j.push_back(ordered_json{{"example", id}, {"class", c}});
  write_text(path, j.dump() + "\n");
}

void save_role_state(const spml::RoleState& state, const std::string& path) {
  ordered_json j;
  j["rows"] = state.estimates.rows();
  j["cols"] = state.estimates.cols();
  j["estimates"] = state.estimates.data();
  write_text(path, j.dump() + "\n");
}

void run_training(const ExperimentConfig& cfg, const std::string& out_dir) {
  spml::Dataset train_set = load_dataset(cfg.train_path);
  spml::Dataset val_set;
  if (!cfg.val_path.empty()) val_set = load_dataset(cfg.val_path);

  spml::TrainResult result = spml::train(cfg.train, train_set, val_set);

  fs::create_directories(out_dir);
  write_text(out_dir + "/config.json", resolved_experiment_json(cfg).dump(2) + "\n");
  write_text(out_dir + "/metrics.csv", metrics_csv(result.record));
  spml::save_checkpoint(result.best, out_dir + "/checkpoint_best.json");
  spml::save_checkpoint(result.final, out_dir + "/checkpoint_final.json");
  if (cfg.train.loss.kind == spml::LossKind::ROLE)
    save_role_state(result.role_state, out_dir + "/role_state.json");
  if (cfg.train.loss.kind == spml::LossKind::LLCp)
    save_flip_store(result.flip_store, out_dir + "/flip_store.json");
  if (cfg.train.reg.kind != spml::RegKind::None)
    spml::save_pseudo_targets(result.pseudo_targets, out_dir + "/pseudo_targets.json");

  std::cout << "run written to " << out_dir << "\n";
  std::cout << "final train loss " << spml::format_double(result.record.train_loss.back());
  if (result.record.best_epoch > 0)
    std::cout << ", best val mAP " << spml::format_double(result.record.best_val_map) << " at epoch "
              << result.record.best_epoch;
  std::cout << " (" << spml::format_double(result.record.wall_seconds) << "s)\n";
}

// ---------------------------------------------------------------------------
// subcommand implementations
// ---------------------------------------------------------------------------

int cmd_regime_gen(const std::string& config_path, const std::string& out_dir, long long seed,
                   bool seed_given) {
  ordered_json j = read_json_file(config_path);
  const ordered_json gen = j.contains("generator") ? j.at("generator") : ordered_json::object();
  spml::GeneratorConfig g;
  g.num_classes = get_or(gen, "M", g.num_classes);
  g.num_assets = get_or(gen, "A", g.num_assets);
  g.clips_per_asset_min = get_or(gen, "clips_per_asset_min", g.clips_per_asset_min);
  g.clips_per_asset_max = get_or(gen, "clips_per_asset_max", g.clips_per_asset_max);
  g.feature_dim = get_or(gen, "D", g.feature_dim);
  g.p_bg = get_or(gen, "p_bg", g.p_bg);
  g.confusable_pairs = get_or(gen, "confusable_pairs", g.confusable_pairs);
  g.confusable_offset = get_or(gen, "confusable_offset", g.confusable_offset);
  g.regions = get_or(gen, "regions", g.regions);
  g.species_per_region = get_or(gen, "species_per_region", g.species_per_region);
  g.community_size = get_or(gen, "community_size", g.community_size);
  g.checklist_extra = get_or(gen, "checklist_extra", g.checklist_extra);
  g.noise_sigma = get_or(gen, "noise_sigma", g.noise_sigma);
  g.amp_min = get_or(gen, "amp_min", g.amp_min);
  g.seed = get_or<std::uint64_t>(gen, "seed", g.seed);
  if (seed_given) g.seed = static_cast<std::uint64_t>(seed);
  g.validate();

  spml::Dataset full = spml::gen_synthetic_assets(g).full;
  fs::create_directories(out_dir);
  spml::save_manifest(full, out_dir + "/full.json");

  const ordered_json split = j.contains("split") ? j.at("split") : ordered_json::object();
  const double ft = get_or(split, "train", 0.8);
  const double fv = get_or(split, "val", 0.1);
  const double fx = get_or(split, "test", 0.1);
  std::uint64_t split_seed = get_or<std::uint64_t>(j, "split_seed", 1);
  if (seed_given) split_seed = spml::Rng::mix_seed(static_cast<std::uint64_t>(seed), 0x73706C69ULL);
  spml::SplitResult sr = spml::split_dataset(full, ft, fv, fx, split_seed);
  spml::save_manifest(sr.train, out_dir + "/train.json");
  spml::save_manifest(sr.val, out_dir + "/val.json");
  spml::save_manifest(sr.test, out_dir + "/test.json");
  std::cout << "wrote full/train/val/test manifests to " << out_dir << " (M=" << g.num_classes
            << ", assets=" << g.num_assets << ", clips=" << full.clips.size() << ")\n";
  return 0;
}

int cmd_regime_apply(const std::string& in_path, const std::string& regime,
                     const std::string& out_path, long long seed, bool seed_given,
                     const std::string& truth_path, const std::string& prior_config_path) {
  spml::Dataset ds = load_dataset(in_path);
  spml::Dataset out;
  if (regime == "target-only") {
    out = spml::make_target_only(ds, static_cast<std::uint64_t>(seed));
  } else if (regime == "geo") {
    out = spml::apply_geo_prior(ds);
  } else if (regime == "checklist") {
    out = spml::apply_checklist_prior(ds);
  } else if (regime == "flatten") {
    out = spml::flatten(ds);
  } else if (regime == "context") {
    if (truth_path.empty()) throw std::invalid_argument("--truth is required for the context regime");
    spml::Dataset truth = load_dataset(truth_path);
    spml::PriorSimConfig pc;
    if (!prior_config_path.empty()) {
      ordered_json pj = read_json_file(prior_config_path);
      pc.target_known_negative_fraction =
          get_or(pj, "target_known_negative_fraction", pc.target_known_negative_fraction);
      pc.fit_fraction = get_or(pj, "fit_fraction", pc.fit_fraction);
      pc.context_dim = get_or(pj, "context_dim", pc.context_dim);
      pc.ridge_lambda = get_or(pj, "ridge_lambda", pc.ridge_lambda);
      pc.seed = get_or<std::uint64_t>(pj, "seed", pc.seed);
    }
    if (seed_given) pc.seed = static_cast<std::uint64_t>(seed);
    out = spml::simulate_context_priors(ds, truth, pc);
  } else {
    throw std::invalid_argument("unknown regime: " + regime +
                                " (expected target-only|geo|checklist|context|flatten)");
  }
  spml::save_manifest(out, out_path);
  std::cout << "wrote " << out_path << " (" << out.clips.size() << " clips)\n";
  return 0;
}

int cmd_regime_stats(const std::string& in_path, const std::string& out_path,
                     const std::string& split, const std::string& regime, bool append) {
  spml::Dataset ds = load_dataset(in_path);
  spml::RegimeStats s = spml::regime_stats(ds);
  std::ostringstream row;
  row << spml::regime_stats_csv_row(s, split, regime) << '\n';
  const bool fresh = !append || !fs::exists(out_path);
  std::ofstream out(out_path, fresh ? std::ios::binary : (std::ios::binary | std::ios::app));
  if (!out) throw std::runtime_error("cannot write: " + out_path);
  if (fresh) out << spml::regime_stats_csv_header() << '\n';
  out << row.str();
  std::cout << spml::regime_stats_csv_header() << '\n' << row.str();
  return 0;
}

int cmd_gradcheck(bool all, const std::string& kind, int trials, long long seed) {
  spml::GradCheckOptions opt;
  opt.trials = trials;
  opt.seed = static_cast<std::uint64_t>(seed);
  std::vector<std::string> kinds;
  if (all) {
    for (spml::LossKind k :
         {spml::LossKind::BCEFull, spml::LossKind::AN, spml::LossKind::WAN, spml::LossKind::LS,
          spml::LossKind::ROLE, spml::LossKind::EM, spml::LossKind::LLR, spml::LossKind::LLCt,
          spml::LossKind::LLCp})
      kinds.push_back(spml::loss_kind_name(k));
  } else {
    kinds.push_back(kind);
  }
  bool ok = true;
  std::cout << "check                max_rel_err   failures\n";
  auto print_row = [&ok](const std::string& name, const spml::GradCheckReport& rep) {
    std::cout << name;
    for (std::size_t i = name.size(); i < 21; ++i) std::cout << ' ';
    std::cout << spml::format_double(rep.max_rel_err) << "   " << rep.failures << "/"
              << rep.comparisons << "\n";
    ok = ok && rep.failures == 0;
  };
  for (const std::string& k : kinds) {
    spml::LossSpec spec;
    spec.kind = spml::loss_kind_from_name(k);
    if (spec.kind == spml::LossKind::LLR || spec.kind == spml::LossKind::LLCt ||
        spec.kind == spml::LossKind::LLCp)
      spec.delta_rel = 5.0;
    print_row(k, spml::gradcheck(spec, opt));
  }
  if (all) {
    spml::LossSpec an;
    an.kind = spml::LossKind::AN;
    spml::GradCheckOptions rp = opt;
    rp.reg = spml::RegKind::Rp;
    print_row("rp", spml::gradcheck(an, rp));
    print_row("re", spml::gradcheck_re(opt));
    print_row("role-estimates", spml::gradcheck_role_estimates(1.0, 1, opt));
  }
  return ok ? 0 : 1;
}

int cmd_train(const std::string& config_path, const std::string& out_dir, long long seed,
              bool seed_given) {
  ordered_json j = read_json_file(config_path);
  ExperimentConfig cfg = parse_experiment(j);
  if (seed_given) cfg.train.seed = static_cast<std::uint64_t>(seed);
  run_training(cfg, out_dir);
  return 0;
}

int cmd_eval(const std::string& run_dir, const std::string& data_path, const std::string& out_path) {
  const std::string config_path = run_dir + "/config.json";
  ordered_json j = read_json_file(config_path);
  ExperimentConfig cfg = parse_experiment(j);
  std::string test_path = data_path.empty() ? cfg.test_path : data_path;
  if (test_path.empty()) throw std::invalid_argument("no test data: pass --data or set data.test");
  spml::Dataset test_set = load_dataset(test_path);
  spml::ModelParams model = spml::load_checkpoint(run_dir + "/checkpoint_best.json");
  spml::EvalReport rep = spml::evaluate(model, test_set, /*filter_fully_labeled=*/true);
  const std::string report_path = out_path.empty() ? run_dir + "/eval_report.json" : out_path;
  spml::save_eval_report(rep, report_path);
  spml::save_pr_curves_csv(rep, run_dir + "/pr_curves.csv");
  std::cout << "mAP " << spml::format_double(rep.map) << " over " << rep.n_examples_used
            << " examples -> " << report_path << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir) {
  ordered_json j = read_json_file(config_path);
  if (!j.contains("base")) throw std::invalid_argument("sweep config: missing 'base'");
  if (!j.contains("variants") || !j.at("variants").is_array() || j.at("variants").empty())
    throw std::invalid_argument("sweep config: 'variants' must be a non-empty array");

  std::vector<ExperimentConfig> experiments;
  std::vector<spml::TrainConfig> train_configs;
  for (const ordered_json& patch : j.at("variants")) {
    ordered_json merged = j.at("base");
    merged.merge_patch(patch);
    ExperimentConfig e = parse_experiment(merged);
    experiments.push_back(e);
    train_configs.push_back(e.train);
  }
  const ExperimentConfig& first = experiments.front();
  for (const ExperimentConfig& e : experiments)
    if (e.train_path != first.train_path || e.val_path != first.val_path)
      throw std::invalid_argument("sweep: all variants must share data.train and data.val");

  spml::Dataset train_set = load_dataset(first.train_path);
  spml::Dataset val_set;
  if (!first.val_path.empty()) val_set = load_dataset(first.val_path);
  spml::SweepResult sr = spml::sweep(train_configs, train_set, val_set);

  fs::create_directories(out_dir);
  std::ostringstream csv;
  csv << "variant,best_val_map,best_epoch\n";
  for (std::size_t i = 0; i < sr.records.size(); ++i) {
    csv << i << ',' << spml::format_double(sr.best_val_maps[i]) << ',' << sr.records[i].best_epoch
        << '\n';
  }
  write_text(out_dir + "/sweep_summary.csv", csv.str());
  write_text(out_dir + "/best_config.json",
             resolved_experiment_json(experiments[sr.best_index]).dump(2) + "\n");
  std::cout << csv.str();
  std::cout << "best variant: " << sr.best_index << "\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_path) {
  struct Group {
    std::vector<double> maps;
  };
  std::map<std::string, Group> groups;
  for (const std::string& dir : run_dirs) {
    try {
      ordered_json cfg = read_json_file(dir + "/config.json");
      ordered_json rep = read_json_file(dir + "/eval_report.json");
      const std::string key = cfg.at("loss").at("kind").get<std::string>() + "," +
                              cfg.at("data").at("regime").get<std::string>() + "," +
                              cfg.at("reg").at("kind").get<std::string>();
      groups[key].maps.push_back(rep.at("map").get<double>());
    } catch (const std::exception& e) {
      std::cerr << "warning: skipping run dir " << dir << ": " << e.what() << "\n";
    }
  }
  if (groups.empty()) throw std::invalid_argument("report: no usable run directories");
  std::ostringstream csv;
  csv << "loss,regime,reg,n,mean_map,std_map\n";
  for (const auto& [key, g] : groups) {
    const std::size_t n = g.maps.size();
    double mean = 0.0;
    for (double v : g.maps) mean += v;
    mean /= static_cast<double>(n);
    csv << key << ',' << n << ',' << spml::format_double(mean) << ',';
    if (n >= 2) {
      double ss = 0.0;
      for (double v : g.maps) ss += (v - mean) * (v - mean);
      csv << spml::format_double(std::sqrt(ss / static_cast<double>(n - 1)));
    }
    csv << '\n';
  }
  write_text(out_path, csv.str());
  std::cout << csv.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"single-positive multi-label learning lab"};
  app.require_subcommand(1);

  // regime
  CLI::App* regime = app.add_subcommand("regime", "dataset generation, regimes, statistics");
  regime->require_subcommand(1);

  std::string gen_config, gen_out = "data";
  long long gen_seed = 0;
  CLI::App* regime_gen = regime->add_subcommand("gen", "generate a synthetic asset benchmark");
  regime_gen->add_option("--config", gen_config, "generator config JSON (keys: generator{M,A,clips_per_asset_min,clips_per_asset_max,D,p_bg,confusable_pairs,regions,species_per_region,community_size,checklist_extra,noise_sigma,seed}, split{train,val,test}, split_seed)")->required();
  regime_gen->add_option("--out", gen_out, "output directory for full/train/val/test manifests");
  CLI::Option* gen_seed_opt = regime_gen->add_option("--seed", gen_seed, "override generator and split seeds");

  std::string apply_in, apply_regime, apply_out, apply_truth, apply_prior;
  long long apply_seed = 0;
  CLI::App* regime_apply = regime->add_subcommand("apply", "derive a training regime from a manifest");
  regime_apply->add_option("--in", apply_in, "input manifest")->required();
  regime_apply->add_option("--regime", apply_regime, "target-only | geo | checklist | context | flatten")->required();
  regime_apply->add_option("--out", apply_out, "output manifest")->required();
  CLI::Option* apply_seed_opt =
      regime_apply->add_option("--seed", apply_seed, "sampling seed (target-only on flat data; context)");
  regime_apply->add_option("--truth", apply_truth, "full-label manifest (context regime)");
  regime_apply->add_option("--prior-config", apply_prior, "context prior config JSON (keys: target_known_negative_fraction, fit_fraction, context_dim, ridge_lambda, seed)");

  std::string stats_in, stats_out = "stats.csv", stats_split = "na", stats_regime = "na";
  bool stats_append = false;
  CLI::App* regime_stats_cmd = regime->add_subcommand("stats", "label-count statistics CSV");
  regime_stats_cmd->add_option("--in", stats_in, "input manifest")->required();
  regime_stats_cmd->add_option("--out", stats_out, "output CSV");
  regime_stats_cmd->add_option("--split", stats_split, "split label for the CSV row");
  regime_stats_cmd->add_option("--regime", stats_regime, "regime label for the CSV row");
  regime_stats_cmd->add_flag("--append", stats_append, "append to an existing CSV");

  // train
  std::string train_config, train_out = "runs/run";
  long long train_seed = 0;
  CLI::App* train_cmd = app.add_subcommand("train", "train one experiment");
  train_cmd->add_option("--config", train_config, "experiment config JSON (sections: data{train,val,test,regime}, model{hidden,seed,last_layer_lr_mult}, loss{preset|kind,gamma,eps_ls,alpha_em,lambda_role,delta_rel,expected_positives_k,a,b}, reg{kind,alpha,eps_ema,eps_ema_embed}, train{epochs,batch_size,base_lr,seed,eval_every})")->required();
  train_cmd->add_option("--out", train_out, "run directory");
  CLI::Option* train_seed_opt = train_cmd->add_option("--seed", train_seed, "override train.seed");

  // eval
  std::string eval_run, eval_data, eval_out;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a finished run on the test manifest");
  eval_cmd->add_option("--run", eval_run, "run directory (from train)")->required();
  eval_cmd->add_option("--data", eval_data, "test manifest (default: config data.test)");
  eval_cmd->add_option("--out", eval_out, "report path (default: <run>/eval_report.json)");

  // gradcheck
  bool gc_all = false;
  std::string gc_kind;
  int gc_trials = 100;
  long long gc_seed = 0;
  CLI::App* gc_cmd = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  gc_cmd->add_flag("--all", gc_all, "check every loss kind plus rp/re/role-estimates");
  gc_cmd->add_option("--kind", gc_kind, "single loss kind to check");
  gc_cmd->add_option("--trials", gc_trials, "random instances per check");
  gc_cmd->add_option("--seed", gc_seed, "rng seed");

  // sweep
  std::string sweep_config, sweep_out = "sweep";
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "train variants, pick the best by val mAP");
  sweep_cmd->add_option("--config", sweep_config, "sweep config JSON (keys: base=<experiment config>, variants=[<merge patches>])")->required();
  sweep_cmd->add_option("--out", sweep_out, "output directory");

  // report
  std::vector<std::string> report_runs;
  std::string report_out = "report.csv";
  CLI::App* report_cmd = app.add_subcommand("report", "aggregate mAP over runs by (loss, regime, reg)");
  report_cmd->add_option("--runs", report_runs, "run directories")->required()->expected(-1);
  report_cmd->add_option("--out", report_out, "output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (regime_gen->parsed())
      return cmd_regime_gen(gen_config, gen_out, gen_seed, gen_seed_opt->count() > 0);
    if (regime_apply->parsed())
      return cmd_regime_apply(apply_in, apply_regime, apply_out, apply_seed,
                              apply_seed_opt->count() > 0, apply_truth, apply_prior);
    if (regime_stats_cmd->parsed())
      return cmd_regime_stats(stats_in, stats_out, stats_split, stats_regime, stats_append);
    if (train_cmd->parsed())
      return cmd_train(train_config, train_out, train_seed, train_seed_opt->count() > 0);
    if (eval_cmd->parsed()) return cmd_eval(eval_run, eval_data, eval_out);
    if (gc_cmd->parsed()) {
      if (!gc_all && gc_kind.empty())
        throw std::invalid_argument("gradcheck: pass --all or --kind");
      return cmd_gradcheck(gc_all, gc_kind, gc_trials, gc_seed);
    }
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_config, sweep_out);
    if (report_cmd->parsed()) return cmd_report(report_runs, report_out);
  } catch (const MissingInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const spml::ManifestError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
