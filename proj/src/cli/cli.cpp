// SPDX-License-Identifier: Apache-2.0
#include "tea/cli/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <list>
#include <memory>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "tea/data/dataset.hpp"
#include "tea/data/snapshot.hpp"
#include "tea/data/synthetic.hpp"
#include "tea/error.hpp"
#include "tea/eval/evaluation.hpp"
#include "tea/training/checkpoint.hpp"
#include "tea/training/trainer.hpp"

namespace tea::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// ---- typed config access ----

const std::string& need(const Config& c, const std::string& key) {
  auto it = c.find(key);
  if (it == c.end() || it->second.empty()) {
    throw InvalidArgument("missing required setting '" + key + "' (pass --" + key + " or set it in --config)");
  }
  return it->second;
}

std::size_t get_size(const Config& c, const std::string& key) {
  const auto& v = need(c, key);
  try {
    std::size_t pos = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const auto x = std::stoull(v, &pos);
    if (pos == v.size()) return static_cast<std::size_t>(x);
  } catch (const std::exception&) {
  }
  throw InvalidArgument("setting '" + key + "': expected a non-negative integer, got '" + v + "'");
}

double get_double(const Config& c, const std::string& key) {
  const auto& v = need(c, key);
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos == v.size() && std::isfinite(x)) return x;
  } catch (const std::exception&) {
  }
  throw InvalidArgument("setting '" + key + "': expected a number, got '" + v + "'");
}

bool get_bool(const Config& c, const std::string& key) {
  std::string v = need(c, key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw InvalidArgument("setting '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<std::string> get_list(const Config& c, const std::string& key) {
  std::vector<std::string> out;
  std::stringstream ss(need(c, key));
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw InvalidArgument("setting '" + key + "' is an empty list");
  return out;
}

std::vector<std::size_t> get_size_list(const Config& c, const std::string& key) {
  std::vector<std::size_t> out;
  for (const auto& item : get_list(c, key)) {
    Config one{{key, item}};
    const auto v = get_size(one, key);
    if (v == 0) throw InvalidArgument("setting '" + key + "': values must be positive");
    out.push_back(v);
  }
  return out;
}

void apply_threads(const Config& c) {
  const auto n = get_size(c, "threads");
  if (n > 0) omp_set_num_threads(static_cast<int>(n));
}

void write_echo(std::ostream& out, const Config& c) {
  for (const auto& [k, v] : c) out << "# " << k << " = " << v << '\n';
}

// ---- command table ----

struct Field {
  std::string key;  // config key; the flag is "--" + key with '_' -> '-'
  std::string def;
  std::string help;
};

std::string flag_of(const std::string& key) {
  std::string f = key;
  std::replace(f.begin(), f.end(), '_', '-');
  return "--" + f;
}

const std::vector<Field> kTrainFields = {
    {"data", "", "prepared dataset directory"},
    {"out", "", "output directory"},
    {"variant", "tea-s", "tea-s | tea-a | tea-rs | tea-ra"},
    {"dim", "64", "embedding size d"},
    {"batch_size", "1024", "users per mini-batch"},
    {"dropout", "0.5", "dropout probability at the score heads"},
    {"gamma", "0.0005", "L2 weight"},
    {"n_neg", "50", "negatives per training step"},
    {"lr", "0.01", "Adam learning rate"},
    {"max_epochs", "50", "epoch budget"},
    {"patience", "10", "early-stopping patience (epochs without NDCG@10 gain)"},
    {"seed", "42", "random seed"},
    {"all_steps", "true", "train on every step of the sequence, not only the last"},
    {"clip_norm", "5", "global gradient-norm clip (0 disables)"},
    {"eval_neg", "100", "negatives per user for validation ranking"},
    {"shards", "4", "gradient shards per batch"},
    {"threads", "0", "OpenMP threads (0 = runtime default)"},
};

std::vector<Field> fields_for(const std::string& cmd) {
  if (cmd == "prepare") {
    return {{"interactions", "", "interaction file: user item timestamp [rating]"},
            {"social", "", "social edge file: user user (optional)"},
            {"out", "", "output directory"},
            {"min_actions", "5", "minimum interactions per user and item"},
            {"rating_threshold", "3", "rated interactions at or below this are dropped"},
            {"tau_days", "60", "walk window half-width in days"},
            {"ls", "50", "behavior sequence length L_s"},
            {"ln", "20", "neighbor bucket capacity L_n"},
            {"max_walks", "10", "walks kept per anchor"},
            {"seed", "42", "random seed"},
            {"threads", "0", "OpenMP threads (0 = runtime default)"}};
  }
  if (cmd == "train") return kTrainFields;
  if (cmd == "eval") {
    return {{"data", "", "prepared dataset directory"},
            {"checkpoint", "", "checkpoint written by train"},
            {"split", "test", "val | test"},
            {"k", "5,10,20", "comma-separated cutoffs"},
            {"n_neg", "100", "sampled negatives per user"},
            {"seed", "42", "random seed"},
            {"out", "", "report directory (default: next to the checkpoint)"},
            {"threads", "0", "OpenMP threads (0 = runtime default)"}};
  }
  if (cmd == "ablate") {
    std::vector<Field> f;
    for (const auto& x : kTrainFields)
      if (x.key != "variant" && x.key != "seed") f.push_back(x);
    f.push_back({"variants", "tea-s,tea-a,tea-rs,tea-ra", "comma-separated variants"});
    f.push_back({"seeds", "42", "comma-separated seeds"});
    f.push_back({"test_neg", "100", "negatives per user for test ranking"});
    return f;
  }
  return {{"kind", "cyclic", "cyclic | follower | toy | random"},
          {"out", "", "output directory"},
          {"users", "200", "number of users"},
          {"items", "50", "number of items"},
          {"length", "20", "interactions per user"},
          {"group_size", "4", "users per social group"},
          {"seed", "7", "random seed"}};
}

struct Command {
  std::string name;
  CLI::App* app = nullptr;
  std::vector<Field> fields;
  std::map<std::string, std::string> flag_values;
  std::string config_path;
};

Config resolve(Command& cmd) {
  Config c;
  for (const auto& f : cmd.fields) c[f.key] = f.def;
  if (!cmd.config_path.empty()) {
    for (const auto& [k, v] : read_config_file(cmd.config_path)) {
      if (!c.count(k)) throw InvalidArgument("config file '" + cmd.config_path + "': unknown key '" + k + "' for " + cmd.name);
      c[k] = v;
    }
  }
  if (const char* env = std::getenv("TEA_SEED"); env != nullptr && c.count("seed")) c["seed"] = env;
  for (const auto& f : cmd.fields)
    if (cmd.app->count(flag_of(f.key)) > 0) c[f.key] = cmd.flag_values[f.key];
  return c;
}

// ---- subcommands ----

int cmd_prepare(const Config& c, std::ostream& out) {
  apply_threads(c);
  data::DatasetOptions o;
  o.preprocess.min_actions = get_size(c, "min_actions");
  o.preprocess.rating_threshold = get_double(c, "rating_threshold");
  o.tau_seconds = static_cast<data::Timestamp>(get_double(c, "tau_days") * static_cast<double>(data::kSecondsPerDay));
  o.seq_len = get_size(c, "ls");
  o.bucket_len = get_size(c, "ln");
  o.max_walks = get_size(c, "max_walks");
  o.seed = get_size(c, "seed");
  const auto log = data::load_interactions(need(c, "interactions"));
  const auto filtered = data::preprocess(log, o.preprocess);
  data::SocialGraph social;
  data::SocialLoadReport social_report;
  const auto social_path = c.at("social");
  if (social_path.empty()) {
    social = data::make_social_graph(filtered.users.size(), {}, &social_report);
  } else {
    social = data::load_social_edges(social_path, filtered.users, &social_report);
  }
  const auto ds = data::prepare_dataset(filtered, std::move(social), o);
  const std::filesystem::path dir = need(c, "out");
  data::save_dataset(ds, dir, c);
  const auto s = data::compute_stats(ds);
  out << "read " << log.interactions.size() << " interactions, kept " << s.interactions << '\n';
  out << "users " << s.users << ", items " << s.items << ", social links " << s.social_links << ", density "
      << s.density << '\n';
  out << "social rows " << social_report.rows << " (self-loops " << social_report.self_loops << ", unknown users "
      << social_report.unknown_users << ", duplicates " << social_report.duplicates << ")\n";
  out << "wrote " << dir.string() << '\n';
  return kExitOk;
}

training::TrainConfig train_config(const Config& c) {
  training::TrainConfig t;
  t.dim = get_size(c, "dim");
  t.batch_size = get_size(c, "batch_size");
  t.dropout = get_double(c, "dropout");
  t.gamma = get_double(c, "gamma");
  t.n_negatives = get_size(c, "n_neg");
  t.learning_rate = get_double(c, "lr");
  t.max_epochs = get_size(c, "max_epochs");
  t.patience = get_size(c, "patience");
  if (c.count("seed")) t.seed = get_size(c, "seed");
  if (c.count("variant")) t.variant = model::parse_variant(c.at("variant"));
  t.all_steps = get_bool(c, "all_steps");
  t.clip_norm = get_double(c, "clip_norm");
  t.eval_negatives = get_size(c, "eval_neg");
  t.shards = get_size(c, "shards");
  t.validate();
  return t;
}

std::string describe_variant(model::Variant v) {
  std::string s = model::to_string(v) + ": bipartite aggregation ";
  s += model::aggregator_of(v) == model::Aggregator::kSage ? "mean-pool" : "attention";
  s += ", walk aggregation ";
  s += model::uses_walks(v) ? "enabled" : "disabled";
  return s;
}

int cmd_train(const Config& c, std::ostream& out) {
  apply_threads(c);
  const auto tc = train_config(c);
  const auto ds = data::load_dataset(need(c, "data"));
  const std::filesystem::path dir = need(c, "out");
  std::filesystem::create_directories(dir);

  std::ostringstream log;
  auto say = [&](const std::string& line) {
    out << line << '\n';
    log << line << '\n';
  };
  say(describe_variant(tc.variant));
  say("users " + std::to_string(ds.n_users) + ", items " + std::to_string(ds.n_items));
  const auto result = training::train(ds, tc, [&](const training::EpochRecord& r) {
    say("epoch " + std::to_string(r.epoch) + " loss " + short_num(r.train_loss) + " val HR@10 " +
        short_num(r.val_hr10) + " NDCG@10 " + short_num(r.val_ndcg10));
  });
  if (result.curve.empty()) {
    say("max_epochs = 0: saved initial parameters");
  } else {
    say("best epoch " + std::to_string(result.best_epoch) + (result.stopped_early ? " (early stop)" : ""));
  }

  training::save_checkpoint(dir / "model.ckpt", result.model, c, result.best_epoch);
  std::ofstream curve(dir / "curve.csv");
  if (!curve) throw MissingInput("cannot write '" + (dir / "curve.csv").string() + "'");
  write_echo(curve, c);
  curve << "epoch,train_loss,val_hr10,val_ndcg10\n";
  for (const auto& r : result.curve)
    curve << r.epoch << ',' << num(r.train_loss) << ',' << num(r.val_hr10) << ',' << num(r.val_ndcg10) << '\n';
  std::ofstream logfile(dir / "train.log");
  write_echo(logfile, c);
  logfile << log.str();
  out << "wrote " << (dir / "model.ckpt").string() << '\n';
  return kExitOk;
}

model::Holdout parse_split(const std::string& s) {
  if (s == "val" || s == "validation") return model::Holdout::kValidation;
  if (s == "test") return model::Holdout::kTest;
  throw InvalidArgument("split must be 'val' or 'test', got '" + s + "'");
}

void check_compatible(const model::TeaModel& m, const data::PreparedDataset& ds) {
  const auto& mc = m.config();
  if (mc.n_users != ds.n_users || mc.n_items != ds.n_items || mc.seq_len != ds.options.seq_len) {
    throw Incompatible("checkpoint was trained on " + std::to_string(mc.n_users) + " users / " +
                       std::to_string(mc.n_items) + " items / L_s " + std::to_string(mc.seq_len) +
                       ", dataset has " + std::to_string(ds.n_users) + " / " + std::to_string(ds.n_items) + " / " +
                       std::to_string(ds.options.seq_len));
  }
}

int cmd_eval(const Config& c, std::ostream& out) {
  apply_threads(c);
  eval::EvalConfig ec;
  ec.holdout = parse_split(c.at("split"));
  ec.ks = get_size_list(c, "k");
  ec.n_negatives = get_size(c, "n_neg");
  ec.seed = get_size(c, "seed");
  const std::filesystem::path ckpt_path = need(c, "checkpoint");
  const auto ds = data::load_dataset(need(c, "data"));
  const auto ck = training::load_checkpoint(ckpt_path);
  check_compatible(ck.model, ds);
  const auto report = eval::evaluate_all(ck.model, ds, ec);

  std::filesystem::path dir = c.at("out");
  if (dir.empty()) dir = ckpt_path.parent_path().empty() ? std::filesystem::path(".") : ckpt_path.parent_path();
  std::filesystem::create_directories(dir);
  const std::string stem = ec.holdout == model::Holdout::kTest ? "eval_test" : "eval_val";
  eval::write_report_json(report, dir / (stem + ".json"), c);
  eval::write_rank_csv(report, ds, dir / (stem + "_ranks.csv"), c);
  out << report.variant << " on " << report.ranks.size() << " users, " << report.candidate_count
      << " candidates each" << (report.reduced_candidates ? " (catalogue smaller than requested)" : "") << '\n';
  for (std::size_t i = 0; i < report.ks.size(); ++i) {
    out << "HR@" << report.ks[i] << ' ' << short_num(report.hr[i]) << "  NDCG@" << report.ks[i] << ' '
        << short_num(report.ndcg[i]) << '\n';
  }
  out << "wrote " << (dir / (stem + ".json")).string() << '\n';
  return kExitOk;
}

int cmd_ablate(const Config& c, std::ostream& out) {
  apply_threads(c);
  std::vector<model::Variant> variants;
  for (const auto& v : get_list(c, "variants")) variants.push_back(model::parse_variant(v));
  std::vector<std::uint64_t> seeds;
  for (const auto& s : get_list(c, "seeds")) {
    Config one{{"seed", s}};
    seeds.push_back(get_size(one, "seed"));
  }
  auto base = train_config(c);
  const auto ds = data::load_dataset(need(c, "data"));
  const std::filesystem::path dir = need(c, "out");
  std::filesystem::create_directories(dir);
  const std::vector<std::size_t> ks{5, 10, 20};

  std::ofstream csv(dir / "ablation.csv");
  if (!csv) throw MissingInput("cannot write '" + (dir / "ablation.csv").string() + "'");
  write_echo(csv, c);
  csv << "variant,seed,HR@5,NDCG@5,HR@10,NDCG@10,HR@20,NDCG@20\n";
  for (auto v : variants) {
    std::vector<std::vector<double>> rows;
    for (auto seed : seeds) {
      auto tc = base;
      tc.variant = v;
      tc.seed = seed;
      out << "training " << describe_variant(v) << ", seed " << seed << '\n';
      const auto result = training::train(ds, tc);
      eval::EvalConfig ec;
      ec.holdout = model::Holdout::kTest;
      ec.ks = ks;
      ec.n_negatives = get_size(c, "test_neg");
      ec.seed = seed;
      const auto r = eval::evaluate_all(result.model, ds, ec);
      std::vector<double> row;
      for (std::size_t i = 0; i < ks.size(); ++i) {
        row.push_back(r.hr[i]);
        row.push_back(r.ndcg[i]);
      }
      csv << model::to_string(v) << ',' << seed;
      for (double x : row) csv << ',' << num(x);
      csv << '\n';
      out << "  test HR@10 " << short_num(r.hr_at(10)) << " NDCG@10 " << short_num(r.ndcg_at(10)) << '\n';
      rows.push_back(std::move(row));
    }
    const std::size_t n = rows.size();
    std::vector<double> mean(rows[0].size(), 0.0), sd(rows[0].size(), 0.0);
    for (const auto& r : rows)
      for (std::size_t j = 0; j < r.size(); ++j) mean[j] += r[j] / static_cast<double>(n);
    if (n > 1) {
      for (const auto& r : rows)
        for (std::size_t j = 0; j < r.size(); ++j) sd[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
      for (auto& x : sd) x = std::sqrt(x / static_cast<double>(n - 1));
    }
    csv << model::to_string(v) << ",mean";
    for (double x : mean) csv << ',' << num(x);
    csv << '\n' << model::to_string(v) << ",std";
    for (double x : sd) csv << ',' << num(x);
    csv << '\n';
  }
  out << "wrote " << (dir / "ablation.csv").string() << '\n';
  return kExitOk;
}

int cmd_synth(const Config& c, std::ostream& out) {
  data::SyntheticOptions o;
  o.users = get_size(c, "users");
  o.items = get_size(c, "items");
  o.length = get_size(c, "length");
  o.group_size = get_size(c, "group_size");
  o.seed = get_size(c, "seed");
  if (o.users == 0 || o.items == 0 || o.length == 0 || o.group_size == 0) {
    throw InvalidArgument("synth: users, items, length and group_size must be positive");
  }
  const auto& kind = c.at("kind");
  data::SyntheticCorpus corpus;
  if (kind == "cyclic") {
    corpus = data::cyclic_corpus(o);
  } else if (kind == "follower") {
    corpus = data::follower_corpus(o);
  } else if (kind == "toy") {
    corpus = data::toy_cycle_corpus(o.users, o.items, o.length);
  } else if (kind == "random") {
    corpus = data::random_corpus(o);
  } else {
    throw InvalidArgument("synth: unknown kind '" + kind + "'");
  }
  const std::filesystem::path dir = need(c, "out");
  data::write_corpus(corpus, dir);
  out << "wrote " << (dir / "interactions.tsv").string() << " and " << (dir / "social.tsv").string() << '\n';
  return kExitOk;
}

}  // namespace

Config read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInput("cannot open config file '" + path.string() + "'");
  Config c;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(path.string(), line_no, "expected 'key = value'");
    std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ParseError(path.string(), line_no, "empty key");
    std::replace(key.begin(), key.end(), '-', '_');
    c[key] = trim(t.substr(eq + 1));
  }
  return c;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const MissingInput*>(&e)) return kExitMissingInput;
  if (dynamic_cast<const EmptyData*>(&e)) return kExitEmptyData;
  if (dynamic_cast<const NumericalError*>(&e)) return kExitNumerical;
  if (dynamic_cast<const Incompatible*>(&e)) return kExitIncompatible;
  return kExitFailure;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"TEA sequential recommender: prepare data, train, evaluate and ablate."};
  app.name("tea");
  app.require_subcommand(1);
  app.footer(
      "Settings come from built-in defaults, then --config FILE (key = value lines), then the TEA_SEED\n"
      "environment variable (seed only), then command-line flags; later sources win.\n"
      "Exit codes: 0 ok, 1 usage or other error, 2 missing input, 3 nothing left after filtering,\n"
      "4 numerical failure, 5 incompatible checkpoint or dataset.");

  const std::vector<std::pair<std::string, std::string>> names = {
      {"prepare", "filter, split and index a raw interaction dump"},
      {"train", "train a model and write a checkpoint and learning curve"},
      {"eval", "rank held-out items against sampled negatives"},
      {"ablate", "train and test several variants and seeds into one table"},
      {"synth", "write a synthetic corpus with known structure"},
  };
  std::list<Command> commands;
  for (const auto& [name, help] : names) {
    Command& cmd = commands.emplace_back();
    cmd.name = name;
    cmd.app = app.add_subcommand(name, help);
    cmd.fields = fields_for(name);
    cmd.app->add_option("--config", cmd.config_path, "key = value settings file");
    for (const auto& f : cmd.fields) {
      std::string help_text = f.help;
      if (!f.def.empty()) help_text += " [" + f.def + "]";
      cmd.app->add_option(flag_of(f.key), cmd.flag_values[f.key], help_text);
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitFailure;
  }

  try {
    for (auto& cmd : commands) {
      if (!cmd.app->parsed()) continue;
      const Config c = resolve(cmd);
      if (cmd.name == "prepare") return cmd_prepare(c, out);
      if (cmd.name == "train") return cmd_train(c, out);
      if (cmd.name == "eval") return cmd_eval(c, out);
      if (cmd.name == "ablate") return cmd_ablate(c, out);
      return cmd_synth(c, out);
    }
  } catch (const std::exception& e) {
    err << "tea: error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitFailure;
}

}  // namespace tea::cli
