// dcl: experiments and analysis around the direction-concentrating gradient
// correction. Subcommands: bench2d | train | continual | analyze.

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dcl/analysis.hpp"
#include "dcl/dcl.hpp"
#include "dcl/errors.hpp"
#include "dcl/linalg.hpp"
#include "dcl/mlp.hpp"
#include "dcl/optim.hpp"
#include "dcl/rng.hpp"
#include "dcl/tasks.hpp"
#include "dcl/trace_io.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDiverged = 3;
constexpr int kNumericError = 4;
constexpr int kBadInput = 5;

// "inf" (or "infinity") means no reset window.
long parse_beta_w(const std::string& s) {
  if (s == "inf" || s == "infinity") return dcl::kInfiniteWindow;
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad --beta-w: " + s);
  }
  if (pos != s.size() || v < 1) throw std::invalid_argument("bad --beta-w: " + s);
  return v;
}

std::string beta_w_str(long beta_w) {
  return beta_w == dcl::kInfiniteWindow ? "inf" : std::to_string(beta_w);
}

dcl::Activation parse_activation(const std::string& s) {
  if (s == "relu") return dcl::Activation::relu;
  if (s == "tanh") return dcl::Activation::tanh;
  throw std::invalid_argument("unknown activation: " + s);
}

dcl::LrPolicy::Kind parse_schedule(const std::string& s) {
  if (s == "constant") return dcl::LrPolicy::Kind::constant;
  if (s == "halving") return dcl::LrPolicy::Kind::halving;
  if (s == "milestones") return dcl::LrPolicy::Kind::milestones;
  throw std::invalid_argument("unknown schedule: " + s);
}

dcl::StreamKind parse_stream(const std::string& s) {
  if (s == "permute") return dcl::StreamKind::permute;
  if (s == "rotate") return dcl::StreamKind::rotate;
  throw std::invalid_argument("unknown stream: " + s);
}

// DCL_SEED wins over --seed when set.
std::uint64_t resolve_seed(std::uint64_t cli_seed) {
  const char* env = std::getenv("DCL_SEED");
  if (!env || !*env) return cli_seed;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (errno != 0 || end == env || *end != '\0') {
    throw std::invalid_argument(std::string("bad DCL_SEED: ") + env);
  }
  return static_cast<std::uint64_t>(v);
}

std::string opt_cell(const std::optional<double>& v) {
  return v ? dcl::fmt_g17(*v) : std::string();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  return out;
}

void finish_out(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path);
}

// Flags shared by every training-style subcommand.
struct OptimizerOpts {
  std::string optimizer = "sgd";
  double lr = 0.01;
  double momentum = 0.0;
  double weight_decay = 0.0;
  std::string schedule = "constant";
  std::vector<int> milestones;
  double gamma = 0.1;
};

void add_optimizer_opts(CLI::App* cmd, OptimizerOpts& o) {
  cmd->add_option("--optimizer", o.optimizer, "gd|sgd|rmsprop|adam")
      ->capture_default_str();
  cmd->add_option("--lr", o.lr, "base learning rate")->capture_default_str();
  cmd->add_option("--momentum", o.momentum, "momentum coefficient")->capture_default_str();
  cmd->add_option("--weight-decay", o.weight_decay, "L2 coefficient folded into the gradient")
      ->capture_default_str();
  cmd->add_option("--schedule", o.schedule, "constant|halving|milestones")
      ->capture_default_str();
  cmd->add_option("--milestones", o.milestones, "epochs at which lr drops")->delimiter(',');
  cmd->add_option("--gamma", o.gamma, "lr multiplier per milestone")->capture_default_str();
}

dcl::OptimizerConfig make_opt_config(const OptimizerOpts& o) {
  dcl::OptimizerConfig c;
  c.kind = dcl::parse_opt_kind(o.optimizer);
  c.lr = o.lr;
  c.momentum = o.momentum;
  c.weight_decay = o.weight_decay;
  return c;
}

dcl::LrPolicy make_lr_policy(const OptimizerOpts& o) {
  dcl::LrPolicy p;
  p.kind = parse_schedule(o.schedule);
  p.milestones = o.milestones;
  p.gamma = o.gamma;
  return p;
}

struct DclOpts {
  bool enabled = false;
  std::string beta_w = "inf";
  long beta_o = 0;
  int n_ref = 1;
};

void add_dcl_opts(CLI::App* cmd, DclOpts& o) {
  cmd->add_flag("--dcl", o.enabled, "constrain updates against reference points");
  cmd->add_option("--beta-w", o.beta_w, "reset window in steps, or 'inf'")
      ->capture_default_str();
  cmd->add_option("--beta-o", o.beta_o, "reset offset within the window")->capture_default_str();
  cmd->add_option("--n-ref", o.n_ref, "number of reference points")->capture_default_str();
}

dcl::DclConfig make_dcl_config(const DclOpts& o, bool use_memory) {
  dcl::DclConfig c;
  c.n_ref = o.n_ref;
  c.beta_w = parse_beta_w(o.beta_w);
  c.beta_o = o.beta_o;
  c.use_memory = use_memory;
  dcl::validate(c);
  return c;
}

nlohmann::json dcl_json(const DclOpts& o, const dcl::DclConfig& c) {
  nlohmann::json j;
  j["enabled"] = o.enabled;
  j["beta_w"] = beta_w_str(c.beta_w);
  j["beta_o"] = c.beta_o;
  j["n_ref"] = c.n_ref;
  j["use_memory"] = c.use_memory;
  return j;
}

nlohmann::json optimizer_json(const dcl::OptimizerConfig& c, const OptimizerOpts& o) {
  nlohmann::json j;
  j["kind"] = dcl::opt_kind_name(c.kind);
  j["lr"] = c.lr;
  j["momentum"] = c.momentum;
  j["weight_decay"] = c.weight_decay;
  j["schedule"] = o.schedule;
  j["milestones"] = o.milestones;
  j["gamma"] = o.gamma;
  return j;
}

// --- bench2d -------------------------------------------------------------------

struct Bench2dArgs {
  std::string function = "twomin";
  OptimizerOpts opt;
  DclOpts dcl;
  int iters = 200;
  int epoch_iters = 0;
  int record_every = 1;
  std::uint64_t seed = 1;
  std::string out = "bench2d";
  std::string run_id;
  std::optional<double> x0, y0;
};

int cmd_bench2d(const Bench2dArgs& a) {
  dcl::Bench2dProblem p =
      a.function == "quadratic" ? dcl::quadratic_bench2d() : dcl::default_bench2d();
  if (a.function != "quadratic" && a.function != "twomin") {
    throw std::invalid_argument("unknown function: " + a.function);
  }
  if (a.x0) p.start[0] = *a.x0;
  if (a.y0) p.start[1] = *a.y0;

  dcl::Bench2dRunConfig rc;
  rc.opt = make_opt_config(a.opt);
  rc.lr_policy = make_lr_policy(a.opt);
  rc.iters = a.iters;
  rc.iters_per_epoch = a.epoch_iters;
  rc.record_every = a.record_every;
  rc.use_dcl = a.dcl.enabled;
  rc.dcl = make_dcl_config(a.dcl, false);

  std::string run_id = a.run_id;
  if (run_id.empty()) {
    run_id = a.opt.optimizer;  // echo the spelling given on the command line
    if (a.dcl.enabled) {
      run_id += "-dcl-" + beta_w_str(rc.dcl.beta_w) + "-" + std::to_string(rc.dcl.n_ref);
    }
  }

  const dcl::Bench2dResult res = dcl::run_bench2d(p, rc);

  nlohmann::json config;
  config["command"] = "bench2d";
  config["function"] = p.name;
  config["start"] = {p.start[0], p.start[1]};
  config["optimizer"] = optimizer_json(rc.opt, a.opt);
  config["dcl"] = dcl_json(a.dcl, rc.dcl);
  config["iters"] = a.iters;
  config["epoch_iters"] = a.epoch_iters;
  config["record_every"] = a.record_every;
  config["seed"] = a.seed;
  config["run_id"] = run_id;
  dcl::write_trace(a.out + ".trace.jsonl", config, res.trace);

  const double fz = p.f(res.w_final[0], res.w_final[1]);
  const auto fg = p.grad(res.w_final[0], res.w_final[1]);
  const double gn = std::hypot(fg[0], fg[1]);

  const std::string csv_path = a.out + ".summary.csv";
  std::ofstream csv = open_out(csv_path);
  dcl::csv_row(csv, {"run_id", "optimizer", "dcl", "beta_w", "n_r", "lr", "final_z",
                     "final_grad_norm", "path_congruency", "iterations"});
  dcl::csv_row(csv, {run_id, a.opt.optimizer, a.dcl.enabled ? "1" : "0",
                     beta_w_str(rc.dcl.beta_w), std::to_string(rc.dcl.n_ref),
                     dcl::fmt_g17(rc.opt.lr), dcl::fmt_g17(fz), dcl::fmt_g17(gn),
                     opt_cell(dcl::path_congruency(res.trace)),
                     std::to_string(res.iters_run)});
  finish_out(csv, csv_path);

  if (res.trace.diverged) {
    std::cerr << "bench2d: diverged after " << res.iters_run << " iterations\n";
    return kDiverged;
  }
  return kOk;
}

// --- train -----------------------------------------------------------------------

struct TrainArgs {
  int classes = 3;
  int per_class = 100;
  int test_per_class = 100;
  int dim = 2;
  double separation = 4.0;
  int hidden = 32;
  std::string activation = "relu";
  std::string loss = "ce";
  OptimizerOpts opt;
  DclOpts dcl;
  bool gem = false;
  int epochs = 30;
  int batch = 16;
  int record_every = 1;
  std::uint64_t seed = 1;
  std::string out = "train";
  std::string save_model;
  std::string load_model;
};

int cmd_train(const TrainArgs& a) {
  dcl::ClassifyRunConfig rc;
  rc.model.d = a.dim;
  rc.model.h = a.hidden;
  rc.model.c = a.classes;
  rc.model.act = parse_activation(a.activation);
  rc.loss = dcl::parse_loss_kind(a.loss);
  rc.opt = make_opt_config(a.opt);
  rc.lr_policy = make_lr_policy(a.opt);
  rc.epochs = a.epochs;
  rc.batch = a.batch;
  rc.record_every = a.record_every;
  rc.use_dcl = a.dcl.enabled;
  rc.dcl = make_dcl_config(a.dcl, false);
  rc.gem = a.gem;

  dcl::Rng master(a.seed);
  const std::uint64_t data_seed = master.fork();
  rc.seed = master.fork();

  auto [train, test] = dcl::gen_blobs_split(a.classes, a.per_class, a.test_per_class, a.dim,
                                            a.separation, data_seed);

  std::optional<dcl::Mlp> loaded;
  if (!a.load_model.empty()) loaded = dcl::load_mlp(a.load_model);
  const dcl::ClassifyResult res =
      dcl::run_classification(train, test, rc, loaded ? &*loaded : nullptr);

  nlohmann::json config;
  config["command"] = "train";
  config["classes"] = a.classes;
  config["per_class"] = a.per_class;
  config["test_per_class"] = a.test_per_class;
  config["dim"] = a.dim;
  config["separation"] = a.separation;
  config["hidden"] = a.hidden;
  config["activation"] = a.activation;
  config["loss"] = a.loss;
  config["optimizer"] = optimizer_json(rc.opt, a.opt);
  config["dcl"] = dcl_json(a.dcl, rc.dcl);
  config["gem"] = a.gem;
  config["epochs"] = a.epochs;
  config["batch"] = a.batch;
  config["record_every"] = a.record_every;
  config["seed"] = a.seed;
  dcl::write_trace(a.out + ".trace.jsonl", config, res.trace);

  const std::string csv_path = a.out + ".epochs.csv";
  std::ofstream csv = open_out(csv_path);
  dcl::csv_row(csv, {"epoch", "train_loss", "test_error", "epoch_congruency", "magnitude_abs",
                     "magnitude_rel"});
  for (int e = 1; e <= a.epochs; ++e) {
    dcl::csv_row(csv, {std::to_string(e), dcl::fmt_g17(res.train_loss[e - 1]),
                       dcl::fmt_g17(res.test_error[e - 1]),
                       opt_cell(dcl::epoch_congruency(res.trace, e)),
                       opt_cell(dcl::magnitude(res.trace, e, dcl::MagnitudeMode::absolute)),
                       opt_cell(dcl::magnitude(res.trace, e, dcl::MagnitudeMode::relative))});
  }
  finish_out(csv, csv_path);

  if (!a.save_model.empty()) dcl::save_mlp(res.model, a.save_model);
  return kOk;
}

// --- continual ---------------------------------------------------------------------

struct ContinualArgs {
  std::string stream = "permute";
  int tasks = 5;
  int classes = 5;
  int per_class = 50;
  int dim = 16;
  double separation = 3.0;
  int hidden = 32;
  std::string activation = "relu";
  std::string loss = "ce";
  OptimizerOpts opt;
  DclOpts dcl;
  bool use_memory = false;
  int mem = 32;
  int epochs_per_task = 1;
  int batch = 10;
  int record_every = 1;
  int seeds = 1;
  std::uint64_t seed = 1;
  std::string out = "continual";
  bool trace = false;
};

int cmd_continual(const ContinualArgs& a) {
  if (a.seeds < 1) throw std::invalid_argument("--seeds must be >= 1");
  const dcl::StreamKind kind = parse_stream(a.stream);

  dcl::ContinualRunConfig rc;
  rc.model.d = a.dim;
  rc.model.h = a.hidden;
  rc.model.c = a.classes;
  rc.model.act = parse_activation(a.activation);
  rc.loss = dcl::parse_loss_kind(a.loss);
  rc.opt = make_opt_config(a.opt);
  rc.epochs_per_task = a.epochs_per_task;
  rc.batch = a.batch;
  rc.mem_per_task = a.mem;
  rc.record_every = a.record_every;
  rc.use_dcl = a.dcl.enabled;
  rc.dcl = make_dcl_config(a.dcl, a.use_memory);

  nlohmann::json config;
  config["command"] = "continual";
  config["stream"] = a.stream;
  config["tasks"] = a.tasks;
  config["classes"] = a.classes;
  config["per_class"] = a.per_class;
  config["dim"] = a.dim;
  config["separation"] = a.separation;
  config["hidden"] = a.hidden;
  config["activation"] = a.activation;
  config["loss"] = a.loss;
  config["optimizer"] = optimizer_json(rc.opt, a.opt);
  config["dcl"] = dcl_json(a.dcl, rc.dcl);
  config["mem"] = a.mem;
  config["epochs_per_task"] = a.epochs_per_task;
  config["batch"] = a.batch;
  config["record_every"] = a.record_every;
  config["seeds"] = a.seeds;
  config["seed"] = a.seed;

  std::vector<dcl::ContinualMetrics> metrics;
  std::vector<std::string> seed_labels;
  for (int k = 0; k < a.seeds; ++k) {
    const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(k);
    dcl::Rng master(seed);
    const std::uint64_t base_seed = master.fork();
    const std::uint64_t stream_seed = master.fork();
    rc.seed = master.fork();

    const dcl::BlobsDataset base =
        dcl::gen_blobs(a.classes, a.per_class, a.dim, a.separation, base_seed);
    const dcl::TaskStream stream = dcl::gen_stream(kind, a.tasks, base, stream_seed);
    const dcl::ContinualResult res = dcl::run_continual(stream, rc);

    const std::string label = std::to_string(seed);
    seed_labels.push_back(label);
    metrics.push_back(dcl::continual_metrics(res.r, res.baseline));

    const std::string r_path = a.out + ".r." + label + ".csv";
    std::ofstream rcsv = open_out(r_path);
    std::vector<std::string> header = {"trained"};
    for (int j = 1; j <= a.tasks; ++j) header.push_back("task" + std::to_string(j));
    dcl::csv_row(rcsv, header);
    std::vector<std::string> brow = {"baseline"};
    for (double b : res.baseline) brow.push_back(dcl::fmt_g17(b));
    dcl::csv_row(rcsv, brow);
    for (std::size_t i = 0; i < res.r.rows; ++i) {
      std::vector<std::string> row = {std::to_string(i + 1)};
      for (std::size_t j = 0; j < res.r.cols; ++j) row.push_back(dcl::fmt_g17(res.r(i, j)));
      dcl::csv_row(rcsv, row);
    }
    finish_out(rcsv, r_path);

    if (a.trace) {
      nlohmann::json cfg = config;
      cfg["seed"] = seed;
      dcl::write_trace(a.out + ".trace." + label + ".jsonl", cfg, res.trace);
    }
  }

  const std::string m_path = a.out + ".metrics.csv";
  std::ofstream mcsv = open_out(m_path);
  dcl::csv_row(mcsv, {"seed", "acc", "bwt", "fwt"});
  for (std::size_t k = 0; k < metrics.size(); ++k) {
    dcl::csv_row(mcsv, {seed_labels[k], dcl::fmt_g17(metrics[k].acc), opt_cell(metrics[k].bwt),
                        opt_cell(metrics[k].fwt)});
  }
  if (metrics.size() >= 2) {
    // Population mean/std over seeds; bwt/fwt stay empty for single-task streams.
    auto agg = [&](auto get) -> std::pair<std::string, std::string> {
      std::vector<double> xs;
      for (const auto& m : metrics) {
        if (auto v = get(m)) xs.push_back(*v);
      }
      if (xs.empty()) return {"", ""};
      double mean = 0.0;
      for (double x : xs) mean += x;
      mean /= static_cast<double>(xs.size());
      double var = 0.0;
      for (double x : xs) var += (x - mean) * (x - mean);
      var /= static_cast<double>(xs.size());
      return {dcl::fmt_g17(mean), dcl::fmt_g17(std::sqrt(var))};
    };
    const auto acc = agg([](const dcl::ContinualMetrics& m) { return std::optional<double>(m.acc); });
    const auto bwt = agg([](const dcl::ContinualMetrics& m) { return m.bwt; });
    const auto fwt = agg([](const dcl::ContinualMetrics& m) { return m.fwt; });
    dcl::csv_row(mcsv, {"mean", acc.first, bwt.first, fwt.first});
    dcl::csv_row(mcsv, {"std", acc.second, bwt.second, fwt.second});
  }
  finish_out(mcsv, m_path);
  return kOk;
}

// --- analyze ----------------------------------------------------------------------

struct AnalyzeArgs {
  std::string trace_path;
  std::size_t anchor = 0;
  std::string out;
  bool steps = false;
  bool bound = false;
  double lipschitz = 0.0;
};

std::string default_analyze_prefix(const std::string& path) {
  const std::string long_suffix = ".trace.jsonl";
  const std::string short_suffix = ".jsonl";
  if (path.size() > long_suffix.size() &&
      path.compare(path.size() - long_suffix.size(), long_suffix.size(), long_suffix) == 0) {
    return path.substr(0, path.size() - long_suffix.size());
  }
  if (path.size() > short_suffix.size() &&
      path.compare(path.size() - short_suffix.size(), short_suffix.size(), short_suffix) == 0) {
    return path.substr(0, path.size() - short_suffix.size());
  }
  return path;
}

int cmd_analyze(const AnalyzeArgs& a) {
  if (a.bound && a.lipschitz <= 0.0) {
    throw std::invalid_argument("--bound requires --lipschitz > 0");
  }
  const dcl::TraceFile tf = dcl::read_trace(a.trace_path);
  const dcl::TrainTrace& tr = tf.trace;
  const std::string prefix = a.out.empty() ? default_analyze_prefix(a.trace_path) : a.out;

  std::set<int> epochs;
  for (const auto& r : tr.records) epochs.insert(r.epoch);

  const std::string e_path = prefix + ".analysis.csv";
  std::ofstream ecsv = open_out(e_path);
  dcl::csv_row(ecsv, {"epoch", "congruency", "magnitude_abs", "magnitude_rel"});
  for (int e : epochs) {
    dcl::csv_row(ecsv, {std::to_string(e), opt_cell(dcl::epoch_congruency(tr, e, a.anchor)),
                        opt_cell(dcl::magnitude(tr, e, dcl::MagnitudeMode::absolute)),
                        opt_cell(dcl::magnitude(tr, e, dcl::MagnitudeMode::relative))});
  }
  finish_out(ecsv, e_path);

  if (a.steps) {
    if (a.anchor >= tr.records.size()) {
      throw std::invalid_argument("--anchor is past the end of the trace");
    }
    const std::string s_path = prefix + ".steps.csv";
    std::ofstream scsv = open_out(s_path);
    dcl::csv_row(scsv, {"t", "epoch", "congruency"});
    dcl::Vec acc(tr.records[a.anchor].g.size(), 0.0);
    for (std::size_t k = a.anchor; k < tr.records.size(); ++k) {
      const dcl::Vec& geff = dcl::effective_grad(tr.records[k]);
      if (k > a.anchor) {
        dcl::csv_row(scsv, {std::to_string(tr.records[k].t),
                            std::to_string(tr.records[k].epoch),
                            opt_cell(dcl::detail::cos_or_missing(geff, acc))});
      }
      dcl::axpy(1.0, geff, acc);
    }
    finish_out(scsv, s_path);
  }

  if (a.bound) {
    // The bound assumes plain fixed-step descent on the raw gradient, so the
    // lr must be constant across the recorded steps.
    dcl::BoundInput bi;
    bi.lipschitz = a.lipschitz;
    for (const auto& r : tr.records) bi.grads.push_back(r.g);
    if (tr.records.empty()) throw std::invalid_argument("--bound needs a non-empty trace");
    bi.eta = tr.records.front().lr;
    for (const auto& r : tr.records) {
      if (r.lr != bi.eta) throw std::invalid_argument("--bound requires a constant lr trace");
    }
    if (bi.eta <= 0.0) throw std::invalid_argument("--bound requires lr > 0");
    const std::string b_path = prefix + ".bound.csv";
    std::ofstream bcsv = open_out(b_path);
    dcl::csv_row(bcsv, {"t", "measured", "bound"});
    for (std::size_t k = 1; k < bi.grads.size(); ++k) {
      dcl::csv_row(bcsv, {std::to_string(tr.records[k].t),
                          opt_cell(dcl::measured_congruency(bi, k)),
                          opt_cell(dcl::congruency_lower_bound(bi, k))});
    }
    finish_out(bcsv, b_path);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"direction-concentrating gradient correction experiments"};
  app.require_subcommand(1);

  Bench2dArgs ba;
  ba.opt.optimizer = "gd";
  ba.opt.lr = 0.05;
  CLI::App* bench = app.add_subcommand("bench2d", "fixed-step descent on a 2-D objective");
  bench->add_option("--function", ba.function, "twomin|quadratic")->capture_default_str();
  add_optimizer_opts(bench, ba.opt);
  add_dcl_opts(bench, ba.dcl);
  bench->add_option("--iters", ba.iters, "update steps")->capture_default_str();
  bench->add_option("--epoch-iters", ba.epoch_iters,
                    "steps per schedule epoch (0: single epoch)")
      ->capture_default_str();
  bench->add_option("--record-every", ba.record_every, "trace every k-th step")
      ->capture_default_str();
  bench->add_option("--seed", ba.seed, "run seed (DCL_SEED overrides)")->capture_default_str();
  bench->add_option("--out", ba.out, "output path prefix")->capture_default_str();
  bench->add_option("--run-id", ba.run_id, "summary row label");
  bench->add_option("--x0", ba.x0, "start x override");
  bench->add_option("--y0", ba.y0, "start y override");

  TrainArgs ta;
  CLI::App* train = app.add_subcommand("train", "mini-batch MLP training on Gaussian blobs");
  train->add_option("--classes", ta.classes, "number of classes")->capture_default_str();
  train->add_option("--per-class", ta.per_class, "training samples per class")
      ->capture_default_str();
  train->add_option("--test-per-class", ta.test_per_class, "test samples per class")
      ->capture_default_str();
  train->add_option("--dim", ta.dim, "input dimension")->capture_default_str();
  train->add_option("--separation", ta.separation, "class mean scale")->capture_default_str();
  train->add_option("--hidden", ta.hidden, "hidden width")->capture_default_str();
  train->add_option("--activation", ta.activation, "relu|tanh")->capture_default_str();
  train->add_option("--loss", ta.loss, "ce|mse")->capture_default_str();
  add_optimizer_opts(train, ta.opt);
  add_dcl_opts(train, ta.dcl);
  train->add_flag("--gem", ta.gem, "size-1 sample memory, reset each epoch");
  train->add_option("--epochs", ta.epochs, "training epochs")->capture_default_str();
  train->add_option("--batch", ta.batch, "mini-batch size")->capture_default_str();
  train->add_option("--record-every", ta.record_every, "trace every k-th step")
      ->capture_default_str();
  train->add_option("--seed", ta.seed, "run seed (DCL_SEED overrides)")->capture_default_str();
  train->add_option("--out", ta.out, "output path prefix")->capture_default_str();
  train->add_option("--save-model", ta.save_model, "checkpoint path to write");
  train->add_option("--load-model", ta.load_model, "checkpoint path to start from");

  ContinualArgs ca;
  CLI::App* cont = app.add_subcommand("continual", "sequential tasks with transfer metrics");
  cont->add_option("--stream", ca.stream, "permute|rotate")->capture_default_str();
  cont->add_option("--tasks", ca.tasks, "number of tasks")->capture_default_str();
  cont->add_option("--classes", ca.classes, "number of classes")->capture_default_str();
  cont->add_option("--per-class", ca.per_class, "samples per class per task")
      ->capture_default_str();
  cont->add_option("--dim", ca.dim, "input dimension")->capture_default_str();
  cont->add_option("--separation", ca.separation, "class mean scale")->capture_default_str();
  cont->add_option("--hidden", ca.hidden, "hidden width")->capture_default_str();
  cont->add_option("--activation", ca.activation, "relu|tanh")->capture_default_str();
  cont->add_option("--loss", ca.loss, "ce|mse")->capture_default_str();
  add_optimizer_opts(cont, ca.opt);
  add_dcl_opts(cont, ca.dcl);
  cont->add_flag("--use-memory", ca.use_memory, "mean-gradient constraint per past task");
  cont->add_option("--mem", ca.mem, "stored samples per finished task")->capture_default_str();
  cont->add_option("--epochs-per-task", ca.epochs_per_task, "epochs per task")
      ->capture_default_str();
  cont->add_option("--batch", ca.batch, "mini-batch size")->capture_default_str();
  cont->add_option("--record-every", ca.record_every, "trace every k-th step")
      ->capture_default_str();
  cont->add_option("--seeds", ca.seeds, "number of consecutive seeds")->capture_default_str();
  cont->add_option("--seed", ca.seed, "first seed (DCL_SEED overrides)")->capture_default_str();
  cont->add_option("--out", ca.out, "output path prefix")->capture_default_str();
  cont->add_flag("--trace", ca.trace, "also write per-seed traces");

  AnalyzeArgs aa;
  CLI::App* analyze = app.add_subcommand("analyze", "recompute metrics from a trace file");
  analyze->add_option("trace", aa.trace_path, "trace file to read")->required();
  analyze->add_option("--anchor", aa.anchor, "record index the sums start from")
      ->capture_default_str();
  analyze->add_option("--out", aa.out, "output path prefix (default: trace path stem)");
  analyze->add_flag("--steps", aa.steps, "also write per-step congruency");
  analyze->add_flag("--bound", aa.bound, "also write the descent-lemma lower bound");
  analyze->add_option("--lipschitz", aa.lipschitz, "smoothness constant for --bound");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*bench) {
      ba.seed = resolve_seed(ba.seed);
      return cmd_bench2d(ba);
    }
    if (*train) {
      ta.seed = resolve_seed(ta.seed);
      return cmd_train(ta);
    }
    if (*cont) {
      ca.seed = resolve_seed(ca.seed);
      return cmd_continual(ca);
    }
    return cmd_analyze(aa);
  } catch (const dcl::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const dcl::NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
}
