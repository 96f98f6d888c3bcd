#include "frugal/alloop.hpp"
#include "frugal/dataio.hpp"
#include "frugal/service.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

using namespace frugal;

namespace {

struct RunOptions {
  std::string data;
  std::string out;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string strategy = "optimized";
  std::string space = "latent";
  std::string aug = "unary";
  double delta = 1.0;
  std::size_t per_sample = 4;
  std::size_t iterations = 10;
  std::size_t display_size = 16;
  std::size_t depth = 4;
  std::size_t epochs = 300;
};

struct Arm {
  StrategyKind strategy;
  AugmentSpace space;
  AugmentKind aug;
  double delta;
};

std::optional<PatchGeometry> parse_geometry(const std::string& text) {
  if (text.empty()) return std::nullopt;
  unsigned w = 0, h = 0, c = 0;
  char x1 = 0, x2 = 0;
  std::istringstream in(text);
  if (!(in >> w >> x1 >> h >> x2 >> c) || x1 != 'x' || x2 != 'x' || w == 0 || h == 0 || c == 0 ||
      c > 4 || w > 0xFFFF || h > 0xFFFF) {
    throw CLI::ValidationError("--patches", "expected WxHxC with 1 <= C <= 4");
  }
  return PatchGeometry{static_cast<std::uint16_t>(w), static_cast<std::uint16_t>(h),
                       static_cast<std::uint16_t>(c)};
}

Dataset load_or_synth(const std::string& path, std::uint64_t seed) {
  if (!path.empty()) {
    Dataset ds = load_dataset(path);
    const std::string sidecar = path + ".split";
    if (std::filesystem::exists(sidecar)) ds = load_split(sidecar, ds);
    return ds;
  }
  SynthConfig sc;
  sc.seed = seed;
  return synth_generate(sc);
}

void write_header(std::ostream& out) { out << "seed,strategy,space,aug,delta,iter,samp_pct,eer_pct\n"; }

double run_arm(std::ostream& out, const Dataset& ds, std::uint64_t seed, const Arm& arm,
               const RunOptions& o) {
  SessionConfig cfg;
  cfg.seed = seed;
  cfg.display_size = o.display_size;
  cfg.iterations = o.iterations;
  cfg.strategy.kind = arm.strategy;
  cfg.policy.kind = arm.aug;
  cfg.policy.space = arm.space;
  cfg.policy.delta = arm.delta;
  cfg.policy.per_sample = o.per_sample;
  cfg.shape = {ds.dim(), o.depth};
  cfg.train.epochs = o.epochs;
  GroundTruthOracle oracle(ds);
  const MetricsHistory h = run_simulated(ds, cfg, oracle);
  for (const auto& r : h.records) {
    out << seed << ',' << to_string(arm.strategy) << ',' << to_string(arm.space) << ','
        << to_string(arm.aug) << ',' << arm.delta << ',' << r.iteration << ',' << std::fixed
        << std::setprecision(4) << r.sampling_rate << ',';
    if (r.eer) out << std::setprecision(4) << *r.eer;
    out << std::defaultfloat << '\n';
  }
  out.flush();
  return h.auc();
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw Error(ErrorKind::Io, "cannot write " + path);
  return file;
}

void run_arms(const RunOptions& o, const std::vector<Arm>& arms) {
  std::ofstream file;
  std::ostream& out = open_out(o.out, file);
  write_header(out);
  std::map<std::string, std::vector<double>> aucs;
  for (std::uint64_t seed : o.seeds) {
    const Dataset ds = load_or_synth(o.data, seed);
    for (const auto& arm : arms) {
      std::ostringstream name;
      name << to_string(arm.strategy) << '/' << to_string(arm.space) << '/' << to_string(arm.aug)
           << "/delta=" << arm.delta;
      aucs[name.str()].push_back(run_arm(out, ds, seed, arm, o));
    }
  }
  std::clog << "mean AUC of EERs over " << o.seeds.size() << " seed(s):\n";
  for (const auto& [name, v] : aucs) {
    double sum = 0.0;
    for (double a : v) sum += a;
    std::clog << "  " << std::left << std::setw(44) << name << std::fixed << std::setprecision(2)
              << sum / static_cast<double>(v.size()) << std::defaultfloat << '\n';
  }
}

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--data", o.data, "dataset file (FCD1 or CSV); synthetic defaults per seed when omitted");
  cmd->add_option("--out", o.out, "CSV output path ('-' for stdout)");
  cmd->add_option("--seeds", o.seeds, "session seeds")->expected(1, -1);
  cmd->add_option("--iterations", o.iterations, "active-learning iterations")->check(CLI::PositiveNumber);
  cmd->add_option("--display-size", o.display_size, "samples per display")->check(CLI::PositiveNumber);
  cmd->add_option("--per-sample", o.per_sample, "augmented copies per labeled sample");
  cmd->add_option("--depth", o.depth, "invertible layers");
  cmd->add_option("--epochs", o.epochs, "gradient steps per training")->check(CLI::PositiveNumber);
}

volatile std::sig_atomic_t g_stop = 0;
HttpServer* g_server = nullptr;

void on_signal(int) {
  g_stop = 1;
  if (g_server != nullptr) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frugal active-learning change detection with invertible-network augmentation"};
  app.require_subcommand(1);

  // synth
  SynthConfig sc;
  std::string synth_out, patches_text;
  std::optional<std::uint64_t> split_seed;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--out", synth_out, "output path (.csv for CSV, FCD1 otherwise)")->required();
  synth->add_option("--n", sc.n, "number of samples");
  synth->add_option("--n-pos", sc.n_pos, "number of change samples");
  synth->add_option("--dim", sc.dim, "feature dimension");
  synth->add_option("--noise", sc.noise, "ambient noise scale");
  synth->add_option("--seed", sc.seed, "generator seed");
  synth->add_option("--patches", patches_text, "attach WxHxC patch pairs");
  synth->add_option("--split-seed", split_seed, "also write a <out>.split sidecar from this seed");

  // run
  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "simulated sessions against ground truth, CSV out");
  add_run_options(run, run_opts);
  run->add_option("--strategy", run_opts.strategy, "random|maxmin|uncertainty|optimized");
  run->add_option("--space", run_opts.space, "latent|ambient");
  run->add_option("--aug", run_opts.aug, "none|unary|binary-soft|binary-crisp");
  run->add_option("--delta", run_opts.delta, "unary noise amplitude");

  // ablate
  RunOptions ablate_opts;
  std::string grid = "table2";
  auto* ablate = app.add_subcommand("ablate", "run an ablation grid, CSV out");
  add_run_options(ablate, ablate_opts);
  ablate->add_option("--grid", grid, "table1 (augmentation settings), table2 (display x space), strategies")
      ->check(CLI::IsMember({"table1", "table2", "strategies"}));

  // serve
  std::vector<std::string> data_paths;
  std::string state_dir = "frugalcd-state", host = "127.0.0.1", static_dir;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "HTTP API for human-in-the-loop sessions");
  serve->add_option("--data", data_paths, "dataset files, addressed by file stem")->expected(0, -1);
  serve->add_option("--port", port, "TCP port (0 picks a free one)");
  serve->add_option("--host", host, "bind address");
  serve->add_option("--state-dir", state_dir,
                    std::string("session directory (overridden by $") + kStateDirEnv + ")");
  serve->add_option("--static", static_dir, "serve files from this directory at /");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      sc.patches = parse_geometry(patches_text);
      Dataset ds = synth_generate(sc);
      save_dataset(synth_out, ds);
      if (split_seed) {
        RngStream rng(*split_seed);
        save_split(synth_out + ".split", split_half(ds, rng));
      }
      std::clog << "wrote " << ds.size() << " samples (" << ds.count(Label::Change) << " change) to "
                << synth_out << '\n';
    } else if (*run) {
      const Arm arm{parse_strategy_kind(run_opts.strategy), parse_augment_space(run_opts.space),
                    parse_augment_kind(run_opts.aug), run_opts.delta};
      run_arms(run_opts, {arm});
    } else if (*ablate) {
      std::vector<Arm> arms;
      const auto opt = StrategyKind::Optimized;
      const auto lat = AugmentSpace::Latent;
      if (grid == "table1") {
        for (double d : {0.01, 0.1, 1.0}) arms.push_back({opt, lat, AugmentKind::Unary, d});
        arms.push_back({opt, lat, AugmentKind::BinarySoft, 1.0});
        arms.push_back({opt, lat, AugmentKind::BinaryCrisp, 1.0});
      } else if (grid == "table2") {
        for (auto s : {StrategyKind::Random, opt})
          for (auto sp : {AugmentSpace::Ambient, lat}) arms.push_back({s, sp, AugmentKind::Unary, 1.0});
      } else {
        for (auto s : {StrategyKind::Random, StrategyKind::Maxmin, StrategyKind::Uncertainty, opt})
          arms.push_back({s, lat, AugmentKind::Unary, 1.0});
        arms.push_back({opt, lat, AugmentKind::None, 1.0});
      }
      run_arms(ablate_opts, arms);
    } else if (*serve) {
      DatasetRegistry datasets;
      for (const auto& p : data_paths) {
        const auto ds = datasets.load_file(p);
        std::clog << "loaded " << p << " (" << ds->size() << " samples, d=" << ds->dim() << ")\n";
      }
      SessionService service(datasets, resolve_state_dir(state_dir));
      HttpServer server(service, static_dir.empty() ? std::nullopt
                                                    : std::optional<std::filesystem::path>(static_dir));
      const int bound = server.bind(host, port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on http://" << host << ':' << bound << " (state in "
                << service.state_dir().string() << ")" << std::endl;
      server.listen();
      g_server = nullptr;
    }
  } catch (const Error& e) {
    std::cerr << "frugalcd: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "frugalcd: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
