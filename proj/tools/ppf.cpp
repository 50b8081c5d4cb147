// ppf: command-line front end for the MLC-PPF library.
//
// Exit codes: 0 ok, 1 internal error, 2 usage, 3 I/O, 4 invalid input,
// 5 solver divergence, 6 gradient check above tolerance.

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ppf/baselines.hpp"
#include "ppf/checkpoint.hpp"
#include "ppf/core.hpp"
#include "ppf/datagen.hpp"
#include "ppf/error.hpp"
#include "ppf/eval.hpp"
#include "ppf/gradcheck.hpp"
#include "ppf/io.hpp"
#include "ppf/neighborhood.hpp"
#include "ppf/solver.hpp"
#include "ppf/targetsim.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kIo = 3,
  kInvalid = 4,
  kDiverged = 5,
  kGradCheck = 6,
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ppf::IoError("cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw ppf::Error("sha256 unavailable");
  }
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  if (in.bad()) throw ppf::IoError("read error on " + path.string());
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

// Shared state for one invocation.
struct Run {
  std::uint64_t seed = 0;
  std::string config_file;
  std::string out;
  std::string subcommand;
  Json config = Json::object();
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;

  fs::path out_dir() const { return fs::path(out); }

  // The output directory must be new or empty.
  void open_out() {
    if (out.empty()) throw UsageError(subcommand + ": --out is required");
    const fs::path dir(out);
    if (fs::exists(dir)) {
      if (!fs::is_directory(dir)) throw UsageError("--out " + out + " exists and is not a directory");
      if (!fs::is_empty(dir)) throw UsageError("--out " + out + " is not empty");
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ppf::IoError("cannot create " + out + ": " + ec.message());
  }

  fs::path output(const std::string& name) {
    outputs.push_back(out_dir() / name);
    return outputs.back();
  }

  void add_dataset_inputs(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    inputs.insert(inputs.end(), files.begin(), files.end());
  }

  void write_manifest() {
    Json m;
    m["tool"] = "ppf";
    m["version"] = kVersion;
    m["subcommand"] = subcommand;
    m["seed"] = seed;
    m["config"] = config;
    Json in = Json::array();
    std::vector<fs::path> all = inputs;
    if (!config_file.empty()) all.insert(all.begin(), fs::path(config_file));
    for (const auto& p : all) in.push_back({{"path", p.generic_string()}, {"sha256", sha256_file(p)}});
    m["inputs"] = std::move(in);
    Json outs = Json::array();
    std::vector<std::string> rel;
    for (const auto& p : outputs) rel.push_back(p.lexically_relative(out_dir()).generic_string());
    std::sort(rel.begin(), rel.end());
    for (const auto& r : rel) outs.push_back(r);
    m["outputs"] = std::move(outs);
    write_text(out_dir() / "manifest.json", m.dump(2) + "\n");
  }

  static void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ppf::IoError("cannot write " + path.string());
    f << text;
    f.close();
    if (!f) throw ppf::IoError("write failed for " + path.string());
  }
};

void progress(const std::string& msg) { std::cerr << "ppf: " << msg << '\n'; }

template <class T>
std::vector<T> parse_list(const std::string& flag, const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw UsageError(flag + ": empty list item in '" + text + "'");
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !is.eof()) throw UsageError(flag + ": cannot parse '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(flag + ": empty list");
  return out;
}

std::vector<std::string> split_ids(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

ppf::Period period_arg(const std::string& name) {
  const auto p = ppf::parse_period(name);
  if (!p) throw UsageError("unknown period '" + name + "' (morning, afternoon, nonrush)");
  return *p;
}

Json solver_json(const ppf::SolverConfig& c) {
  return {{"k", c.k},           {"lambda", c.lambda},   {"alpha", c.alpha},
          {"max_iter", c.max_iter}, {"epsilon", c.epsilon}, {"rcond", c.rcond}};
}

void add_solver_flags(CLI::App* sub, ppf::SolverConfig& c) {
  sub->add_option("--k", c.k, "Neighbors per area")->capture_default_str();
  sub->add_option("--lambda", c.lambda, "Multi-view guidance weight")->capture_default_str();
  sub->add_option("--alpha", c.alpha, "Step length")->capture_default_str();
  sub->add_option("--max-iter", c.max_iter, "Iteration limit")->capture_default_str();
  sub->add_option("--epsilon", c.epsilon, "Relative loss change to stop at")->capture_default_str();
  sub->add_option("--rcond", c.rcond, "Pseudo-inverse cutoff for the initial C")
      ->capture_default_str();
}

// Evaluation and target simulation start from ground truth.
void require_all_known(const ppf::Dataset& data, const std::string& what) {
  if (data.catalog.known_count() != data.catalog.size())
    throw ppf::InvalidInput(what + " needs ground-truth data: every area must have known = 1");
}

void check(const ppf::Dataset& data, const ppf::SolverConfig* cfg) {
  for (const auto& ft : data.flows) {
    const auto report = cfg ? ppf::validate(data.catalog, ft, data.views, *cfg)
                            : ppf::validate(data.catalog, ft, data.views);
    if (report.ok()) continue;
    std::string text = report.summary();
    while (!text.empty() && text.back() == '\n') text.pop_back();
    throw ppf::InvalidInput(std::string(ppf::to_string(ft.period)) + ": " + text);
  }
}

// ---- gen --------------------------------------------------------------------

struct GenArgs {
  ppf::SyntheticSpec spec;
  std::string view_dims = "43,44,50,97";
};

void run_gen(Run& run, GenArgs& a) {
  a.spec.seed = run.seed;
  a.spec.view_dims = parse_list<int>("--view-dims", a.view_dims);
  run.config = {{"n", a.spec.n},
                {"days", a.spec.days},
                {"regions", a.spec.regions},
                {"noise", a.spec.noise},
                {"gamma", a.spec.gamma},
                {"view_noise", a.spec.view_noise},
                {"trips", a.spec.trips_per_day},
                {"view_dims", a.spec.view_dims}};
  progress("generating a city with " + std::to_string(a.spec.n) + " areas");
  const ppf::SyntheticCity city = ppf::generate(a.spec);
  run.open_out();
  const ppf::Dataset data{city.catalog, city.flows, city.views};
  for (const auto& p : ppf::io::write_dataset(run.out_dir(), data)) run.outputs.push_back(p);

  std::ostringstream regions;
  regions << "id,region,activity\n";
  for (std::size_t i = 0; i < city.catalog.size(); ++i)
    regions << city.catalog.ids[i] << ',' << city.region[i] << ','
            << ppf::io::format_number(city.activity[i]) << '\n';
  Run::write_text(run.output("regions.csv"), regions.str());
}

// ---- simulate-targets -------------------------------------------------------

struct SimArgs {
  std::string data;
  std::string targets;
  double ratio = 0.0;
};

void run_simulate(Run& run, SimArgs& a) {
  run.config = {{"targets", a.targets}, {"ratio", a.ratio}};
  if (a.targets.empty() == (a.ratio == 0.0))
    throw UsageError("simulate-targets: give exactly one of --targets and --ratio");
  const ppf::Dataset data = ppf::io::read_dataset(a.data);
  run.add_dataset_inputs(a.data);
  require_all_known(data, "simulate-targets");
  check(data, nullptr);

  std::vector<int> targets;
  if (!a.targets.empty()) {
    for (const auto& id : split_ids(a.targets)) {
      const auto it = std::find(data.catalog.ids.begin(), data.catalog.ids.end(), id);
      if (it == data.catalog.ids.end()) throw ppf::InvalidInput("unknown target id '" + id + "'");
      const int idx = static_cast<int>(it - data.catalog.ids.begin());
      if (std::find(targets.begin(), targets.end(), idx) != targets.end())
        throw ppf::InvalidInput("target id '" + id + "' listed twice");
      targets.push_back(idx);
    }
  } else {
    if (!(a.ratio > 0.0 && a.ratio < 1.0)) throw UsageError("--ratio must lie in (0, 1)");
    targets = ppf::sample_targets(data.catalog.size(), a.ratio, run.seed);
  }
  std::sort(targets.begin(), targets.end());

  ppf::Dataset out;
  out.catalog = ppf::with_targets(data.catalog, targets);
  out.views = data.views;
  if (out.catalog.known_count() == 0) throw ppf::InvalidInput("every area would be a target");
  const ppf::Matrix geo = ppf::geo_distances(out.catalog);
  const ppf::ReassignmentPlan plan = ppf::plan_reassignment(out.catalog, geo);
  for (const auto& ft : data.flows) out.flows.push_back(ppf::apply_reassignment(ft, plan));

  run.open_out();
  progress("hiding " + std::to_string(targets.size()) + " of " +
           std::to_string(data.catalog.size()) + " areas");
  for (const auto& p : ppf::io::write_dataset(run.out_dir(), out)) run.outputs.push_back(p);

  const auto& ids = data.catalog.ids;
  Json j;
  j["targets"] = Json::array();
  for (std::size_t i = 0; i < plan.targets.size(); ++i)
    j["targets"].push_back({{"id", ids[static_cast<std::size_t>(plan.targets[i])]},
                            {"receiver", ids[static_cast<std::size_t>(plan.receivers[i])]}});
  j["merged_into"] = Json::object();
  for (const auto& [recv, ts] : plan.merged_into) {
    Json list = Json::array();
    for (int t : ts) list.push_back(ids[static_cast<std::size_t>(t)]);
    j["merged_into"][ids[static_cast<std::size_t>(recv)]] = std::move(list);
  }
  Run::write_text(run.output("plan.json"), j.dump(2) + "\n");
}

// ---- fit ---------------------------------------------------------------------

struct FitArgs {
  std::string data;
  std::string period = "morning";
  ppf::SolverConfig solver;
};

Json report_json(const ppf::FitReport& r) {
  return {{"iterations", r.iterations},   {"final_loss", r.final_loss},
          {"stop", ppf::to_string(r.stop)}, {"zero_grad_c", r.zero_grad_c},
          {"zero_grad_w", r.zero_grad_w}, {"losses", r.losses}};
}

void run_fit(Run& run, FitArgs& a) {
  a.solver.seed = run.seed;
  const ppf::Period period = period_arg(a.period);
  run.config = {{"period", a.period}, {"solver", solver_json(a.solver)}};
  const ppf::Dataset data = ppf::io::read_dataset(a.data);
  run.add_dataset_inputs(a.data);
  check(data, &a.solver);
  const ppf::FlowTensor& flows = data.period(period);
  if (data.catalog.known_count() == data.catalog.size())
    progress("warning: no target areas (every area has known = 1)");

  const auto sim = ppf::build_similarity(data.catalog, data.views);
  const auto nbr = ppf::build_indicator(sim, data.catalog, a.solver.k);
  const auto mask = ppf::build_mask(data.catalog);
  run.open_out();
  progress("fitting " + a.period + " flows, " + std::to_string(flows.days.size()) + " days, " +
           std::to_string(data.catalog.size()) + " areas");
  const auto fit = ppf::fit_bidirectional(flows, sim, nbr, data.views, mask, a.solver);
  for (const auto* side : {&fit.departures, &fit.arrivals})
    progress(std::string(side == &fit.departures ? "departures" : "arrivals") + ": " +
             std::to_string(side->report.iterations) + " iterations, loss " +
             ppf::io::format_number(side->report.final_loss) + ", " +
             std::string(ppf::to_string(side->report.stop)));

  ppf::write_checkpoint(run.output("model.ckpt"),
                        ppf::make_checkpoint(data.catalog, period, a.solver, nbr, fit));
  Json rep;
  rep["period"] = a.period;
  rep["departures"] = report_json(fit.departures.report);
  rep["arrivals"] = report_json(fit.arrivals.report);
  Run::write_text(run.output("fit_report.json"), rep.dump(2) + "\n");
}

// ---- predict -----------------------------------------------------------------

struct PredictArgs {
  std::string data;
  std::string model;
  std::string baseline;
  std::string period = "morning";
  int lsknn_k = 4;
  ppf::NmfOptions nmf;
};

void write_completed(Run& run, const ppf::Dataset& data, ppf::Period period, const ppf::Matrix& m) {
  run.open_out();
  ppf::io::write_flow_matrix(run.output("completed_" + std::string(ppf::to_string(period)) + ".csv"),
                             data.catalog, m);
}

void run_predict(Run& run, PredictArgs& a) {
  if (a.model.empty() == a.baseline.empty())
    throw UsageError("predict: give exactly one of --model and --baseline");
  const ppf::Dataset data = ppf::io::read_dataset(a.data);
  run.add_dataset_inputs(a.data);
  check(data, nullptr);

  if (!a.model.empty()) {
    const ppf::Checkpoint ck = ppf::read_checkpoint(a.model);
    run.config = {{"period", ppf::to_string(ck.period)}};
    run.inputs.push_back(a.model);
    const ppf::Matrix completed =
        ppf::complete_from_checkpoint(ck, data.catalog, data.period(ck.period).last());
    write_completed(run, data, ck.period, completed);
    return;
  }

  const ppf::Period period = period_arg(a.period);
  const ppf::Matrix& last = data.period(period).last();
  const ppf::ObservationMask mask = ppf::build_mask(data.catalog);
  ppf::BaselinePrediction p;
  if (a.baseline == "lsknn") {
    run.config = {{"period", a.period}, {"baseline", a.baseline}, {"k", a.lsknn_k}};
    const auto sim = ppf::build_similarity(data.catalog, data.views);
    p = ppf::ls_knn_predict(last, sim, data.catalog, a.lsknn_k);
  } else if (a.baseline == "nmf") {
    a.nmf.seed = run.seed;
    run.config = {{"period", a.period},
                  {"baseline", a.baseline},
                  {"rank", a.nmf.rank},
                  {"iterations", a.nmf.iterations}};
    p = ppf::nmf_predict(last, data.views, mask, a.nmf);
  } else {
    throw UsageError("unknown baseline '" + a.baseline + "' (lsknn, nmf)");
  }
  write_completed(run, data, period, ppf::Matrix(mask.y.cwiseProduct(last) + p.predicted));
}

// ---- eval / sweep -----------------------------------------------------------

struct EvalArgs {
  std::string data;
  std::string methods = "mlc,lsknn,nmf";
  std::string periods = "morning";
  std::string ratios = "0.2";
  std::string k_grid = "1,2,3,4,5";
  std::string lambda_grid = "1e-5,1e-4,1e-3,1e-2,1e-1,1";
  ppf::ExperimentConfig exp;
  bool exclude_target_block = false;
};

void resolve_experiment(Run& run, EvalArgs& a, bool sweep) {
  a.exp.seed = run.seed;
  a.exp.solver.seed = run.seed;
  a.exp.include_target_block = !a.exclude_target_block;
  a.exp.methods.clear();
  for (const auto& m : split_ids(a.methods)) {
    const auto parsed = ppf::parse_method(m);
    if (!parsed) throw UsageError("unknown method '" + m + "' (mlc, lsknn, nmf)");
    a.exp.methods.push_back(*parsed);
  }
  a.exp.periods.clear();
  for (const auto& p : split_ids(a.periods)) a.exp.periods.push_back(period_arg(p));
  a.exp.ratios = parse_list<double>("--ratio", a.ratios);
  if (a.exp.periods.empty()) throw UsageError("--periods: empty list");
  if (a.exp.jobs < 1) throw UsageError("--jobs must be >= 1");

  Json c;
  if (!sweep) c["methods"] = split_ids(a.methods);
  c["periods"] = split_ids(a.periods);
  c["ratios"] = a.exp.ratios;
  c["reps"] = a.exp.repetitions;
  c["solver"] = solver_json(a.exp.solver);
  if (!sweep) {
    c["lsknn_k"] = a.exp.lsknn_k;
    c["nmf_rank"] = a.exp.nmf.rank;
    c["nmf_iter"] = a.exp.nmf.iterations;
  } else {
    c["k_grid"] = parse_list<int>("--k-grid", a.k_grid);
    c["lambda_grid"] = parse_list<double>("--lambda-grid", a.lambda_grid);
  }
  c["exclude_target_block"] = a.exclude_target_block;
  run.config = std::move(c);
}

ppf::Dataset read_truth(Run& run, const EvalArgs& a, const std::string& what) {
  ppf::Dataset data = ppf::io::read_dataset(a.data);
  run.add_dataset_inputs(a.data);
  require_all_known(data, what);
  check(data, nullptr);
  return data;
}

void run_eval(Run& run, EvalArgs& a) {
  resolve_experiment(run, a, false);
  const ppf::Dataset data = read_truth(run, a, "eval");
  run.open_out();
  progress("evaluating " + a.methods + " on " + std::to_string(data.catalog.size()) + " areas, " +
           std::to_string(a.exp.repetitions) + " repetitions");
  const auto results = ppf::run_experiment(data, a.exp);
  for (const auto& e : results)
    progress(std::string(ppf::to_string(e.method)) + " " + std::string(ppf::to_string(e.period)) +
             " ratio " + ppf::io::format_number(e.ratio) + ": MAE " +
             ppf::io::format_number(e.mae) + ", NRMSE " + ppf::io::format_number(e.nrmse) + "%");
  std::ostringstream csv;
  ppf::write_results_csv(csv, results);
  Run::write_text(run.output("results.csv"), csv.str());
  Run::write_text(run.output("summary.json"), ppf::results_summary_json(results));
}

void run_sweep(Run& run, EvalArgs& a) {
  resolve_experiment(run, a, true);
  const auto ks = parse_list<int>("--k-grid", a.k_grid);
  const auto lambdas = parse_list<double>("--lambda-grid", a.lambda_grid);
  const ppf::Dataset data = read_truth(run, a, "sweep");
  run.open_out();
  progress("sweeping " + std::to_string(ks.size()) + " x " + std::to_string(lambdas.size()) +
           " settings of k and lambda");
  const auto sweep = ppf::sweep_parameters(data, ks, lambdas, a.exp);
  std::ostringstream csv;
  ppf::write_sweep_csv(csv, sweep);
  Run::write_text(run.output("sweep.csv"), csv.str());
}

// ---- gradcheck ---------------------------------------------------------------

constexpr double kGradTolerance = 1e-6;

int run_gradcheck(Run& run, ppf::GradCheckInstance& inst) {
  run.config = {{"n", inst.n}, {"days", inst.days}, {"views", inst.views},
                {"lambda", inst.lambda}, {"k", inst.k}};
  const auto r = ppf::gradient_check(inst, run.seed);
  std::cout << "max relative gradient error: " << ppf::io::format_number(r.max_rel_error())
            << " (C " << ppf::io::format_number(r.max_rel_error_c) << ", W "
            << ppf::io::format_number(r.max_rel_error_w) << ")\n";
  const bool ok = r.max_rel_error() < kGradTolerance && r.max_abs_off_support_w == 0.0;
  if (!run.out.empty()) {
    run.open_out();
    Json j{{"max_rel_error", r.max_rel_error()},
           {"max_rel_error_c", r.max_rel_error_c},
           {"max_rel_error_w", r.max_rel_error_w},
           {"max_abs_off_support_w", r.max_abs_off_support_w},
           {"tolerance", kGradTolerance},
           {"pass", ok}};
    Run::write_text(run.output("gradcheck.json"), j.dump(2) + "\n");
  }
  return ok ? kOk : kGradCheck;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MLC-PPF potential passenger flow prediction", "ppf"};
  app.fallthrough();
  app.set_version_flag("--version", kVersion);

  Run run;
  app.add_option("--seed", run.seed, "Seed for every random choice")->capture_default_str();
  CLI::Option* config_opt =
      app.set_config("--config", "", "INI file with one [subcommand] section; flags win");
  app.add_option("--out", run.out, "Output directory (must be new or empty)");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic city");
  gen_cmd->add_option("--n", gen.spec.n, "Number of areas")->capture_default_str();
  gen_cmd->add_option("--days", gen.spec.days, "Days per period")->capture_default_str();
  gen_cmd->add_option("--regions", gen.spec.regions, "Number of region clusters")->capture_default_str();
  gen_cmd->add_option("--noise", gen.spec.noise, "0 = expected counts, 1 = Poisson")->capture_default_str();
  gen_cmd->add_option("--gamma", gen.spec.gamma, "Distance decay exponent")->capture_default_str();
  gen_cmd->add_option("--view-noise", gen.spec.view_noise, "Noise on view features")->capture_default_str();
  gen_cmd->add_option("--trips", gen.spec.trips_per_day, "Expected morning trips per day")
      ->capture_default_str();
  gen_cmd->add_option("--view-dims", gen.view_dims, "Columns per view, comma separated")
      ->capture_default_str();

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate-targets", "Hide areas and reassign their flows");
  sim_cmd->add_option("--data", sim.data, "Ground-truth dataset directory")->required()->check(CLI::ExistingDirectory);
  sim_cmd->add_option("--targets", sim.targets, "Comma-separated area ids to hide");
  sim_cmd->add_option("--ratio", sim.ratio, "Fraction of areas to hide at random");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit MLC-PPF and save a checkpoint");
  fit_cmd->add_option("--data", fit.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  fit_cmd->add_option("--period", fit.period, "morning, afternoon or nonrush")->capture_default_str();
  add_solver_flags(fit_cmd, fit.solver);

  PredictArgs pred;
  auto* pred_cmd = app.add_subcommand("predict", "Complete the last day from a checkpoint or a baseline");
  pred_cmd->add_option("--data", pred.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  pred_cmd->add_option("--model", pred.model, "Checkpoint written by fit")->check(CLI::ExistingFile);
  pred_cmd->add_option("--baseline", pred.baseline, "Predict with lsknn or nmf instead of a checkpoint");
  pred_cmd->add_option("--period", pred.period, "Period for --baseline")->capture_default_str();
  pred_cmd->add_option("--lsknn-k", pred.lsknn_k, "Neighbors for LS-KNN")->capture_default_str();
  pred_cmd->add_option("--nmf-rank", pred.nmf.rank, "NMF rank")->capture_default_str();
  pred_cmd->add_option("--nmf-iter", pred.nmf.iterations, "NMF iterations")->capture_default_str();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Masking experiment over random target sets");
  auto* sweep_cmd = app.add_subcommand("sweep", "MLC-PPF error over a k x lambda grid");
  for (auto* sub : {eval_cmd, sweep_cmd}) {
    sub->add_option("--data", ev.data, "Ground-truth dataset directory")->required()->check(CLI::ExistingDirectory);
    sub->add_option("--periods", ev.periods, "Comma-separated periods")->capture_default_str();
    sub->add_option("--ratio", ev.ratios, "Comma-separated target ratios")->capture_default_str();
    sub->add_option("--reps", ev.exp.repetitions, "Repetitions per setting")->capture_default_str();
    sub->add_flag("--exclude-target-block", ev.exclude_target_block,
                  "Do not score target-to-target entries");
    sub->add_option("--jobs", ev.exp.jobs, "Worker threads")->capture_default_str();
    add_solver_flags(sub, ev.exp.solver);
  }
  eval_cmd->add_option("--methods", ev.methods, "Comma-separated: mlc, lsknn, nmf")->capture_default_str();
  eval_cmd->add_option("--lsknn-k", ev.exp.lsknn_k, "Neighbors for LS-KNN")->capture_default_str();
  eval_cmd->add_option("--nmf-rank", ev.exp.nmf.rank, "NMF rank")->capture_default_str();
  eval_cmd->add_option("--nmf-iter", ev.exp.nmf.iterations, "NMF iterations")->capture_default_str();
  sweep_cmd->add_option("--k-grid", ev.k_grid, "Comma-separated k values")->capture_default_str();
  sweep_cmd->add_option("--lambda-grid", ev.lambda_grid, "Comma-separated lambda values")
      ->capture_default_str();

  ppf::GradCheckInstance gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Compare gradients with finite differences");
  gc_cmd->add_option("--n", gc.n, "Number of areas")->capture_default_str();
  gc_cmd->add_option("--days", gc.days, "Number of days")->capture_default_str();
  gc_cmd->add_option("--views", gc.views, "Number of views")->capture_default_str();
  gc_cmd->add_option("--lambda", gc.lambda, "Guidance weight")->capture_default_str();
  gc_cmd->add_option("--k", gc.k, "Neighbors per area")->capture_default_str();

  app.require_subcommand(1, 1);
  app.allow_config_extras(CLI::config_extras_mode::error);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (config_opt->count() > 0) run.config_file = config_opt->as<std::string>();
    auto* sub = app.get_subcommands().front();
    run.subcommand = sub->get_name();
    int code = kOk;
    if (sub == gen_cmd) {
      run_gen(run, gen);
    } else if (sub == sim_cmd) {
      run_simulate(run, sim);
    } else if (sub == fit_cmd) {
      run_fit(run, fit);
    } else if (sub == pred_cmd) {
      run_predict(run, pred);
    } else if (sub == eval_cmd) {
      run_eval(run, ev);
    } else if (sub == sweep_cmd) {
      run_sweep(run, ev);
    } else {
      code = run_gradcheck(run, gc);
      if (run.out.empty()) return code;
    }
    run.write_manifest();
    return code;
  } catch (const UsageError& e) {
    std::cerr << "ppf: usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ppf::IoError& e) {
    std::cerr << "ppf: I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "ppf: I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const ppf::InvalidInput& e) {
    std::cerr << "ppf: invalid input: " << e.what() << '\n';
    return kInvalid;
  } catch (const ppf::DivergenceError& e) {
    std::cerr << "ppf: solver diverged: " << e.what() << '\n';
    return kDiverged;
  } catch (const std::exception& e) {
    std::cerr << "ppf: internal error: " << e.what() << '\n';
    return kInternal;
  }
}
