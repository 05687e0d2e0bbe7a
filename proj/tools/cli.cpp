#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "pnb/pnb.hpp"

namespace pnb::cli {
namespace {

inline constexpr const char* kDefaultCriteria = "uevi,sevi-approx,preq,preq10,loocv,fcv,fcv10,trloss,bic";
inline constexpr const char* kWorkersEnv = "PNB_WORKERS";

struct Options {
  std::string data;
  std::string class_column;
  std::size_t bins = 5;
  std::string missing = "?,";
  std::uint64_t seed = 0;
  std::optional<std::size_t> workers;
  std::size_t max_features = kDefaultMaxFeatures;

  // score / select
  std::string criterion;
  std::optional<std::string> loss;
  std::size_t folds = 10;
  std::optional<std::size_t> orderings;
  std::uint64_t budget = std::uint64_t{1} << 20;
  std::string structure;
  std::size_t top = 10;
  std::string table_path;

  // experiment
  std::string criteria = kDefaultCriteria;
  std::size_t repetitions = 50;
  std::size_t sample = 500;
  bool redraw_sample = false;
  std::string out_path;
  std::string csv_path;

  // compare
  std::vector<std::string> reports;

  std::string config_path;
};

std::size_t resolve_workers(const Options& o) {
  if (o.workers) return std::max<std::size_t>(1, *o.workers);
  if (const char* env = std::getenv(kWorkersEnv)) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
    throw UsageError(std::string(kWorkersEnv) + " must be a positive integer");
  }
  return default_workers();
}

LoadOptions load_options(const Options& o) {
  LoadOptions lo;
  lo.bins = o.bins;
  lo.seed = o.seed;
  lo.missing_markers = detail::split_csv_line(o.missing);
  return lo;
}

json data_config(const Options& o, const std::string& command) {
  json markers = json::array();
  for (const auto& m : detail::split_csv_line(o.missing)) markers.push_back(m);
  return {{"command", command},          {"data", o.data},
          {"class", o.class_column},     {"bins", o.bins},
          {"discretization_fit", "full dataset"},
          {"missing_markers", markers},  {"seed", o.seed},
          {"workers", resolve_workers(o)}, {"max_features", o.max_features}};
}

CriterionSpec resolve_criterion(const Options& o) {
  auto spec = parse_criterion(o.criterion);
  if (o.loss) spec.loss = parse_loss(*o.loss);
  if (spec.uses_loss() && !spec.loss) spec.loss = LossKind::log;
  spec.folds = o.folds;
  if (o.orderings) {
    if (*o.orderings == 0) throw UsageError("--orderings must be at least 1");
    spec.orderings = *o.orderings;
  }
  spec.seed = o.seed;
  spec.exact_budget = o.budget;
  return spec;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << content;
  if (!f) throw Error("failed writing " + path);
}

std::string format_gain(const std::optional<double>& g) {
  if (!g) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << *g << "%";
  return os.str();
}

int cmd_discretize(const Options& o, std::ostream& out) {
  const auto data = load_csv(o.data, o.class_column, load_options(o));
  if (o.out_path.empty()) {
    write_csv(out, data);
    return kExitOk;
  }
  std::ostringstream csv;
  write_csv(csv, data);
  write_file(o.out_path, csv.str());

  json result = tool_header();
  auto config = data_config(o, "discretize");
  config["out"] = o.out_path;
  result["config"] = config;
  json columns = json::array();
  for (const auto& v : data.schema().variables) {
    json c = {{"name", v.name},
              {"kind", v.kind == VariableKind::continuous ? "continuous" : "discrete"},
              {"categories", v.categories}};
    if (v.kind == VariableKind::continuous) c["centroids"] = v.centroids;
    columns.push_back(c);
  }
  result["rows"] = data.size();
  result["columns"] = columns;
  out << result.dump(2) << '\n';
  return kExitOk;
}

json selection_config(const Options& o, const std::string& command, const CriterionSpec& spec) {
  auto config = data_config(o, command);
  config["criterion"] = criterion_json(spec);
  return config;
}

int cmd_score(const Options& o, std::ostream& out) {
  const auto spec = resolve_criterion(o);
  const auto data = load_csv(o.data, o.class_column, load_options(o));
  const auto m = parse_structure(o.structure, data.schema());
  const auto score = evaluate(data, m, spec);

  json result = tool_header();
  auto config = selection_config(o, "score", spec);
  config["structure"] = o.structure;
  result["config"] = config;
  result["criterion"] = criterion_name(spec);
  result["structure"] = structure_json(m, data.schema());
  result["score"] = score_json(score.value);
  out << result.dump(2) << '\n';
  return kExitOk;
}

int cmd_select(const Options& o, std::ostream& out) {
  const auto spec = resolve_criterion(o);
  const auto data = load_csv(o.data, o.class_column, load_options(o));
  const auto sel = select_best(data, spec, {resolve_workers(o), o.max_features});

  if (!o.table_path.empty()) {
    std::ostringstream csv;
    write_score_table_csv(csv, sel.table, data.schema());
    write_file(o.table_path, csv.str());
  }

  json result = tool_header();
  auto config = selection_config(o, "select", spec);
  config["top"] = o.top;
  if (!o.table_path.empty()) config["table"] = o.table_path;
  result["config"] = config;
  result["criterion"] = criterion_name(spec);
  result["structure"] = structure_json(sel.best, data.schema());
  result["score"] = score_json(sel.score.value);
  result["degenerate"] = sel.degenerate;
  result["structures_scored"] = sel.table.entries.size();
  json top = json::array();
  for (const auto& e : top_entries(sel.table, o.top)) {
    top.push_back({{"structure", structure_json(e.structure, data.schema())}, {"score", score_json(e.score.value)}});
  }
  result["top"] = top;
  out << result.dump(2) << '\n';
  return kExitOk;
}

int cmd_experiment(const Options& o, std::ostream& out) {
  ExperimentConfig config;
  for (const auto& name : detail::split_csv_line(o.criteria)) {
    auto spec = parse_criterion(name);
    spec.folds = o.folds;
    spec.exact_budget = o.budget;
    config.criteria.push_back(spec);
  }
  if (config.criteria.empty()) throw UsageError("--criteria lists no criteria");
  config.repetitions = o.repetitions;
  config.sample_size = o.sample;
  config.seed = o.seed;
  config.redraw_sample = o.redraw_sample;
  config.workers = resolve_workers(o);
  config.max_features = o.max_features;

  const auto data = load_csv(o.data, o.class_column, load_options(o));
  const auto report = run_experiment(data, config);

  auto extra = data_config(o, "experiment");
  extra["folds"] = o.folds;
  extra["out"] = o.out_path;
  if (!o.csv_path.empty()) extra["csv"] = o.csv_path;
  write_file(o.out_path, report_to_json(report, data.schema(), extra).dump(2) + "\n");
  if (!o.csv_path.empty()) {
    std::ostringstream csv;
    write_gain_csv(csv, report);
    write_file(o.csv_path, csv.str());
  }

  out << "relative prediction gain vs full Naive Bayes (" << config.repetitions << " repetitions, "
      << report.n_sampled << " rows)\n";
  out << std::left << std::setw(14) << "criterion" << std::right << std::setw(10) << "gain 0/1" << std::setw(10)
      << "gain log" << std::setw(12) << "loss 0/1" << std::setw(12) << "loss log" << '\n';
  for (const auto& a : report.aggregates) {
    out << std::left << std::setw(14) << a.name << std::right << std::setw(10) << format_gain(a.gain_01)
        << std::setw(10) << format_gain(a.gain_log) << std::fixed << std::setprecision(4) << std::setw(12)
        << a.mean_loss_01 << std::setw(12) << a.mean_loss_log << '\n';
    out.unsetf(std::ios::floatfield);
  }
  out << "report written to " << o.out_path << '\n';
  return kExitOk;
}

int cmd_compare(const Options& o, std::ostream& out) {
  std::vector<json> reports;
  for (const auto& path : o.reports) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open report: " + path);
    try {
      reports.push_back(json::parse(f));
    } catch (const json::exception& e) {
      throw Error("invalid report JSON in " + path + ": " + e.what());
    }
  }
  const auto gains = compare_reports(reports);

  json result = tool_header();
  result["config"] = {{"command", "compare"}, {"reports", o.reports}};
  json rows = json::object();
  for (const auto& g : gains) {
    rows[g.criterion] = {{"mean_gain_01", optional_json(g.mean_gain_01)},
                         {"mean_gain_log", optional_json(g.mean_gain_log)},
                         {"datasets_01", g.datasets_01},
                         {"datasets_log", g.datasets_log}};
  }
  result["mean_gains"] = rows;
  out << result.dump(2) << '\n';

  if (!o.csv_path.empty()) {
    std::ostringstream csv;
    csv << "criterion,loss,gain\n";
    csv.precision(17);
    for (const auto& g : gains) {
      csv << g.criterion << ",01,";
      if (g.mean_gain_01) csv << *g.mean_gain_01;
      csv << '\n' << g.criterion << ",log,";
      if (g.mean_gain_log) csv << *g.mean_gain_log;
      csv << '\n';
    }
    write_file(o.csv_path, csv.str());
  }
  return kExitOk;
}

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

// Expands `--config FILE` into flags placed right after the subcommand.
// Keys already given on the command line are skipped so explicit flags win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.size() < 2) return args;
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open config file: " + path);
  std::vector<std::string> injected;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    line = std::string(detail::trim(line));
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(lineno) + ": expected key=value");
    std::string key(detail::trim(std::string_view(line).substr(0, eq)));
    std::string value(detail::trim(std::string_view(line).substr(eq + 1)));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    const std::string flag = "--" + key;
    if (key == "config" || has_flag(args, flag)) continue;
    if (key == "redraw-sample") {
      if (value == "true" || value == "1") injected.push_back(flag);
      continue;
    }
    injected.push_back(flag);
    injected.push_back(value);
  }
  args.insert(args.begin() + 2, injected.begin(), injected.end());
  return args;
}

void add_data_options(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config_path, "flat key=value file supplying any flag; flags override it");
  sub->add_option("--data", o.data, "CSV file with a header line")->required();
  sub->add_option("--class", o.class_column, "class column name or zero-based index")->required();
  sub->add_option("--bins", o.bins, "K-means bins for continuous columns (0 = treat all as categorical)")
      ->capture_default_str();
  sub->add_option("--missing", o.missing, "comma-separated missing-value markers")->capture_default_str();
  sub->add_option("--seed", o.seed, "master seed")->capture_default_str();
  sub->add_option("--workers", o.workers, std::string("worker threads (fallback: $") + kWorkersEnv +
                                              ", then machine parallelism)");
  sub->add_option("--max-features", o.max_features, "exhaustive-search cap on feature count")
      ->capture_default_str()
      ->check(CLI::Range(std::size_t{0}, kHardMaxFeatures));
}

void add_criterion_options(CLI::App* sub, Options& o) {
  sub->add_option("--criterion", o.criterion, std::string("one of: ") + std::string(kCriterionNames))->required();
  sub->add_option("--loss", o.loss, "selection loss for loocv/fcv/trloss: 01 or log (default log)");
  sub->add_option("--folds", o.folds, "k for k-fold cross-validation")->capture_default_str();
  sub->add_option("--orderings", o.orderings, "orderings averaged by preq/fcv (overrides the name)");
  sub->add_option("--budget", o.budget, "K^N limit for sevi-exact")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Supervised and unsupervised model selection for pruned Naive Bayes structures", kToolName};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolName) + " " + kVersion);

  auto* discretize = app.add_subcommand("discretize", "discretize continuous columns and write categorical CSV");
  add_data_options(discretize, o);
  discretize->add_option("--out", o.out_path, "output CSV (default: standard output)");

  auto* score = app.add_subcommand("score", "score one structure");
  add_data_options(score, o);
  add_criterion_options(score, o);
  score->add_option("--structure", o.structure, "canonical integer or comma-separated feature names")->required();

  auto* select = app.add_subcommand("select", "exhaustively select the best structure");
  add_data_options(select, o);
  add_criterion_options(select, o);
  select->add_option("--top", o.top, "rows of the score table to print")->capture_default_str();
  select->add_option("--table", o.table_path, "write the full score table as CSV");

  auto* experiment = app.add_subcommand("experiment", "run the repeated train/test protocol");
  add_data_options(experiment, o);
  experiment->add_option("--criteria", o.criteria, "comma-separated criterion names")->capture_default_str();
  experiment->add_option("--folds", o.folds, "k for fcv criteria")->capture_default_str();
  experiment->add_option("--budget", o.budget, "K^N limit for sevi-exact")->capture_default_str();
  experiment->add_option("--reps", o.repetitions, "repetitions")->capture_default_str()->check(CLI::PositiveNumber);
  experiment->add_option("--sample", o.sample, "subsample size drawn once per dataset")->capture_default_str();
  experiment->add_flag("--redraw-sample", o.redraw_sample, "draw a fresh subsample every repetition");
  experiment->add_option("--out", o.out_path, "report JSON path")->required();
  experiment->add_option("--csv", o.csv_path, "also write criterion,loss,gain CSV");

  auto* compare = app.add_subcommand("compare", "average relative gains over several experiment reports");
  compare->add_option("reports", o.reports, "report JSON files")->required();
  compare->add_option("--csv", o.csv_path, "also write criterion,loss,gain CSV");

  std::vector<std::string> expanded;
  try {
    expanded = expand_config(args);
  } catch (const UsageError& e) {
    err << kToolName << ": usage error: " << e.what() << '\n';
    return kExitUsage;
  }
  std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolName << ' ' << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << kToolName << ": usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (discretize->parsed()) return cmd_discretize(o, out);
    if (score->parsed()) return cmd_score(o, out);
    if (select->parsed()) return cmd_select(o, out);
    if (experiment->parsed()) return cmd_experiment(o, out);
    if (compare->parsed()) return cmd_compare(o, out);
  } catch (const UsageError& e) {
    err << kToolName << ": usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << kToolName << ": error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace pnb::cli
