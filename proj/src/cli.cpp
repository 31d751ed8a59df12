#include "fedfilter/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string_view>

#include "CLI11.hpp"
#include "fedfilter/errors.hpp"
#include "fedfilter/report.hpp"
#include "fedfilter/simulation.hpp"
#include "fedfilter/validation.hpp"

namespace fedfilter {

namespace {

double parse_double(std::string_view text, std::string_view what) {
  std::string_view s = text;
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || std::isnan(value)) {
    throw ConfigError(std::string(what) + ": '" + std::string(text) + "' is not a number");
  }
  return value;
}

std::size_t parse_count(std::string_view text, std::string_view what) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(std::string(what) + ": '" + std::string(text) + "' is not a count");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::vector<double> parse_double_list(const std::string& text, std::string_view what) {
  std::vector<double> out;
  for (auto part : split(text, ',')) out.push_back(parse_double(part, what));
  return out;
}

// "1,2,3", "1-3" and "1-3,18-20" are all accepted.
std::vector<std::size_t> parse_columns(const std::string& text) {
  std::vector<std::size_t> out;
  for (auto part : split(text, ',')) {
    const auto dash = part.find('-');
    if (dash == std::string_view::npos) {
      out.push_back(parse_count(part, "--columns"));
      continue;
    }
    const std::size_t lo = parse_count(part.substr(0, dash), "--columns");
    const std::size_t hi = parse_count(part.substr(dash + 1), "--columns");
    if (lo > hi) throw ConfigError("--columns: empty range '" + std::string(part) + "'");
    for (std::size_t c = lo; c <= hi; ++c) out.push_back(c);
  }
  for (std::size_t c : out) {
    if (c == 0) throw ConfigError("--columns: indices are 1-based");
  }
  return out;
}

std::vector<std::size_t> parse_count_list(const std::string& text, std::string_view what) {
  std::vector<std::size_t> out;
  for (auto part : split(text, ',')) out.push_back(parse_count(part, what));
  return out;
}

struct CommonOptions {
  std::string dataset;
  bool synthetic = false;
  std::string columns = "1,2,3";
  std::size_t devices = 10;
  std::string delta;
  std::string tol;
  std::size_t tap_len = 4;
  double fraction_k = 0.8;
  std::optional<std::uint64_t> seed;
  std::size_t warmup = 256;
  std::size_t window = 256;
  std::size_t samples = 100000;
  double energy = 1.0;
  double alpha_fraction = 0.5;
  bool observe = false;
  bool raw_weights = false;
  std::string out;
  std::string format;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_delta) {
  auto* ds = cmd->add_option("--dataset", o.dataset, "MHEALTH-style log file");
  auto* syn = cmd->add_flag("--synthetic", o.synthetic, "use the seeded AR(1) generator");
  ds->excludes(syn);
  cmd->add_option("--columns", o.columns, "1-based columns, e.g. 1-3 or 1,2,3");
  cmd->add_option("--devices", o.devices, "number of devices");
  if (with_delta) {
    auto* d = cmd->add_option("--delta", o.delta, "filter parameter delta");
    auto* t = cmd->add_option("--tol", o.tol, "normalised tolerable perturbation error");
    d->excludes(t);
  }
  cmd->add_option("--tap-len", o.tap_len, "LMS tap length");
  cmd->add_option("--fraction-k", o.fraction_k, "fraction of devices averaged per round");
  cmd->add_option("--seed", o.seed, "seed (falls back to FEDFILTER_SEED)");
  cmd->add_option("--warmup", o.warmup, "warm-up samples per device");
  cmd->add_option("--window", o.window, "perturbation window rows");
  cmd->add_option("--samples", o.samples, "synthetic sample count");
  cmd->add_option("--energy-per-packet", o.energy, "E_n for the energy model");
  cmd->add_option("--alpha-fraction", o.alpha_fraction, "step size as a fraction of alpha_max");
  cmd->add_flag("--observe", o.observe, "never lower delta, only track the estimate");
  cmd->add_flag("--raw-weights", o.raw_weights, "use n_k/n averaging weights without rescaling");
  cmd->add_option("--out", o.out, "output file");
  cmd->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

std::uint64_t resolve_seed(const CommonOptions& o) {
  if (o.seed) return *o.seed;
  if (const char* env = std::getenv("FEDFILTER_SEED"); env && *env) {
    std::uint64_t value = 0;
    const std::string_view s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ConfigError("FEDFILTER_SEED: '" + std::string(s) + "' is not an unsigned integer");
    }
    return value;
  }
  return 1;
}

SimConfig build_config(const CommonOptions& o) {
  SimConfig c;
  c.n_devices = o.devices;
  c.tap_len = o.tap_len;
  c.fraction_k = o.fraction_k;
  c.alpha.fraction = o.alpha_fraction;
  c.warmup_len = o.warmup;
  c.window_rows = o.window;
  c.seed = resolve_seed(o);
  c.energy_per_packet = o.energy;
  c.budget = o.observe ? BudgetPolicy::kObserve : BudgetPolicy::kEnforce;
  c.renormalize_weights = !o.raw_weights;
  if (!o.delta.empty()) c.delta = parse_double(o.delta, "--delta");
  if (!o.tol.empty()) c.normalized_tol = parse_double(o.tol, "--tol");
  if (!o.dataset.empty()) {
    if (!std::filesystem::is_regular_file(o.dataset)) {
      throw ConfigError("--dataset: no such file '" + o.dataset + "'");
    }
    c.source.path = o.dataset;
    c.source.columns = parse_columns(o.columns);
  }
  c.source.synthetic_samples = o.samples;
  return c;
}

ReportFormat resolve_format(const CommonOptions& o, ReportFormat fallback) {
  if (o.format.empty()) return fallback;
  return o.format == "json" ? ReportFormat::kJson : ReportFormat::kCsv;
}

void check_output_path(const std::string& out) {
  if (out.empty()) return;
  const std::filesystem::path parent = std::filesystem::path(out).parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent)) {
    throw ConfigError("--out: directory '" + parent.string() + "' does not exist");
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Federated dead-band filtering simulator", "fedfilter"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  auto* run_cmd = app.add_subcommand("run", "simulate one configuration and report metrics");
  add_common(run_cmd, run_opts, true);
  std::string dump_dir;
  run_cmd->add_option("--dump-dir", dump_dir, "write real/recon/averaged matrices as CSV here");

  CommonOptions sweep_opts;
  std::string delta_list;
  auto* sweep_cmd = app.add_subcommand("sweep-delta", "suppression and tolerance versus delta");
  add_common(sweep_cmd, sweep_opts, false);
  sweep_cmd->add_option("--delta-list", delta_list, "comma-separated delta values")->required();

  CommonOptions dev_opts;
  std::string device_list = "10,20,30,40,50";
  auto* dev_cmd = app.add_subcommand("sweep-devices", "energy efficiency versus device count");
  add_common(dev_cmd, dev_opts, true);
  dev_cmd->add_option("--device-list", device_list, "comma-separated device counts");

  std::optional<std::uint64_t> validate_seed;
  auto* val_cmd = app.add_subcommand("validate", "run the built-in invariant checks");
  val_cmd->add_option("--seed", validate_seed, "seed (falls back to FEDFILTER_SEED)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << " (see --help)\n";
    return kExitConfigError;
  }

  try {
    if (run_cmd->parsed()) {
      SimConfig config = build_config(run_opts);
      if (!config.delta && !config.normalized_tol) throw ConfigError("run: pass --delta or --tol");
      check_output_path(run_opts.out);
      if (!dump_dir.empty() && !std::filesystem::is_directory(dump_dir)) {
        throw ConfigError("--dump-dir: directory '" + dump_dir + "' does not exist");
      }
      validate_config(config);
      const auto partition = prepare_partition(config);
      RunResult result;
      try {
        result = run(config, partition);
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntimeError;
      }
      const RunMetrics& m = result.metrics;
      out << "devices=" << m.n_devices << " rows=" << m.rows
          << " transmissions=" << m.transmissions_total
          << " suppression_ratio=" << format_number(m.suppression_ratio)
          << " max_abs_recon_error=" << format_number(m.max_abs_recon_error)
          << " delta=" << format_number(m.delta_initial) << "->" << format_number(m.delta_final)
          << " rebalances=" << m.rebalance_count << "\n";
      if (!run_opts.out.empty()) {
        emit_report(m, run_opts.out, resolve_format(run_opts, ReportFormat::kJson));
      }
      if (!dump_dir.empty()) {
        const std::filesystem::path dir(dump_dir);
        write_atomic(dir / "real.csv", render_matrix_csv(result.real));
        write_atomic(dir / "recon.csv", render_matrix_csv(result.recon));
        write_atomic(dir / "averaged.csv", render_matrix_csv(result.averaged));
      }
      return kExitOk;
    }

    if (sweep_cmd->parsed()) {
      SimConfig config = build_config(sweep_opts);
      const std::vector<double> deltas = parse_double_list(delta_list, "--delta-list");
      if (deltas.size() < 2) throw ConfigError("--delta-list: need at least two values");
      config.delta = deltas.front();
      check_output_path(sweep_opts.out);
      validate_config(config);
      const auto partition = prepare_partition(config);
      std::vector<DeltaSweepRow> rows;
      try {
        rows = sweep_delta(config, deltas, partition);
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntimeError;
      }
      const Table table = delta_sweep_table(rows);
      const ReportFormat format = resolve_format(sweep_opts, ReportFormat::kCsv);
      if (sweep_opts.out.empty()) {
        out << (format == ReportFormat::kJson ? render_json(table) : render_csv(table));
      } else {
        emit_report(table, sweep_opts.out, format);
        out << "wrote " << rows.size() << " rows to " << sweep_opts.out << "\n";
      }
      return kExitOk;
    }

    if (dev_cmd->parsed()) {
      SimConfig config = build_config(dev_opts);
      if (!config.delta && !config.normalized_tol) {
        throw ConfigError("sweep-devices: pass --delta or --tol");
      }
      const std::vector<std::size_t> counts = parse_count_list(device_list, "--device-list");
      check_output_path(dev_opts.out);
      validate_config(config);
      const auto source = load_source(config.source, config.seed);
      std::vector<DeviceSweepRow> rows;
      try {
        rows = sweep_devices(config, counts, source);
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntimeError;
      }
      const Table table = device_sweep_table(rows);
      const ReportFormat format = resolve_format(dev_opts, ReportFormat::kCsv);
      if (dev_opts.out.empty()) {
        out << (format == ReportFormat::kJson ? render_json(table) : render_csv(table));
      } else {
        emit_report(table, dev_opts.out, format);
        out << "wrote " << rows.size() << " rows to " << dev_opts.out << "\n";
      }
      return kExitOk;
    }

    if (val_cmd->parsed()) {
      CommonOptions seed_only;
      seed_only.seed = validate_seed;
      const auto results = run_invariant_suite(resolve_seed(seed_only));
      bool all = true;
      for (const auto& r : results) {
        out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        all = all && r.passed;
      }
      return all ? kExitOk : kExitRuntimeError;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  return kExitConfigError;
}

}  // namespace fedfilter
