#include "mcsff/cli/app.hpp"

#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "mcsff/cli/config.hpp"
#include "mcsff/consistency/checkpoint.hpp"
#include "mcsff/error.hpp"
#include "mcsff/kg/io.hpp"
#include "mcsff/kg/validate.hpp"

namespace mcsff::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  bool no_attr = false, no_vis = false, no_cmci = false, no_sm = false;
  std::string fusion;
  std::string preset;
  std::string checkpoint;
  std::optional<std::size_t> k;
};

struct Context {
  RunConfig config;
  Options opts;
  std::ostream& out;
  std::ostream& err;

  void info(const std::string& line) const {
    if (!opts.quiet) out << line << '\n';
  }
  fs::path output(const std::string& name) const { return config.out / name; }
};

// Thrown for data that loads but violates an invariant, so that commands
// other than validate can report it with exit code 1.
struct InvalidData {
  kg::ValidationReport report;
};

void ensure_out_dir(const Context& ctx) {
  std::error_code ec;
  fs::create_directories(ctx.config.out, ec);
  if (ec || !fs::is_directory(ctx.config.out)) throw IoError("cannot create output directory " + ctx.config.out.string());
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  return f;
}

align::ExperimentData load_valid_data(const Context& ctx) {
  auto loaded = load_data(ctx.config);
  if (!loaded.report.ok()) throw InvalidData{loaded.report};
  return std::move(loaded.data);
}

std::string metric_line(const align::AlignmentMetrics& m) {
  std::ostringstream s;
  align::write_metrics_report(s, m);
  std::string text = s.str();
  for (char& ch : text) if (ch == '\n') ch = ' ';
  if (!text.empty()) text.pop_back();
  return text;
}

json metrics_json(const align::AlignmentMetrics& m) {
  return {{"hits1", m.hits1}, {"hits5", m.hits5}, {"hits10", m.hits10}, {"mr", m.mr}, {"mrr", m.mrr}};
}

int cmd_validate(const Context& ctx) {
  auto loaded = load_data(ctx.config);
  kg::print_report(ctx.out, loaded.report);
  return loaded.report.ok() ? kOk : kInvalid;
}

int cmd_synth(const Context& ctx) {
  ensure_out_dir(ctx);
  auto pair = kg::generate_synthetic_pair(ctx.config.synth);
  kg::write_graph(pair.source, {ctx.output("triples_s.tsv"), ctx.output("attrs_s.tsv"), ctx.output("visuals_s.tsv")});
  kg::write_graph(pair.target, {ctx.output("triples_t.tsv"), ctx.output("attrs_t.tsv"), ctx.output("visuals_t.tsv")});
  kg::write_seeds(ctx.output("seeds.tsv"), pair.ground_truth, pair.source, pair.target);

  RunConfig written = ctx.config;
  written.data = {"triples_s.tsv", "triples_t.tsv", "attrs_s.tsv", "attrs_t.tsv",
                  "visuals_s.tsv", "visuals_t.tsv", "seeds.tsv",   {}};
  written.out = ".";
  open_output(ctx.output("config.json")) << to_json(written).dump(2) << '\n';
  ctx.info("synth: wrote " + std::to_string(pair.source.entity_count) + "-entity pair to " + ctx.config.out.string());
  return kOk;
}

void write_history(const fs::path& path, const align::TrainingHistory& h) {
  auto f = open_output(path);
  f << "epoch\tloss\thits1\thits5\thits10\tmr\tmrr\n";
  std::size_t next = 0;
  for (std::size_t e = 0; e < h.loss.size(); ++e) {
    f << e + 1 << '\t' << kg::format_real(h.loss[e]);
    // Evaluations are taken after the update of their epoch.
    if (next < h.evaluations.size() && h.evaluations[next].first == e + 1) {
      const auto& m = h.evaluations[next++].second;
      for (double v : {m.hits1, m.hits5, m.hits10, m.mr, m.mrr}) f << '\t' << kg::format_real(v);
    } else {
      f << "\t-\t-\t-\t-\t-";
    }
    f << '\n';
  }
}

fs::path checkpoint_path(const Context& ctx) {
  return ctx.opts.checkpoint.empty() ? ctx.output("checkpoint.bin") : fs::path(ctx.opts.checkpoint);
}

int cmd_train(const Context& ctx) {
  auto data = load_valid_data(ctx);
  ensure_out_dir(ctx);
  auto config = ctx.config.experiment;
  config.train.ablation.use_cmci = true;
  auto result = align::run_experiment(data, config);
  cmci::write_checkpoint(ctx.output("checkpoint.bin"), result.trained->params);
  write_history(ctx.output("history.tsv"), result.trained->history);
  const auto& loss = result.trained->history.loss;
  ctx.info("train: " + std::to_string(loss.size()) + " epochs, loss " + kg::format_real(loss.front()) + " -> " +
           kg::format_real(loss.back()));
  ctx.info("train: " + metric_line(result.metrics));
  return kOk;
}

std::optional<num::ParameterSet> load_params_if_needed(const Context& ctx) {
  if (align::effective_weights(ctx.config.experiment.train).entity == 0.0) return std::nullopt;
  fs::path p = checkpoint_path(ctx);
  if (!fs::is_regular_file(p)) throw IoError("checkpoint not found: " + p.string() + " (run train first)");
  return cmci::read_checkpoint(p);
}

int cmd_eval(const Context& ctx) {
  auto data = load_valid_data(ctx);
  auto params = load_params_if_needed(ctx);
  ensure_out_dir(ctx);
  auto result = align::evaluate_experiment(data, ctx.config.experiment, params ? &*params : nullptr);
  {
    auto f = open_output(ctx.output("metrics.txt"));
    align::write_metrics_report(f, result.metrics);
  }
  json report{{"metrics", metrics_json(result.metrics)},
              {"test_pairs", result.split.test.size()},
              {"train_pairs", result.split.train.size()},
              {"config", to_json(ctx.config)}};
  open_output(ctx.output("metrics.json")) << report.dump(2) << '\n';
  ctx.info("eval: " + metric_line(result.metrics));
  return kOk;
}

int cmd_align(const Context& ctx) {
  auto data = load_valid_data(ctx);
  auto params = load_params_if_needed(ctx);
  ensure_out_dir(ctx);
  const auto& cfg = ctx.config.experiment;
  const std::size_t k = ctx.opts.k.value_or(ctx.config.align_k);
  auto inputs = cmci::prepare_inputs(data.source, data.target, cfg.model, data.names);
  auto specific = align::specific_matrices(data, cfg);
  std::vector<std::size_t> rows(data.source.entity_count), cols(data.target.entity_count);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  for (std::size_t j = 0; j < cols.size(); ++j) cols[j] = j;
  auto fused = align::fused_matrix(params ? &*params : nullptr, inputs, specific, rows, cols, cfg);
  if (k < 1 || k > cols.size()) throw ConfigError("align: k must lie in [1, " + std::to_string(cols.size()) + "]");
  auto f = open_output(ctx.output("topk.tsv"));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto top = align::align_topk(fused, i, k);
    for (std::size_t r = 0; r < top.size(); ++r) {
      f << data.source.entities.token(i) << '\t' << r + 1 << '\t' << data.target.entities.token(top[r].first) << '\t'
        << kg::format_real(top[r].second) << '\n';
    }
  }
  ctx.info("align: top-" + std::to_string(k) + " for " + std::to_string(rows.size()) + " sources");
  return kOk;
}

int cmd_ablate(const Context& ctx) {
  auto data = load_valid_data(ctx);
  ensure_out_dir(ctx);
  auto rows = align::run_ablation(data, ctx.config.experiment);
  std::ostringstream table;
  align::write_ablation_table(table, rows);
  open_output(ctx.output("ablation.tsv")) << table.str();
  if (!ctx.opts.quiet) ctx.out << table.str();
  return kOk;
}

void apply_options(RunConfig& c, const Options& o) {
  if (!o.preset.empty()) {
    auto seed = c.synth.rng_seed;
    c.synth = synth_preset(o.preset);
    c.synth.rng_seed = seed;
  }
  if (o.seed) set_seed(c, *o.seed);
  if (!o.out_dir.empty()) c.out = o.out_dir;
  auto& a = c.experiment.train.ablation;
  if (o.no_attr) a.use_attr = false;
  if (o.no_vis) a.use_vis = false;
  if (o.no_cmci) a.use_cmci = false;
  if (o.no_sm) a.use_sm = false;
  if (!o.fusion.empty()) {
    std::vector<double> w;
    std::stringstream ss(o.fusion);
    std::string part;
    while (std::getline(ss, part, ',')) {
      try {
        std::size_t used = 0;
        w.push_back(std::stod(part, &used));
        if (used != part.size()) throw std::invalid_argument(part);
      } catch (const std::exception&) {
        throw ConfigError("--fusion expects three numbers E,I,A");
      }
    }
    if (w.size() != 3) throw ConfigError("--fusion expects three numbers E,I,A");
    c.experiment.train.fusion = {w[0], w[1], w[2]};
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-modal knowledge-graph entity alignment", "mcsff"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config_path, std::string("JSON config file (default: $") + kConfigEnv + ")");
  app.add_option("--out", o.out_dir, "output directory");
  app.add_option("--seed", o.seed, "random seed for splitting, training and generation");
  app.add_flag("--quiet", o.quiet, "only print errors and reports");

  auto* validate = app.add_subcommand("validate", "check a graph pair and its seeds");
  auto* synth = app.add_subcommand("synth", "generate a synthetic graph pair");
  synth->add_option("--preset", o.preset, "easy or discriminative");
  auto* train = app.add_subcommand("train", "train the consistency network");
  auto* eval = app.add_subcommand("eval", "fuse similarities and report ranking metrics");
  auto* align_cmd = app.add_subcommand("align", "write the top-k targets of every source");
  align_cmd->add_option("--k", o.k, "number of targets per source");
  auto* ablate = app.add_subcommand("ablate", "run the ablation matrix");
  for (auto* sub : {eval, align_cmd}) sub->add_option("--checkpoint", o.checkpoint, "parameter file");
  for (auto* sub : {train, eval, align_cmd, ablate}) {
    sub->add_flag("--no-attr", o.no_attr, "drop the attribute similarity matrix");
    sub->add_flag("--no-vis", o.no_vis, "drop the visual similarity matrix");
    sub->add_flag("--no-cmci", o.no_cmci, "drop the learned entity similarity");
    sub->add_flag("--no-sm", o.no_sm, "drop both single-modality matrices");
    sub->add_option("--fusion", o.fusion, "fusion weights E,I,A");
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kIoOrConfig;
  }

  try {
    std::string config_path = o.config_path;
    if (config_path.empty()) {
      if (const char* env = std::getenv(kConfigEnv)) config_path = env;
    }
    Context ctx{config_path.empty() ? RunConfig{} : load_config(config_path), o, out, err};
    apply_options(ctx.config, o);
    if (*validate) return cmd_validate(ctx);
    if (*synth) return cmd_synth(ctx);
    if (*train) return cmd_train(ctx);
    if (*eval) return cmd_eval(ctx);
    if (*align_cmd) return cmd_align(ctx);
    if (*ablate) return cmd_ablate(ctx);
    return kIoOrConfig;
  } catch (const InvalidData& e) {
    kg::print_report(err, e.report);
    return kInvalid;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kNonFinite;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kIoOrConfig;
  }
}

}  // namespace mcsff::cli
