#include "mcsff/alignment/pipeline.hpp"

#include <cstdio>
#include <ostream>

#include "mcsff/error.hpp"

namespace mcsff::align {

SpecificMatrices specific_matrices(const ExperimentData& data, const ExperimentConfig& config) {
  SpecificMatrices out;
  out.visual = specificity::visual_similarity(data.source.visuals, data.target.visuals, config.visual_normalize).values;
  if (out.visual.rows() != data.source.entity_count || out.visual.cols() != data.target.entity_count) {
    throw ValidationError("visual sets do not cover every entity");
  }
  auto inc_s = specificity::build_incidence(data.source.attributes, data.source.entity_count);
  auto inc_t = specificity::build_incidence(data.target.attributes, data.target.entity_count);
  auto embed = [&](const specificity::AttributeIncidence& inc) {
    if (data.names) return specificity::lookup_name_embeddings(inc.names, *data.names);
    return specificity::embed_attribute_names(inc.names, std::nullopt, config.model.name_dim);
  };
  out.attribute = specificity::attribute_similarity(inc_s, inc_t, embed(inc_s), embed(inc_t), config.attribute).values;
  return out;
}

FusionWeights effective_weights(const TrainConfig& config) {
  const auto& f = config.ablation;
  FusionWeights w = config.fusion;
  if (!f.use_cmci) w.entity = 0.0;
  if (!f.use_sm || !f.use_vis) w.visual = 0.0;
  if (!f.use_sm || !f.use_attr) w.attribute = 0.0;
  if (w.entity + w.visual + w.attribute == 0.0) throw ConfigError("ablation leaves no similarity matrix to fuse");
  return w;
}

num::Matrix entity_matrix(const num::ParameterSet& params, const cmci::PairInputs& inputs,
                          const cmci::ModelConfig& model, const std::vector<std::size_t>& rows,
                          const std::vector<std::size_t>& cols, std::size_t eval_samples) {
  num::Matrix acc(rows.size(), cols.size());
  for (std::size_t k = 0; k < eval_samples; ++k) {
    auto [s, t] = cmci::embed(params, inputs, model);
    auto sim = entity_similarity(s.select_rows(rows), t.select_rows(cols)).values;
    for (std::size_t i = 0; i < acc.size(); ++i) acc.data()[i] += sim.data()[i];
  }
  for (double& x : acc.data()) x /= static_cast<double>(eval_samples);
  return acc;
}

num::Matrix fused_matrix(const num::ParameterSet* params, const cmci::PairInputs& inputs,
                         const SpecificMatrices& specific, const std::vector<std::size_t>& rows,
                         const std::vector<std::size_t>& cols, const ExperimentConfig& config) {
  FusionWeights w = effective_weights(config.train);
  std::optional<num::Matrix> se, si, sa;
  if (w.entity > 0.0) {
    if (!params) throw ConfigError("entity similarity requested without trained parameters");
    se = entity_matrix(*params, inputs, config.model, rows, cols, config.train.eval_samples);
  }
  if (w.visual > 0.0) si = specific.visual.select(rows, cols);
  if (w.attribute > 0.0) sa = specific.attribute.select(rows, cols);
  return fuse_similarity(se ? &*se : nullptr, si ? &*si : nullptr, sa ? &*sa : nullptr, w,
                         config.train.normalize_fusion)
      .values;
}

kg::SeedSplit split_for(const ExperimentData& data, const ExperimentConfig& config) {
  return kg::split_seeds(data.seeds, config.train.train_fraction, config.train.rng_seed);
}

namespace {

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_rows(const std::vector<kg::SeedAlignment>& seeds) {
  std::vector<std::size_t> rows, cols;
  for (const auto& s : seeds) {
    rows.push_back(s.source.index);
    cols.push_back(s.target.index);
  }
  return {rows, cols};
}

struct Prepared {
  cmci::PairInputs inputs;
  SpecificMatrices specific;
  kg::SeedSplit split;
  std::vector<std::size_t> rows, cols;
};

Prepared prepare(const ExperimentData& data, const ExperimentConfig& config) {
  check_config(config.train);
  Prepared p{cmci::prepare_inputs(data.source, data.target, config.model, data.names), specific_matrices(data, config),
             split_for(data, config), {}, {}};
  std::tie(p.rows, p.cols) = split_rows(p.split.test);
  return p;
}

TrainResult train_prepared(const Prepared& p, const ExperimentConfig& config) {
  Evaluator eval = [&](const num::ParameterSet& params) {
    return evaluate(fused_matrix(&params, p.inputs, p.specific, p.rows, p.cols, config));
  };
  return train(p.inputs, seed_indices(p.split.train), config.model, config.train, eval);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentData& data, const ExperimentConfig& config) {
  Prepared p = prepare(data, config);
  ExperimentResult out;
  if (effective_weights(config.train).entity > 0.0) out.trained = train_prepared(p, config);
  out.fused = fused_matrix(out.trained ? &out.trained->params : nullptr, p.inputs, p.specific, p.rows, p.cols, config);
  out.metrics = evaluate(out.fused);
  out.split = std::move(p.split);
  return out;
}

ExperimentResult evaluate_experiment(const ExperimentData& data, const ExperimentConfig& config,
                                     const num::ParameterSet* params) {
  Prepared p = prepare(data, config);
  ExperimentResult out;
  out.fused = fused_matrix(params, p.inputs, p.specific, p.rows, p.cols, config);
  out.metrics = evaluate(out.fused);
  out.split = std::move(p.split);
  return out;
}

std::vector<AblationRow> run_ablation(const ExperimentData& data, const ExperimentConfig& config) {
  ExperimentConfig full = config;
  full.train.ablation = {};
  Prepared p = prepare(data, full);
  TrainResult trained = train_prepared(p, full);

  struct Variant {
    const char* name;
    AblationFlags flags;
  };
  const Variant variants[] = {
      {"full", {true, true, true, true}},    {"w/o Attr", {false, true, true, true}},
      {"w/o Vis", {true, false, true, true}}, {"w/o CMCI", {true, true, false, true}},
      {"w/o SM", {true, true, true, false}},
  };
  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    ExperimentConfig c = full;
    c.train.ablation = v.flags;
    const num::ParameterSet* params = v.flags.use_cmci ? &trained.params : nullptr;
    rows.push_back({v.name, evaluate(fused_matrix(params, p.inputs, p.specific, p.rows, p.cols, c))});
  }
  return rows;
}

void write_ablation_table(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << "variant\thits1\thits5\thits10\tmr\tmrr\n";
  char buf[160];
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    std::snprintf(buf, sizeof buf, "%s\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\n", r.variant.c_str(), m.hits1, m.hits5, m.hits10,
                  m.mr, m.mrr);
    out << buf;
  }
}

}  // namespace mcsff::align
