#include "mcsff/cli/config.hpp"

#include <fstream>
#include <set>

#include "mcsff/error.hpp"
#include "mcsff/kg/io.hpp"

namespace mcsff::cli {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!ok.count(key)) throw ConfigError("unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& dst, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return;
  try {
    if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
      if (!it->is_number_unsigned()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) throw ConfigError("");
    }
    dst = it->get<T>();
  } catch (const std::exception&) {
    throw ConfigError("config key '" + where + "." + key + "' has the wrong type");
  }
}

void read_path(const json& obj, const char* key, std::filesystem::path& dst, const std::filesystem::path& base) {
  std::string s;
  read(obj, key, s, "data");
  if (s.empty()) return;
  std::filesystem::path p(s);
  dst = p.is_absolute() || base.empty() ? p : base / p;
}

void read_activation(const json& obj, const char* key, num::Activation& dst) {
  std::string s;
  read(obj, key, s, "model");
  if (!s.empty()) dst = num::parse_activation(s);
}

}  // namespace

void set_seed(RunConfig& config, std::uint64_t seed) {
  config.experiment.train.rng_seed = seed;
  config.synth.rng_seed = seed;
}

kg::SynthConfig synth_preset(const std::string& name) {
  if (name == "easy") return kg::easy_preset();
  if (name == "discriminative") return kg::discriminative_preset();
  throw ConfigError("unknown synth preset '" + name + "' (expected easy or discriminative)");
}

RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  check_keys(doc, "", {"data", "seed", "out", "train", "fusion", "ablation", "model", "attribute", "visual", "synth",
                       "align"});
  RunConfig c;
  if (auto it = doc.find("synth"); it != doc.end()) {
    check_keys(*it, "synth", {"preset", "n_entities", "n_relations", "triple_density", "attr_per_entity", "attr_vocab",
                              "img_per_entity", "d_img", "noise_level", "rewire_fraction", "missing_visual_fraction",
                              "missing_attr_fraction", "rng_seed"});
    std::string preset;
    read(*it, "preset", preset, "synth");
    if (!preset.empty()) c.synth = synth_preset(preset);
  }
  std::uint64_t seed = 0;
  read(doc, "seed", seed, "");
  if (doc.contains("seed")) set_seed(c, seed);

  if (auto it = doc.find("data"); it != doc.end()) {
    check_keys(*it, "data", {"triples_s", "triples_t", "attrs_s", "attrs_t", "visuals_s", "visuals_t", "seeds",
                             "name_embeddings"});
    auto& d = c.data;
    read_path(*it, "triples_s", d.triples_s, base_dir);
    read_path(*it, "triples_t", d.triples_t, base_dir);
    read_path(*it, "attrs_s", d.attrs_s, base_dir);
    read_path(*it, "attrs_t", d.attrs_t, base_dir);
    read_path(*it, "visuals_s", d.visuals_s, base_dir);
    read_path(*it, "visuals_t", d.visuals_t, base_dir);
    read_path(*it, "seeds", d.seeds, base_dir);
    read_path(*it, "name_embeddings", d.name_embeddings, base_dir);
  }
  if (doc.contains("out")) {
    json wrapper{{"out", doc["out"]}};
    std::filesystem::path out;
    read_path(wrapper, "out", out, base_dir);
    if (!out.empty()) c.out = out;
  }

  auto& e = c.experiment;
  if (auto it = doc.find("train"); it != doc.end()) {
    check_keys(*it, "train", {"epochs", "learning_rate", "margin", "negatives", "rng_seed", "train_fraction",
                              "eval_every", "eval_samples", "normalize_fusion"});
    auto& t = e.train;
    read(*it, "epochs", t.epochs, "train");
    read(*it, "learning_rate", t.learning_rate, "train");
    read(*it, "margin", t.margin, "train");
    read(*it, "negatives", t.negatives, "train");
    read(*it, "rng_seed", t.rng_seed, "train");
    read(*it, "train_fraction", t.train_fraction, "train");
    read(*it, "eval_every", t.eval_every, "train");
    read(*it, "eval_samples", t.eval_samples, "train");
    read(*it, "normalize_fusion", t.normalize_fusion, "train");
  }
  if (auto it = doc.find("fusion"); it != doc.end()) {
    check_keys(*it, "fusion", {"entity", "visual", "attribute"});
    read(*it, "entity", e.train.fusion.entity, "fusion");
    read(*it, "visual", e.train.fusion.visual, "fusion");
    read(*it, "attribute", e.train.fusion.attribute, "fusion");
  }
  if (auto it = doc.find("ablation"); it != doc.end()) {
    check_keys(*it, "ablation", {"use_attr", "use_vis", "use_cmci", "use_sm"});
    auto& a = e.train.ablation;
    read(*it, "use_attr", a.use_attr, "ablation");
    read(*it, "use_vis", a.use_vis, "ablation");
    read(*it, "use_cmci", a.use_cmci, "ablation");
    read(*it, "use_sm", a.use_sm, "ablation");
  }
  if (auto it = doc.find("model"); it != doc.end()) {
    check_keys(*it, "model", {"dim", "attention_dim", "layers", "name_dim", "value_features", "leaky_slope",
                              "impute_sigma", "init_sigma", "gat_sigma", "impute_norm", "normalize_relations",
                              "dense_readout"});
    auto& m = e.model;
    read(*it, "dim", m.dim, "model");
    read(*it, "attention_dim", m.attention_dim, "model");
    read(*it, "layers", m.layers, "model");
    read(*it, "name_dim", m.name_dim, "model");
    read(*it, "value_features", m.value_features, "model");
    read(*it, "leaky_slope", m.leaky_slope, "model");
    read_activation(*it, "impute_sigma", m.impute_sigma);
    read_activation(*it, "init_sigma", m.init_sigma);
    read_activation(*it, "gat_sigma", m.gat_sigma);
    std::string norm;
    read(*it, "impute_norm", norm, "model");
    if (!norm.empty()) m.impute_norm = cmci::parse_impute_norm(norm);
    read(*it, "normalize_relations", m.normalize_relations, "model");
    read(*it, "dense_readout", m.dense_readout, "model");
  }
  if (auto it = doc.find("attribute"); it != doc.end()) {
    check_keys(*it, "attribute", {"weight_name", "weight_value", "epsilon"});
    read(*it, "weight_name", e.attribute.weight_name, "attribute");
    read(*it, "weight_value", e.attribute.weight_value, "attribute");
    read(*it, "epsilon", e.attribute.epsilon, "attribute");
    if (!(e.attribute.epsilon > 0.0)) throw ConfigError("attribute.epsilon must be positive");
    if (!(e.attribute.weight_name >= 0.0 && e.attribute.weight_value >= 0.0)) {
      throw ConfigError("attribute weights must be non-negative");
    }
  }
  if (auto it = doc.find("visual"); it != doc.end()) {
    check_keys(*it, "visual", {"normalize"});
    read(*it, "normalize", e.visual_normalize, "visual");
  }
  if (auto it = doc.find("synth"); it != doc.end()) {
    auto& s = c.synth;
    read(*it, "n_entities", s.n_entities, "synth");
    read(*it, "n_relations", s.n_relations, "synth");
    read(*it, "triple_density", s.triple_density, "synth");
    read(*it, "attr_per_entity", s.attr_per_entity, "synth");
    read(*it, "attr_vocab", s.attr_vocab, "synth");
    read(*it, "img_per_entity", s.img_per_entity, "synth");
    read(*it, "d_img", s.d_img, "synth");
    read(*it, "noise_level", s.noise_level, "synth");
    read(*it, "rewire_fraction", s.rewire_fraction, "synth");
    read(*it, "missing_visual_fraction", s.missing_visual_fraction, "synth");
    read(*it, "missing_attr_fraction", s.missing_attr_fraction, "synth");
    read(*it, "rng_seed", s.rng_seed, "synth");
  }
  if (auto it = doc.find("align"); it != doc.end()) {
    check_keys(*it, "align", {"k"});
    read(*it, "k", c.align_k, "align");
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

json to_json(const RunConfig& c) {
  const auto& d = c.data;
  const auto& t = c.experiment.train;
  const auto& m = c.experiment.model;
  const auto& s = c.synth;
  auto path = [](const std::filesystem::path& p) { return p.empty() ? json(nullptr) : json(p.generic_string()); };
  json doc;
  doc["data"] = {{"triples_s", path(d.triples_s)}, {"triples_t", path(d.triples_t)}, {"attrs_s", path(d.attrs_s)},
                 {"attrs_t", path(d.attrs_t)},     {"visuals_s", path(d.visuals_s)}, {"visuals_t", path(d.visuals_t)},
                 {"seeds", path(d.seeds)},         {"name_embeddings", path(d.name_embeddings)}};
  doc["out"] = c.out.generic_string();
  doc["train"] = {{"epochs", t.epochs},
                  {"learning_rate", t.learning_rate},
                  {"margin", t.margin},
                  {"negatives", t.negatives},
                  {"rng_seed", t.rng_seed},
                  {"train_fraction", t.train_fraction},
                  {"eval_every", t.eval_every},
                  {"eval_samples", t.eval_samples},
                  {"normalize_fusion", t.normalize_fusion}};
  doc["fusion"] = {{"entity", t.fusion.entity}, {"visual", t.fusion.visual}, {"attribute", t.fusion.attribute}};
  doc["ablation"] = {{"use_attr", t.ablation.use_attr},
                     {"use_vis", t.ablation.use_vis},
                     {"use_cmci", t.ablation.use_cmci},
                     {"use_sm", t.ablation.use_sm}};
  doc["model"] = {{"dim", m.dim},
                  {"attention_dim", m.attention_dim},
                  {"layers", m.layers},
                  {"name_dim", m.name_dim},
                  {"value_features", m.value_features},
                  {"leaky_slope", m.leaky_slope},
                  {"impute_sigma", std::string(num::to_string(m.impute_sigma))},
                  {"init_sigma", std::string(num::to_string(m.init_sigma))},
                  {"gat_sigma", std::string(num::to_string(m.gat_sigma))},
                  {"impute_norm", std::string(cmci::to_string(m.impute_norm))},
                  {"normalize_relations", m.normalize_relations},
                  {"dense_readout", m.dense_readout}};
  doc["attribute"] = {{"weight_name", c.experiment.attribute.weight_name},
                      {"weight_value", c.experiment.attribute.weight_value},
                      {"epsilon", c.experiment.attribute.epsilon}};
  doc["visual"] = {{"normalize", c.experiment.visual_normalize}};
  doc["synth"] = {{"n_entities", s.n_entities},
                  {"n_relations", s.n_relations},
                  {"triple_density", s.triple_density},
                  {"attr_per_entity", s.attr_per_entity},
                  {"attr_vocab", s.attr_vocab},
                  {"img_per_entity", s.img_per_entity},
                  {"d_img", s.d_img},
                  {"noise_level", s.noise_level},
                  {"rewire_fraction", s.rewire_fraction},
                  {"missing_visual_fraction", s.missing_visual_fraction},
                  {"missing_attr_fraction", s.missing_attr_fraction},
                  {"rng_seed", s.rng_seed}};
  doc["align"] = {{"k", c.align_k}};
  return doc;
}

namespace {

void require_file(const std::filesystem::path& p, const char* what) {
  if (p.empty()) throw ConfigError(std::string("config is missing data.") + what);
  if (!std::filesystem::is_regular_file(p)) throw IoError(std::string(what) + " file not found: " + p.string());
}

}  // namespace

LoadedData load_data(const RunConfig& c) {
  const auto& d = c.data;
  require_file(d.triples_s, "triples_s");
  require_file(d.triples_t, "triples_t");
  require_file(d.seeds, "seeds");
  for (auto [p, what] : {std::pair{&d.attrs_s, "attrs_s"}, {&d.attrs_t, "attrs_t"}, {&d.visuals_s, "visuals_s"},
                         {&d.visuals_t, "visuals_t"}, {&d.name_embeddings, "name_embeddings"}}) {
    if (!p->empty()) require_file(*p, what);
  }
  LoadedData out;
  out.data.source = kg::load_graph({d.triples_s, d.attrs_s, d.visuals_s}, kg::Side::source);
  out.data.target = kg::load_graph({d.triples_t, d.attrs_t, d.visuals_t}, kg::Side::target);
  if (!d.name_embeddings.empty()) out.data.names = kg::load_name_embeddings(d.name_embeddings);
  try {
    out.data.seeds = kg::load_seeds(d.seeds, out.data.source.entities, out.data.target.entities);
  } catch (const ValidationError& e) {
    out.report.issues.push_back({kg::IssueKind::dangling_id, e.what()});
    return out;
  }
  out.report = kg::validate_pair(out.data.source, out.data.target, out.data.seeds);
  return out;
}

}  // namespace mcsff::cli
