#include "msc/deep.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <utility>

#include <json.hpp>

#include "msc/errors.hpp"
#include "msc/solvers.hpp"

namespace msc {

std::vector<Vector> pool(const std::vector<Vector>& seq, const PoolingConfig& cfg) {
  if (seq.empty()) throw argument_error("pool: empty sequence");
  if (cfg.factor == 0) throw argument_error("pool: factor must be positive");
  const std::size_t dim = seq.front().size();
  for (const auto& v : seq) {
    if (v.size() != dim) throw argument_error("pool: sequence vectors disagree in dimension");
  }

  const std::size_t stride = cfg.effective_stride();
  std::vector<Vector> out;
  for (std::size_t start = 0; start < seq.size(); start += stride) {
    const std::size_t stop = std::min(start + cfg.factor, seq.size());
    Vector w(dim, 0.0);
    if (cfg.kind == PoolingConfig::Kind::Average) {
      for (std::size_t t = start; t < stop; ++t) axpy(1.0, seq[t].data(), w.data(), dim);
      scale(1.0 / static_cast<double>(stop - start), w.data(), dim);
    } else {
      for (std::size_t t = start; t < stop; ++t) {
        for (std::size_t i = 0; i < dim; ++i) {
          if (std::abs(seq[t][i]) > std::abs(w[i])) w[i] = seq[t][i];
        }
      }
    }
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<Vector> pool(const std::vector<SparseCode>& seq, const PoolingConfig& cfg) {
  std::vector<Vector> dense;
  dense.reserve(seq.size());
  for (const auto& c : seq) dense.push_back(c.dense());
  return pool(dense, cfg);
}

namespace {

using Groups = std::vector<std::vector<Vector>>;

Matrix flatten_groups(const Groups& groups) {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.size();
  const std::size_t dim = groups.front().front().size();
  Matrix out(dim, n);
  std::size_t j = 0;
  for (const auto& g : groups) {
    for (const auto& v : g) out.set_col(j++, v);
  }
  return out;
}

// Trains the given layers greedily: fit a dictionary on all current frames,
// encode, pool within each group, feed the pooled vectors onward.
std::vector<DeepModel::Layer> run_layer_stack(Groups& groups, const std::vector<LayerConfig>& layers,
                                              const std::string& tag) {
  std::vector<DeepModel::Layer> trained;
  for (const auto& layer : layers) {
    std::size_t longest = 0;
    for (const auto& g : groups) longest = std::max(longest, g.size());
    if (layer.pooling.factor > longest) {
      throw argument_error("train_stack: " + tag + " pooling factor exceeds every example's code count");
    }

    OnlineResult fit = train_online(flatten_groups(groups), layer.train);
    Dictionary dict = std::move(fit.dictionary);

    Groups next(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
      std::vector<Vector> codes;
      codes.reserve(groups[g].size());
      for (const auto& v : groups[g]) codes.push_back(lasso_encode(v, dict, layer.train.solver).dense());
      next[g] = pool(codes, layer.pooling);
    }
    groups = std::move(next);
    trained.push_back({std::move(dict), layer.train.solver, layer.pooling});
  }
  return trained;
}

Groups split_groups(const Matrix& xs, const std::vector<std::size_t>& group_sizes) {
  Groups groups(group_sizes.size());
  std::size_t j = 0;
  for (std::size_t g = 0; g < group_sizes.size(); ++g) {
    groups[g].reserve(group_sizes[g]);
    for (std::size_t t = 0; t < group_sizes[g]; ++t) groups[g].push_back(xs.col_vector(j++));
  }
  return groups;
}

Groups concat_groups(const Groups& ga, const Groups& gb) {
  Groups out(ga.size());
  for (std::size_t g = 0; g < ga.size(); ++g) {
    if (ga[g].size() != gb[g].size()) {
      throw argument_error("deep stack: modality sequences disagree after pooling");
    }
    out[g].reserve(ga[g].size());
    for (std::size_t t = 0; t < ga[g].size(); ++t) {
      Vector v = ga[g][t];
      v.insert(v.end(), gb[g][t].begin(), gb[g][t].end());
      out[g].push_back(std::move(v));
    }
  }
  return out;
}

}  // namespace

DeepModel train_stack(const Matrix& xsa, const Matrix& xsb, const StackConfig& cfg,
                      const std::vector<std::size_t>& group_sizes) {
  if (xsa.empty() || xsb.empty()) throw argument_error("train_stack: empty modality data");
  if (xsa.cols() != xsb.cols()) throw argument_error("train_stack: modalities must pair the same frame count");
  if (cfg.per_modality_layers.size() != 2) {
    throw argument_error("train_stack: exactly two per-modality layer stacks expected");
  }
  if (cfg.joint_layers.empty()) throw argument_error("train_stack: at least one joint layer required");
  if (group_sizes.empty()) throw argument_error("train_stack: grouping metadata required");
  std::size_t total = 0;
  for (std::size_t s : group_sizes) {
    if (s == 0) throw argument_error("train_stack: empty example group");
    total += s;
  }
  if (total != xsa.cols()) throw argument_error("train_stack: group sizes do not sum to the frame count");

  DeepModel model;
  Groups ga = split_groups(xsa, group_sizes);
  Groups gb = split_groups(xsb, group_sizes);

  model.modality_layers.emplace_back(cfg.per_modality_layers[0].first,
                                     run_layer_stack(ga, cfg.per_modality_layers[0].second, "unimodal"));
  model.modality_layers.emplace_back(cfg.per_modality_layers[1].first,
                                     run_layer_stack(gb, cfg.per_modality_layers[1].second, "unimodal"));

  Groups joint = concat_groups(ga, gb);
  model.joint_layers = run_layer_stack(joint, cfg.joint_layers, "joint");
  return model;
}

namespace {

std::vector<Vector> forward_layers(std::vector<Vector> seq, const std::vector<DeepModel::Layer>& layers) {
  for (const auto& layer : layers) {
    std::vector<Vector> codes;
    codes.reserve(seq.size());
    for (const auto& v : seq) codes.push_back(lasso_encode(v, layer.dictionary, layer.solver).dense());
    seq = pool(codes, layer.pooling);
  }
  return seq;
}

}  // namespace

Vector forward(const std::vector<Vector>& xa_seq, const std::vector<Vector>& xb_seq,
               const DeepModel& model) {
  if (xa_seq.empty() || xb_seq.empty()) throw argument_error("forward: empty input sequence");
  if (model.modality_layers.size() != 2) throw argument_error("forward: model carries two modalities");

  std::vector<Vector> ha = forward_layers(xa_seq, model.modality_layers[0].second);
  std::vector<Vector> hb = forward_layers(xb_seq, model.modality_layers[1].second);
  if (ha.size() != hb.size()) throw argument_error("forward: modality sequences disagree after pooling");

  std::vector<Vector> joint;
  joint.reserve(ha.size());
  for (std::size_t t = 0; t < ha.size(); ++t) {
    Vector v = ha[t];
    v.insert(v.end(), hb[t].begin(), hb[t].end());
    joint.push_back(std::move(v));
  }

  joint = forward_layers(std::move(joint), model.joint_layers);
  if (joint.size() > 1) {
    PoolingConfig last;
    last.kind = model.joint_layers.empty() ? PoolingConfig::Kind::Max : model.joint_layers.back().pooling.kind;
    last.factor = joint.size();
    joint = pool(joint, last);
  }
  return joint.front();
}

namespace {

nlohmann::ordered_json pooling_to_json(const PoolingConfig& p) {
  return {{"kind", p.kind == PoolingConfig::Kind::Max ? "max" : "average"},
          {"factor", p.factor},
          {"stride", p.effective_stride()}};
}

PoolingConfig pooling_from_json(const nlohmann::json& j) {
  PoolingConfig p;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "max") {
    p.kind = PoolingConfig::Kind::Max;
  } else if (kind == "average") {
    p.kind = PoolingConfig::Kind::Average;
  } else {
    throw format_error("stack manifest: unknown pooling kind '" + kind + "'");
  }
  p.factor = j.at("factor").get<std::size_t>();
  p.stride = j.at("stride").get<std::size_t>();
  return p;
}

void save_layers(const std::vector<DeepModel::Layer>& layers, const std::string& prefix,
                 nlohmann::ordered_json& out) {
  auto arr = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    DictionaryMeta meta;
    meta.solver = layers[i].solver;
    save_dictionary(layers[i].dictionary, meta, prefix + std::to_string(i));
    arr.push_back({{"pooling", pooling_to_json(layers[i].pooling)}});
  }
  out = std::move(arr);
}

std::vector<DeepModel::Layer> load_layers(const nlohmann::json& arr, const std::string& prefix) {
  std::vector<DeepModel::Layer> layers;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    auto [dict, meta] = load_dictionary(prefix + std::to_string(i));
    layers.push_back({std::move(dict), meta.solver, pooling_from_json(arr[i].at("pooling"))});
  }
  return layers;
}

}  // namespace

void save_stack(const DeepModel& model, const std::string& stem) {
  nlohmann::ordered_json manifest;
  auto modalities = nlohmann::ordered_json::array();
  for (const auto& [name, layers] : model.modality_layers) {
    nlohmann::ordered_json entry;
    entry["name"] = name;
    save_layers(layers, stem + "_" + name + "_", entry["layers"]);
    modalities.push_back(std::move(entry));
  }
  manifest["modalities"] = std::move(modalities);
  save_layers(model.joint_layers, stem + "_joint_", manifest["joint_layers"]);

  std::ofstream os(stem + ".json", std::ios::trunc);
  if (!os) throw format_error("save_stack: cannot open '" + stem + ".json'");
  os << manifest.dump(2) << '\n';
}

DeepModel load_stack(const std::string& stem) {
  std::ifstream is(stem + ".json");
  if (!is) throw format_error("load_stack: cannot open '" + stem + ".json'");
  nlohmann::json manifest;
  try {
    is >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("load_stack: bad manifest: ") + e.what());
  }

  DeepModel model;
  for (const auto& entry : manifest.at("modalities")) {
    const std::string name = entry.at("name").get<std::string>();
    model.modality_layers.emplace_back(name, load_layers(entry.at("layers"), stem + "_" + name + "_"));
  }
  model.joint_layers = load_layers(manifest.at("joint_layers"), stem + "_joint_");
  return model;
}

}  // namespace msc
