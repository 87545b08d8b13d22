#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "msc/dictionary.hpp"
#include "msc/errors.hpp"
#include "msc/experiments.hpp"
#include "msc/matrix.hpp"
#include "msc/multimodal.hpp"
#include "msc/solvers.hpp"

namespace {

using nlohmann::json;

// Config files are JSON objects with keys matching the command's flags;
// explicit flags win. Unknown keys are rejected rather than ignored.
json load_config(const std::string& path, const std::vector<std::string>& allowed) {
  if (path.empty()) return json::object();
  std::ifstream is(path);
  if (!is) throw msc::format_error("config: cannot open '" + path + "'");
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw msc::argument_error(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw msc::argument_error("config: top level must be an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const auto& a : allowed) ok = ok || a == key;
    if (!ok) throw msc::argument_error("config: unknown key '" + key + "'");
  }
  return j;
}

msc::Matrix load_input(const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
    // CSV rows become matrix rows; columns stay examples.
    return msc::load_csv(path);
  }
  return msc::load_matrix(path);
}

std::pair<std::string, std::string> split_modality(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size()) {
    throw msc::argument_error("--modality expects NAME=PATH, got '" + arg + "'");
  }
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

void ensure_out_dir(const std::string& out) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw msc::format_error("cannot create output directory '" + out + "'");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw msc::format_error("cannot open '" + path + "'");
  os << text;
}

struct TrainDictArgs {
  std::vector<std::string> modalities;
  std::string config;
  std::string method = "online";
  std::size_t k = 0;
  double lambda = 0.1;
  std::size_t sparsity = 0;
  int epochs = 15;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  std::string out = "out";
};

int cmd_train_dict(TrainDictArgs args, const CLI::App* sub) {
  const json cfg = load_config(args.config, {"modalities", "method", "k", "lambda", "sparsity",
                                             "epochs", "batch_size", "seed", "out"});
  auto flag_given = [&](const std::string& name) { return sub->count(name) > 0; };
  if (cfg.contains("method") && !flag_given("--method")) args.method = cfg["method"].get<std::string>();
  if (cfg.contains("k") && !flag_given("--k")) args.k = cfg["k"].get<std::size_t>();
  if (cfg.contains("lambda") && !flag_given("--lambda")) args.lambda = cfg["lambda"].get<double>();
  if (cfg.contains("sparsity") && !flag_given("--sparsity")) args.sparsity = cfg["sparsity"].get<std::size_t>();
  if (cfg.contains("epochs") && !flag_given("--epochs")) args.epochs = cfg["epochs"].get<int>();
  if (cfg.contains("batch_size") && !flag_given("--batch-size")) {
    args.batch_size = cfg["batch_size"].get<std::size_t>();
  }
  if (cfg.contains("seed") && !flag_given("--seed")) args.seed = cfg["seed"].get<std::uint64_t>();
  if (cfg.contains("out") && !flag_given("--out")) args.out = cfg["out"].get<std::string>();
  if (cfg.contains("modalities") && args.modalities.empty()) {
    for (const auto& [name, path] : cfg["modalities"].items()) {
      args.modalities.push_back(name + "=" + path.get<std::string>());
    }
  }

  if (args.modalities.empty()) throw msc::argument_error("train-dict: at least one --modality required");
  if (args.k == 0) throw msc::argument_error("train-dict: --k required");

  std::vector<std::pair<std::string, msc::Matrix>> data;
  for (const auto& m : args.modalities) {
    auto [name, path] = split_modality(m);
    data.emplace_back(name, load_input(path));
  }

  msc::TrainConfig train;
  train.num_atoms = args.k;
  train.epochs = args.epochs;
  train.batch_size = args.batch_size;
  train.seed = args.seed;

  ensure_out_dir(args.out);
  const std::string stem = args.out + "/dict";

  std::vector<double> trace;
  if (data.size() == 1) {
    if (args.method == "ksvd") {
      if (args.sparsity == 0) throw msc::argument_error("train-dict: ksvd needs --sparsity");
      train.method = msc::TrainMethod::KSVD;
      train.solver = msc::SolverConfig{msc::Regularizer::l0(args.sparsity), 1000, 1e-7};
      msc::KsvdResult result = msc::train_ksvd(data[0].second, train);
      trace = result.loss_trace;
      msc::DictionaryMeta meta;
      meta.solver = train.solver;
      meta.seed = args.seed;
      msc::save_dictionary(result.dictionary, meta, stem);
    } else if (args.method == "online") {
      train.method = msc::TrainMethod::Online;
      train.solver = msc::SolverConfig{msc::Regularizer::l1(args.lambda), 20000, 1e-7};
      msc::OnlineResult result = msc::train_online(data[0].second, train);
      trace = result.loss_trace;
      msc::DictionaryMeta meta;
      meta.solver = train.solver;
      meta.seed = args.seed;
      msc::save_dictionary(result.dictionary, meta, stem);
    } else {
      throw msc::argument_error("train-dict: unknown method '" + args.method + "'");
    }
  } else {
    if (args.method == "ksvd") throw msc::argument_error("train-dict: joint training is online L1 only");
    train.method = msc::TrainMethod::Online;
    train.solver = msc::SolverConfig{msc::Regularizer::l1(args.lambda), 20000, 1e-7};
    std::vector<msc::NamedData> named;
    for (const auto& [name, mat] : data) named.push_back({name, &mat});
    const msc::JointModel model = msc::train_joint(named, train);
    msc::save_joint(model, stem);
    // The online trace is internal to train_joint; report the final model
    // objective per epoch is not retained there, so retrain trace printing
    // applies to unimodal runs only.
  }

  std::cout << "wrote " << stem << ".msc and " << stem << ".json\n";
  if (!trace.empty()) {
    std::cout << "loss trace:";
    for (double v : trace) std::cout << ' ' << v;
    std::cout << '\n';
  }
  return 0;
}

struct EncodeArgs {
  std::string dict;
  std::vector<std::string> modalities;
  std::string cross_modal;
  std::string config;
  std::string out = "out";
};

int cmd_encode(EncodeArgs args, const CLI::App* sub) {
  const json cfg = load_config(args.config, {"dict", "input", "cross_modal", "out"});
  auto flag_given = [&](const std::string& name) { return sub->count(name) > 0; };
  if (cfg.contains("dict") && !flag_given("--dict")) args.dict = cfg["dict"].get<std::string>();
  if (cfg.contains("cross_modal") && !flag_given("--cross-modal")) {
    args.cross_modal = cfg["cross_modal"].get<std::string>();
  }
  if (cfg.contains("out") && !flag_given("--out")) args.out = cfg["out"].get<std::string>();
  if (cfg.contains("input") && args.modalities.empty()) {
    args.modalities.push_back("x=" + cfg["input"].get<std::string>());
  }

  if (args.dict.empty()) throw msc::argument_error("encode: --dict required");
  if (args.modalities.size() != 1) throw msc::argument_error("encode: exactly one --modality required");
  const msc::Matrix xs = load_input(split_modality(args.modalities[0]).second);

  std::vector<msc::SparseCode> codes;
  std::size_t num_atoms = 0;
  if (!args.cross_modal.empty()) {
    const msc::JointModel model = [&] {
      try {
        return msc::load_joint(args.dict);
      } catch (const msc::format_error& e) {
        // A unimodal dictionary has no blocks: that is a usage error, not a
        // broken file.
        throw msc::argument_error(std::string("encode: --cross-modal needs a joint dictionary (") +
                                  e.what() + ")");
      }
    }();
    codes.reserve(xs.cols());
    for (std::size_t j = 0; j < xs.cols(); ++j) {
      codes.push_back(msc::cross_encode(xs.col_vector(j), model, args.cross_modal));
    }
    num_atoms = model.dictionary.num_atoms();
  } else {
    auto [dict, meta] = msc::load_dictionary(args.dict);
    codes = msc::batch_encode(xs, dict, meta.solver);
    num_atoms = dict.num_atoms();
  }

  msc::Matrix dense(num_atoms, xs.cols());
  for (std::size_t j = 0; j < codes.size(); ++j) {
    for (const auto& [idx, val] : codes[j].entries()) dense(idx, j) = val;
  }
  ensure_out_dir(args.out);
  msc::save_matrix(dense, args.out + "/codes.msc");
  std::cout << "wrote " << args.out << "/codes.msc (" << dense.rows() << "x" << dense.cols() << ")\n";
  return 0;
}

struct DenoiseArgs {
  std::string config;
  std::vector<double> sigmas;
  std::size_t k = 0;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::string out = "out";
};

int cmd_denoise(DenoiseArgs args, const CLI::App* sub) {
  const json cfg = load_config(args.config, {"train_images", "test_images", "image_width",
                                             "image_height", "patch", "num_atoms", "lambda", "epochs",
                                             "batch_size", "sigmas", "repeats", "seed", "out"});
  auto flag_given = [&](const std::string& name) { return sub->count(name) > 0; };

  msc::DenoiseConfig dc;
  if (cfg.contains("train_images")) dc.train_images = cfg["train_images"].get<std::size_t>();
  if (cfg.contains("test_images")) dc.test_images = cfg["test_images"].get<std::size_t>();
  if (cfg.contains("image_width")) dc.image_width = cfg["image_width"].get<std::size_t>();
  if (cfg.contains("image_height")) dc.image_height = cfg["image_height"].get<std::size_t>();
  if (cfg.contains("patch")) dc.patch = cfg["patch"].get<std::size_t>();
  if (cfg.contains("num_atoms")) dc.num_atoms = cfg["num_atoms"].get<std::size_t>();
  if (cfg.contains("lambda")) dc.lambda = cfg["lambda"].get<double>();
  if (cfg.contains("epochs")) dc.epochs = cfg["epochs"].get<int>();
  if (cfg.contains("batch_size")) dc.batch_size = cfg["batch_size"].get<std::size_t>();
  if (cfg.contains("sigmas")) dc.sigmas = cfg["sigmas"].get<std::vector<double>>();
  if (cfg.contains("repeats")) dc.repeats = cfg["repeats"].get<std::size_t>();
  if (cfg.contains("seed")) dc.seed = cfg["seed"].get<std::uint64_t>();

  std::string out = args.out;
  if (cfg.contains("out") && !flag_given("--out")) out = cfg["out"].get<std::string>();
  if (flag_given("--sigma")) dc.sigmas = args.sigmas;
  if (flag_given("--k")) dc.num_atoms = args.k;
  if (flag_given("--lambda")) dc.lambda = args.lambda;
  if (flag_given("--seed")) dc.seed = args.seed;

  const auto start = std::chrono::steady_clock::now();
  const msc::DenoiseReport report = msc::run_denoise(dc);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ensure_out_dir(out);
  write_text(out + "/report.json", msc::to_json(report).dump(2) + "\n");
  const std::string table = msc::to_table(report);
  write_text(out + "/report.txt", table);
  std::cout << table;
  std::cout << "elapsed: " << elapsed << " s (not part of the report files)\n";
  return 0;
}

struct ClassifyArgs {
  std::string config;
  std::vector<std::string> schemes;
  std::size_t k = 0;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  bool deep = false;
  std::string out = "out";
};

int cmd_synth_classify(ClassifyArgs args, const CLI::App* sub) {
  const json cfg = load_config(
      args.config, {"nonlinear", "train_examples", "test_examples", "dim_a", "dim_b", "signal_a",
                    "signal_b", "noise_a", "noise_b", "clutter_a", "clutter_b", "num_atoms",
                    "lambda", "lambda_joint_scale", "dict_epochs", "frames", "deep_atoms_l1",
                    "deep_atoms_l2", "deep_lambda_l1", "deep_lambda_l2", "svm_c_grid", "svm_epochs",
                    "schemes", "repeats", "draws", "seed", "out"});
  auto flag_given = [&](const std::string& name) { return sub->count(name) > 0; };

  msc::ClassifyConfig cc;
  if (cfg.contains("nonlinear")) cc.nonlinear = cfg["nonlinear"].get<bool>();
  if (cfg.contains("train_examples")) cc.train_examples = cfg["train_examples"].get<std::size_t>();
  if (cfg.contains("test_examples")) cc.test_examples = cfg["test_examples"].get<std::size_t>();
  if (cfg.contains("dim_a")) cc.dim_a = cfg["dim_a"].get<std::size_t>();
  if (cfg.contains("dim_b")) cc.dim_b = cfg["dim_b"].get<std::size_t>();
  if (cfg.contains("signal_a")) cc.signal_a = cfg["signal_a"].get<double>();
  if (cfg.contains("signal_b")) cc.signal_b = cfg["signal_b"].get<double>();
  if (cfg.contains("noise_a")) cc.noise_a = cfg["noise_a"].get<double>();
  if (cfg.contains("noise_b")) cc.noise_b = cfg["noise_b"].get<double>();
  if (cfg.contains("clutter_a")) cc.clutter_a = cfg["clutter_a"].get<double>();
  if (cfg.contains("clutter_b")) cc.clutter_b = cfg["clutter_b"].get<double>();
  if (cfg.contains("num_atoms")) cc.num_atoms = cfg["num_atoms"].get<std::size_t>();
  if (cfg.contains("lambda")) cc.lambda = cfg["lambda"].get<double>();
  if (cfg.contains("lambda_joint_scale")) {
    cc.lambda_joint_scale = cfg["lambda_joint_scale"].get<double>();
  }
  if (cfg.contains("dict_epochs")) cc.dict_epochs = cfg["dict_epochs"].get<int>();
  if (cfg.contains("frames")) cc.frames = cfg["frames"].get<std::size_t>();
  if (cfg.contains("deep_atoms_l1")) cc.deep_atoms_l1 = cfg["deep_atoms_l1"].get<std::size_t>();
  if (cfg.contains("deep_atoms_l2")) cc.deep_atoms_l2 = cfg["deep_atoms_l2"].get<std::size_t>();
  if (cfg.contains("deep_lambda_l1")) cc.deep_lambda_l1 = cfg["deep_lambda_l1"].get<double>();
  if (cfg.contains("deep_lambda_l2")) cc.deep_lambda_l2 = cfg["deep_lambda_l2"].get<double>();
  if (cfg.contains("svm_c_grid")) cc.svm_c_grid = cfg["svm_c_grid"].get<std::vector<double>>();
  if (cfg.contains("svm_epochs")) cc.svm_epochs = cfg["svm_epochs"].get<int>();
  if (cfg.contains("schemes")) cc.schemes = cfg["schemes"].get<std::vector<std::string>>();
  if (cfg.contains("repeats")) cc.repeats = cfg["repeats"].get<std::size_t>();
  if (cfg.contains("draws")) cc.draws = cfg["draws"].get<std::size_t>();
  if (cfg.contains("seed")) cc.seed = cfg["seed"].get<std::uint64_t>();

  std::string out = args.out;
  if (cfg.contains("out") && !flag_given("--out")) out = cfg["out"].get<std::string>();
  if (args.deep) {
    cc.nonlinear = true;
    if (!cfg.contains("frames")) cc.frames = 6;
  }
  if (flag_given("--schemes")) cc.schemes = args.schemes;
  if (flag_given("--k")) cc.num_atoms = args.k;
  if (flag_given("--lambda")) cc.lambda = args.lambda;
  if (flag_given("--seed")) cc.seed = args.seed;

  const auto start = std::chrono::steady_clock::now();
  const msc::ClassifyReport report = msc::run_synth_classify(cc);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ensure_out_dir(out);
  write_text(out + "/report.json", msc::to_json(report).dump(2) + "\n");
  const std::string table = msc::to_table(report);
  write_text(out + "/report.txt", table);
  std::cout << table;
  std::cout << "elapsed: " << elapsed << " s (not part of the report files)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multimodal sparse coding workbench"};
  app.require_subcommand(1);

  TrainDictArgs td;
  CLI::App* train = app.add_subcommand("train-dict", "train a unimodal or joint dictionary");
  train->add_option("--modality", td.modalities, "NAME=PATH input matrix, repeatable");
  train->add_option("--config", td.config, "JSON config file");
  train->add_option("--method", td.method, "online or ksvd (unimodal only)");
  train->add_option("--k", td.k, "number of atoms");
  train->add_option("--lambda", td.lambda, "L1 weight");
  train->add_option("--sparsity", td.sparsity, "L0 budget for ksvd");
  train->add_option("--epochs", td.epochs, "training epochs");
  train->add_option("--batch-size", td.batch_size, "online minibatch size");
  train->add_option("--seed", td.seed, "random seed");
  train->add_option("--out", td.out, "output directory");

  EncodeArgs en;
  CLI::App* encode = app.add_subcommand("encode", "encode data against a trained dictionary");
  encode->add_option("--dict", en.dict, "dictionary stem (without extension)");
  encode->add_option("--modality", en.modalities, "NAME=PATH input matrix");
  encode->add_option("--cross-modal", en.cross_modal, "encode against this modality's block");
  encode->add_option("--config", en.config, "JSON config file");
  encode->add_option("--out", en.out, "output directory");

  DenoiseArgs dn;
  CLI::App* denoise = app.add_subcommand("denoise", "cross-modal denoising experiment");
  denoise->add_option("--config", dn.config, "JSON config file");
  denoise->add_option("--sigma", dn.sigmas, "noise variances")->delimiter(',');
  denoise->add_option("--k", dn.k, "number of atoms");
  denoise->add_option("--lambda", dn.lambda, "joint L1 weight");
  denoise->add_option("--seed", dn.seed, "random seed");
  denoise->add_option("--out", dn.out, "output directory");

  ClassifyArgs sc;
  CLI::App* classify = app.add_subcommand("synth-classify", "synthetic feature-scheme comparison");
  classify->add_option("--config", sc.config, "JSON config file");
  classify->add_option("--schemes", sc.schemes, "scheme list")->delimiter(',');
  classify->add_option("--k", sc.k, "atoms per shallow dictionary");
  classify->add_option("--lambda", sc.lambda, "L1 weight");
  classify->add_option("--seed", sc.seed, "random seed");
  classify->add_flag("--deep", sc.deep, "nonlinear benchmark with deep schemes");
  classify->add_option("--out", sc.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) return cmd_train_dict(td, train);
    if (encode->parsed()) return cmd_encode(en, encode);
    if (denoise->parsed()) return cmd_denoise(dn, denoise);
    if (classify->parsed()) return cmd_synth_classify(sc, classify);
  } catch (const msc::argument_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const msc::format_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const msc::numeric_error& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
