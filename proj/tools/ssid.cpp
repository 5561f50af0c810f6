// Command-line front end: data generation, training, evaluation and
// inference on single line images.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "ssid/eval.hpp"
#include "ssid/image_io.hpp"
#include "ssid/synthdata.hpp"
#include "ssid/train.hpp"

namespace {

using namespace ssid;

Tensor load_line(const std::string& path) {
  Tensor t = from_gray(read_pgm(path));
  if (t.dim(0) != kLineHeight) throw std::runtime_error(path + ": line images must be 40 px high");
  return t;
}

std::string transcript_text(const std::vector<int>& glyphs) {
  std::string s;
  for (std::size_t i = 0; i < glyphs.size(); ++i) s += (i ? " " : "") + std::to_string(glyphs[i]);
  return s;
}

std::string script_name(const ScriptCatalog& catalog, int s) {
  return s == kUndetermined ? "UNDETERMINED" : catalog.scripts()[static_cast<std::size_t>(s)];
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Line-level script identification and script-selecting OCR"};
  app.require_subcommand(1);

  std::string config, out, data, model_kind, scriptid, ocr_dir, report, image, split = "eval";
  std::uint64_t seed = 0;
  bool oracle = false;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic multi-script corpus");
  gen->add_option("--config", config, "Corpus config (INI)")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out, "Output dataset directory")->required();

  auto* train = app.add_subcommand("train", "Train a script-id, Base or OCR model");
  train->add_option("--config", config, "Training config (INI)")->required()->check(CLI::ExistingFile);
  train->add_option("--data", data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--model", model_kind, "base|max|mean|gate|lstm|ocr:<script>")->required();
  train->add_option("--out", out, "Checkpoint path")->required();
  auto* seed_opt = train->add_option("--seed", seed, "Override the config seed");

  auto* eval = app.add_subcommand("eval", "Evaluate script id and the OCR pipeline");
  eval->add_option("--data", data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--split", split, "Manifest split (eval, eval_distractor, train)");
  eval->add_option("--scriptid", scriptid, "Script-id checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--ocr-dir", ocr_dir, "Directory of <script>.ckpt OCR models")->required()->check(CLI::ExistingDirectory);
  eval->add_flag("--oracle", oracle, "Recognize with the true script");
  eval->add_option("--report", report, "Report path (TSV)")->required();

  auto* classify = app.add_subcommand("classify", "Print the script posterior of one line");
  classify->add_option("--scriptid", scriptid, "Script-id checkpoint")->required()->check(CLI::ExistingFile);
  classify->add_option("--image", image, "Line image (PGM)")->required()->check(CLI::ExistingFile);

  auto* rec = app.add_subcommand("recognize", "Identify the script, then recognize the line");
  rec->add_option("--scriptid", scriptid, "Script-id checkpoint")->required()->check(CLI::ExistingFile);
  rec->add_option("--ocr-dir", ocr_dir, "Directory of <script>.ckpt OCR models")->required()->check(CLI::ExistingDirectory);
  rec->add_option("--image", image, "Line image (PGM)")->required()->check(CLI::ExistingFile);

  auto* dump = app.add_subcommand("dump-activations", "Write frame-logit and gate maps as PGM");
  dump->add_option("--scriptid", scriptid, "Max, mean or gate checkpoint")->required()->check(CLI::ExistingFile);
  dump->add_option("--image", image, "Line image (PGM)")->required()->check(CLI::ExistingFile);
  dump->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const CorpusConfig cfg = CorpusConfig::from_ini(IniConfig::load_file(config));
      generate_dataset(cfg, out);
      std::cout << "wrote dataset to " << out << '\n';
    } else if (train->parsed()) {
      TrainConfig cfg = TrainConfig::from_ini(IniConfig::load_file(config));
      if (*seed_opt) cfg.seed = seed;
      const Dataset ds = load_dataset(data, "train");
      TrainStats stats;
      const Model m = train_model(cfg, ModelSpec::parse(model_kind), ds, &std::cerr, &stats);
      m.save_file(out);
      std::cout << "trained " << model_kind << ": " << stats.steps << " steps, " << stats.samples << " samples, "
                << stats.skipped_infeasible << " skipped; wrote " << out << '\n';
    } else if (eval->parsed()) {
      const Dataset ds = load_dataset(data, split);
      const ScriptIdentifier id(Model::load_file(scriptid));
      const OcrModels ocr = load_ocr_models(ocr_dir, ds.catalog);
      const EvalReport r = evaluate(ds, id, ocr, oracle);
      std::ofstream os(report);
      if (!os) throw std::runtime_error("cannot write " + report);
      r.write_tsv(os);
      std::cout << "error_rate " << r.error_rate << " pipeline_cer " << r.pipeline_cer << " oracle_cer "
                << r.oracle_cer << " delta_cer " << r.delta_cer << '\n';
    } else if (classify->parsed()) {
      const ScriptIdentifier id(Model::load_file(scriptid));
      const Tensor img = load_line(image);
      if (id.is_baseline()) {
        // Base has no posterior; report the vote decision as a point mass.
        const int s = id.identify(img);
        for (int k = 0; k < id.catalog().num_scripts(); ++k) {
          std::cout << id.catalog().scripts()[static_cast<std::size_t>(k)] << '\t' << (k == s ? 1 : 0) << '\n';
        }
      } else {
        const ScriptPosterior p = id.posterior(img);
        std::cout << std::setprecision(9);
        for (std::size_t k = 0; k < p.probabilities.size(); ++k) {
          std::cout << id.catalog().scripts()[k] << '\t' << p.probabilities[k] << '\n';
        }
      }
    } else if (rec->parsed()) {
      const ScriptIdentifier id(Model::load_file(scriptid));
      const OcrModels ocr = load_ocr_models(ocr_dir, id.catalog());
      const Recognition r = recognize(load_line(image), id, ocr);
      std::cout << script_name(id.catalog(), r.script) << '\t' << transcript_text(r.transcript) << '\n';
    } else if (dump->parsed()) {
      const ScriptIdentifier id(Model::load_file(scriptid));
      const ActivationFiles f = dump_activations(id, load_line(image), out);
      std::cout << f.logits.string() << '\n';
      if (!f.gates.empty()) std::cout << f.gates.string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
