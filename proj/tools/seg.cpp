// seg: command-line front end for co-sparse texture segmentation.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cosparse/image_io.hpp"
#include "cosparse/pipeline.hpp"
#include "cosparse/service.hpp"

// After Eigen: resolv.h (pulled in by httplib) defines a `_res` macro.
#include <httplib.h>

namespace fs = std::filesystem;
using namespace cosparse;

namespace {

struct Options {
  SegConfig config;
  std::string operator_path;
  std::optional<double> lambda, nu;
  bool no_texture = false;
  bool no_color = false;
};

void add_config_flags(CLI::App* app, Options& o) {
  auto& c = o.config;
  app->add_option("--operator", o.operator_path, "Analysis operator file (default: cosine operator)");
  app->add_option("--patch", c.patch_side, "Patch side length (odd)");
  app->add_option("--overcompleteness", c.overcompleteness, "Rows per patch pixel of the default operator");
  app->add_option("--sigma-texture", c.sigma_texture, "Co-support smoothing sigma");
  app->add_option("--mask-std", c.mask_std, "Gaussian patch mask std in pixels (<=0: side/4)");
  app->add_option("--sigma-color", c.likelihood.sigma_color, "Color kernel std (colors in [0,1])");
  app->add_option("--alpha", c.likelihood.alpha, "Spatial kernel scale");
  app->add_option("--beta0", c.likelihood.beta0, "Texture temperature per unit spatial width");
  app->add_option("--rho-floor", c.likelihood.rho_floor, "Minimum spatial kernel width in pixels");
  app->add_flag("--no-texture", o.no_texture, "Disable the texture likelihood");
  app->add_flag("--no-color", o.no_color, "Disable the color likelihood");
  app->add_option("--gamma", c.gamma, "Edge metric gamma (0..255 intensity scale)");
  app->add_flag("--mean-gamma", c.use_mean_gamma, "Use the mean gradient magnitude as gamma");
  app->add_option("--lambda", o.lambda, "Boundary length weight");
  app->add_option("--nu", o.nu, "Label cost");
  app->add_option("--max-iters", c.max_iterations, "Primal-dual iteration limit");
  app->add_option("--tol", c.tol, "Stopping tolerance on the mean change of u");
  app->add_option("--seed", c.seed, "Clustering seed");
  app->add_option("--max-classes", c.max_classes, "Maximum number of classes");
}

SegConfig finalize(Options& o, const SegConfig& defaults) {
  SegConfig c = o.config;
  c.mode = defaults.mode;
  c.lambda = o.lambda.value_or(defaults.lambda);
  c.nu = o.nu.value_or(defaults.nu);
  c.likelihood.use_texture = !o.no_texture;
  c.likelihood.use_color = !o.no_color;
  c.validate();
  return c;
}

AnalysisOperator load_op(const Options& o, const SegConfig& c) {
  return o.operator_path.empty() ? operator_for(c) : load_operator(o.operator_path);
}

void report(const SegmentationResult& r) {
  const auto& d = r.diagnostics;
  std::string labels;
  for (int l : d.active_labels) labels += fmt::format("{}{}", labels.empty() ? "" : ",", l + 1);
  fmt::print("energy\t{:.6g}\ngap\t{:.6g}\niterations\t{}\nconverged\t{}\nmillis\t{:.1f}\n"
             "initial_labels\t{}\nactive_labels\t{}\n",
             d.energy, d.gap, d.iterations, d.converged ? "yes" : "no", d.millis, d.initial_labels,
             labels);
}

void write_outputs(const fs::path& dir, const ColorImage& image, const SegmentationResult& r) {
  fs::create_directories(dir);
  write_file(dir / "labels.png", encode_label_png(r.segmentation));
  write_file(dir / "overlay.png", encode_png(label_overlay(image, r.segmentation)));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Co-sparse texture segmentation"};
  app.require_subcommand(1);

  Options sup_opts, unsup_opts, bench_opts, serve_opts;
  std::string image_path, scribble_path, out_dir = "seg_out";
  auto* sup = app.add_subcommand("supervised", "Segment an image from scribbles");
  sup->add_option("--image", image_path, "Input image (PNG/PPM/PGM)")->required();
  sup->add_option("--scribbles", scribble_path, "Indexed scribble image (0 = unlabeled)")->required();
  sup->add_option("--out", out_dir, "Output directory");
  add_config_flags(sup, sup_opts);

  auto* unsup = app.add_subcommand("unsupervised", "Segment an image without user input");
  unsup->add_option("--image", image_path, "Input image (PNG/PPM/PGM)")->required();
  unsup->add_option("--out", out_dir, "Output directory");
  unsup->add_option("--color-classes", unsup_opts.config.color_classes, "k-means color classes");
  unsup->add_option("--texture-classes", unsup_opts.config.texture_classes, "k-medians texture classes");
  int initial_n = 0;
  unsup->add_option("--n", initial_n, "Initial class count (perfect square, split evenly)");
  add_config_flags(unsup, unsup_opts);

  std::string result_path, truth_path;
  bool match = false;
  auto* dice = app.add_subcommand("dice", "Dice score of a label map against ground truth");
  dice->add_option("--result", result_path, "Label PNG")->required();
  dice->add_option("--truth", truth_path, "Ground-truth label PNG (0 = void)")->required();
  dice->add_flag("--match", match, "Greedily match labels before scoring");

  std::string manifest;
  auto* bench = app.add_subcommand("bench", "Run supervised segmentation over a manifest");
  bench->add_option("--manifest", manifest, "Lines of 'image scribbles truth'")->required();
  add_config_flags(bench, bench_opts);

  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t max_pixels = 4'000'000;
  if (const char* env = std::getenv("SEG_BIND")) host = env;
  if (const char* env = std::getenv("SEG_PORT")) port = std::atoi(env);
  if (const char* env = std::getenv("SEG_MAX_PIXELS")) max_pixels = std::strtoull(env, nullptr, 10);
  auto* serve = app.add_subcommand("serve", "Run the interactive HTTP session service");
  serve->add_option("--bind", host, "Bind address (env SEG_BIND)");
  serve->add_option("--port", port, "Port (env SEG_PORT)");
  serve->add_option("--max-pixels", max_pixels, "Largest accepted image (env SEG_MAX_PIXELS)");
  add_config_flags(serve, serve_opts);

  std::string operator_out;
  int op_side = 9;
  double op_over = 2.0;
  auto* op_cmd = app.add_subcommand("operator", "Write the default analysis operator to a file");
  op_cmd->add_option("--out", operator_out, "Destination")->required();
  op_cmd->add_option("--patch", op_side, "Patch side length");
  op_cmd->add_option("--overcompleteness", op_over, "Rows per patch pixel");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sup) {
      const auto config = finalize(sup_opts, SegConfig::supervised_defaults());
      const auto image = read_image(image_path);
      const auto scribbles = read_index_map(scribble_path);
      const auto result = segment_supervised(image, scribbles, config, load_op(sup_opts, config));
      write_outputs(out_dir, image, result);
      report(result);
    } else if (*unsup) {
      auto defaults = SegConfig::unsupervised_defaults();
      if (initial_n > 0) {
        const int side = static_cast<int>(std::lround(std::sqrt(initial_n)));
        if (side * side != initial_n) throw ConfigError("--n must be a perfect square");
        unsup_opts.config.color_classes = unsup_opts.config.texture_classes = side;
      }
      const auto config = finalize(unsup_opts, defaults);
      const auto image = read_image(image_path);
      const auto result = segment_unsupervised(image, config, load_op(unsup_opts, config));
      write_outputs(out_dir, image, result);
      report(result);
    } else if (*dice) {
      auto result = read_label_map(result_path);
      const auto truth = read_label_map(truth_path);
      if (match) result = match_labels_greedy(result, truth);
      fmt::print("{:.6f}\n", dice_score(result, truth));
    } else if (*bench) {
      const auto config = finalize(bench_opts, SegConfig::supervised_defaults());
      fmt::print("{}", format_bench_tsv(run_bench(manifest, config, load_op(bench_opts, config))));
    } else if (*serve) {
      const auto config = finalize(serve_opts, SegConfig::supervised_defaults());
      SessionService service({max_pixels, config}, load_op(serve_opts, config));
      httplib::Server server;
      server.set_payload_max_length(64u << 20);
      register_routes(server, service);
      fmt::print(stderr, "listening on {}:{}\n", host, port);
      if (!server.listen(host, port)) throw Error(fmt::format("cannot bind {}:{}", host, port));
    } else if (*op_cmd) {
      write_operator(default_operator(op_side, op_over), operator_out);
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "seg: error: {}\n", e.what());
    return 1;
  }
  return 0;
}
