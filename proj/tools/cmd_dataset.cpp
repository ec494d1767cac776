// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <iostream>
#include <memory>

#include "cli_context.hpp"

namespace relrot::cli {

namespace {

PitchRange range_from(const std::vector<double>& v, SynthStyle style) {
  if (v.empty()) return style == SynthStyle::Room ? PitchRange::indoor() : PitchRange::outdoor();
  if (v.size() != 2 || !(v[0] <= v[1])) throw ConfigError("--pitch-range expects LO HI with LO <= HI");
  return {v[0], v[1]};
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  CommonArgs common;
  std::optional<int> n;
  std::optional<std::string> style;
  std::optional<int> width;
  std::vector<int> grid;
  std::optional<double> spacing;
};

void run_synth(const SynthArgs& a) {
  RunContext ctx(a.common, "dataset synth");
  nlohmann::json cfg = ctx.config();
  DataConfig d = data_config(cfg);
  if (a.n) d.n_panos = *a.n;
  if (a.style) d.style = synth_style_from_string(*a.style);
  if (a.width) d.pano_width = *a.width;
  if (a.spacing) d.spacing = *a.spacing;
  if (d.n_panos <= 0 || d.pano_width < 16 || d.pano_width % 2 || !(d.spacing > 0)) {
    throw ConfigError("dataset synth: --n, --width and --spacing must be positive (width even)");
  }

  std::vector<Panorama> panos;
  if (!a.grid.empty()) {
    if (a.grid.size() != 2 || a.grid[0] <= 0 || a.grid[1] <= 0) {
      throw ConfigError("--grid expects two positive counts");
    }
    panos = synth_translated_panoramas(ctx.seed(), d.style, a.grid[0], a.grid[1], d.spacing,
                                       d.pano_width);
  } else {
    for (int i = 0; i < d.n_panos; ++i) {
      panos.push_back(synth_panorama(ctx.seed() + std::uint64_t(i), d.style, d.pano_width));
    }
  }

  fs::create_directories(ctx.out() / "panos");
  nlohmann::json list = nlohmann::json::array();
  for (const auto& p : panos) {
    const std::string file = "panos/" + p.id + ".png";
    write_png(ctx.out() / file, p.pixels);
    nlohmann::json e{{"id", p.id}, {"file", file}};
    if (p.position) e["position"] = {p.position->x(), p.position->y(), p.position->z()};
    list.push_back(std::move(e));
  }
  write_json(ctx.out() / "panoramas.json", {{"style", std::string(to_string(d.style))},
                                            {"seed", ctx.seed()},
                                            {"width", d.pano_width},
                                            {"panoramas", std::move(list)}});
  ctx.write_outputs();
  std::cout << "wrote " << panos.size() << " panoramas to " << ctx.out().string() << '\n';
}

// ---------------------------------------------------------------------------

struct CropsArgs {
  CommonArgs common;
  std::string panos;
  std::optional<int> views;
  std::optional<int> size;
  std::optional<double> fov;
  std::vector<double> pitch_range;
};

void run_crops(const CropsArgs& a) {
  RunContext ctx(a.common, "dataset crops");
  DataConfig d = data_config(ctx.config());
  if (a.views) d.views_per_pano = *a.views;
  if (a.size) d.crop_size = *a.size;
  if (a.fov) d.fov = *a.fov;
  if (d.views_per_pano <= 0) throw ConfigError("dataset crops: --views must be positive");

  const PanoramaSet set = load_panorama_set(a.panos);
  const SynthStyle style = synth_style_from_string(set.style);
  const PitchRange range = range_from(a.pitch_range, style);

  std::ofstream f(ctx.out() / "views.jsonl");
  if (!f) throw std::runtime_error("cannot write views.jsonl");
  int pano_width = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < set.order.size(); ++i) {
    const Panorama& p = set.by_id.at(set.order[i]);
    pano_width = p.pixels.width();
    const auto cams = sample_views(p, d.views_per_pano, range, ctx.seed() * 1000003 + i, d.fov,
                                   d.crop_size);
    for (const auto& cam : cams) {
      View v{p.id, cam, store_crop(ctx.out(), render_perspective(p, cam)), p.position};
      if (count == 0) {
        const nlohmann::json header{{"schema", "relrot.views"},
                                    {"style", set.style},
                                    {"seed", ctx.seed()},
                                    {"fov", d.fov},
                                    {"crop_size", d.crop_size},
                                    {"pano_width", pano_width},
                                    {"pitch_range", {range.lo, range.hi}}};
        f << header.dump() << '\n';
      }
      f << nlohmann::json(v).dump() << '\n';
      ++count;
    }
  }
  f.close();
  ctx.write_outputs();
  std::cout << "wrote " << count << " views to " << ctx.out().string() << '\n';
}

// ---------------------------------------------------------------------------

struct PairsArgs {
  CommonArgs common;
  std::string views;
  std::string mode = "same";
  std::optional<std::size_t> quota;
  std::optional<double> max_dist;
  std::string split = "train";
};

void run_pairs(const PairsArgs& a) {
  RunContext ctx(a.common, "dataset pairs");
  DataConfig d = data_config(ctx.config());
  if (a.quota) d.quota = *a.quota;
  if (a.max_dist) d.max_dist = *a.max_dist;
  if (d.quota == 0 || !(d.max_dist > 0)) throw ConfigError("dataset pairs: --quota and --max-dist must be positive");

  const fs::path views_path(a.views);
  std::ifstream f(views_path);
  if (!f) throw std::runtime_error("cannot open " + views_path.string());
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty views file " + views_path.string());
  const auto header = nlohmann::json::parse(line);
  if (header.value("schema", "") != "relrot.views") {
    throw std::runtime_error("not a views file: " + views_path.string());
  }
  std::vector<View> views;
  const fs::path views_dir = fs::absolute(views_path).parent_path();
  const fs::path out_dir = fs::absolute(ctx.out());
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    View v = nlohmann::json::parse(line).get<View>();
    v.crop_ref = fs::relative(views_dir / v.crop_ref, out_dir).generic_string();
    views.push_back(std::move(v));
  }

  const std::uint64_t pair_seed = ctx.seed() ^ 0x9e3779b97f4a7c15ULL;
  PairList pairs = a.mode == "same" ? make_pairs_same_pano(views, d.quota, pair_seed)
                                    : make_pairs_translated(views, d.max_dist, d.quota, pair_seed);
  if (pairs.warning) std::cerr << "warning: " << *pairs.warning << '\n';

  DatasetManifest m;
  m.records = std::move(pairs.pairs);
  m.split = a.split == "train" ? Split::Train : Split::Test;
  m.seed = ctx.seed();
  m.fov = header.at("fov").get<double>();
  m.crop_size = header.at("crop_size").get<int>();
  m.pano_width = header.at("pano_width").get<int>();
  const auto pr = header.at("pitch_range").get<std::vector<double>>();
  m.pitch_range = {pr.at(0), pr.at(1)};
  m.dataset_tag = "synth-" + header.at("style").get<std::string>();
  write_manifest(ctx.out() / "manifest.jsonl", m);
  ctx.write_outputs();
  std::cout << "wrote " << m.records.size() << " pairs to "
            << (ctx.out() / "manifest.jsonl").string() << '\n';
}

// ---------------------------------------------------------------------------

struct LintArgs {
  CommonArgs common;
  std::string train;
  std::string test;
  std::optional<double> max_translation;
  std::vector<double> pitch_range;
};

int run_lint(const LintArgs& a) {
  RunContext ctx(a.common, "dataset lint");
  const DatasetManifest train = read_manifest(a.train);
  std::optional<DatasetManifest> test;
  if (!a.test.empty()) test = read_manifest(a.test);
  LintRules rules;
  if (a.pitch_range.empty()) {
    rules.pitch_range = train.pitch_range;
  } else {
    if (a.pitch_range.size() != 2 || !(a.pitch_range[0] <= a.pitch_range[1])) {
      throw ConfigError("--pitch-range expects LO HI with LO <= HI");
    }
    rules.pitch_range = {a.pitch_range[0], a.pitch_range[1]};
  }
  rules.max_translation = a.max_translation;
  const auto violations = lint_manifests(train, test ? &*test : nullptr, rules);
  for (const auto& v : violations) std::cout << v << '\n';
  if (ctx.has_out()) {
    write_json(ctx.out() / "lint.json", {{"violations", violations}});
    ctx.write_outputs();
  }
  std::cout << (violations.empty() ? "lint: ok" : "lint: " + std::to_string(violations.size()) +
                                                      " violation(s)")
            << '\n';
  return violations.empty() ? 0 : 1;
}

}  // namespace

void register_dataset(CLI::App& app) {
  auto* ds = app.add_subcommand("dataset", "Synthesize panoramas, crops and pair manifests");
  ds->require_subcommand(1);

  auto synth = std::make_shared<SynthArgs>();
  auto* s = ds->add_subcommand("synth", "Generate procedural panoramas");
  add_common(s, synth->common);
  s->add_option("--n", synth->n, "Number of panoramas");
  s->add_option("--style", synth->style, "Scene style")->check(CLI::IsMember({"room", "street"}));
  s->add_option("--width", synth->width, "Panorama width in pixels");
  s->add_option("--grid", synth->grid, "Capture grid NX NY for translated sets")->expected(2);
  s->add_option("--spacing", synth->spacing, "Grid spacing in meters");
  s->callback([synth] { run_synth(*synth); });

  auto crops = std::make_shared<CropsArgs>();
  auto* c = ds->add_subcommand("crops", "Render perspective views of each panorama");
  add_common(c, crops->common);
  c->add_option("--panos", crops->panos, "Directory written by 'dataset synth'")->required();
  c->add_option("--views", crops->views, "Views per panorama");
  c->add_option("--size", crops->size, "Crop size in pixels");
  c->add_option("--fov", crops->fov, "Field of view in degrees");
  c->add_option("--pitch-range", crops->pitch_range, "Pitch range LO HI in degrees")->expected(2);
  c->callback([crops] { run_crops(*crops); });

  auto pairs = std::make_shared<PairsArgs>();
  auto* p = ds->add_subcommand("pairs", "Pair views into a manifest");
  add_common(p, pairs->common);
  p->add_option("--views", pairs->views, "views.jsonl written by 'dataset crops'")->required();
  p->add_option("--mode", pairs->mode, "same or translated")->check(CLI::IsMember({"same", "translated"}));
  p->add_option("--quota", pairs->quota, "Number of pairs");
  p->add_option("--max-dist", pairs->max_dist, "Maximum panorama distance in meters (translated)");
  p->add_option("--split", pairs->split, "train or test")->check(CLI::IsMember({"train", "test"}));
  p->callback([pairs] { run_pairs(*pairs); });

  auto lint = std::make_shared<LintArgs>();
  auto* l = ds->add_subcommand("lint", "Check manifests against the sampling protocol");
  add_common(l, lint->common, false);
  l->add_option("--train", lint->train, "Training manifest")->required();
  l->add_option("--test", lint->test, "Test manifest (checked for panorama overlap)");
  l->add_option("--max-translation", lint->max_translation, "Maximum pair translation in meters");
  l->add_option("--pitch-range", lint->pitch_range, "Allowed pitch range LO HI")->expected(2);
  l->callback([lint] {
    if (run_lint(*lint) != 0) throw CLI::RuntimeError(1);
  });
}

}  // namespace relrot::cli
