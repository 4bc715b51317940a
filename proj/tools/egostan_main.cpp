// Operator-facing pipeline surface: dataset generation, training, evaluation,
// gradient checking, and multi-run report assembly. One subcommand per
// invocation; exit 0 on success, 1 on a failed check, 2 on usage or config
// errors. All artifacts are byte-reproducible given identical flags.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "egostan/ad/gradcheck.hpp"
#include "egostan/ad/ops.hpp"
#include "egostan/data/dataset.hpp"
#include "egostan/diag/gradcheck_suites.hpp"
#include "egostan/loss/losses.hpp"
#include "egostan/loss/reference.hpp"
#include "egostan/model/egostan.hpp"
#include "egostan/nn/checkpoint.hpp"
#include "egostan/nn/layers.hpp"
#include "egostan/train/evaluate.hpp"
#include "egostan/train/harness.hpp"
#include "egostan/util/rng.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace egostan;

// --- resolved run configuration ----------------------------------------------

struct RunConfig {
  model::ModelConfig model;
  train::TrainConfig tcfg;
  data::GeneratorConfig gen;
  std::string variant = "fmt";
  std::vector<uint64_t> seeds = {1};
  std::string data_dir;
};

template <typename T>
void read_field(const json& j, const std::string& key, T& out) {
  out = j.get<T>();
  (void)key;
}

void apply_model_json(model::ModelConfig& m, const json& j) {
  for (const auto& [k, v] : j.items()) {
    if (k == "frames") m.frames = v.get<int64_t>();
    else if (k == "image_size") m.image_size = v.get<int64_t>();
    else if (k == "in_channels") m.in_channels = v.get<int64_t>();
    else if (k == "d_model") m.d_model = v.get<int64_t>();
    else if (k == "heads") m.heads = v.get<int64_t>();
    else if (k == "layers") m.layers = v.get<int64_t>();
    else if (k == "ffn_dim") m.ffn_dim = v.get<int64_t>();
    else if (k == "heatmap_size") m.heatmap_size = v.get<int64_t>();
    else if (k == "joints") m.joints = v.get<int64_t>();
    else if (k == "lifting_hidden") m.lifting_hidden = v.get<int64_t>();
    else if (k == "pose_scale") m.pose_scale = v.get<double>();
    else throw std::invalid_argument("config: unknown key 'model." + k + "'");
  }
}

void apply_train_json(train::TrainConfig& t, const json& j) {
  for (const auto& [k, v] : j.items()) {
    if (k == "lr") t.adam.lr = v.get<double>();
    else if (k == "beta1") t.adam.beta1 = v.get<double>();
    else if (k == "beta2") t.adam.beta2 = v.get<double>();
    else if (k == "eps") t.adam.eps = v.get<double>();
    else if (k == "batch_size") t.batch_size = v.get<int64_t>();
    else if (k == "steps") t.steps = v.get<int64_t>();
    else if (k == "eval_interval") t.eval_interval = v.get<int64_t>();
    else if (k == "grad_clip") t.grad_clip = v.get<double>();
    else if (k == "lambda_theta") t.weights.lambda_theta = v.get<double>();
    else if (k == "lambda_l1") t.weights.lambda_l1 = v.get<double>();
    else throw std::invalid_argument("config: unknown key 'train." + k + "'");
  }
}

void apply_gen_json(data::GeneratorConfig& g, const json& j) {
  for (const auto& [k, v] : j.items()) {
    if (k == "sequences") g.n_sequences = v.get<int64_t>();
    else if (k == "seed") g.seed = v.get<uint64_t>();
    else if (k == "frames") g.frames = v.get<int64_t>();
    else if (k == "image_size") g.image_size = v.get<int64_t>();
    else if (k == "channels") g.channels = v.get<int64_t>();
    else if (k == "heatmap_size") g.heatmap_size = v.get<int64_t>();
    else if (k == "sigma") g.sigma = v.get<double>();
    else if (k == "theta_max_deg") g.theta_max_deg = v.get<double>();
    else if (k == "torso_radius") g.torso_radius = v.get<double>();
    else if (k == "actions") g.actions = v.get<std::vector<std::string>>();
    else throw std::invalid_argument("config: unknown key 'generator." + k + "'");
  }
}

void apply_config_file(RunConfig& rc, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config: '" + path + "' is not valid JSON: " + e.what());
  }
  for (const auto& [k, v] : j.items()) {
    if (k == "model") apply_model_json(rc.model, v);
    else if (k == "train") apply_train_json(rc.tcfg, v);
    else if (k == "generator") apply_gen_json(rc.gen, v);
    else if (k == "variant") rc.variant = v.get<std::string>();
    else if (k == "seeds") rc.seeds = v.get<std::vector<uint64_t>>();
    else if (k == "data") rc.data_dir = v.get<std::string>();
    else if (k == "command") continue;  // echoed configs re-load cleanly
    else throw std::invalid_argument("config: unknown key '" + k + "'");
  }
}

ordered_json resolved_json(const RunConfig& rc, const std::string& command) {
  ordered_json j;
  j["command"] = command;
  j["variant"] = rc.variant;
  j["seeds"] = rc.seeds;
  j["data"] = rc.data_dir;
  j["model"] = {{"frames", rc.model.frames},
                {"image_size", rc.model.image_size},
                {"in_channels", rc.model.in_channels},
                {"d_model", rc.model.d_model},
                {"heads", rc.model.heads},
                {"layers", rc.model.layers},
                {"ffn_dim", rc.model.ffn_dim},
                {"heatmap_size", rc.model.heatmap_size},
                {"joints", rc.model.joints},
                {"lifting_hidden", rc.model.lifting_hidden},
                {"pose_scale", rc.model.pose_scale}};
  j["train"] = {{"lr", rc.tcfg.adam.lr},
                {"beta1", rc.tcfg.adam.beta1},
                {"beta2", rc.tcfg.adam.beta2},
                {"eps", rc.tcfg.adam.eps},
                {"batch_size", rc.tcfg.batch_size},
                {"steps", rc.tcfg.steps},
                {"eval_interval", rc.tcfg.eval_interval},
                {"grad_clip", rc.tcfg.grad_clip},
                {"lambda_theta", rc.tcfg.weights.lambda_theta},
                {"lambda_l1", rc.tcfg.weights.lambda_l1}};
  j["generator"] = {{"sequences", rc.gen.n_sequences},
                    {"seed", rc.gen.seed},
                    {"frames", rc.gen.frames},
                    {"image_size", rc.gen.image_size},
                    {"channels", rc.gen.channels},
                    {"heatmap_size", rc.gen.heatmap_size},
                    {"sigma", rc.gen.sigma},
                    {"theta_max_deg", rc.gen.theta_max_deg},
                    {"torso_radius", rc.gen.torso_radius},
                    {"actions", rc.gen.actions}};
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc | std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

std::vector<uint64_t> parse_seed_list(const std::string& s) {
  std::vector<uint64_t> out;
  size_t pos = 0;
  while (pos <= s.size()) {
    const size_t comma = std::min(s.find(',', pos), s.size());
    const std::string tok = s.substr(pos, comma - pos);
    size_t used = 0;
    uint64_t v = 0;
    try {
      v = std::stoull(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tok.size()) {
      throw std::invalid_argument("invalid seed list '" + s + "' (expected e.g. 1 or 1,2,3)");
    }
    out.push_back(v);
    pos = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("seed list is empty");
  return out;
}

std::vector<std::string> parse_action_list(const std::string& s) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= s.size()) {
    const size_t comma = std::min(s.find(',', pos), s.size());
    const std::string tok = s.substr(pos, comma - pos);
    if (!tok.empty()) out.push_back(tok);
    pos = comma + 1;
  }
  return out;
}

std::string catalog_string() {
  std::string all;
  for (const auto& a : data::action_catalog()) all += (all.empty() ? "" : ", ") + a;
  return all;
}

void require_known_actions(const std::vector<std::string>& actions) {
  const auto& cat = data::action_catalog();
  for (const auto& a : actions) {
    if (std::find(cat.begin(), cat.end(), a) == cat.end()) {
      throw std::invalid_argument("unknown action '" + a + "'; valid actions: " +
                                  catalog_string());
    }
  }
}

std::pair<data::DatasetManifest, std::vector<data::SequenceSample>> load_dataset(
    const std::string& dir) {
  auto man = data::load_manifest(dir);
  std::vector<data::SequenceSample> samples;
  samples.reserve(man.sequences.size());
  for (size_t i = 0; i < man.sequences.size(); ++i) {
    samples.push_back(data::load_sequence(dir, man, static_cast<int64_t>(i)));
  }
  return {std::move(man), std::move(samples)};
}

void check_dataset_matches_model(const data::GeneratorConfig& d, const model::ModelConfig& m) {
  auto fail = [](const std::string& what, int64_t want, int64_t got) {
    throw std::invalid_argument("dataset/model mismatch: " + what + ": model expects " +
                                std::to_string(want) + ", dataset has " + std::to_string(got));
  };
  if (m.frames != 1 && m.frames != d.frames) fail("frames", m.frames, d.frames);
  if (m.image_size != d.image_size) fail("image_size", m.image_size, d.image_size);
  if (m.in_channels != d.channels) fail("in_channels", m.in_channels, d.channels);
  if (m.heatmap_size != d.heatmap_size) fail("heatmap_size", m.heatmap_size, d.heatmap_size);
  if (m.joints != data::kNumJoints) fail("joints", m.joints, data::kNumJoints);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

// --- subcommands --------------------------------------------------------------

int cmd_generate(RunConfig rc, const std::string& out) {
  require_known_actions(rc.gen.actions);
  auto man = data::generate_dataset(rc.gen, out);
  write_text(fs::path(out) / "config.json", resolved_json(rc, "generate").dump(2) + "\n");
  std::printf("generate: wrote %zu sequences to %s\n", man.sequences.size(), out.c_str());
  std::printf("generate: occlusion rates upper=%.4f lower=%.4f\n", man.upper_occlusion_rate,
              man.lower_occlusion_rate);
  return 0;
}

int cmd_train(RunConfig rc, const std::string& out) {
  rc.model.variant = model::parse_variant(rc.variant);
  auto [man, samples] = load_dataset(rc.data_dir);
  check_dataset_matches_model(man.config, rc.model);

  std::vector<double> finals;
  auto per_seed = ordered_json::array();
  for (uint64_t s : rc.seeds) {
    model::EgoStanModel m(rc.model, s);
    train::TrainConfig tc = rc.tcfg;
    tc.seed = s;
    const fs::path sdir = fs::path(out) / ("seed_" + std::to_string(s));
    tc.out_dir = sdir.string();
    auto res = train::train_loop(m, samples, tc);
    auto rep = train::evaluate_model(m, samples, man.config.actions);
    write_text(sdir / "report.csv", train::eval_report_csv(rep));
    write_text(sdir / "report.json", train::eval_report_json(rep).dump(2) + "\n");
    write_text(sdir / "config.json", resolved_json(rc, "train").dump(2) + "\n");
    const double mpjpe = rep.rows.back().average;
    finals.push_back(mpjpe);
    ordered_json e;
    e["seed"] = s;
    e["final_loss"] = res.log.back().total;
    e["mpjpe"] = mpjpe;
    e["checkpoint"] = res.checkpoints.empty() ? "" : res.checkpoints.back();
    per_seed.push_back(e);
    std::printf("train: seed %llu final_loss %.17g mpjpe %.17g\n",
                static_cast<unsigned long long>(s), res.log.back().total, mpjpe);
  }

  ordered_json summary;
  summary["seeds"] = rc.seeds;
  summary["mpjpe"] = {{"values", finals}, {"mean", mean_of(finals)}, {"std", std_of(finals)}};
  summary["runs"] = per_seed;
  write_text(fs::path(out) / "summary.json", summary.dump(2) + "\n");
  write_text(fs::path(out) / "config.json", resolved_json(rc, "train").dump(2) + "\n");
  std::printf("train: %zu seed(s), mpjpe mean %.17g std %.17g\n", rc.seeds.size(),
              mean_of(finals), std_of(finals));
  return 0;
}

std::string eval_csv_with_delta(const train::EvalReport& r, const train::EvalReport& base) {
  std::string s = "action,sequences,upper,lower,average,delta_vs_baseline\n";
  for (size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    s += row.action + "," + std::to_string(row.sequences) + "," + loss::format_f64(row.upper) +
         "," + loss::format_f64(row.lower) + "," + loss::format_f64(row.average) + "," +
         loss::format_f64(row.average - base.rows[i].average) + "\n";
  }
  s += "occluded_mpjpe," + std::to_string(r.occluded_joints) + "," +
       loss::format_f64(r.occluded_mpjpe) + ",,," +
       loss::format_f64(r.occluded_mpjpe - base.occluded_mpjpe) + "\n";
  s += "visible_mpjpe," + std::to_string(r.visible_joints) + "," +
       loss::format_f64(r.visible_mpjpe) + ",,," +
       loss::format_f64(r.visible_mpjpe - base.visible_mpjpe) + "\n";
  return s;
}

int cmd_eval(RunConfig rc, const std::string& checkpoint, const std::string& baseline_ckpt,
             const std::string& out) {
  rc.model.variant = model::parse_variant(rc.variant);
  auto [man, samples] = load_dataset(rc.data_dir);
  check_dataset_matches_model(man.config, rc.model);

  model::EgoStanModel m(rc.model, rc.seeds.front());
  nn::load_checkpoint(m.registry(), checkpoint);
  auto rep = train::evaluate_model(m, samples, man.config.actions);
  ordered_json j = train::eval_report_json(rep);
  j["checkpoint"] = checkpoint;
  std::string csv;

  if (!baseline_ckpt.empty()) {
    auto bcfg = model::baseline_config(rc.model);
    model::EgoStanModel bm(bcfg, rc.seeds.front());
    nn::load_checkpoint(bm.registry(), baseline_ckpt);
    auto brep = train::evaluate_model(bm, samples, man.config.actions);
    for (size_t i = 0; i < rep.rows.size(); ++i) {
      j["table"][i]["delta_vs_baseline"] = rep.rows[i].average - brep.rows[i].average;
    }
    j["delta_occluded_mpjpe"] = rep.occluded_mpjpe - brep.occluded_mpjpe;
    j["delta_visible_mpjpe"] = rep.visible_mpjpe - brep.visible_mpjpe;
    ordered_json bj = train::eval_report_json(brep);
    bj["checkpoint"] = baseline_ckpt;
    j["baseline"] = bj;
    csv = eval_csv_with_delta(rep, brep);
  } else {
    csv = train::eval_report_csv(rep);
  }

  write_text(fs::path(out) / "report.csv", csv);
  write_text(fs::path(out) / "report.json", j.dump(2) + "\n");
  write_text(fs::path(out) / "config.json", resolved_json(rc, "eval").dump(2) + "\n");
  std::fputs(csv.c_str(), stdout);
  std::printf("eval: param_count %lld\n", static_cast<long long>(rep.param_count));
  return 0;
}

// --- gradcheck ------------------------------------------------------------------

int cmd_gradcheck(double tol, uint64_t seed, const std::string& fault, int points) {
  if (!fault.empty()) {
    const auto& cat = ad::primitive_catalog();
    if (std::find(cat.begin(), cat.end(), fault) == cat.end()) {
      std::string known;
      for (const auto& n : cat) known += (known.empty() ? "" : ", ") + n;
      throw std::invalid_argument("--inject-fault: unknown primitive '" + fault +
                                  "'; catalog: " + known);
    }
    ad::set_backward_fault(fault, 1.5);
  }

  std::vector<diag::CheckEntry> entries;
  for (const auto& pc : ad::run_primitive_gradcheck_suite(seed, points, tol)) {
    diag::CheckEntry e;
    e.name = "primitive/" + pc.primitive;
    e.max_error = pc.max_error;
    e.n_checked = pc.n_checked;
    e.pass = pc.pass;
    entries.push_back(e);
  }
  for (auto& e : diag::run_layer_suite(seed, tol)) entries.push_back(e);
  entries.push_back(diag::run_tiny_model_check(seed, tol));
  ad::clear_backward_fault();

  size_t worst = 0;
  std::vector<std::string> failing;
  for (size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    std::printf("gradcheck %-24s max_error %.3e  checked %zu%s  %s\n", e.name.c_str(),
                e.max_error, e.n_checked,
                e.n_kinked ? ("  kinked " + std::to_string(e.n_kinked)).c_str() : "",
                e.pass ? "PASS" : "FAIL");
    if (e.max_error > entries[worst].max_error) worst = i;
    if (!e.pass) failing.push_back(e.name);
  }
  std::printf("gradcheck: worst offender %s (max_error %.3e, tolerance %.3e)\n",
              entries[worst].name.c_str(), entries[worst].max_error, tol);
  if (!failing.empty()) {
    std::string names;
    for (const auto& n : failing) names += (names.empty() ? "" : ", ") + n;
    std::printf("gradcheck: FAIL (%s)\n", names.c_str());
    return 1;
  }
  std::printf("gradcheck: PASS (%zu checks)\n", entries.size());
  return 0;
}

// --- report ---------------------------------------------------------------------

int cmd_report(const std::vector<std::string>& inputs, const std::string& out) {
  if (inputs.empty()) throw std::invalid_argument("report: no input reports given");
  std::vector<json> reports;
  for (const auto& p : inputs) {
    std::ifstream in(p);
    if (!in) throw std::invalid_argument("report: cannot open '" + p + "'");
    json j = json::parse(in);
    if (!j.contains("table")) throw std::invalid_argument("report: '" + p + "' has no table");
    reports.push_back(std::move(j));
  }
  const auto& first = reports.front()["table"];
  for (const auto& r : reports) {
    if (r["table"].size() != first.size()) {
      throw std::invalid_argument("report: inputs have different table sizes");
    }
  }

  ordered_json summary;
  summary["inputs"] = inputs;
  auto rows = ordered_json::array();
  std::string csv = "action,mean_average,std_average,mean_upper,mean_lower\n";
  for (size_t i = 0; i < first.size(); ++i) {
    const std::string action = first[static_cast<int>(i)]["action"].get<std::string>();
    std::vector<double> avg, up, low;
    for (const auto& r : reports) {
      const auto& row = r["table"][static_cast<int>(i)];
      if (row["action"].get<std::string>() != action) {
        throw std::invalid_argument("report: action order differs between inputs");
      }
      avg.push_back(row["average"].get<double>());
      up.push_back(row["upper"].get<double>());
      low.push_back(row["lower"].get<double>());
    }
    ordered_json jr;
    jr["action"] = action;
    jr["average"] = {{"values", avg}, {"mean", mean_of(avg)}, {"std", std_of(avg)}};
    jr["upper"] = {{"mean", mean_of(up)}};
    jr["lower"] = {{"mean", mean_of(low)}};
    rows.push_back(jr);
    csv += action + "," + loss::format_f64(mean_of(avg)) + "," + loss::format_f64(std_of(avg)) +
           "," + loss::format_f64(mean_of(up)) + "," + loss::format_f64(mean_of(low)) + "\n";
  }
  summary["rows"] = rows;

  std::vector<double> occ, vis;
  std::vector<int64_t> params;
  for (const auto& r : reports) {
    occ.push_back(r["occluded"]["mpjpe"].get<double>());
    vis.push_back(r["visible"]["mpjpe"].get<double>());
    params.push_back(r.value("param_count", int64_t{0}));
  }
  summary["occluded_mpjpe"] = {{"mean", mean_of(occ)}, {"std", std_of(occ)}};
  summary["visible_mpjpe"] = {{"mean", mean_of(vis)}, {"std", std_of(vis)}};
  summary["param_counts"] = params;

  auto ref = ordered_json::array();
  for (const auto& row : loss::reference_table()) {
    ref.push_back({{"method", row.method}, {"overall_average", row.average[9]}});
  }
  summary["reference"] = ref;

  write_text(fs::path(out) / "summary.json", summary.dump(2) + "\n");
  write_text(fs::path(out) / "summary.csv", csv);
  std::printf("report: merged %zu report(s) into %s\n", reports.size(), out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"egostan: egocentric 3D pose estimation pipeline"};
  app.require_subcommand(1);
  int rc = 0;

  // generate ---------------------------------------------------------------
  auto* g = app.add_subcommand("generate", "Render a synthetic sequence dataset");
  std::string g_out, g_actions, g_config;
  uint64_t g_seed = data::GeneratorConfig{}.seed;
  int64_t g_sequences = data::GeneratorConfig{}.n_sequences;
  int64_t g_frames = 4, g_image = 32, g_heatmap = 16, g_channels = 1;
  double g_sigma = 1.0, g_theta = data::kDefaultThetaMaxDeg, g_radius = data::kDefaultTorsoRadius;
  g->add_option("--out", g_out, "Output dataset directory")->required();
  auto* g_seq_opt = g->add_option("--sequences", g_sequences, "Number of sequences")
                        ->capture_default_str();
  auto* g_act_opt = g->add_option("--actions", g_actions,
                                  "Comma-separated action subset (default: full catalog)");
  auto* g_seed_opt = g->add_option("--seed", g_seed, "Master dataset seed")
                         ->envname("EGOSTAN_SEED")
                         ->capture_default_str();
  g->add_option("--config", g_config, "JSON config file (flags win)");
  auto* g_frames_opt = g->add_option("--frames", g_frames, "Frames per sequence")
                           ->capture_default_str();
  auto* g_image_opt = g->add_option("--image-size", g_image, "Square image size")
                          ->capture_default_str();
  auto* g_hm_opt = g->add_option("--heatmap-size", g_heatmap, "Square heatmap size")
                       ->capture_default_str();
  auto* g_ch_opt = g->add_option("--channels", g_channels, "Image channels")
                       ->capture_default_str();
  auto* g_sigma_opt = g->add_option("--sigma", g_sigma, "Heatmap Gaussian sigma (cells)")
                          ->capture_default_str();
  auto* g_theta_opt = g->add_option("--theta-max", g_theta, "Fisheye field limit (degrees)")
                          ->capture_default_str();
  auto* g_radius_opt = g->add_option("--torso-radius", g_radius, "Occluder capsule radius (mm)")
                           ->capture_default_str();
  g->callback([&]() {
    RunConfig run;
    if (!g_config.empty()) apply_config_file(run, g_config);
    if (g_seq_opt->count()) run.gen.n_sequences = g_sequences;
    if (g_seed_opt->count()) run.gen.seed = g_seed;
    if (g_act_opt->count()) run.gen.actions = parse_action_list(g_actions);
    if (g_frames_opt->count()) run.gen.frames = g_frames;
    if (g_image_opt->count()) run.gen.image_size = g_image;
    if (g_hm_opt->count()) run.gen.heatmap_size = g_heatmap;
    if (g_ch_opt->count()) run.gen.channels = g_channels;
    if (g_sigma_opt->count()) run.gen.sigma = g_sigma;
    if (g_theta_opt->count()) run.gen.theta_max_deg = g_theta;
    if (g_radius_opt->count()) run.gen.torso_radius = g_radius;
    rc = cmd_generate(std::move(run), g_out);
  });

  // shared model/train flag block for train + eval --------------------------
  struct ModelFlags {
    int64_t frames = 4, image = 32, channels = 1, d_model = 32, heads = 4, layers = 2,
            ffn = 128, heatmap = 16, joints = 16, lifting = 128;
    CLI::Option *frames_o, *image_o, *channels_o, *d_o, *heads_o, *layers_o, *ffn_o, *hm_o,
        *joints_o, *lift_o;
    void add(CLI::App* cmd) {
      frames_o = cmd->add_option("--frames", frames, "Temporal window T")->capture_default_str();
      image_o = cmd->add_option("--image-size", image, "Square input size")->capture_default_str();
      channels_o = cmd->add_option("--in-channels", channels, "Input channels")
                       ->capture_default_str();
      d_o = cmd->add_option("--d-model", d_model, "Token width")->capture_default_str();
      heads_o = cmd->add_option("--heads", heads, "Attention heads")->capture_default_str();
      layers_o = cmd->add_option("--layers", layers, "Encoder layers")->capture_default_str();
      ffn_o = cmd->add_option("--ffn-dim", ffn, "Feed-forward width")->capture_default_str();
      hm_o = cmd->add_option("--heatmap-size", heatmap, "Square heatmap size")
                 ->capture_default_str();
      joints_o = cmd->add_option("--joints", joints, "Joint count")->capture_default_str();
      lift_o = cmd->add_option("--lifting-hidden", lifting, "Lifting MLP width")
                   ->capture_default_str();
    }
    void apply(model::ModelConfig& m) const {
      if (frames_o->count()) m.frames = frames;
      if (image_o->count()) m.image_size = image;
      if (channels_o->count()) m.in_channels = channels;
      if (d_o->count()) m.d_model = d_model;
      if (heads_o->count()) m.heads = heads;
      if (layers_o->count()) m.layers = layers;
      if (ffn_o->count()) m.ffn_dim = ffn;
      if (hm_o->count()) m.heatmap_size = heatmap;
      if (joints_o->count()) m.joints = joints;
      if (lift_o->count()) m.lifting_hidden = lifting;
    }
  };

  // train --------------------------------------------------------------------
  auto* t = app.add_subcommand("train", "Train one model per seed");
  std::string t_data, t_out, t_config, t_variant = "fmt", t_seeds = "1";
  int64_t t_steps = 500, t_batch = 4, t_interval = 100;
  double t_lr = 1e-3, t_clip = 0.0, t_ltheta = -0.01, t_ll1 = 0.1;
  ModelFlags t_mf;
  t->add_option("--data", t_data, "Dataset directory")->required();
  t->add_option("--out", t_out, "Output directory")->required();
  t->add_option("--config", t_config, "JSON config file (flags win)");
  auto* t_variant_opt = t->add_option("--variant", t_variant, "Token selection: slice|avg|fmt")
                            ->capture_default_str();
  auto* t_seeds_opt = t->add_option("--seed", t_seeds, "Comma-separated seed list")
                          ->envname("EGOSTAN_SEED")
                          ->capture_default_str();
  auto* t_steps_opt = t->add_option("--steps", t_steps, "Adam steps")->capture_default_str();
  auto* t_batch_opt = t->add_option("--batch-size", t_batch, "Sequences per step")
                          ->capture_default_str();
  auto* t_interval_opt = t->add_option("--eval-interval", t_interval, "Checkpoint interval")
                             ->capture_default_str();
  auto* t_lr_opt = t->add_option("--lr", t_lr, "Adam learning rate")->capture_default_str();
  auto* t_clip_opt = t->add_option("--grad-clip", t_clip, "Global grad-norm limit (0 = off)")
                         ->capture_default_str();
  auto* t_ltheta_opt = t->add_option("--lambda-theta", t_ltheta, "Cosine term weight")
                           ->capture_default_str();
  auto* t_ll1_opt = t->add_option("--lambda-l1", t_ll1, "L1 term weight")->capture_default_str();
  t_mf.add(t);
  t->callback([&]() {
    RunConfig run;
    if (!t_config.empty()) apply_config_file(run, t_config);
    run.data_dir = t_data;
    if (t_variant_opt->count()) run.variant = t_variant;
    if (t_seeds_opt->count() || run.seeds.empty()) run.seeds = parse_seed_list(t_seeds);
    if (t_steps_opt->count()) run.tcfg.steps = t_steps;
    if (t_batch_opt->count()) run.tcfg.batch_size = t_batch;
    if (t_interval_opt->count()) run.tcfg.eval_interval = t_interval;
    if (t_lr_opt->count()) run.tcfg.adam.lr = t_lr;
    if (t_clip_opt->count()) run.tcfg.grad_clip = t_clip;
    if (t_ltheta_opt->count()) run.tcfg.weights.lambda_theta = t_ltheta;
    if (t_ll1_opt->count()) run.tcfg.weights.lambda_l1 = t_ll1;
    t_mf.apply(run.model);
    rc = cmd_train(std::move(run), t_out);
  });

  // eval ----------------------------------------------------------------------
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  std::string e_data, e_ckpt, e_base, e_out, e_config, e_variant = "fmt";
  uint64_t e_seed = 1;
  ModelFlags e_mf;
  e->add_option("--data", e_data, "Dataset directory")->required();
  e->add_option("--checkpoint", e_ckpt, "Checkpoint to evaluate")->required();
  e->add_option("--out", e_out, "Output directory")->required();
  e->add_option("--baseline-checkpoint", e_base,
                "Single-frame baseline checkpoint for the delta column");
  e->add_option("--config", e_config, "JSON config file (flags win)");
  auto* e_variant_opt = e->add_option("--variant", e_variant, "Token selection: slice|avg|fmt")
                            ->capture_default_str();
  auto* e_seed_opt = e->add_option("--seed", e_seed, "Model construction seed")
                         ->envname("EGOSTAN_SEED")
                         ->capture_default_str();
  e_mf.add(e);
  e->callback([&]() {
    RunConfig run;
    if (!e_config.empty()) apply_config_file(run, e_config);
    run.data_dir = e_data;
    if (e_variant_opt->count()) run.variant = e_variant;
    if (e_seed_opt->count()) run.seeds = {e_seed};
    e_mf.apply(run.model);
    rc = cmd_eval(std::move(run), e_ckpt, e_base, e_out);
  });

  // gradcheck -------------------------------------------------------------------
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference audit of the gradient engine");
  double gc_tol = ad::kGradCheckTol;
  uint64_t gc_seed = 12345;
  std::string gc_fault;
  int gc_points = 5;
  gc->add_option("--tolerance", gc_tol, "Maximum relative error")->capture_default_str();
  gc->add_option("--seed", gc_seed, "Probe point seed")
      ->envname("EGOSTAN_SEED")
      ->capture_default_str();
  gc->add_option("--points", gc_points, "Seeded points per primitive")->capture_default_str();
  gc->add_option("--inject-fault", gc_fault,
                 "Corrupt the named primitive's backward rule (audit fixture)");
  gc->callback([&]() { rc = cmd_gradcheck(gc_tol, gc_seed, gc_fault, gc_points); });

  // report ------------------------------------------------------------------------
  auto* r = app.add_subcommand("report", "Merge eval reports into a mean/std summary");
  std::vector<std::string> r_inputs;
  std::string r_out;
  r->add_option("--inputs", r_inputs, "Eval report JSON files")->required()->delimiter(',');
  r->add_option("--out", r_out, "Output directory")->required();
  r->callback([&]() { rc = cmd_report(r_inputs, r_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& h) {
    return app.exit(h);
  } catch (const CLI::CallForAllHelp& h) {
    return app.exit(h);
  } catch (const CLI::CallForVersion& h) {
    return app.exit(h);
  } catch (const CLI::ParseError& pe) {
    app.exit(pe);
    return 2;
  } catch (const nn::CheckpointError& ce) {
    std::fprintf(stderr, "egostan: %s\n", ce.what());
    return 2;
  } catch (const std::invalid_argument& ia) {
    std::fprintf(stderr, "egostan: %s\n", ia.what());
    return 2;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "egostan: %s\n", ex.what());
    return 1;
  }
  return rc;
}
