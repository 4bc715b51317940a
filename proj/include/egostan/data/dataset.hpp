#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "egostan/ad/tensor.hpp"
#include "egostan/data/camera.hpp"
#include "egostan/data/motion.hpp"
#include "egostan/data/occlusion.hpp"
#include "egostan/data/render.hpp"
#include "egostan/data/skeleton.hpp"
#include "egostan/util/rng.hpp"

namespace egostan::data {

inline constexpr char kSequenceMagic[8] = {'E', 'G', 'O', 'S', 'E', 'Q', '0', '1'};
inline constexpr uint32_t kDatasetVersion = 1;

struct GeneratorConfig {
  int64_t n_sequences = 64;
  uint64_t seed = 7;
  int64_t frames = 4;
  int64_t image_size = 32;
  int64_t channels = 1;
  int64_t heatmap_size = 16;
  double sigma = kDefaultHeatmapSigma;
  double theta_max_deg = kDefaultThetaMaxDeg;
  double torso_radius = kDefaultTorsoRadius;
  std::vector<std::string> actions = action_catalog();

  void validate() const {
    if (n_sequences < 1) throw std::invalid_argument("GeneratorConfig: n_sequences must be >= 1");
    if (frames < 1) throw std::invalid_argument("GeneratorConfig: frames must be >= 1");
    if (image_size < 2) throw std::invalid_argument("GeneratorConfig: image_size too small");
    if (channels < 1) throw std::invalid_argument("GeneratorConfig: channels must be >= 1");
    if (heatmap_size < 1) throw std::invalid_argument("GeneratorConfig: bad heatmap_size");
    if (sigma <= 0.0) throw std::invalid_argument("GeneratorConfig: sigma must be positive");
    if (actions.empty()) throw std::invalid_argument("GeneratorConfig: actions list empty");
    for (const auto& a : actions) (void)motion_profile(a);
  }
};

// One generated sequence: T rendered frames plus current-frame supervision.
struct SequenceSample {
  ad::Tensor frames;             // [T, C, H, W]
  ad::Tensor heatmaps;           // [h, w, J] for the last frame
  ad::Tensor pose;               // [J, 3] mm, last-frame camera coordinates
  std::vector<uint8_t> occluded; // per joint, last frame
  std::string action;
  uint64_t seed = 0;

  std::vector<ad::Tensor> frame_list() const {
    const int64_t t = frames.dim(0), c = frames.dim(1), h = frames.dim(2), w = frames.dim(3);
    const size_t stride = static_cast<size_t>(c * h * w);
    std::vector<ad::Tensor> out;
    out.reserve(static_cast<size_t>(t));
    for (int64_t k = 0; k < t; ++k) {
      std::vector<double> vals(frames.values().begin() + static_cast<int64_t>(stride) * k,
                               frames.values().begin() + static_cast<int64_t>(stride) * (k + 1));
      out.emplace_back(ad::Shape{c, h, w}, std::move(vals));
    }
    return out;
  }
};

inline SequenceSample generate_sequence(const GeneratorConfig& cfg, const std::string& action,
                                        uint64_t seed) {
  const SkeletonSpec spec = SkeletonSpec::humanoid();
  const auto poses = sample_motion(spec, action, cfg.frames, seed);

  SequenceSample s;
  s.action = action;
  s.seed = seed;
  std::vector<double> frame_vals;
  frame_vals.reserve(static_cast<size_t>(cfg.frames * cfg.channels * cfg.image_size *
                                         cfg.image_size));
  FisheyeCamera cam;
  Capsule torso;
  for (int64_t k = 0; k < cfg.frames; ++k) {
    const auto& pose = poses[static_cast<size_t>(k)];
    cam = make_head_camera(pose[kHead], cfg.image_size, cfg.image_size, cfg.theta_max_deg);
    torso = torso_capsule(pose, cfg.torso_radius);
    ad::Tensor frame = render_frame(pose, spec, cam, torso, cfg.channels);
    frame_vals.insert(frame_vals.end(), frame.values().begin(), frame.values().end());
  }
  s.frames = ad::Tensor({cfg.frames, cfg.channels, cfg.image_size, cfg.image_size},
                        std::move(frame_vals));

  const auto& last = poses.back();
  s.heatmaps = render_gt_heatmap(last, cam, cfg.heatmap_size, cfg.sigma);
  std::vector<double> pose_vals;
  pose_vals.reserve(last.size() * 3);
  for (const auto& p : last) {
    const Vec3 pc = cam.to_camera(p);
    pose_vals.push_back(pc.x);
    pose_vals.push_back(pc.y);
    pose_vals.push_back(pc.z);
  }
  s.pose = ad::Tensor({static_cast<int64_t>(last.size()), 3}, std::move(pose_vals));
  s.occluded = occlusion_flags(last, cam, torso);
  return s;
}

namespace detail {

inline void put_u32(std::string& b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& b, uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_i64(std::string& b, int64_t v) { put_u64(b, static_cast<uint64_t>(v)); }
inline void put_f64(std::string& b, double v) {
  uint64_t u;
  static_assert(sizeof(u) == sizeof(v));
  std::memcpy(&u, &v, sizeof(u));
  put_u64(b, u);
}

struct ByteReader {
  const std::string& buf;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > buf.size()) throw std::runtime_error("sequence file truncated");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(buf[pos++])) << (8 * i);
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(buf[pos++])) << (8 * i);
    return v;
  }
  int64_t i64() { return static_cast<int64_t>(u64()); }
  double f64() {
    const uint64_t u = u64();
    double v;
    std::memcpy(&v, &u, sizeof(v));
    return v;
  }
};

inline void append_block(std::string& b, const std::vector<double>& vals) {
  for (double v : vals) put_f64(b, v);
}

}  // namespace detail

inline std::string sequence_bytes(const SequenceSample& s, int64_t action_id) {
  std::string b;
  b.append(kSequenceMagic, sizeof(kSequenceMagic));
  detail::put_u32(b, kDatasetVersion);
  detail::put_u32(b, static_cast<uint32_t>(action_id));
  detail::put_u64(b, s.seed);
  detail::put_i64(b, s.frames.dim(0));
  detail::put_i64(b, s.frames.dim(1));
  detail::put_i64(b, s.frames.dim(2));
  detail::put_i64(b, s.frames.dim(3));
  detail::put_i64(b, s.heatmaps.dim(0));
  detail::put_i64(b, s.pose.dim(0));
  // block offset table: frames, heatmaps, pose, flags, end
  const size_t table_pos = b.size();
  for (int i = 0; i < 5; ++i) detail::put_u64(b, 0);
  std::vector<uint64_t> offsets;
  offsets.push_back(b.size());
  detail::append_block(b, s.frames.values());
  offsets.push_back(b.size());
  detail::append_block(b, s.heatmaps.values());
  offsets.push_back(b.size());
  detail::append_block(b, s.pose.values());
  offsets.push_back(b.size());
  for (uint8_t f : s.occluded) b.push_back(static_cast<char>(f));
  offsets.push_back(b.size());
  for (size_t i = 0; i < offsets.size(); ++i) {
    for (int k = 0; k < 8; ++k) {
      b[table_pos + 8 * i + static_cast<size_t>(k)] =
          static_cast<char>((offsets[i] >> (8 * k)) & 0xff);
    }
  }
  return b;
}

inline SequenceSample parse_sequence_bytes(const std::string& b,
                                           const std::vector<std::string>& actions) {
  if (b.size() < sizeof(kSequenceMagic) ||
      b.compare(0, sizeof(kSequenceMagic), kSequenceMagic, sizeof(kSequenceMagic)) != 0) {
    throw std::runtime_error("sequence file: bad magic");
  }
  detail::ByteReader r{b, sizeof(kSequenceMagic)};
  const uint32_t version = r.u32();
  if (version != kDatasetVersion) {
    throw std::runtime_error("sequence file: version " + std::to_string(version) +
                             " does not match " + std::to_string(kDatasetVersion));
  }
  const uint32_t action_id = r.u32();
  if (action_id >= actions.size()) throw std::runtime_error("sequence file: bad action id");
  SequenceSample s;
  s.action = actions[action_id];
  s.seed = r.u64();
  const int64_t t = r.i64(), c = r.i64(), h = r.i64(), w = r.i64();
  const int64_t hm = r.i64(), j = r.i64();
  if (t < 1 || c < 1 || h < 1 || w < 1 || hm < 1 || j < 1) {
    throw std::runtime_error("sequence file: bad dimensions");
  }
  uint64_t off[5];
  for (auto& o : off) o = r.u64();
  if (off[4] != b.size()) throw std::runtime_error("sequence file: size mismatch");
  auto read_block = [&](uint64_t start, uint64_t stop, int64_t count) {
    if (stop - start != static_cast<uint64_t>(count) * 8 || stop > b.size()) {
      throw std::runtime_error("sequence file: bad block bounds");
    }
    detail::ByteReader br{b, static_cast<size_t>(start)};
    std::vector<double> vals(static_cast<size_t>(count));
    for (auto& v : vals) v = br.f64();
    return vals;
  };
  s.frames = ad::Tensor({t, c, h, w}, read_block(off[0], off[1], t * c * h * w));
  s.heatmaps = ad::Tensor({hm, hm, j}, read_block(off[1], off[2], hm * hm * j));
  s.pose = ad::Tensor({j, 3}, read_block(off[2], off[3], j * 3));
  if (off[4] - off[3] != static_cast<uint64_t>(j)) {
    throw std::runtime_error("sequence file: bad flags block");
  }
  s.occluded.assign(b.begin() + static_cast<int64_t>(off[3]), b.begin() + static_cast<int64_t>(off[4]));
  return s;
}

struct ManifestEntry {
  std::string file;
  std::string action;
  uint64_t seed = 0;
  int64_t occluded_total = 0;
};

struct DatasetManifest {
  GeneratorConfig config;
  std::vector<ManifestEntry> sequences;
  double upper_occlusion_rate = 0.0;
  double lower_occlusion_rate = 0.0;
};

inline std::string sequence_file_name(int64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "seq_%05lld.bin", static_cast<long long>(index));
  return buf;
}

inline DatasetManifest generate_dataset(const GeneratorConfig& cfg,
                                        const std::filesystem::path& out_dir) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  DatasetManifest man;
  man.config = cfg;

  int64_t upper_hits = 0, lower_hits = 0;
  for (int64_t i = 0; i < cfg.n_sequences; ++i) {
    const std::string action =
        cfg.actions[static_cast<size_t>(i) % cfg.actions.size()];
    const int64_t action_id = static_cast<int64_t>(static_cast<size_t>(i) % cfg.actions.size());
    const uint64_t seed = util::derive_seed(cfg.seed, static_cast<uint64_t>(i));
    SequenceSample s = generate_sequence(cfg, action, seed);

    ManifestEntry e;
    e.file = sequence_file_name(i);
    e.action = action;
    e.seed = seed;
    for (uint8_t f : s.occluded) e.occluded_total += f;
    for (int64_t j : upper_body_joints()) upper_hits += s.occluded[static_cast<size_t>(j)];
    for (int64_t j : lower_body_joints()) lower_hits += s.occluded[static_cast<size_t>(j)];
    man.sequences.push_back(e);

    const std::string bytes = sequence_bytes(s, action_id);
    std::ofstream out(out_dir / e.file, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("generate_dataset: cannot write " + e.file);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("generate_dataset: write failed for " + e.file);
  }
  const double n = static_cast<double>(cfg.n_sequences);
  man.upper_occlusion_rate =
      static_cast<double>(upper_hits) / (n * static_cast<double>(upper_body_joints().size()));
  man.lower_occlusion_rate =
      static_cast<double>(lower_hits) / (n * static_cast<double>(lower_body_joints().size()));

  nlohmann::ordered_json j;
  j["format_version"] = kDatasetVersion;
  j["seed"] = cfg.seed;
  j["config"] = {{"n_sequences", cfg.n_sequences},
                 {"frames", cfg.frames},
                 {"image_size", cfg.image_size},
                 {"channels", cfg.channels},
                 {"heatmap_size", cfg.heatmap_size},
                 {"sigma", cfg.sigma},
                 {"theta_max_deg", cfg.theta_max_deg},
                 {"torso_radius", cfg.torso_radius},
                 {"actions", cfg.actions}};
  j["stats"] = {{"upper_occlusion_rate", man.upper_occlusion_rate},
                {"lower_occlusion_rate", man.lower_occlusion_rate}};
  j["sequences"] = nlohmann::ordered_json::array();
  for (const auto& e : man.sequences) {
    j["sequences"].push_back({{"file", e.file},
                              {"action", e.action},
                              {"seed", e.seed},
                              {"occluded_total", e.occluded_total}});
  }
  std::ofstream mf(out_dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!mf) throw std::runtime_error("generate_dataset: cannot write manifest.json");
  mf << j.dump(2) << "\n";
  if (!mf) throw std::runtime_error("generate_dataset: manifest write failed");
  return man;
}

inline DatasetManifest load_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json", std::ios::binary);
  if (!in) throw std::runtime_error("load_manifest: cannot open manifest.json");
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.at("format_version").get<uint32_t>() != kDatasetVersion) {
    throw std::runtime_error("load_manifest: format version mismatch");
  }
  DatasetManifest man;
  const auto& c = j.at("config");
  man.config.n_sequences = c.at("n_sequences").get<int64_t>();
  man.config.seed = j.at("seed").get<uint64_t>();
  man.config.frames = c.at("frames").get<int64_t>();
  man.config.image_size = c.at("image_size").get<int64_t>();
  man.config.channels = c.at("channels").get<int64_t>();
  man.config.heatmap_size = c.at("heatmap_size").get<int64_t>();
  man.config.sigma = c.at("sigma").get<double>();
  man.config.theta_max_deg = c.at("theta_max_deg").get<double>();
  man.config.torso_radius = c.at("torso_radius").get<double>();
  man.config.actions = c.at("actions").get<std::vector<std::string>>();
  man.upper_occlusion_rate = j.at("stats").at("upper_occlusion_rate").get<double>();
  man.lower_occlusion_rate = j.at("stats").at("lower_occlusion_rate").get<double>();
  for (const auto& e : j.at("sequences")) {
    ManifestEntry m;
    m.file = e.at("file").get<std::string>();
    m.action = e.at("action").get<std::string>();
    m.seed = e.at("seed").get<uint64_t>();
    m.occluded_total = e.at("occluded_total").get<int64_t>();
    man.sequences.push_back(std::move(m));
  }
  return man;
}

inline SequenceSample load_sequence(const std::filesystem::path& dir, const DatasetManifest& man,
                                    int64_t index) {
  if (index < 0 || index >= static_cast<int64_t>(man.sequences.size())) {
    throw std::invalid_argument("load_sequence: index out of range");
  }
  std::ifstream in(dir / man.sequences[static_cast<size_t>(index)].file, std::ios::binary);
  if (!in) throw std::runtime_error("load_sequence: cannot open sequence file");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_sequence_bytes(bytes, man.config.actions);
}

}  // namespace egostan::data
