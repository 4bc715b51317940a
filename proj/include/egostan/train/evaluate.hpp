#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "egostan/ad/tensor.hpp"
#include "egostan/data/dataset.hpp"
#include "egostan/data/skeleton.hpp"
#include "egostan/loss/losses.hpp"
#include "egostan/model/egostan.hpp"

namespace egostan::train {

struct EvalRow {
  std::string action;
  int64_t sequences = 0;
  double upper = 0.0;
  double lower = 0.0;
  double average = 0.0;
};

// Per-action MPJPE split into upper/lower body, a closing "all" row, and an
// occluded/visible breakdown over every (sequence, joint) pair.
struct EvalReport {
  std::vector<EvalRow> rows;  // one per action, "all" last
  double occluded_mpjpe = 0.0;
  double visible_mpjpe = 0.0;
  int64_t occluded_joints = 0;
  int64_t visible_joints = 0;
  int64_t param_count = 0;
};

using PoseFn = std::function<ad::Tensor(const data::SequenceSample&)>;

namespace detail {

struct Acc {
  double up = 0.0, low = 0.0, all = 0.0;
  int64_t up_n = 0, low_n = 0, all_n = 0, seqs = 0;
};

inline double mean_or_zero(double sum, int64_t n) {
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

// A single-frame model reads only the current (last) frame of a sequence.
inline std::vector<ad::Tensor> frames_for(const model::ModelConfig& mc,
                                          const data::SequenceSample& s) {
  auto fl = s.frame_list();
  if (mc.frames == 1 && fl.size() > 1) return {fl.back()};
  return fl;
}

}  // namespace detail

inline EvalReport evaluate(const PoseFn& fn, const std::vector<data::SequenceSample>& samples,
                           const std::vector<std::string>& actions, int64_t param_count = 0) {
  if (samples.empty()) throw std::invalid_argument("evaluate: no samples");
  std::map<std::string, detail::Acc> acc;
  for (const auto& a : actions) acc[a];
  detail::Acc all;
  double occ_sum = 0.0, vis_sum = 0.0;
  int64_t occ_n = 0, vis_n = 0;

  const auto upper = data::upper_body_joints();

  for (const auto& s : samples) {
    auto it = acc.find(s.action);
    if (it == acc.end()) {
      throw std::invalid_argument("evaluate: sample action '" + s.action +
                                  "' is not in the action list");
    }
    ad::Tensor pred = fn(s);
    if (pred.shape() != s.pose.shape()) {
      throw ad::ShapeError("evaluate: prediction " + ad::shape_str(pred.shape()) +
                           " does not match reference pose " + ad::shape_str(s.pose.shape()));
    }
    const int64_t j = s.pose.dim(0);
    if (j != data::kNumJoints) {
      throw std::invalid_argument("evaluate: expected " + std::to_string(data::kNumJoints) +
                                  " joints, got " + std::to_string(j));
    }
    if (static_cast<int64_t>(s.occluded.size()) != j) {
      throw std::invalid_argument("evaluate: occlusion flags do not cover every joint");
    }
    const auto& pv = pred.values();
    const auto& gv = s.pose.values();
    auto& a = it->second;
    ++a.seqs;
    ++all.seqs;
    for (int64_t k = 0; k < j; ++k) {
      const double dx = pv[3 * k] - gv[3 * k];
      const double dy = pv[3 * k + 1] - gv[3 * k + 1];
      const double dz = pv[3 * k + 2] - gv[3 * k + 2];
      const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
      const bool is_upper = static_cast<size_t>(k) < upper.size();
      a.all += d;
      ++a.all_n;
      all.all += d;
      ++all.all_n;
      if (is_upper) {
        a.up += d;
        ++a.up_n;
        all.up += d;
        ++all.up_n;
      } else {
        a.low += d;
        ++a.low_n;
        all.low += d;
        ++all.low_n;
      }
      if (s.occluded[static_cast<size_t>(k)]) {
        occ_sum += d;
        ++occ_n;
      } else {
        vis_sum += d;
        ++vis_n;
      }
    }
  }

  EvalReport rep;
  rep.param_count = param_count;
  auto push = [&rep](const std::string& name, const detail::Acc& a) {
    EvalRow r;
    r.action = name;
    r.sequences = a.seqs;
    r.upper = detail::mean_or_zero(a.up, a.up_n);
    r.lower = detail::mean_or_zero(a.low, a.low_n);
    r.average = detail::mean_or_zero(a.all, a.all_n);
    rep.rows.push_back(r);
  };
  for (const auto& a : actions) push(a, acc.at(a));
  push("all", all);
  rep.occluded_mpjpe = detail::mean_or_zero(occ_sum, occ_n);
  rep.visible_mpjpe = detail::mean_or_zero(vis_sum, vis_n);
  rep.occluded_joints = occ_n;
  rep.visible_joints = vis_n;
  return rep;
}

// Adapts a model to the PoseFn interface; shape mismatches surface through
// the model's own forward checks.
inline PoseFn model_pose_fn(const model::EgoStanModel& m) {
  return [&m](const data::SequenceSample& s) {
    return m.forward(detail::frames_for(m.config(), s)).pose;
  };
}

inline EvalReport evaluate_model(const model::EgoStanModel& m,
                                 const std::vector<data::SequenceSample>& samples,
                                 const std::vector<std::string>& actions) {
  return evaluate(model_pose_fn(m), samples, actions, m.param_count());
}

inline std::string eval_report_csv(const EvalReport& r) {
  std::string s = "action,sequences,upper,lower,average\n";
  for (const auto& row : r.rows) {
    s += row.action + "," + std::to_string(row.sequences) + "," + loss::format_f64(row.upper) +
         "," + loss::format_f64(row.lower) + "," + loss::format_f64(row.average) + "\n";
  }
  s += "occluded_mpjpe," + std::to_string(r.occluded_joints) + "," +
       loss::format_f64(r.occluded_mpjpe) + ",,\n";
  s += "visible_mpjpe," + std::to_string(r.visible_joints) + "," +
       loss::format_f64(r.visible_mpjpe) + ",,\n";
  return s;
}

inline nlohmann::ordered_json eval_report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["param_count"] = r.param_count;
  j["occluded"] = {{"mpjpe", r.occluded_mpjpe}, {"joints", r.occluded_joints}};
  j["visible"] = {{"mpjpe", r.visible_mpjpe}, {"joints", r.visible_joints}};
  auto table = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json jr;
    jr["action"] = row.action;
    jr["sequences"] = row.sequences;
    jr["upper"] = row.upper;
    jr["lower"] = row.lower;
    jr["average"] = row.average;
    table.push_back(jr);
  }
  j["table"] = table;
  return j;
}

}  // namespace egostan::train
