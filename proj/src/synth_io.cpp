#include "actorsets/synth_io.hpp"

#include <functional>
#include <map>

#include "json.hpp"

namespace actorsets {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kParse, path + ": " + what);
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("malformed document: ") + e.what());
  }
}

using FieldSetters = std::map<std::string, std::function<void(const json&, const std::string&)>>;

void apply_fields(const json& object, const std::string& path, const FieldSetters& setters) {
  if (!object.is_object()) fail(path, "expected an object");
  for (const auto& item : object.items()) {
    const auto it = setters.find(item.key());
    if (it == setters.end()) fail(path, "unknown field '" + item.key() + "'");
    it->second(item.value(), path + "." + item.key());
  }
}

const json& require(const json& object, const std::string& path, const char* key) {
  const auto it = object.find(key);
  if (it == object.end()) fail(path, std::string("missing required field '") + key + "'");
  return *it;
}

auto int_field(int& target) {
  return [&target](const json& v, const std::string& path) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    target = v.get<int>();
  };
}

auto seed_field(std::uint64_t& target) {
  return [&target](const json& v, const std::string& path) {
    if (!v.is_number_unsigned()) fail(path, "expected a non-negative integer");
    target = v.get<std::uint64_t>();
  };
}

auto double_field(double& target) {
  return [&target](const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    target = v.get<double>();
  };
}

void read_config(const json& node, const std::string& path, SyntheticConfig& c) {
  apply_fields(node, path,
               {{"class_count", int_field(c.class_count)},
                {"train_clips", int_field(c.train_clips)},
                {"val_clips", int_field(c.val_clips)},
                {"frames_per_clip", int_field(c.frames_per_clip)},
                {"min_actors", int_field(c.min_actors)},
                {"max_actors", int_field(c.max_actors)},
                {"pool_min", int_field(c.pool_min)},
                {"pool_max", int_field(c.pool_max)},
                {"class_decay", double_field(c.class_decay)},
                {"actor_label_rate", double_field(c.actor_label_rate)},
                {"feature_dim", int_field(c.feature_dim)},
                {"separation", double_field(c.separation)},
                {"feature_noise", double_field(c.feature_noise)},
                {"label_noise", double_field(c.label_noise)},
                {"box_jitter", double_field(c.box_jitter)},
                {"false_positive_rate", double_field(c.false_positive_rate)},
                {"confidence_min", double_field(c.confidence_min)},
                {"confidence_max", double_field(c.confidence_max)},
                {"false_positive_confidence_min", double_field(c.false_positive_confidence_min)},
                {"false_positive_confidence_max", double_field(c.false_positive_confidence_max)},
                {"seed", seed_field(c.seed)}});
}

ordered_json write_config(const SyntheticConfig& c) {
  ordered_json j;
  j["class_count"] = c.class_count;
  j["train_clips"] = c.train_clips;
  j["val_clips"] = c.val_clips;
  j["frames_per_clip"] = c.frames_per_clip;
  j["min_actors"] = c.min_actors;
  j["max_actors"] = c.max_actors;
  j["pool_min"] = c.pool_min;
  j["pool_max"] = c.pool_max;
  j["class_decay"] = c.class_decay;
  j["actor_label_rate"] = c.actor_label_rate;
  j["feature_dim"] = c.feature_dim;
  j["separation"] = c.separation;
  j["feature_noise"] = c.feature_noise;
  j["label_noise"] = c.label_noise;
  j["box_jitter"] = c.box_jitter;
  j["false_positive_rate"] = c.false_positive_rate;
  j["confidence_min"] = c.confidence_min;
  j["confidence_max"] = c.confidence_max;
  j["false_positive_confidence_min"] = c.false_positive_confidence_min;
  j["false_positive_confidence_max"] = c.false_positive_confidence_max;
  j["seed"] = c.seed;
  return j;
}

void read_schedule(const json& node, const std::string& path, TrainSchedule& s) {
  apply_fields(node, path,
               {{"method",
                 [&s](const json& v, const std::string& p) {
                   if (!v.is_string()) fail(p, "expected a string");
                   s.method = parse_method(v.get<std::string>());
                 }},
                {"epochs", int_field(s.epochs)},
                {"warmup_epochs", int_field(s.warmup_epochs)},
                {"refresh_every", int_field(s.refresh_every)},
                {"alpha", double_field(s.alpha)},
                {"learning_rate", double_field(s.learning_rate)},
                {"momentum", double_field(s.momentum)},
                {"lr_step", int_field(s.lr_step)},
                {"lr_decay", double_field(s.lr_decay)},
                {"batch_size", int_field(s.batch_size)},
                {"powerset_cap", int_field(s.powerset_cap)},
                {"solver_cap", int_field(s.solver_cap)},
                {"seed", seed_field(s.seed)}});
}

ordered_json write_schedule(const TrainSchedule& s) {
  ordered_json j;
  j["method"] = method_name(s.method);
  j["epochs"] = s.epochs;
  j["warmup_epochs"] = s.warmup_epochs;
  j["refresh_every"] = s.refresh_every;
  j["alpha"] = s.alpha;
  j["learning_rate"] = s.learning_rate;
  j["momentum"] = s.momentum;
  j["lr_step"] = s.lr_step;
  j["lr_decay"] = s.lr_decay;
  j["batch_size"] = s.batch_size;
  j["powerset_cap"] = s.powerset_cap;
  j["solver_cap"] = s.solver_cap;
  j["seed"] = s.seed;
  return j;
}

ordered_json write_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd read_vector(const json& node, const std::string& path, Eigen::Index expected) {
  if (!node.is_array()) fail(path, "expected an array");
  if (expected >= 0 && static_cast<Eigen::Index>(node.size()) != expected) {
    fail(path, "expected " + std::to_string(expected) + " values, got " + std::to_string(node.size()));
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(node.size()));
  for (std::size_t i = 0; i < node.size(); ++i) {
    if (!node[i].is_number()) fail(path + "[" + std::to_string(i) + "]", "expected a number");
    v(static_cast<Eigen::Index>(i)) = node[i].get<double>();
  }
  return v;
}

ordered_json write_box(const BoundingBox& b) { return {b.x1, b.y1, b.x2, b.y2}; }

BoundingBox read_box(const json& node, const std::string& path) {
  const auto v = read_vector(node, path, 4);
  return BoundingBox{v(0), v(1), v(2), v(3)};
}

std::vector<int> read_classes(const json& node, const std::string& path, int class_count) {
  if (!node.is_array()) fail(path, "expected an array");
  std::vector<int> out;
  for (std::size_t i = 0; i < node.size(); ++i) {
    const auto& v = node[i];
    if (!v.is_number_integer() || v.get<int>() < 0 || v.get<int>() >= class_count) {
      fail(path + "[" + std::to_string(i) + "]", "expected a class index below class_count");
    }
    out.push_back(v.get<int>());
  }
  return out;
}

ordered_json write_clips(const std::vector<SyntheticClip>& clips) {
  ordered_json out = ordered_json::array();
  for (const auto& clip : clips) {
    ordered_json c;
    c["clip_id"] = clip.clip_id;
    c["labels"] = clip.weak_labels.values();
    c["frames"] = ordered_json::array();
    for (const auto& frame : clip.frames) {
      ordered_json f;
      f["frame_id"] = frame.frame_id;
      f["actors"] = ordered_json::array();
      for (const auto& actor : frame.actors) {
        ordered_json a;
        a["actor_id"] = actor.actor_id;
        a["box"] = write_box(actor.box);
        a["confidence"] = actor.confidence;
        a["features"] = write_vector(actor.features);
        a["planted_box"] = write_box(actor.planted_box);
        a["hidden_labels"] = actor.hidden_labels.classes();
        a["false_positive"] = actor.false_positive;
        f["actors"].push_back(std::move(a));
      }
      c["frames"].push_back(std::move(f));
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<SyntheticClip> read_clips(const json& node, const std::string& path,
                                      const SyntheticConfig& config) {
  if (!node.is_array()) fail(path, "expected an array");
  std::vector<SyntheticClip> clips;
  for (std::size_t i = 0; i < node.size(); ++i) {
    const std::string cp = path + "[" + std::to_string(i) + "]";
    const auto& c = node[i];
    SyntheticClip clip;
    const auto& id = require(c, cp, "clip_id");
    if (!id.is_string()) fail(cp + ".clip_id", "expected a string");
    clip.clip_id = id.get<std::string>();
    clip.weak_labels = LabelSet(read_classes(require(c, cp, "labels"), cp + ".labels", config.class_count));
    const auto& frames = require(c, cp, "frames");
    if (!frames.is_array()) fail(cp + ".frames", "expected an array");
    for (std::size_t f = 0; f < frames.size(); ++f) {
      const std::string fp = cp + ".frames[" + std::to_string(f) + "]";
      SyntheticFrame frame;
      const auto& fid = require(frames[f], fp, "frame_id");
      if (!fid.is_number_integer()) fail(fp + ".frame_id", "expected an integer");
      frame.frame_id = fid.get<std::int64_t>();
      const auto& actors = require(frames[f], fp, "actors");
      if (!actors.is_array()) fail(fp + ".actors", "expected an array");
      for (std::size_t a = 0; a < actors.size(); ++a) {
        const std::string ap = fp + ".actors[" + std::to_string(a) + "]";
        const auto& node_a = actors[a];
        SyntheticActor actor;
        const auto& aid = require(node_a, ap, "actor_id");
        if (!aid.is_number_integer()) fail(ap + ".actor_id", "expected an integer");
        actor.actor_id = aid.get<std::int64_t>();
        actor.box = read_box(require(node_a, ap, "box"), ap + ".box");
        const auto& conf = require(node_a, ap, "confidence");
        if (!conf.is_number()) fail(ap + ".confidence", "expected a number");
        actor.confidence = conf.get<double>();
        actor.features = read_vector(require(node_a, ap, "features"), ap + ".features", config.feature_dim);
        actor.planted_box = read_box(require(node_a, ap, "planted_box"), ap + ".planted_box");
        const auto hidden = read_classes(require(node_a, ap, "hidden_labels"), ap + ".hidden_labels",
                                         config.class_count);
        actor.hidden_labels = ActionSubset::from_classes(hidden);
        const auto& fp_flag = require(node_a, ap, "false_positive");
        if (!fp_flag.is_boolean()) fail(ap + ".false_positive", "expected a boolean");
        actor.false_positive = fp_flag.get<bool>();
        frame.actors.push_back(std::move(actor));
      }
      clip.frames.push_back(std::move(frame));
    }
    clips.push_back(std::move(clip));
  }
  return clips;
}

}  // namespace

RunConfig parse_run_config(std::string_view text) {
  const json doc = parse_json(text);
  RunConfig config;
  apply_fields(doc, "$",
               {{"data", [&](const json& v, const std::string& p) { read_config(v, p, config.data); }},
                {"schedule",
                 [&](const json& v, const std::string& p) { read_schedule(v, p, config.schedule); }}});
  config.data.validate();
  return config;
}

std::string serialize_run_config(const RunConfig& config) {
  ordered_json doc;
  doc["data"] = write_config(config.data);
  doc["schedule"] = write_schedule(config.schedule);
  return doc.dump(2) + "\n";
}

std::string serialize_dataset(const SyntheticDataset& dataset) {
  ordered_json doc;
  doc["format"] = kSynthFormat;
  doc["version"] = 1;
  doc["config"] = write_config(dataset.config);
  ordered_json prototypes = ordered_json::array();
  for (Eigen::Index c = 0; c < dataset.prototypes.cols(); ++c) {
    prototypes.push_back(write_vector(dataset.prototypes.col(c)));
  }
  doc["prototypes"] = std::move(prototypes);
  doc["train"] = write_clips(dataset.train);
  doc["val"] = write_clips(dataset.val);
  return doc.dump(2) + "\n";
}

SyntheticDataset parse_dataset(std::string_view text) {
  const json doc = parse_json(text);
  if (!doc.is_object()) fail("$", "expected an object");
  const auto& format = require(doc, "$", "format");
  if (!format.is_string() || format.get<std::string>() != kSynthFormat) {
    fail("format", "expected \"" + std::string(kSynthFormat) + "\"");
  }
  const auto& version = require(doc, "$", "version");
  if (!version.is_number_integer() || version.get<int>() != 1) fail("version", "unsupported version");
  SyntheticDataset data;
  read_config(require(doc, "$", "config"), "config", data.config);
  data.config.validate();
  const auto& prototypes = require(doc, "$", "prototypes");
  if (!prototypes.is_array() || static_cast<int>(prototypes.size()) != data.config.class_count) {
    fail("prototypes", "expected one prototype per class");
  }
  data.prototypes.resize(data.config.feature_dim, data.config.class_count);
  for (std::size_t c = 0; c < prototypes.size(); ++c) {
    data.prototypes.col(static_cast<Eigen::Index>(c)) =
        read_vector(prototypes[c], "prototypes[" + std::to_string(c) + "]", data.config.feature_dim);
  }
  data.train = read_clips(require(doc, "$", "train"), "train", data.config);
  data.val = read_clips(require(doc, "$", "val"), "val", data.config);
  return data;
}

std::string serialize_trace(const TrainResult& result, const TrainSchedule& schedule) {
  ordered_json doc;
  doc["format"] = kTraceFormat;
  doc["version"] = 1;
  doc["schedule"] = write_schedule(schedule);
  ordered_json epochs = ordered_json::array();
  for (const auto& record : result.trace) {
    ordered_json e;
    e["epoch"] = record.epoch;
    e["phase"] = record.phase;
    e["train_loss"] = record.train_loss;
    e["val_map"] = record.val_map;
    epochs.push_back(std::move(e));
  }
  doc["epochs"] = std::move(epochs);
  doc["final_val_map"] = result.final_val_map;
  return doc.dump(2) + "\n";
}

}  // namespace actorsets
