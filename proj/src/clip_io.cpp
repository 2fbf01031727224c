#include "actorsets/clip_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace actorsets {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

class Reader {
public:
  explicit Reader(const ParseOptions& options) : options_(options) {}

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    throw Error(ErrorCode::kParse, path + ": " + what);
  }

  const json& field(const json& object, const std::string& path, const char* key) const {
    const auto it = object.find(key);
    if (it == object.end()) fail(path, std::string("missing required field '") + key + "'");
    return *it;
  }

  void check_keys(const json& object, const std::string& path,
                  std::initializer_list<const char*> known) const {
    if (!object.is_object()) fail(path, "expected an object");
    for (const auto& item : object.items()) {
      bool found = false;
      for (const char* key : known) found = found || item.key() == key;
      if (found) continue;
      const std::string message = path + ": unknown field '" + item.key() + "'";
      if (options_.strict) throw Error(ErrorCode::kParse, message);
      if (options_.warnings != nullptr) options_.warnings->push_back(message);
    }
  }

  std::int64_t integer(const json& value, const std::string& path) const {
    if (!value.is_number_integer()) fail(path, "expected an integer");
    return value.get<std::int64_t>();
  }

  double number(const json& value, const std::string& path) const {
    if (!value.is_number()) fail(path, "expected a number");
    return value.get<double>();
  }

  std::string string(const json& value, const std::string& path) const {
    if (!value.is_string()) fail(path, "expected a string");
    return value.get<std::string>();
  }

  const json& array(const json& value, const std::string& path) const {
    if (!value.is_array()) fail(path, "expected an array");
    return value;
  }

private:
  const ParseOptions& options_;
};

std::string index_path(const std::string& base, const char* key, std::size_t i) {
  return base + (base.empty() ? "" : ".") + key + "[" + std::to_string(i) + "]";
}

ActorDetection parse_actor(const Reader& in, const json& node, const std::string& path,
                           std::int64_t frame_id, int class_count) {
  in.check_keys(node, path, {"actor_id", "box", "confidence", "logits"});
  ActorDetection actor;
  actor.actor_id = in.integer(in.field(node, path, "actor_id"), path + ".actor_id");
  actor.frame_id = frame_id;
  if (const auto it = node.find("box"); it != node.end() && !it->is_null()) {
    const auto& box = in.array(*it, path + ".box");
    if (box.size() != 4) in.fail(path + ".box", "expected [x1, y1, x2, y2]");
    actor.box = BoundingBox{in.number(box[0], path + ".box[0]"), in.number(box[1], path + ".box[1]"),
                            in.number(box[2], path + ".box[2]"), in.number(box[3], path + ".box[3]")};
  }
  actor.confidence = in.number(in.field(node, path, "confidence"), path + ".confidence");
  const auto& logits = in.array(in.field(node, path, "logits"), path + ".logits");
  if (static_cast<int>(logits.size()) != class_count) {
    in.fail(path + ".logits", "expected " + std::to_string(class_count) +
                                  " values (one per class), got " + std::to_string(logits.size()));
  }
  actor.logits.resize(class_count);
  for (int c = 0; c < class_count; ++c) {
    actor.logits(c) = in.number(logits[static_cast<std::size_t>(c)],
                                path + ".logits[" + std::to_string(c) + "]");
  }
  return actor;
}

Clip parse_clip(const Reader& in, const json& node, const std::string& path, int class_count) {
  in.check_keys(node, path, {"clip_id", "labels", "frames"});
  Clip clip;
  clip.annotation.clip_id = in.string(in.field(node, path, "clip_id"), path + ".clip_id");
  clip.annotation.class_count = class_count;
  std::vector<int> labels;
  const auto& label_nodes = in.array(in.field(node, path, "labels"), path + ".labels");
  for (std::size_t j = 0; j < label_nodes.size(); ++j) {
    const std::string label_path = path + ".labels[" + std::to_string(j) + "]";
    const auto c = in.integer(label_nodes[j], label_path);
    if (c < 0 || c >= class_count) {
      in.fail(label_path, "label index out of range (" + std::to_string(c) + " with C = " +
                              std::to_string(class_count) + ")");
    }
    labels.push_back(static_cast<int>(c));
  }
  clip.annotation.labels = LabelSet(std::move(labels));

  const auto& frames = in.array(in.field(node, path, "frames"), path + ".frames");
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const std::string frame_path = index_path(path, "frames", f);
    in.check_keys(frames[f], frame_path, {"frame_id", "actors"});
    Frame frame;
    frame.frame_id = in.integer(in.field(frames[f], frame_path, "frame_id"), frame_path + ".frame_id");
    const auto& actors = in.array(in.field(frames[f], frame_path, "actors"), frame_path + ".actors");
    std::set<std::int64_t> seen;
    for (std::size_t a = 0; a < actors.size(); ++a) {
      const std::string actor_path = index_path(frame_path, "actors", a);
      auto actor = parse_actor(in, actors[a], actor_path, frame.frame_id, class_count);
      if (!seen.insert(actor.actor_id).second) {
        in.fail(actor_path + ".actor_id",
                "duplicate actor_id " + std::to_string(actor.actor_id) + " in frame " +
                    std::to_string(frame.frame_id));
      }
      try {
        validate_actor(actor, class_count);
      } catch (const Error& e) {
        throw Error(ErrorCode::kInvalidInput, "clip '" + clip.annotation.clip_id + "' frame " +
                                                  std::to_string(frame.frame_id) + ": " + e.what() +
                                                  " (" + actor_path + ")");
      }
      frame.actors.push_back(std::move(actor));
    }
    clip.frames.push_back(std::move(frame));
  }
  return clip;
}

}  // namespace

ClipFile parse_clip_file(std::string_view text, const ParseOptions& options) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("malformed document: ") + e.what());
  }
  const Reader in(options);
  in.check_keys(doc, "$", {"format", "version", "units", "class_count", "classes", "clips"});
  if (in.string(in.field(doc, "$", "format"), "format") != kClipFormat) {
    in.fail("format", "expected \"" + std::string(kClipFormat) + "\"");
  }
  const auto version = in.integer(in.field(doc, "$", "version"), "version");
  if (version != kClipFormatVersion) {
    in.fail("version", "unsupported version " + std::to_string(version));
  }

  ClipFile file;
  if (const auto it = doc.find("units"); it != doc.end()) {
    file.units = in.string(*it, "units");
    if (file.units != "normalized" && file.units != "pixel") {
      in.fail("units", "expected \"normalized\" or \"pixel\"");
    }
  }
  const auto& classes = in.array(in.field(doc, "$", "classes"), "classes");
  for (std::size_t c = 0; c < classes.size(); ++c) {
    file.class_names.push_back(in.string(classes[c], "classes[" + std::to_string(c) + "]"));
  }
  const auto class_count = in.integer(in.field(doc, "$", "class_count"), "class_count");
  if (class_count != file.class_count()) {
    in.fail("class_count", "class_count " + std::to_string(class_count) + " != " +
                               std::to_string(file.class_count()) + " class names");
  }
  if (class_count < 1 || class_count > kMaxClasses) in.fail("class_count", "must be in [1, 64]");

  const auto& clips = in.array(in.field(doc, "$", "clips"), "clips");
  for (std::size_t i = 0; i < clips.size(); ++i) {
    auto clip = parse_clip(in, clips[i], index_path("", "clips", i), file.class_count());
    validate_clip(clip);
    file.clips.push_back(std::move(clip));
  }
  return file;
}

std::string serialize_clip_file(const ClipFile& file) {
  ordered_json doc;
  doc["format"] = kClipFormat;
  doc["version"] = kClipFormatVersion;
  doc["units"] = file.units;
  doc["class_count"] = file.class_count();
  doc["classes"] = file.class_names;
  doc["clips"] = ordered_json::array();
  for (const auto& clip : file.clips) {
    ordered_json c;
    c["clip_id"] = clip.annotation.clip_id;
    c["labels"] = clip.annotation.labels.values();
    c["frames"] = ordered_json::array();
    for (const auto& frame : clip.frames) {
      ordered_json f;
      f["frame_id"] = frame.frame_id;
      f["actors"] = ordered_json::array();
      for (const auto& actor : frame.actors) {
        ordered_json a;
        a["actor_id"] = actor.actor_id;
        if (actor.box) a["box"] = {actor.box->x1, actor.box->y1, actor.box->x2, actor.box->y2};
        a["confidence"] = actor.confidence;
        a["logits"] = std::vector<double>(actor.logits.data(), actor.logits.data() + actor.logits.size());
        f["actors"].push_back(std::move(a));
      }
      c["frames"].push_back(std::move(f));
    }
    doc["clips"].push_back(std::move(c));
  }
  return doc.dump(2) + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kInvalidInput, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kInvalidInput, "cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::kInvalidInput, "failed writing '" + path.string() + "'");
}

}  // namespace actorsets
