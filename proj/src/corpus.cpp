#include "dialeval/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "dialeval/error.hpp"
#include "dialeval/text.hpp"

namespace dialeval {

using nlohmann::json;

std::string_view to_string(Level level) { return level == Level::turn ? "turn" : "dialogue"; }

Level parse_level(std::string_view s) {
  if (s == "turn") return Level::turn;
  if (s == "dialogue") return Level::dialogue;
  throw data_error("unknown level '" + std::string(s) + "'");
}

AspectRegistry::AspectRegistry(const std::vector<std::string>& names) {
  for (const auto& n : names) names_.insert(canonical(n));
}

std::string AspectRegistry::canonical(std::string_view name) { return text::lower(text::trim(name)); }

std::optional<AspectId> AspectRegistry::find(std::string_view name) const {
  auto c = canonical(name);
  if (names_.contains(c)) return c;
  return std::nullopt;
}

AspectId AspectRegistry::require(std::string_view name) const {
  if (auto id = find(name)) return *id;
  throw data_error("unknown aspect '" + std::string(name) + "'");
}

namespace {

double checked_score(const json& v, const AnnotationScale& scale, const std::string& dialogue_id,
                     const std::string& aspect) {
  if (!v.is_number()) throw data_error("dialogue '" + dialogue_id + "': annotation for '" + aspect + "' is not a number");
  const double x = v.get<double>();
  if (!scale.contains(x)) {
    std::ostringstream os;
    os << "dialogue '" << dialogue_id << "': annotation " << x << " for '" << aspect
       << "' outside scale [" << scale.min << ", " << scale.max << "]";
    throw data_error(os.str());
  }
  return x;
}

const json& required(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw data_error(where + ": missing field '" + key + "'");
  return *it;
}

}  // namespace

Dialogue dialogue_from_json(const json& j, const AnnotationScale& scale, const AspectRegistry& registry) {
  if (!j.is_object()) throw data_error("dialogue record is not a JSON object");
  Dialogue d;
  const auto& id = required(j, "dialogue_id", "dialogue");
  if (!id.is_string() || id.get<std::string>().empty()) throw data_error("dialogue_id must be a non-empty string");
  d.dialogue_id = id.get<std::string>();
  const std::string where = "dialogue '" + d.dialogue_id + "'";

  const auto& lang = required(j, "language", where);
  if (!lang.is_string()) throw data_error(where + ": language must be a string");
  d.language = text::lower(text::trim(lang.get<std::string>()));

  const auto& turns = required(j, "turns", where);
  if (!turns.is_array()) throw data_error(where + ": turns must be an array");
  for (const auto& t : turns) {
    if (!t.is_object()) throw data_error(where + ": turn is not an object");
    const auto& speaker = required(t, "speaker", where);
    const auto& txt = required(t, "text", where);
    if (!speaker.is_string() || !txt.is_string()) throw data_error(where + ": speaker and text must be strings");
    Turn turn{speaker.get<std::string>(), txt.get<std::string>(), d.turns.size()};
    if (text::trim(turn.text).empty())
      throw data_error(where + ": turn " + std::to_string(turn.turn_index) + " has empty text");
    d.turns.push_back(std::move(turn));
  }

  if (auto it = j.find("turn_annotations"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw data_error(where + ": turn_annotations must be an object");
    for (const auto& [name, values] : it->items()) {
      const AspectId aspect = registry.require(name);
      if (!values.is_array()) throw data_error(where + ": turn_annotations['" + name + "'] must be an array");
      if (values.size() > d.turns.size())
        throw data_error(where + ": turn_annotations['" + name + "'] annotates turns that do not exist");
      std::vector<std::optional<double>> row(d.turns.size());
      for (std::size_t i = 0; i < values.size(); ++i)
        if (!values[i].is_null()) row[i] = checked_score(values[i], scale, d.dialogue_id, aspect);
      d.turn_annotations[aspect] = std::move(row);
    }
  }
  if (auto it = j.find("dialogue_annotations"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw data_error(where + ": dialogue_annotations must be an object");
    for (const auto& [name, value] : it->items()) {
      const AspectId aspect = registry.require(name);
      d.dialogue_annotations[aspect] = checked_score(value, scale, d.dialogue_id, aspect);
    }
  }
  return d;
}

std::vector<Dialogue> parse_dataset(std::string_view jsonl, const AnnotationScale& scale,
                                    const AspectRegistry& registry) {
  if (!(scale.max > scale.min)) throw data_error("annotation scale requires max > min");
  std::vector<Dialogue> out;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= jsonl.size()) {
    std::size_t end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    const std::string_view line = jsonl.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw data_error("line " + std::to_string(line_no) + ": malformed JSON (" + e.what() + ")");
    }
    Dialogue d;
    try {
      d = dialogue_from_json(j, scale, registry);
    } catch (const Error& e) {
      throw data_error("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.insert(d.dialogue_id).second)
      throw data_error("line " + std::to_string(line_no) + ": duplicate dialogue_id '" + d.dialogue_id + "'");
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Dialogue> load_dataset(const std::filesystem::path& path, const AnnotationScale& scale,
                                   const AspectRegistry& registry) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open dataset '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_dataset(buf.str(), scale, registry);
  } catch (const Error& e) {
    throw data_error(path.string() + ": " + e.what());
  }
}

json to_json(const Dialogue& d) {
  json j;
  j["dialogue_id"] = d.dialogue_id;
  j["language"] = d.language;
  j["turns"] = json::array();
  for (const auto& t : d.turns) j["turns"].push_back({{"speaker", t.speaker}, {"text", t.text}});
  if (!d.turn_annotations.empty()) {
    json ta = json::object();
    for (const auto& [aspect, row] : d.turn_annotations) {
      json arr = json::array();
      for (const auto& v : row) arr.push_back(v ? json(*v) : json(nullptr));
      ta[aspect] = std::move(arr);
    }
    j["turn_annotations"] = std::move(ta);
  }
  if (!d.dialogue_annotations.empty()) j["dialogue_annotations"] = d.dialogue_annotations;
  return j;
}

std::string serialize_dataset(const std::vector<Dialogue>& dialogues) {
  std::string out;
  for (const auto& d : dialogues) {
    out += to_json(d).dump();
    out += '\n';
  }
  return out;
}

std::string instance_id(std::string_view dialogue_id, std::size_t turn_index) {
  return std::string(dialogue_id) + "#" + std::to_string(turn_index);
}

std::vector<EvalInstance> make_turn_instances(const Dialogue& d) {
  std::vector<EvalInstance> out;
  if (d.turns.size() < 2) return out;
  out.reserve(d.turns.size() - 1);
  for (std::size_t i = 1; i < d.turns.size(); ++i) {
    EvalInstance inst;
    inst.instance_id = instance_id(d.dialogue_id, d.turns[i].turn_index);
    inst.context.assign(d.turns.begin(), d.turns.begin() + static_cast<std::ptrdiff_t>(i));
    inst.response = d.turns[i];
    inst.language = d.language;
    out.push_back(std::move(inst));
  }
  return out;
}

std::string render_turn(const Turn& t) { return t.speaker + ": " + t.text; }

std::string render_turns(const std::vector<Turn>& turns) {
  std::string out;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (i) out += '\n';
    out += render_turn(turns[i]);
  }
  return out;
}

std::size_t rendered_length(const EvalInstance& inst) {
  std::size_t n = text::length(render_turn(inst.response));
  for (const auto& t : inst.context) n += text::length(render_turn(t)) + 1;  // + newline
  return n;
}

EvalInstance truncate_context(const EvalInstance& inst, std::size_t budget) {
  const std::size_t response_len = text::length(render_turn(inst.response));
  if (budget < response_len)
    throw data_error("instance '" + inst.instance_id + "': budget " + std::to_string(budget) +
                     " is smaller than the rendered response (" + std::to_string(response_len) + ")");
  std::size_t total = rendered_length(inst);
  std::size_t drop = 0;
  while (total > budget && drop < inst.context.size()) {
    total -= text::length(render_turn(inst.context[drop])) + 1;
    ++drop;
  }
  if (drop == 0) return inst;
  EvalInstance out = inst;
  out.context.erase(out.context.begin(), out.context.begin() + static_cast<std::ptrdiff_t>(drop));
  return out;
}

double normalize_annotation(double raw, const AnnotationScale& scale) {
  if (!(scale.max > scale.min)) throw data_error("annotation scale requires max > min");
  if (!scale.contains(raw)) {
    std::ostringstream os;
    os << "annotation " << raw << " outside scale [" << scale.min << ", " << scale.max << "]";
    throw data_error(os.str());
  }
  return (raw - scale.min) / (scale.max - scale.min);
}

}  // namespace dialeval
