#include "tunetext/mined.hpp"

#include <stdexcept>

#include "tunetext/json_lines.hpp"

namespace tunetext {

using nlohmann::json;

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kCaption:
      return "caption";
    case Provenance::kFileDescription:
      return "file_description";
    case Provenance::kArticle:
      return "article";
    case Provenance::kMetadata:
      return "metadata";
  }
  return "caption";
}

Provenance provenance_from_string(std::string_view s) {
  if (s == "caption") return Provenance::kCaption;
  if (s == "file_description") return Provenance::kFileDescription;
  if (s == "article") return Provenance::kArticle;
  if (s == "metadata") return Provenance::kMetadata;
  throw std::invalid_argument("unknown provenance '" + std::string(s) + "'");
}

std::string_view to_string(TextKind k) {
  return k == TextKind::kAspect ? "aspect" : "sentence";
}

TextKind text_kind_from_string(std::string_view s) {
  if (s == "aspect") return TextKind::kAspect;
  if (s == "sentence") return TextKind::kSentence;
  throw std::invalid_argument("unknown text kind '" + std::string(s) + "'");
}

std::vector<std::string> MinedDescription::aspect_strings() const {
  std::vector<std::string> out;
  out.reserve(aspects.size());
  for (const auto& a : aspects) out.push_back(a.text);
  return out;
}

std::vector<std::string> MinedDescription::sentence_strings() const {
  std::vector<std::string> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(s.text);
  return out;
}

bool append_unique(std::vector<MinedText>& items, MinedText item) {
  for (const auto& existing : items) {
    if (existing.text == item.text) return false;
  }
  items.push_back(std::move(item));
  return true;
}

namespace {

json items_to_json(const std::vector<MinedText>& items) {
  json arr = json::array();
  for (const auto& item : items) {
    json o{{"text", item.text}, {"source", to_string(item.source)}};
    if (item.score) o["score"] = *item.score;
    arr.push_back(std::move(o));
  }
  return arr;
}

std::vector<MinedText> items_from_json(const json& arr, const char* field) {
  if (!arr.is_array()) {
    throw std::invalid_argument(std::string("'") + field + "' must be an array");
  }
  std::vector<MinedText> out;
  for (const auto& o : arr) {
    MinedText item;
    if (o.is_string()) {
      item.text = o.get<std::string>();
    } else {
      item.text = o.at("text").get<std::string>();
      if (o.contains("source")) {
        item.source = provenance_from_string(o.at("source").get<std::string>());
      }
      if (o.contains("score")) item.score = o.at("score").get<double>();
    }
    append_unique(out, std::move(item));
  }
  return out;
}

}  // namespace

void save_mined(const std::filesystem::path& path, const MinedMap& mined) {
  std::vector<json> rows;
  rows.reserve(mined.size());
  for (const auto& [id, desc] : mined) {
    rows.push_back(json{{"track_id", id},
                        {"aspects", items_to_json(desc.aspects)},
                        {"sentences", items_to_json(desc.sentences)}});
  }
  write_json_lines(path, rows);
}

MinedMap load_mined(const std::filesystem::path& path) {
  MinedMap out;
  for_each_json_line(path, [&](const json& doc, std::size_t line) {
    if (!doc.contains("track_id") || !doc["track_id"].is_string()) {
      throw ParseError(path, line, "missing track_id");
    }
    MinedDescription desc;
    desc.track_id = doc["track_id"].get<std::string>();
    if (doc.contains("aspects")) desc.aspects = items_from_json(doc["aspects"], "aspects");
    if (doc.contains("sentences")) {
      desc.sentences = items_from_json(doc["sentences"], "sentences");
    }
    if (!out.emplace(desc.track_id, desc).second) {
      throw ParseError(path, line, "duplicate track_id '" + desc.track_id + "'");
    }
  });
  return out;
}

}  // namespace tunetext
