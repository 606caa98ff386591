#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tunetext {

/// Field a mined text was extracted from.
enum class Provenance { kCaption, kFileDescription, kArticle, kMetadata };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

struct MinedText {
  std::string text;
  Provenance source = Provenance::kCaption;
  std::optional<double> score;  // set by relevance filtering

  bool operator==(const MinedText&) const = default;
};

enum class TextKind { kAspect, kSentence };

std::string_view to_string(TextKind k);
TextKind text_kind_from_string(std::string_view s);

/// Short-form (aspects) and long-form (sentences) descriptions of one track.
struct MinedDescription {
  std::string track_id;
  std::vector<MinedText> aspects;
  std::vector<MinedText> sentences;

  bool empty() const { return aspects.empty() && sentences.empty(); }
  std::vector<std::string> aspect_strings() const;
  std::vector<std::string> sentence_strings() const;
  const std::vector<MinedText>& items(TextKind kind) const {
    return kind == TextKind::kAspect ? aspects : sentences;
  }
  std::vector<MinedText>& items(TextKind kind) {
    return kind == TextKind::kAspect ? aspects : sentences;
  }

  bool operator==(const MinedDescription&) const = default;
};

/// Ordered by track_id so every writer emits a stable order.
using MinedMap = std::map<std::string, MinedDescription>;

/// Appends `item` unless an entry with identical text already exists.
/// Returns true when appended.
bool append_unique(std::vector<MinedText>& items, MinedText item);

void save_mined(const std::filesystem::path& path, const MinedMap& mined);
MinedMap load_mined(const std::filesystem::path& path);

}  // namespace tunetext
