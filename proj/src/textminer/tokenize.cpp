#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>

#include "tunetext/json_lines.hpp"
#include "tunetext/textminer.hpp"

namespace tunetext::textminer {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Bytes >= 0x80 (UTF-8 sequences) count as word characters.
bool is_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u) != 0;
}

}  // namespace

TokenSequence tokenize(std::string_view text) {
  TokenSequence out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    if (!is_punct(text[i])) {
      while (j < text.size() && !is_space(text[j]) && !is_punct(text[j])) ++j;
    }
    out.push_back({std::string(text.substr(i, j - i)), i, j});
    i = j;
  }
  return out;
}

void validate(const AnnotatedText& item) {
  for (const auto& s : item.spans) {
    if (!(s.start < s.end && s.end <= item.text.size())) {
      throw std::invalid_argument("span [" + std::to_string(s.start) + "," +
                                  std::to_string(s.end) +
                                  ") out of range for text of length " +
                                  std::to_string(item.text.size()));
    }
  }
  for (std::size_t a = 0; a < item.spans.size(); ++a) {
    for (std::size_t b = a + 1; b < item.spans.size(); ++b) {
      const auto& x = item.spans[a];
      const auto& y = item.spans[b];
      if (x.kind == y.kind && x.start < y.end && y.start < x.end) {
        throw std::invalid_argument("overlapping " + std::string(to_string(x.kind)) +
                                    " spans");
      }
    }
  }
}

std::vector<AnnotatedText> load_annotations(const std::filesystem::path& path) {
  std::vector<AnnotatedText> out;
  for_each_json_line(path, [&](const nlohmann::json& doc, std::size_t) {
    AnnotatedText item;
    item.text = doc.at("text").get<std::string>();
    if (doc.contains("spans")) {
      for (const auto& s : doc.at("spans")) {
        item.spans.push_back({s.at("start").get<std::size_t>(),
                              s.at("end").get<std::size_t>(),
                              text_kind_from_string(s.at("kind").get<std::string>())});
      }
    }
    validate(item);
    out.push_back(std::move(item));
  });
  return out;
}

void save_annotations(const std::filesystem::path& path,
                      const std::vector<AnnotatedText>& items) {
  std::vector<nlohmann::json> rows;
  for (const auto& item : items) {
    nlohmann::json spans = nlohmann::json::array();
    for (const auto& s : item.spans) {
      spans.push_back({{"start", s.start}, {"end", s.end}, {"kind", to_string(s.kind)}});
    }
    rows.push_back({{"text", item.text}, {"spans", spans}});
  }
  write_json_lines(path, rows);
}

std::vector<int> spans_to_labels(const AnnotatedText& item, TextKind kind,
                                 const TokenSequence& tokens) {
  std::vector<int> labels(tokens.size(), 0);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto& tok = tokens[t];
    if (tok.start >= tok.end || tok.end > item.text.size()) {
      throw std::out_of_range("token offsets outside the annotated text");
    }
    for (const auto& s : item.spans) {
      if (s.kind == kind && tok.start < s.end && s.start < tok.end) {
        labels[t] = 1;
        break;
      }
    }
  }
  return labels;
}

std::vector<std::pair<std::size_t, std::size_t>> decode_token_runs(
    std::span<const double> probabilities, double threshold,
    std::size_t min_tokens) {
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  std::size_t t = 0;
  const std::size_t n = probabilities.size();
  while (t < n) {
    if (probabilities[t] < threshold) {
      ++t;
      continue;
    }
    std::size_t end = t;
    while (end + 1 < n && probabilities[end + 1] >= threshold) ++end;
    if (end - t + 1 >= min_tokens) runs.emplace_back(t, end);
    t = end + 1;
  }
  return runs;
}

std::vector<CharSpan> decode_spans(std::span<const double> probabilities,
                                   const TokenSequence& tokens,
                                   double threshold, std::size_t min_tokens) {
  if (probabilities.size() != tokens.size()) {
    throw std::invalid_argument("probability count does not match token count");
  }
  std::vector<CharSpan> spans;
  for (const auto& [first, last] :
       decode_token_runs(probabilities, threshold, min_tokens)) {
    spans.push_back({tokens[first].start, tokens[last].end});
  }
  return spans;
}

std::size_t min_tokens_for(TextKind kind) {
  return kind == TextKind::kSentence ? 3 : 1;
}

std::vector<CharSpan> gold_token_spans(const AnnotatedText& item, TextKind kind,
                                       const TokenSequence& tokens) {
  std::vector<CharSpan> out;
  for (const auto& s : item.spans) {
    if (s.kind != kind) continue;
    std::size_t first = tokens.size();
    std::size_t last = 0;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      if (tokens[t].start < s.end && s.start < tokens[t].end) {
        first = std::min(first, t);
        last = t;
      }
    }
    if (first < tokens.size()) out.push_back({tokens[first].start, tokens[last].end});
  }
  std::sort(out.begin(), out.end());
  return out;
}

double span_f1(const std::vector<CharSpan>& predicted,
               const std::vector<CharSpan>& gold) {
  if (predicted.empty() && gold.empty()) return 1.0;
  std::set<CharSpan> g(gold.begin(), gold.end());
  std::size_t tp = 0;
  for (const auto& p : std::set<CharSpan>(predicted.begin(), predicted.end())) {
    if (g.contains(p)) ++tp;
  }
  const double denom = static_cast<double>(predicted.size() + gold.size());
  return denom == 0.0 ? 1.0 : 2.0 * static_cast<double>(tp) / denom;
}

}  // namespace tunetext::textminer
