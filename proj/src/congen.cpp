#include "xconsist/congen.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "xconsist/text.hpp"

namespace xconsist::congen {

namespace {

const std::unordered_set<std::string_view>& stopwords() {
  static const std::unordered_set<std::string_view> words = {
      "a",     "an",    "the",   "is",    "are",   "was",   "were",  "be",    "been",
      "being", "am",    "of",    "to",    "for",   "with",  "by",    "from",  "and",
      "or",    "but",   "this",  "that",  "these", "those", "it",    "its",   "it's",
      "there", "their", "they",  "them",  "he",    "she",   "his",   "her",   "him",
      "i",     "you",   "we",    "my",    "your",  "our",   "what",  "which", "who",
      "whom",  "whose", "where", "when",  "why",   "how",   "do",    "does",  "did",
      "has",   "have",  "had",   "some",  "as",    "very",  "while", "s",     "'s",
  };
  return words;
}

const std::unordered_set<std::string_view>& excluded_answers() {
  static const std::unordered_set<std::string_view> words = {
      "yes", "no", "maybe", "none", "nothing", "unknown", "not sure", "nobody", "nowhere",
  };
  return words;
}

// Irregular forms and words the suffix rules would mangle.
const std::unordered_map<std::string_view, std::string_view>& exceptions() {
  static const std::unordered_map<std::string_view, std::string_view> table = {
      {"men", "man"},           {"women", "woman"},       {"children", "child"},
      {"people", "person"},     {"mice", "mouse"},        {"teeth", "tooth"},
      {"feet", "foot"},         {"geese", "goose"},       {"knives", "knife"},
      {"leaves", "leaf"},       {"shelves", "shelf"},     {"wolves", "wolf"},
      {"loaves", "loaf"},       {"halves", "half"},       {"buses", "bus"},
      {"glasses", "glass"},     {"dresses", "dress"},     {"cookies", "cookie"},
      {"movies", "movie"},      {"brownies", "brownie"},  {"skis", "ski"},
      {"clothes", "clothes"},   {"pants", "pants"},       {"jeans", "jeans"},
      {"scissors", "scissors"}, {"news", "news"},         {"species", "species"},
      {"ran", "run"},           {"sat", "sit"},           {"ate", "eat"},
      {"flew", "fly"},          {"flying", "fly"},        {"lying", "lie"},
      {"riding", "ride"},       {"making", "make"},       {"driving", "drive"},
      {"taking", "take"},       {"having", "have"},       {"sliding", "slide"},
      {"smiling", "smile"},     {"grazing", "graze"},     {"posing", "pose"},
      {"waving", "wave"},       {"serving", "serve"},     {"hiking", "hike"},
      {"baking", "bake"},       {"using", "use"},         {"skating", "skate"},
      {"dancing", "dance"},     {"racing", "race"},       {"sliced", "slice"},
      {"striped", "stripe"},    {"tiled", "tile"},        {"glazed", "glaze"},
      {"building", "building"}, {"ceiling", "ceiling"},   {"string", "string"},
      {"evening", "evening"},   {"morning", "morning"},   {"painting", "painting"},
      {"clothing", "clothing"}, {"wedding", "wedding"},   {"pudding", "pudding"},
      {"tennis", "tennis"},     {"shoes", "shoe"},        {"bananas", "banana"},
  };
  return table;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

// running -> runn -> run; keeps ll/ss/zz (falling -> fall).
std::string undouble(std::string stem) {
  const std::size_t n = stem.size();
  if (n >= 2 && stem[n - 1] == stem[n - 2] && !is_vowel(stem[n - 1]) && stem[n - 1] != 'l' &&
      stem[n - 1] != 's' && stem[n - 1] != 'z') {
    stem.pop_back();
  }
  return stem;
}

bool is_word_char(unsigned char c) {
  return std::isalnum(c) != 0 || c == '\'' || c >= 0x80;
}

}  // namespace

std::string lemmatize(std::string_view w) {
  if (auto it = exceptions().find(w); it != exceptions().end()) return std::string(it->second);
  std::string s(w);
  if (s.size() <= 3) return s;
  if (ends_with(s, "ies") && s.size() > 4) return s.substr(0, s.size() - 3) + "y";
  if (ends_with(s, "sses")) return s.substr(0, s.size() - 2);
  if (ends_with(s, "ches") || ends_with(s, "shes") || ends_with(s, "xes")) {
    return s.substr(0, s.size() - 2);
  }
  if (ends_with(s, "oes") && s.size() > 5) return s.substr(0, s.size() - 2);
  if (ends_with(s, "ss") || ends_with(s, "us") || ends_with(s, "is")) return s;
  if (ends_with(s, "s")) return s.substr(0, s.size() - 1);
  if (ends_with(s, "ing") && s.size() > 5) return undouble(s.substr(0, s.size() - 3));
  if (ends_with(s, "ed") && s.size() > 4) return undouble(s.substr(0, s.size() - 2));
  return s;
}

bool is_stopword(std::string_view w) { return stopwords().count(w) > 0; }

bool is_excluded_answer(std::string_view answer) {
  std::string lower;
  for (unsigned char c : answer) lower += static_cast<char>(std::tolower(c));
  const auto first = lower.find_first_not_of(" \t");
  if (first == std::string::npos) return true;
  lower = lower.substr(first, lower.find_last_not_of(" \t.!?") + 1 - first);
  return excluded_answers().count(lower) > 0;
}

std::vector<Token> normalize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_char(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_word_char(static_cast<unsigned char>(text[j]))) ++j;
    // Trim apostrophes and a possessive "'s".
    std::size_t b = i, e = j;
    while (b < e && text[b] == '\'') ++b;
    if (e - b > 2 && text[e - 2] == '\'' && std::tolower(static_cast<unsigned char>(text[e - 1])) == 's') {
      e -= 2;
    }
    while (e > b && text[e - 1] == '\'') --e;
    if (b < e) {
      std::string lower;
      for (std::size_t k = b; k < e; ++k) {
        lower += static_cast<char>(std::tolower(static_cast<unsigned char>(text[k])));
      }
      if (!is_stopword(lower)) tokens.push_back({lemmatize(lower), b, e});
    }
    i = j;
  }
  return tokens;
}

std::vector<std::string> normalized_words(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : normalize(text)) out.push_back(std::move(t.norm));
  return out;
}

std::string normalized_key(std::string_view text) {
  std::string out;
  for (const auto& w : normalized_words(text)) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Caption> read_captions(const std::filesystem::path& path) {
  const auto t = read_csv_file(path, {"image_id", "caption"});
  std::vector<Caption> out;
  for (const auto& r : t.rows) out.push_back({r[0], r[1]});
  return out;
}

std::vector<QaPair> read_qa(const std::filesystem::path& path) {
  const auto t = read_csv_file(path, {"image_id", "question", "answer"});
  std::vector<QaPair> out;
  for (const auto& r : t.rows) out.push_back({r[0], r[1], r[2]});
  return out;
}

std::vector<ObjectBox> read_boxes(const std::filesystem::path& path) {
  const auto t = read_csv_file(path, {"image_id", "class", "x", "y", "w", "h"});
  std::vector<ObjectBox> out;
  std::vector<std::string> errs;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    const std::string where = path.string() + ":" + std::to_string(t.line_numbers[i]);
    try {
      out.push_back({r[0], r[1],
                     Box{parse_real(r[2], where + ": x"), parse_real(r[3], where + ": y"),
                         parse_real(r[4], where + ": w"), parse_real(r[5], where + ": h")}});
    } catch (const ValidationError& e) {
      errs.push_back(e.what());
    }
  }
  if (!errs.empty()) throw ValidationError(std::move(errs));
  return out;
}

ScorerTable ScorerTable::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::map<std::string, double> scores;
  std::vector<std::string> errs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) {
      errs.push_back(where + ": expected 'query<TAB>score'");
      continue;
    }
    try {
      const double v = parse_real(std::string_view(line).substr(tab + 1), where + ": score");
      if (!scores.emplace(line.substr(0, tab), v).second) {
        errs.push_back(where + ": duplicate query '" + line.substr(0, tab) + "'");
      }
    } catch (const ValidationError& e) {
      errs.push_back(e.what());
    }
  }
  if (!errs.empty()) throw ValidationError(std::move(errs));
  return ScorerTable(std::move(scores));
}

std::optional<double> ScorerTable::find(const std::string& query) const {
  auto it = scores_.find(query);
  if (it == scores_.end()) return std::nullopt;
  return it->second;
}

std::string answer_query(std::string_view image_id, std::string_view question,
                         std::string_view answer) {
  std::string q(image_id);
  q += kAnswerSeparator;
  q += question;
  q += kAnswerSeparator;
  q += answer;
  return q;
}

namespace {

std::vector<std::string> with_prefix(const std::string& table, const std::vector<std::string>& qs) {
  std::vector<std::string> out;
  for (const auto& q : qs) out.push_back("missing " + table + " entry: " + q);
  return out;
}

}  // namespace

MissingScoresError::MissingScoresError(std::string table, std::vector<std::string> queries)
    : ValidationError(with_prefix(table, queries)),
      table_(std::move(table)),
      queries_(std::move(queries)) {}

// ---------------------------------------------------------------------------

std::vector<OverlapMatch> find_pivots(const std::vector<Caption>& captions,
                                      const std::vector<QaPair>& qa_pairs) {
  std::map<std::string, std::vector<std::size_t>> qa_by_image;
  for (std::size_t j = 0; j < qa_pairs.size(); ++j) qa_by_image[qa_pairs[j].image_id].push_back(j);

  std::vector<OverlapMatch> out;
  for (std::size_t i = 0; i < captions.size(); ++i) {
    auto it = qa_by_image.find(captions[i].image_id);
    if (it == qa_by_image.end()) continue;
    const auto cap = normalize(captions[i].text);
    for (std::size_t j : it->second) {
      const auto& qa = qa_pairs[j];
      if (is_excluded_answer(qa.answer)) continue;
      const auto ans = normalize(qa.answer);
      if (ans.empty() || ans.size() > cap.size()) continue;
      for (std::size_t p = 0; p + ans.size() <= cap.size(); ++p) {
        bool hit = true;
        for (std::size_t m = 0; m < ans.size() && hit; ++m) hit = cap[p + m].norm == ans[m].norm;
        if (!hit) continue;
        OverlapMatch match;
        match.caption_index = i;
        match.qa_index = j;
        for (const auto& t : ans) match.concept_words.push_back(t.norm);
        match.caption_span = {cap[p].begin, cap[p + ans.size() - 1].end};
        match.answer_span = {ans.front().begin, ans.back().end};
        out.push_back(std::move(match));
        break;
      }
    }
  }
  return out;
}

namespace {

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

struct ProposedAnswer {
  std::string answer;
  double score;
  std::string outcome;  // "kept", "excluded_gold", "duplicate", "no_content",
                        // "equivalent", "over_max_k"
};

std::vector<ProposedAnswer> propose_detailed(
    const OverlapMatch& match, const std::string& image_id, const std::string& question,
    const ScorerTable& table, std::size_t max_k,
    const std::set<std::pair<std::string, std::string>>* equivalents) {
  const std::string prefix = answer_query(image_id, question, "");
  std::vector<ProposedAnswer> all;
  const auto& entries = table.entries();
  for (auto it = entries.lower_bound(prefix);
       it != entries.end() && it->first.compare(0, prefix.size(), prefix) == 0; ++it) {
    all.push_back({it->first.substr(prefix.size()), it->second, ""});
  }
  if (all.empty()) throw MissingScoresError("answer-scores", {prefix + "*"});
  std::stable_sort(all.begin(), all.end(), [](const ProposedAnswer& a, const ProposedAnswer& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.answer < b.answer;
  });

  const std::string gold = join_words(match.concept_words);
  std::set<std::string> seen;
  std::size_t kept = 0;
  for (auto& p : all) {
    const std::string key = normalized_key(p.answer);
    if (key.empty()) {
      p.outcome = "no_content";
    } else if (key == gold) {
      p.outcome = "excluded_gold";
    } else if (equivalents != nullptr &&
               (equivalents->count({gold, key}) || equivalents->count({key, gold}))) {
      p.outcome = "equivalent";
    } else if (!seen.insert(key).second) {
      p.outcome = "duplicate";
    } else if (kept >= max_k) {
      p.outcome = "over_max_k";
    } else {
      p.outcome = "kept";
      ++kept;
    }
  }
  return all;
}

}  // namespace

std::vector<std::string> propose_candidates(
    const OverlapMatch& match, const std::string& image_id, const std::string& question,
    const ScorerTable& answer_table, std::size_t max_k,
    const std::set<std::pair<std::string, std::string>>* equivalents) {
  std::vector<std::string> out;
  for (const auto& p :
       propose_detailed(match, image_id, question, answer_table, max_k, equivalents)) {
    if (p.outcome == "kept") out.push_back(p.answer);
  }
  return out;
}

std::string substitute(std::string_view caption, const Span& span, std::string_view replacement) {
  std::string out(caption.substr(0, span.begin));
  out += replacement;
  out += caption.substr(span.end);
  return out;
}

std::vector<CandidateScore> filter_candidates(const std::vector<std::string>& candidates,
                                              const std::string& caption, const Span& span,
                                              const ScorerTable& lm_table, double threshold) {
  std::vector<CandidateScore> scored;
  std::vector<std::string> missing;
  for (const auto& c : candidates) {
    std::string contrast = substitute(caption, span, c);
    auto score = lm_table.find(contrast);
    if (!score) {
      missing.push_back(std::move(contrast));
      continue;
    }
    if (*score >= threshold) scored.push_back({std::move(contrast), *score, c, 0});
  }
  if (!missing.empty()) throw MissingScoresError("lm-scores", std::move(missing));
  std::stable_sort(scored.begin(), scored.end(),
                   [](const CandidateScore& a, const CandidateScore& b) {
                     return a.lm_score > b.lm_score;
                   });
  for (std::size_t i = 0; i < scored.size(); ++i) scored[i].rank = static_cast<int>(i + 1);
  return scored;
}

// ---------------------------------------------------------------------------

Category guess_category(const std::vector<std::string>& concept_words,
                        const std::vector<ObjectBox>& image_boxes) {
  static const std::map<std::string, Category, std::less<>> lexicon = [] {
    std::map<std::string, Category, std::less<>> m;
    for (const char* w : {"man", "woman", "boy", "girl", "male", "female", "guy", "lady"}) {
      m[w] = Category::Person;
    }
    for (const char* w : {"bird", "cat", "dog", "horse", "sheep", "cow", "elephant", "bear",
                          "zebra", "giraffe", "rabbit", "duck", "goat", "pig", "squirrel"}) {
      m[w] = Category::Animal;
    }
    for (const char* w : {"banana", "apple", "sandwich", "orange", "broccoli", "carrot",
                          "hot dog", "pizza", "donut", "cake", "pear", "bread", "cheese",
                          "salad", "egg", "tomato", "potato", "cookie", "meat", "rice"}) {
      m[w] = Category::Food;
    }
    for (const char* w : {"red", "white", "black", "blue", "green", "yellow", "brown", "orange",
                          "pink", "purple", "gray", "grey", "tall", "small", "large", "big",
                          "wooden", "metal", "old", "young"}) {
      m.emplace(w, Category::Attribute);
    }
    for (const char* w : {"kitchen", "bathroom", "beach", "street", "park", "field", "room",
                          "library", "hotel", "sidewalk", "floor", "inside", "outside", "road",
                          "snow", "water", "ocean", "airport", "city", "restaurant"}) {
      m[w] = Category::Location;
    }
    for (const char* w : {"chef", "player", "baseball player", "surfer", "skier", "pilot",
                          "police", "officer", "doctor", "teacher", "cook", "skateboarder"}) {
      m[w] = Category::Role;
    }
    for (const char* w : {"sit", "stand", "run", "jump", "eat", "fly", "ride", "walk", "play",
                          "swim", "surf", "ski", "throw", "catch", "hold", "skate", "sleep",
                          "lie", "drink", "cut"}) {
      m[w] = Category::Action;
    }
    return m;
  }();
  const std::string key = join_words(concept_words);
  if (auto it = lexicon.find(key); it != lexicon.end()) return it->second;
  for (const auto& b : image_boxes) {
    if (normalized_key(b.label) == key) return Category::Object;
  }
  return Category::Misc;
}

ContrastSample attach_heterogeneous_tasks(ContrastSample sample,
                                          const std::vector<ObjectBox>& boxes) {
  const std::string concept_key = normalized_key(sample.concept_text());
  LocalizationAnnotation loc;
  loc.query = sample.concept_text();
  for (const auto& b : boxes) {
    if (b.image_id == sample.image_id && normalized_key(b.label) == concept_key) {
      loc.boxes.push_back(b.box);
    }
  }
  if (!loc.boxes.empty()) {
    sample.localization = std::move(loc);
  } else {
    sample.localization.reset();
  }
  sample.generation_prompt = sample.caption;
  return sample;
}

// ---------------------------------------------------------------------------

PipelineOutput run_pipeline(const PipelineInputs& in, const PipelineConfig& config) {
  PipelineOutput out;
  auto matches = find_pivots(in.captions, in.qa_pairs);
  // Sorted image-id order; within an image, file order.
  std::stable_sort(matches.begin(), matches.end(), [&](const OverlapMatch& a, const OverlapMatch& b) {
    return in.captions[a.caption_index].image_id < in.captions[b.caption_index].image_id;
  });

  // Per-image ordinal of captions and QA pairs for stable sample ids.
  std::vector<std::size_t> cap_ord(in.captions.size()), qa_ord(in.qa_pairs.size());
  {
    std::map<std::string, std::size_t> next;
    for (std::size_t i = 0; i < in.captions.size(); ++i) cap_ord[i] = next[in.captions[i].image_id]++;
    next.clear();
    for (std::size_t j = 0; j < in.qa_pairs.size(); ++j) qa_ord[j] = next[in.qa_pairs[j].image_id]++;
  }
  std::map<std::string, std::vector<ObjectBox>> boxes_by_image;
  for (const auto& b : in.boxes) boxes_by_image[b.image_id].push_back(b);

  std::vector<std::string> missing_answers, missing_lm;
  for (const auto& m : matches) {
    const auto& cap = in.captions[m.caption_index];
    const auto& qa = in.qa_pairs[m.qa_index];
    const std::string sample_id = cap.image_id + "_c" + std::to_string(cap_ord[m.caption_index]) +
                                  "_q" + std::to_string(qa_ord[m.qa_index]);
    auto log = [&](std::string step, std::string subject, std::string outcome,
                   std::optional<double> score = std::nullopt) {
      out.provenance.push_back(
          {sample_id, cap.image_id, std::move(step), std::move(subject), std::move(outcome), score});
    };
    log("pivot", cap.text.substr(m.caption_span.begin, m.caption_span.size()), "matched");

    std::vector<ProposedAnswer> proposed;
    try {
      proposed = propose_detailed(m, cap.image_id, qa.question, in.answer_table, config.max_k,
                                  config.equivalents.empty() ? nullptr : &config.equivalents);
    } catch (const MissingScoresError& e) {
      for (const auto& q : e.queries()) {
        if (std::find(missing_answers.begin(), missing_answers.end(), q) == missing_answers.end()) {
          missing_answers.push_back(q);
        }
      }
      continue;
    }
    std::vector<std::string> candidates;
    for (const auto& p : proposed) {
      log("propose", p.answer, p.outcome, p.score);
      if (p.outcome == "kept") candidates.push_back(p.answer);
    }

    std::vector<CandidateScore> kept;
    try {
      kept = filter_candidates(candidates, cap.text, m.caption_span, in.lm_table,
                               config.threshold);
    } catch (const MissingScoresError& e) {
      missing_lm.insert(missing_lm.end(), e.queries().begin(), e.queries().end());
      continue;
    }
    for (const auto& c : candidates) {
      const auto it = std::find_if(kept.begin(), kept.end(),
                                   [&](const CandidateScore& k) { return k.source_answer == c; });
      const double score = *in.lm_table.find(substitute(cap.text, m.caption_span, c));
      log("filter", c, it == kept.end() ? "below_threshold" : "kept", score);
    }
    if (kept.empty()) {
      log("attach", "sample", "dropped_no_contrasts");
      continue;
    }

    ContrastSample s;
    s.sample_id = sample_id;
    s.image_id = cap.image_id;
    s.caption = cap.text;
    s.concept_span = m.caption_span;
    s.vqa = VqaAnnotation{qa.question, qa.answer};
    for (const auto& k : kept) {
      s.contrasts.push_back({"c" + std::to_string(k.rank), k.source_answer});
    }
    const auto& image_boxes = boxes_by_image[cap.image_id];
    s.category = guess_category(m.concept_words, image_boxes);
    s = attach_heterogeneous_tasks(std::move(s), image_boxes);
    log("attach", "localization", s.localization ? "attached" : "absent");
    log("attach", "generation_prompt", "attached");
    out.samples.push_back(std::move(s));
  }

  if (!missing_answers.empty() || !missing_lm.empty()) {
    std::sort(missing_lm.begin(), missing_lm.end());
    missing_lm.erase(std::unique(missing_lm.begin(), missing_lm.end()), missing_lm.end());
    if (missing_lm.empty()) throw MissingScoresError("answer-scores", std::move(missing_answers));
    if (missing_answers.empty()) throw MissingScoresError("lm-scores", std::move(missing_lm));
    // Both tables incomplete: report everything under a combined name.
    std::vector<std::string> all;
    for (const auto& q : missing_answers) all.push_back("answer-scores: " + q);
    for (const auto& q : missing_lm) all.push_back("lm-scores: " + q);
    throw MissingScoresError("answer-scores+lm-scores", std::move(all));
  }
  return out;
}

PipelineInputs load_inputs(const PipelinePaths& paths) {
  PipelineInputs in;
  std::vector<std::string> errs;
  auto collect = [&](auto&& fn) {
    try {
      fn();
    } catch (const ValidationError& e) {
      errs.insert(errs.end(), e.diagnostics().begin(), e.diagnostics().end());
    }
  };
  collect([&] { in.captions = read_captions(paths.captions); });
  collect([&] { in.qa_pairs = read_qa(paths.qa); });
  collect([&] { in.boxes = read_boxes(paths.boxes); });
  collect([&] { in.answer_table = ScorerTable::read(paths.answer_scores); });
  collect([&] { in.lm_table = ScorerTable::read(paths.lm_scores); });
  if (!errs.empty()) throw ValidationError(std::move(errs));
  return in;
}

std::string provenance_to_jsonl(const std::vector<ProvenanceEntry>& entries) {
  using ojson = nlohmann::ordered_json;
  std::string out;
  for (const auto& e : entries) {
    ojson j;
    j["sample_id"] = e.sample_id;
    j["image_id"] = e.image_id;
    j["step"] = e.step;
    j["subject"] = e.subject;
    j["outcome"] = e.outcome;
    j["score"] = e.score ? ojson(*e.score) : ojson(nullptr);
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace xconsist::congen
