#include "xconsist/io.hpp"

#include <fstream>
#include <future>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xconsist/errors.hpp"

namespace xconsist {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// Thrown inside a single line's decoding; converted to a located diagnostic.
struct FieldError {
  std::string message;
};

void require_keys(const json& obj, const std::set<std::string>& required,
                  const std::set<std::string>& optional) {
  if (!obj.is_object()) throw FieldError{"expected a JSON object"};
  for (const auto& key : required) {
    if (!obj.contains(key)) throw FieldError{"missing field '" + key + "'"};
  }
  for (const auto& [key, value] : obj.items()) {
    if (!required.count(key) && !optional.count(key)) {
      throw FieldError{"unknown field '" + key + "'"};
    }
  }
}

std::string get_string(const json& obj, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_string()) throw FieldError{std::string("field '") + key + "' must be a string"};
  return v.get<std::string>();
}

double get_number(const json& v, const std::string& what) {
  if (!v.is_number()) throw FieldError{what + " must be a number"};
  return v.get<double>();
}

std::size_t get_offset(const json& v) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw FieldError{"concept_span offsets must be non-negative integers"};
  }
  return static_cast<std::size_t>(v.get<long long>());
}

ContrastSample decode_sample(const json& obj) {
  require_keys(obj,
               {"sample_id", "image_id", "caption", "concept_span", "category",
                "contrasts"},
               {"vqa", "localization", "generation_prompt", "metadata"});
  ContrastSample s;
  s.sample_id = get_string(obj, "sample_id");
  s.image_id = get_string(obj, "image_id");
  s.caption = get_string(obj, "caption");
  const auto& span = obj.at("concept_span");
  if (!span.is_array() || span.size() != 2) {
    throw FieldError{"concept_span must be a [begin, end] pair"};
  }
  s.concept_span = {get_offset(span[0]), get_offset(span[1])};
  const std::string cat = get_string(obj, "category");
  auto parsed = parse_category(cat);
  if (!parsed) throw FieldError{"unknown category '" + cat + "'"};
  s.category = *parsed;

  if (obj.contains("vqa")) {
    const auto& v = obj.at("vqa");
    require_keys(v, {"question", "answer"}, {});
    s.vqa = VqaAnnotation{get_string(v, "question"), get_string(v, "answer")};
  }
  if (obj.contains("localization")) {
    const auto& l = obj.at("localization");
    require_keys(l, {"query", "boxes"}, {});
    LocalizationAnnotation loc;
    loc.query = get_string(l, "query");
    if (!l.at("boxes").is_array()) throw FieldError{"boxes must be an array"};
    for (const auto& b : l.at("boxes")) {
      if (!b.is_array() || b.size() != 4) {
        throw FieldError{"each box must be an array of four numbers"};
      }
      Box box{};
      for (std::size_t i = 0; i < 4; ++i) box[i] = get_number(b[i], "box coordinate");
      loc.boxes.push_back(box);
    }
    s.localization = std::move(loc);
  }
  if (obj.contains("generation_prompt")) {
    s.generation_prompt = get_string(obj, "generation_prompt");
  }
  const auto& cs = obj.at("contrasts");
  if (!cs.is_array()) throw FieldError{"contrasts must be an array"};
  for (const auto& c : cs) {
    require_keys(c, {"contrast_id", "replacement"}, {});
    s.contrasts.push_back({get_string(c, "contrast_id"), get_string(c, "replacement")});
  }
  return s;
}

LikelihoodRecord decode_record(const json& obj) {
  require_keys(obj, {"sample_id", "task", "mode", "gold_loglik", "contrasts"},
               {"metadata"});
  LikelihoodRecord r;
  r.sample_id = get_string(obj, "sample_id");
  r.task = get_string(obj, "task");
  const std::string mode = get_string(obj, "mode");
  if (mode == "contrast_output") {
    r.mode = PerturbationMode::ContrastOutput;
  } else if (mode == "contrast_input") {
    r.mode = PerturbationMode::ContrastInput;
  } else {
    throw FieldError{"unknown mode '" + mode + "'"};
  }
  r.gold_loglik = get_number(obj.at("gold_loglik"), "gold_loglik");
  const auto& cs = obj.at("contrasts");
  if (!cs.is_array()) throw FieldError{"contrasts must be an array"};
  for (const auto& c : cs) {
    require_keys(c, {"contrast_id", "loglik"}, {});
    r.contrasts.push_back(
        {get_string(c, "contrast_id"), get_number(c.at("loglik"), "loglik")});
  }
  return r;
}

template <typename T, typename Decode>
std::vector<T> read_lines(std::istream& in, const std::string& source, Decode decode) {
  std::vector<T> out;
  std::vector<std::string> errs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      errs.push_back(where + "malformed JSON (" + e.what() + ")");
      continue;
    }
    try {
      out.push_back(decode(obj));
    } catch (const FieldError& e) {
      errs.push_back(where + e.message);
    }
  }
  if (!errs.empty()) throw ValidationError(std::move(errs));
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  return in;
}

}  // namespace

std::vector<ContrastSample> read_samples(std::istream& in, const std::string& source) {
  return read_lines<ContrastSample>(in, source, decode_sample);
}

std::vector<LikelihoodRecord> read_records(std::istream& in, const std::string& source) {
  return read_lines<LikelihoodRecord>(in, source, decode_record);
}

std::vector<ContrastSample> read_samples_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_samples(in, path.string());
}

std::vector<LikelihoodRecord> read_records_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_records(in, path.string());
}

std::string sample_to_json_line(const ContrastSample& s) {
  ojson obj;
  obj["sample_id"] = s.sample_id;
  obj["image_id"] = s.image_id;
  obj["caption"] = s.caption;
  obj["concept_span"] = {s.concept_span.begin, s.concept_span.end};
  obj["category"] = std::string(to_string(s.category));
  if (s.vqa) obj["vqa"] = {{"question", s.vqa->question}, {"answer", s.vqa->answer}};
  if (s.localization) {
    ojson boxes = ojson::array();
    for (const auto& b : s.localization->boxes) boxes.push_back({b[0], b[1], b[2], b[3]});
    obj["localization"] = {{"query", s.localization->query}, {"boxes", boxes}};
  }
  if (s.generation_prompt) obj["generation_prompt"] = *s.generation_prompt;
  ojson cs = ojson::array();
  for (const auto& c : s.contrasts) {
    cs.push_back({{"contrast_id", c.contrast_id}, {"replacement", c.replacement}});
  }
  obj["contrasts"] = cs;
  return obj.dump();
}

std::string record_to_json_line(const LikelihoodRecord& r) {
  ojson obj;
  obj["sample_id"] = r.sample_id;
  obj["task"] = r.task;
  obj["mode"] = std::string(to_string(r.mode));
  obj["gold_loglik"] = r.gold_loglik;
  ojson cs = ojson::array();
  for (const auto& c : r.contrasts) {
    cs.push_back({{"contrast_id", c.contrast_id}, {"loglik", c.loglik}});
  }
  obj["contrasts"] = cs;
  return obj.dump();
}

void write_samples(std::ostream& out, const std::vector<ContrastSample>& samples) {
  for (const auto& s : samples) out << sample_to_json_line(s) << '\n';
}

void write_records(std::ostream& out, const std::vector<LikelihoodRecord>& records) {
  for (const auto& r : records) out << record_to_json_line(r) << '\n';
}

void write_bundle_samples(std::ostream& out, const EvaluationBundle& bundle) {
  for (const auto& [id, s] : bundle.samples) out << sample_to_json_line(s) << '\n';
}

void write_bundle_records(std::ostream& out, const EvaluationBundle& bundle) {
  for (const auto& [key, r] : bundle.records) out << record_to_json_line(r) << '\n';
}

EvaluationBundle parse_bundle(const std::vector<std::filesystem::path>& sample_files,
                              const std::vector<std::filesystem::path>& record_files,
                              const std::string& anchor) {
  std::vector<std::future<std::vector<ContrastSample>>> sample_jobs;
  std::vector<std::future<std::vector<LikelihoodRecord>>> record_jobs;
  for (const auto& p : sample_files) {
    sample_jobs.push_back(std::async(std::launch::async, [p] { return read_samples_file(p); }));
  }
  for (const auto& p : record_files) {
    record_jobs.push_back(std::async(std::launch::async, [p] { return read_records_file(p); }));
  }

  std::vector<std::string> errs;
  std::vector<ContrastSample> samples;
  std::vector<LikelihoodRecord> records;
  for (auto& job : sample_jobs) {
    try {
      auto part = job.get();
      samples.insert(samples.end(), std::make_move_iterator(part.begin()),
                     std::make_move_iterator(part.end()));
    } catch (const ValidationError& e) {
      errs.insert(errs.end(), e.diagnostics().begin(), e.diagnostics().end());
    }
  }
  for (auto& job : record_jobs) {
    try {
      auto part = job.get();
      records.insert(records.end(), std::make_move_iterator(part.begin()),
                     std::make_move_iterator(part.end()));
    } catch (const ValidationError& e) {
      errs.insert(errs.end(), e.diagnostics().begin(), e.diagnostics().end());
    }
  }
  if (!errs.empty()) throw ValidationError(std::move(errs));
  return make_bundle(std::move(samples), std::move(records), anchor);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << contents;
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

}  // namespace xconsist
