#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "xconsist/model.hpp"

namespace xconsist {

// Line-delimited JSON wire formats (samples.jsonl, records.jsonl).
// Parsers collect every malformed line and throw a single ValidationError
// whose diagnostics carry "<source>:<line>: <message>".

std::vector<ContrastSample> read_samples(std::istream& in,
                                         const std::string& source = "<input>");
std::vector<LikelihoodRecord> read_records(std::istream& in,
                                           const std::string& source = "<input>");

std::vector<ContrastSample> read_samples_file(const std::filesystem::path& path);
std::vector<LikelihoodRecord> read_records_file(const std::filesystem::path& path);

std::string sample_to_json_line(const ContrastSample& sample);
std::string record_to_json_line(const LikelihoodRecord& record);

void write_samples(std::ostream& out, const std::vector<ContrastSample>& samples);
void write_records(std::ostream& out, const std::vector<LikelihoodRecord>& records);
void write_bundle_samples(std::ostream& out, const EvaluationBundle& bundle);
void write_bundle_records(std::ostream& out, const EvaluationBundle& bundle);

// Parses and validates a full bundle from any number of sample and record
// files. Files are parsed independently; merging and validation happen once.
EvaluationBundle parse_bundle(const std::vector<std::filesystem::path>& sample_files,
                              const std::vector<std::filesystem::path>& record_files,
                              const std::string& anchor = {});

// Writes `contents` to `path` via a temporary sibling file and rename.
// Creates parent directories as needed.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace xconsist
