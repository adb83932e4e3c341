#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adascale/pipeline.hpp"

namespace adascale::io {

using nlohmann::json;

// Corpus exchange format: one JSON object per line and frame,
// {snippet_id, frame_index, native_width, native_height,
//  annotations: [{class, x_min, y_min, x_max, y_max}]}.
void write_corpus(std::ostream& out, std::span<const VideoSnippet> corpus);
/// Groups frame records by snippet id in first-seen order; frames must be
/// contiguous 0..n-1 per snippet. Throws MalformedInput with the line number.
std::vector<VideoSnippet> read_corpus(std::istream& in);

json profile_to_json(const DetectorProfile& profile);
/// Missing keys keep their defaults; unknown keys are rejected.
DetectorProfile profile_from_json(const json& j);

json model_to_json(const RegressorModel& model);
RegressorModel model_from_json(const json& j);

void write_labels(std::ostream& out, std::span<const LabeledFrame> labels);
std::vector<LabeledFrame> read_labels(std::istream& in);

json report_to_json(const EvalReport& report);

void write_class_csv(std::ostream& out, const EvalReport& report);
void write_pr_csv(std::ostream& out, const EvalReport& report);
void write_histogram_csv(std::ostream& out, const Histogram& histogram);
void write_comparison_csv(std::ostream& out, std::span<const ComparisonRow> rows);

// File helpers. Read failures raise MalformedInput, write failures InvalidArgument.
json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace adascale::io
