#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "codevqa/core/types.hpp"

namespace codevqa::harness {

enum class DatasetFormat { kNormalized, kGqa, kCovr, kNlvr2 };

std::string to_string(DatasetFormat format);
DatasetFormat dataset_format_from_string(const std::string& text);

// Loads and normalizes: statements become "Is it true that ..." questions
// (is_statement set) and True/False golds become yes/no. Throws FormatError
// naming the offending line (JSONL inputs) or entry.
//
//   normalized  JSONL in the engine's own schema
//   gqa         JSON object keyed by question id: imageId, question, answer,
//               optional types.detailed / question_type
//   covr        JSONL: qid|id, utterance|question, answer, scenes|image_ids,
//               optional pattern_name
//   nlvr2       JSONL: identifier, sentence, label, optional images; without
//               images the pair is <identifier minus last field>-img0.png/-img1.png
std::vector<VQAInstance> load_dataset(const std::filesystem::path& path, DatasetFormat format);

}  // namespace codevqa::harness
