#include "biasalert/prompting.hpp"

#include <istream>
#include <ostream>

#include "biasalert/error.hpp"
#include "biasalert/text.hpp"
#include "json_io.hpp"

namespace biasalert {

void PromptConfig::validate() const {
  if (use_retrieval && k == 0) throw InvalidArgument("k must be at least 1 when retrieval is on");
}

std::vector<ChatMessage> PromptBundle::messages() const {
  return {{"system", system_text}, {"user", user_text}};
}

PromptBundle build_prompt(std::string_view sentence, std::span<const Reference> references,
                          const PromptConfig& config, const TemplateSet& templates) {
  config.validate();
  const auto trimmed = text::trim(sentence);
  if (trimmed.empty()) throw EmptyInput("sentence is empty");

  PromptBundle bundle;
  bundle.sentence = std::string(trimmed);
  bundle.config = config;

  std::string& system = bundle.system_text;
  system = templates.section("task");
  if (config.use_steps) system += "\n\n" + templates.section("steps");
  if (config.use_demo) system += "\n\n" + templates.section("demo");
  if (config.use_steps) system += "\n\n" + templates.section("output_format");

  std::string& user = bundle.user_text;
  if (config.use_retrieval) {
    bundle.references.assign(references.begin(), references.end());
    user = templates.section("reference_header");
    const auto& line = templates.section("reference_line");
    for (std::size_t i = 0; i < bundle.references.size(); ++i) {
      const auto& ref = bundle.references[i];
      const std::string index = std::to_string(i + 1);
      user += '\n';
      user += substitute(line, {{"index", index},
                                {"statement", ref.entry.statement},
                                {"type", to_string(ref.entry.bias_type)}});
    }
    user += "\n\n";
  }
  user += substitute(templates.section("sentence_line"), {{"sentence", bundle.sentence}});
  return bundle;
}

std::string render_gold_answer(const GoldLabel& label, const TemplateSet& templates) {
  if (!label.biased) return templates.section("answer_unbiased");
  if (!label.bias_type) throw MissingAttribution("biased label has no bias type");
  if (!label.group || text::trim(*label.group).empty()) {
    throw MissingAttribution("biased label has no social group");
  }
  if (!label.attribute || text::trim(*label.attribute).empty()) {
    throw MissingAttribution("biased label has no attribute");
  }
  return substitute(templates.section("answer_biased"), {{"type", to_string(*label.bias_type)},
                                                         {"group", *label.group},
                                                         {"attribute", *label.attribute}});
}

TrainingData build_training_records(std::span<const LabeledExample> examples,
                                    const KnowledgeBase& kb, const RetrievalIndex& index,
                                    const Embedder& embedder, const PromptConfig& config,
                                    const TemplateSet& templates) {
  config.validate();
  TrainingData data;
  data.records.reserve(examples.size());
  for (const auto& example : examples) {
    try {
      std::string output = render_gold_answer(example.gold, templates);
      std::vector<Reference> refs;
      if (config.use_retrieval) refs = query(index, kb, embedder, example.text, config.k);
      auto prompt = build_prompt(example.text, refs, config, templates);
      data.records.push_back({std::move(prompt.system_text), std::move(prompt.user_text), std::move(output)});
    } catch (const MissingAttribution& e) {
      data.failures.push_back({example.id, e.what()});
    } catch (const EmptyInput& e) {
      data.failures.push_back({example.id, e.what()});
    }
  }
  return data;
}

void write_training_records(std::span<const TrainingRecord> records, std::ostream& out) {
  for (const auto& r : records) {
    const json_io::json doc{{"instruction", r.instruction}, {"input", r.input}, {"output", r.output}};
    out << doc.dump() << '\n';
  }
}

std::vector<TrainingRecord> read_training_records(std::istream& in) {
  std::vector<TrainingRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto doc = json_io::parse_line(line, line_no);
    records.push_back({json_io::required_string(doc, "instruction", line_no),
                       json_io::required_string(doc, "input", line_no),
                       json_io::required_string(doc, "output", line_no)});
  }
  return records;
}

}  // namespace biasalert
