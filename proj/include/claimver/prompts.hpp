#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "claimver/kg_store.hpp"
#include "claimver/retrieval.hpp"

namespace claimver {

// A rendered prompt split into the fixed instruction block and the
// per-input part. The model receives instruction + rendered_input.
struct PromptBundle {
  std::string instruction;
  std::string rendered_input;

  std::string full() const { return instruction + rendered_input; }
  bool operator==(const PromptBundle&) const = default;
};

namespace prompts {

inline constexpr std::string_view kVerificationInstruction =
    R"(Analyze text against provided triplets, classifying claims as "Attributable", "Contradictory", or "Extrapolatory".
Justify your classification using the following structure:
- "text_span": Text under evaluation.
- "prediction": Category of the text (Attributable / Contradictory / Extrapolatory).
- "triplets": Relevant triplets (if any, else "NA").
- "rationale": Reason for classification.
For multiple claims, number each component (e.g., "text_span1", "prediction1",..). Use "NA" for inapplicable keys.
Example:
"text_span1": "Specific claim",
"prediction1": "Attributable/Contradictory/Extrapolatory",
"triplets1": "Relevant triplets",
"rationale1": "Prediction justification",
...
)";

inline constexpr std::string_view kDatagenInstruction =
    R"(**Text Span Attribution Verification**

**Objective:** Predict whether the text span is "Attributable", "Contradictory", or "Extrapolatory" based on the information provided in the triplets.

**Instructions:**

1. **Read the Full Text:**
- Understand the context and content of the full text string.

2. **Examine the Text Span:**
- Determine the claims made within the text span.

3. **Analyze the Triplets:**
- Evaluate if the triplets support, refute, or neither support nor refute the claims in the text span.

4. **Make Your Prediction:**
- Classify the text span as "Attributable", "Contradictory", or "Extrapolatory" based on your analysis of the triplets.

5. **Provide Rationale:**
- Clearly explain your reasoning for the classification.

**Classification Criteria:**

- **"Attributable"**: The text span is sufficiently supported by the triplet(s). All claims in the text span are directly present in the triplet information.
- **"Contradictory"**: The text span is conclusively refuted by the triplet(s). All claims in the text span are directly contradicted by the triplet information.
- **"Extrapolatory"**: The triplet(s) can neither support nor refute the text span. The information provided is either irrelevant, indirect, or related but not sufficient to support or refute the text span.

**Example:**

**Full Text:** "Albert Einstein is widely recognized as the father of modern physics. He was awarded the Nobel Prize in Physics for his services to Theoretical Physics."

**Text Span:** "He was awarded the Nobel Prize in Physics."

**Triplets:** [("Albert Einstein", "award received", "Nobel Prize in Physics")]

**Sample Evaluation:**
- **Prediction:** "Attributable"
- **Rationale:** "The triplet directly supports the claim that Albert Einstein received the Nobel Prize in Physics."

**Example:**

**Full Text:** "Isaac Newton discovered the element radium."

**Text Span:** "Isaac Newton discovered radium."

**Triplets:** [("Marie Curie", "discovered", "radium")]

**Sample Evaluation:**
- **Prediction:** "Contradictory"
- **Rationale:** "The triplet states that Marie Curie discovered radium, contradicting the claim that Isaac Newton discovered it."

**Example:**

**Full Text:** "The Eiffel Tower is a wrought-iron lattice tower that was opened in 1889."

**Text Span:** "The Eiffel Tower is a wrought-iron lattice tower that was opened in 1889."

**Triplets:** [("Eiffel Tower", "located in", "Paris")]

**Sample Evaluation:**
- **Prediction:** "Extrapolatory"
- **Rationale:** "The triplet states that the Eiffel Tower is located in Paris, which is related but not sufficient to confirm or refute that it was opened in 1889."

**Verification Checklist:**

- [ ] The prediction accurately reflects the relationship between the text span and the triplets.
- [ ] The rationale clearly explains the classification based on the triplets.
- [ ] The explanation is free from irrelevant information.

**Response Format:**
Provide your evaluation in the following JSON format:
- "prediction": "Attributable", "Contradictory", or "Extrapolatory"
- "rationale": "Your comments here"

)";

// One "(s, p, o)" line per triplet, labels not ids.
inline std::string serialize_triplet_lines(std::span<const Triplet> triplets) {
  std::string out;
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    if (i > 0) out += '\n';
    out += triplets[i].to_string();
  }
  return out;
}

// [("s", "p", "o"), ...] as in the data-generation examples.
inline std::string serialize_triplet_list(std::span<const Triplet> triplets) {
  std::string out = "[";
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    if (i > 0) out += ", ";
    const auto& t = triplets[i];
    out += "(\"" + t.subject_label + "\", \"" + t.predicate + "\", \"" + t.object_label + "\")";
  }
  out += "]";
  return out;
}

}  // namespace prompts

// Inputs are inserted verbatim; braces and slot-like text are not expanded.
inline PromptBundle build_verification_prompt(std::string_view text, const RetrievedTriplets& triplets) {
  PromptBundle b;
  b.instruction = std::string(prompts::kVerificationInstruction);
  b.rendered_input = "Input for analysis:\n-Text: ";
  b.rendered_input += text;
  b.rendered_input += "\n-Triplets: ";
  b.rendered_input += prompts::serialize_triplet_lines(triplets.triplets);
  b.rendered_input += "\n";
  return b;
}

class PromptError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline PromptBundle build_datagen_prompt(std::string_view full_text, std::string_view text_span,
                                         std::span<const Triplet> triplets) {
  if (full_text.find(text_span) == std::string_view::npos) {
    throw PromptError("text span is not a substring of the full text");
  }
  PromptBundle b;
  b.instruction = std::string(prompts::kDatagenInstruction);
  b.rendered_input = "**Inputs to Evaluate**\n\n**Full text:** \"";
  b.rendered_input += full_text;
  b.rendered_input += "\"\n**Text span:** \"";
  b.rendered_input += text_span;
  b.rendered_input += "\"\n**Triplets:** ";
  b.rendered_input += prompts::serialize_triplet_list(triplets);
  b.rendered_input += "\n";
  return b;
}

}  // namespace claimver
