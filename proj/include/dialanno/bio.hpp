// Lossless conversion between span lists and per-token (tag, BIO) sequences.
// Decoding is tolerant: ill-formed marks (an I after O, or an I whose tag
// differs from the running span) are coerced to B rather than rejected, so
// voted sequences always decode.
#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dialanno/types.hpp"
#include "dialanno/util.hpp"

namespace dialanno {

// Spans -> per-turn TokenLabel sequences. Overlapping spans are an error
// naming the colliding span ids. With compose_status, a span's status is
// folded into the tag ("GI:Nausea|Experienced").
inline ConversationLabels encode_bio(const std::vector<LabeledSpan>& spans,
                                     const std::vector<int>& turn_lengths,
                                     bool compose_status) {
  ConversationLabels out(turn_lengths.size());
  for (std::size_t i = 0; i < turn_lengths.size(); ++i)
    out[i].assign(turn_lengths[i], TokenLabel{});

  std::vector<std::vector<const LabeledSpan*>> owner(turn_lengths.size());
  for (std::size_t i = 0; i < turn_lengths.size(); ++i)
    owner[i].assign(turn_lengths[i], nullptr);

  for (const auto& span : spans) {
    if (span.turn_index < 0 ||
        span.turn_index >= static_cast<int>(turn_lengths.size()))
      throw std::invalid_argument("encode_bio: span " + span.span_id +
                                  " has turn index out of range");
    if (span.start < 0 || span.end > turn_lengths[span.turn_index] ||
        span.start >= span.end)
      throw std::invalid_argument("encode_bio: span " + span.span_id +
                                  " extent out of range");
    const std::string tag = composed_span_tag(span, compose_status);
    for (int t = span.start; t < span.end; ++t) {
      if (const LabeledSpan* prev = owner[span.turn_index][t])
        throw std::runtime_error("encode_bio: overlapping spans " +
                                 prev->span_id + " and " + span.span_id);
      owner[span.turn_index][t] = &span;
      out[span.turn_index][t] = {tag, t == span.start ? Bio::B : Bio::I};
    }
  }
  return out;
}

// Per-turn TokenLabel sequences -> spans (maximal runs). Span ids are
// assigned sequentially with the given prefix. With decompose_status, a
// composed "tag|status" splits back into the two fields.
inline std::vector<LabeledSpan> decode_bio(const ConversationLabels& sequences,
                                           bool decompose_status = false,
                                           const std::string& id_prefix = "s") {
  std::vector<LabeledSpan> out;
  int next_id = 0;
  for (std::size_t turn = 0; turn < sequences.size(); ++turn) {
    const TurnLabels& seq = sequences[turn];
    LabeledSpan* open = nullptr;
    std::string open_tag;
    for (std::size_t t = 0; t < seq.size(); ++t) {
      const TokenLabel& lab = seq[t];
      if (lab.tag == "O" || lab.bio == Bio::O) {
        open = nullptr;
        continue;
      }
      if (lab.bio == Bio::I && open && open_tag == lab.tag) {
        open->end = static_cast<int>(t) + 1;
        continue;
      }
      // B, or an I that cannot continue anything: start a new span.
      LabeledSpan s;
      s.span_id = id_prefix + std::to_string(next_id++);
      s.turn_index = static_cast<int>(turn);
      s.start = static_cast<int>(t);
      s.end = static_cast<int>(t) + 1;
      if (decompose_status) {
        auto [tag, status] = decompose_tag(lab.tag);
        s.tag = tag;
        s.status = status;
      } else {
        s.tag = lab.tag;
      }
      out.push_back(s);
      open = &out.back();
      open_tag = lab.tag;
    }
  }
  return out;
}

inline std::vector<int> turn_lengths(const Conversation& c) {
  std::vector<int> out;
  out.reserve(c.turns.size());
  for (const auto& t : c.turns) out.push_back(static_cast<int>(t.tokens.size()));
  return out;
}

}  // namespace dialanno
