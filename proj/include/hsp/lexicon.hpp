#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hsp/world.hpp"

namespace hsp::world {

/// Natural-language words for classes and states, shared by instruction
/// synthesis, task renaming, the scripted adapter and canonicalization.
///
/// Synonym table (fixed):
///   SideTable   <-> "small black table"
///   Mug         <-> "coffee cup"
///   DiningTable <-> "kitchen table"
///   Fridge      <-> "refrigerator"
///   heated      <-> "warmed"
///   cooled      <-> "chilled"
namespace lexicon {

/// Plain lower-case phrase, e.g. "soap bottle".
std::string phrase(ObjectClass c);
std::optional<std::string> synonym(ObjectClass c);
/// Adjective for a required state ("heated"); empty for ObjectState::None.
std::string_view state_adjective(ObjectState s);
std::optional<std::string_view> state_synonym(ObjectState s);
/// "in" for enclosing receptacles, "on" for surfaces.
std::string_view preposition(ObjectClass receptacle);
std::string_view article(std::string_view word);
std::string plural(std::string_view word);

/// Lower-cases and splits on non-alphanumerics; CamelCase words are split too
/// ("PutObject" -> "put", "object").
std::vector<std::string> words(std::string_view text);

/// A class mention found in free text. `candidates` is ordered by preference;
/// the first entry is the keyword default.
struct Mention {
  std::size_t position = 0;  // word index of the first matched word
  std::vector<ObjectClass> candidates;
};

/// Greedy longest-match scan for class phrases, names, synonyms and plurals.
std::vector<Mention> find_mentions(std::string_view text);

}  // namespace lexicon
}  // namespace hsp::world
