#include <algorithm>
#include <array>
#include <set>

#include "hsp/lexicon.hpp"
#include "hsp/prompts.hpp"

namespace hsp::prompts {
namespace {

using world::ObjectClass;
using world::Verb;
using Tokens = std::set<std::string>;

struct Alias {
  std::vector<std::string> from;
  std::vector<std::string> to;
};

// Multi-word verb phrases folded onto the verb tokens below.
const std::vector<Alias>& aliases() {
  static const std::vector<Alias> table{
      {{"pick", "up"}, {"pickup"}},     {{"go", "to"}, {"goto"}},         {{"walk", "to"}, {"goto"}},
      {{"navigate"}, {"goto"}},         {{"turn", "on"}, {"toggle", "on"}}, {{"switch", "on"}, {"toggle", "on"}},
      {{"turn", "off"}, {"toggle", "off"}}, {{"switch", "off"}, {"toggle", "off"}}, {{"place"}, {"put"}},
      {{"cut"}, {"slice"}},             {{"grab"}, {"pickup"}},           {{"take"}, {"pickup"}},
  };
  return table;
}

Tokens verb_tokens(Verb v) {
  switch (v) {
    case Verb::GotoLocation: return {"goto"};
    case Verb::PickupObject: return {"pickup"};
    case Verb::PutObject: return {"put"};
    case Verb::OpenObject: return {"open"};
    case Verb::CloseObject: return {"close"};
    case Verb::ToggleObjectOn: return {"toggle", "on"};
    case Verb::ToggleObjectOff: return {"toggle", "off"};
    case Verb::SliceObject: return {"slice"};
  }
  return {};
}

std::string lower(std::string_view s) {
  std::string out{s};
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

Tokens arg_tokens(ObjectClass c) {
  const auto ws = world::lexicon::words(world::name(c));
  Tokens out(ws.begin(), ws.end());
  out.insert(lower(world::name(c)));
  return out;
}

/// Token set of the raw text: words with verb phrases folded, plus the
/// tokens of every class a synonym or plural in the text refers to.
Tokens raw_tokens(std::string_view raw) {
  const auto ws = world::lexicon::words(raw);
  Tokens out;
  std::size_t i = 0;
  while (i < ws.size()) {
    const Alias* hit = nullptr;
    for (const auto& a : aliases()) {
      if (a.from.size() <= ws.size() - i && std::equal(a.from.begin(), a.from.end(), ws.begin() + i)) {
        if (!hit || a.from.size() > hit->from.size()) hit = &a;
      }
    }
    if (hit) {
      out.insert(hit->to.begin(), hit->to.end());
      i += hit->from.size();
    } else {
      out.insert(ws[i++]);
    }
  }
  for (const auto& m : world::lexicon::find_mentions(raw)) {
    for (auto c : m.candidates) {
      const auto t = arg_tokens(c);
      out.insert(t.begin(), t.end());
    }
  }
  return out;
}

double overlap(const Tokens& want, const Tokens& have) {
  if (want.empty()) return 0.0;
  std::size_t n = 0;
  for (const auto& t : want) n += have.contains(t) ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(want.size());
}

}  // namespace

Match canonicalize(std::string_view raw, const std::vector<world::SubGoal>& legal) {
  if (legal.empty()) throw std::invalid_argument("canonicalize: empty legal set");
  const Tokens have = raw_tokens(raw);
  Match best{legal.front(), -1.0, true};
  for (const auto& g : legal) {
    const double sim = 0.5 * overlap(verb_tokens(g.verb), have) + 0.5 * overlap(arg_tokens(g.arg), have);
    if (sim > best.similarity) best = {g, sim, false};
  }
  best.weak = best.similarity < kWeakMatch;
  return best;
}

}  // namespace hsp::prompts
