#include "hsp/lexicon.hpp"

#include <algorithm>
#include <cctype>

namespace hsp::world::lexicon {
namespace {

struct Entry {
  std::vector<std::string> words;
  std::vector<ObjectClass> candidates;
};

std::vector<Entry> build_entries() {
  std::vector<Entry> entries;
  auto add = [&](std::string_view text, std::vector<ObjectClass> cands) {
    auto w = words(text);
    entries.push_back({w, cands});
    auto pw = w;
    pw.back() = plural(pw.back());
    entries.push_back({pw, std::move(cands)});
  };
  for (auto c : all_classes()) add(name(c), {c});
  add("small black table", {ObjectClass::SideTable});
  add("black table", {ObjectClass::SideTable});
  add("kitchen table", {ObjectClass::DiningTable});
  add("refrigerator", {ObjectClass::Fridge});
  add("coffee cup", {ObjectClass::Cup, ObjectClass::Mug});
  add("lamp", {ObjectClass::DeskLamp});
  add("counter", {ObjectClass::CounterTop});
  add("tap", {ObjectClass::Faucet});
  // Longest phrases first so "small black table" wins over "table" prefixes.
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.words.size() > b.words.size(); });
  return entries;
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = build_entries();
  return table;
}

}  // namespace

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto ch = static_cast<unsigned char>(text[i]);
    if (!std::isalnum(ch)) {
      flush();
      continue;
    }
    // Split "PutObject" at the lower->upper boundary.
    if (std::isupper(ch) && i > 0 && std::islower(static_cast<unsigned char>(text[i - 1]))) flush();
    cur.push_back(static_cast<char>(std::tolower(ch)));
  }
  flush();
  return out;
}

std::string phrase(ObjectClass c) {
  std::string out;
  for (const auto& w : words(name(c))) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::optional<std::string> synonym(ObjectClass c) {
  switch (c) {
    case ObjectClass::SideTable: return "small black table";
    case ObjectClass::Mug: return "coffee cup";
    case ObjectClass::DiningTable: return "kitchen table";
    case ObjectClass::Fridge: return "refrigerator";
    default: return std::nullopt;
  }
}

std::string_view state_adjective(ObjectState s) {
  switch (s) {
    case ObjectState::Cleaned: return "cleaned";
    case ObjectState::Heated: return "heated";
    case ObjectState::Cooled: return "cooled";
    default: return "";
  }
}

std::optional<std::string_view> state_synonym(ObjectState s) {
  switch (s) {
    case ObjectState::Heated: return "warmed";
    case ObjectState::Cooled: return "chilled";
    default: return std::nullopt;
  }
}

std::string_view preposition(ObjectClass r) {
  switch (r) {
    case ObjectClass::Cabinet:
    case ObjectClass::Drawer:
    case ObjectClass::Fridge:
    case ObjectClass::Microwave:
    case ObjectClass::Sink:
    case ObjectClass::GarbageCan:
    case ObjectClass::Bowl:
    case ObjectClass::Pot:
    case ObjectClass::CoffeeMachine: return "in";
    default: return "on";
  }
}

std::string_view article(std::string_view word) {
  if (word.empty()) return "a";
  const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(word.front())));
  return (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') ? "an" : "a";
}

std::string plural(std::string_view word) {
  std::string w{word};
  auto ends = [&](std::string_view suf) { return w.size() >= suf.size() && w.ends_with(suf); };
  if (ends("s") || ends("x") || ends("ch") || ends("sh")) return w + "es";
  if (ends("o") && w != "piano") return w + "es";  // potatoes, tomatoes
  return w + "s";
}

std::vector<Mention> find_mentions(std::string_view text) {
  const auto ws = words(text);
  std::vector<Mention> out;
  std::size_t i = 0;
  while (i < ws.size()) {
    const Entry* best = nullptr;
    for (const auto& e : entries()) {
      if (e.words.size() > ws.size() - i) continue;
      if (std::equal(e.words.begin(), e.words.end(), ws.begin() + static_cast<std::ptrdiff_t>(i))) {
        best = &e;
        break;  // entries are longest-first
      }
    }
    if (best) {
      out.push_back({i, best->candidates});
      i += best->words.size();
    } else {
      ++i;
    }
  }
  return out;
}

}  // namespace hsp::world::lexicon
