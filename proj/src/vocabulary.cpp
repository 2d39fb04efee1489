#include "hsp/vocabulary.hpp"

#include <algorithm>

namespace hsp::world {
namespace {

struct ClassInfo {
  std::string_view name;
  KindSet kinds;
};

constexpr KindSet P = kPickupable;
constexpr KindSet R = kReceptacle;
constexpr KindSet O = kOpenable;
constexpr KindSet T = kToggleable;
constexpr KindSet S = kSliceable;

constexpr std::array<ClassInfo, kNumClasses> kTable{{
    {"Apple", P | S},
    {"ArmChair", R},
    {"Basketball", P},
    {"Book", P},
    {"Bowl", P | R},
    {"Bread", P | S},
    {"Cabinet", R | O},
    {"Candle", P},
    {"CellPhone", P},
    {"CoffeeMachine", R | T},
    {"CounterTop", R},
    {"Cup", P},
    {"DeskLamp", T},
    {"DiningTable", R},
    {"Drawer", R | O},
    {"Egg", P},
    {"Faucet", T},
    {"Fork", P},
    {"Fridge", R | O},
    {"GarbageCan", R},
    {"KeyChain", P},
    {"Knife", P},
    {"Ladle", P},
    {"Lettuce", P | S},
    {"Microwave", R | O | T},
    {"Mug", P},
    {"Pan", P},
    {"Pencil", P},
    {"Plate", P | R},
    {"Pot", P | R},
    {"Potato", P | S},
    {"RemoteControl", P},
    {"Shelf", R},
    {"SideTable", R},
    {"Sink", R},
    {"SoapBottle", P},
    {"Spatula", P},
    {"Spoon", P},
    {"SprayBottle", P},
    {"Tomato", P | S},
    {"Vase", P},
    {"Watch", P},
}};

constexpr bool table_sorted() {
  for (std::size_t i = 1; i < kTable.size(); ++i) {
    if (!(kTable[i - 1].name < kTable[i].name)) return false;
  }
  return true;
}
static_assert(table_sorted(), "vocabulary must be lexicographically ordered");
static_assert(static_cast<std::size_t>(ObjectClass::Watch) + 1 == kNumClasses);

constexpr std::array<ObjectClass, kNumClasses> make_all() {
  std::array<ObjectClass, kNumClasses> out{};
  for (std::size_t i = 0; i < kNumClasses; ++i) out[i] = static_cast<ObjectClass>(i);
  return out;
}
constexpr auto kAll = make_all();

}  // namespace

std::string_view name(ObjectClass c) { return kTable[static_cast<std::size_t>(c)].name; }

KindSet kinds(ObjectClass c) { return kTable[static_cast<std::size_t>(c)].kinds; }

std::span<const ObjectClass> all_classes() { return kAll; }

std::optional<ObjectClass> parse_class(std::string_view text) {
  auto it = std::lower_bound(kTable.begin(), kTable.end(), text,
                             [](const ClassInfo& info, std::string_view t) { return info.name < t; });
  if (it == kTable.end() || it->name != text) return std::nullopt;
  return static_cast<ObjectClass>(it - kTable.begin());
}

}  // namespace hsp::world
