#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace hsp::world {

/// Fixed object vocabulary. Enumerators are declared in lexicographic order of
/// their names, so comparing enum values is the same as comparing names.
enum class ObjectClass : std::uint8_t {
  Apple,
  ArmChair,
  Basketball,
  Book,
  Bowl,
  Bread,
  Cabinet,
  Candle,
  CellPhone,
  CoffeeMachine,
  CounterTop,
  Cup,
  DeskLamp,
  DiningTable,
  Drawer,
  Egg,
  Faucet,
  Fork,
  Fridge,
  GarbageCan,
  KeyChain,
  Knife,
  Ladle,
  Lettuce,
  Microwave,
  Mug,
  Pan,
  Pencil,
  Plate,
  Pot,
  Potato,
  RemoteControl,
  Shelf,
  SideTable,
  Sink,
  SoapBottle,
  Spatula,
  Spoon,
  SprayBottle,
  Tomato,
  Vase,
  Watch,
};

inline constexpr std::size_t kNumClasses = 42;

/// Kind flags. A class may carry several (Microwave is an openable receptacle
/// and toggleable; Plate is pickupable and a receptacle).
enum KindFlag : std::uint8_t {
  kPickupable = 1u << 0,
  kReceptacle = 1u << 1,
  kOpenable = 1u << 2,
  kToggleable = 1u << 3,
  kSliceable = 1u << 4,
};

using KindSet = std::uint8_t;

std::string_view name(ObjectClass c);
std::optional<ObjectClass> parse_class(std::string_view text);
KindSet kinds(ObjectClass c);
std::span<const ObjectClass> all_classes();

inline bool is_pickupable(ObjectClass c) { return (kinds(c) & kPickupable) != 0; }
inline bool is_receptacle(ObjectClass c) { return (kinds(c) & kReceptacle) != 0; }
inline bool is_openable(ObjectClass c) { return (kinds(c) & kOpenable) != 0; }
inline bool is_toggleable(ObjectClass c) { return (kinds(c) & kToggleable) != 0; }
inline bool is_sliceable(ObjectClass c) { return (kinds(c) & kSliceable) != 0; }
/// Fixtures never move: everything that cannot be picked up.
inline bool is_fixture(ObjectClass c) { return !is_pickupable(c); }

}  // namespace hsp::world
