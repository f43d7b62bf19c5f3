#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "moralmt/scenario.hpp"

namespace moralmt {

// Lookup tables used when lowering DSL documents: pedestrian model names to
// default attribute profiles, animal kinds to their species class, and named
// abstract maps. The shipped tables live in data/*.json and are compiled in;
// callers may load replacements or extend them.
class Registry {
 public:
  // The tables bundled with the tool.
  static const Registry& builtin();

  // Throws moralmt::Error on malformed JSON. Either document may be empty.
  static Registry from_json(std::string_view models_json, std::string_view maps_json);

  // Entries from `other` override entries with the same name.
  void merge(const Registry& other);

  std::optional<AttributeProfile> pedestrian(std::string_view model) const;
  std::optional<SpeciesKind> animal(std::string_view kind) const;
  std::optional<MapSpec> map(std::string_view name) const;

  void add_pedestrian(std::string model, AttributeProfile p) { peds_[std::move(model)] = p; }
  void add_animal(std::string kind, SpeciesKind k) { animals_[std::move(kind)] = k; }
  void add_map(MapSpec m) { maps_[m.name] = std::move(m); }

  const std::map<std::string, AttributeProfile, std::less<>>& pedestrians() const { return peds_; }

 private:
  std::map<std::string, AttributeProfile, std::less<>> peds_;
  std::map<std::string, SpeciesKind, std::less<>> animals_;
  std::map<std::string, MapSpec, std::less<>> maps_;
};

}  // namespace moralmt
