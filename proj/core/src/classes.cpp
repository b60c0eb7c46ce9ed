// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#include "bodylink/classes.hpp"

#include <algorithm>
#include <string>

#include "bodylink/errors.hpp"

namespace bodylink {

std::string_view to_string(ClassKind kind) noexcept {
  return kind == ClassKind::body ? "body" : "part";
}

ClassKind parse_class_kind(std::string_view text) {
  if (text == "body") return ClassKind::body;
  if (text == "part") return ClassKind::part;
  throw ValidationError("unknown class kind '" + std::string(text) + "'");
}

ClassSchema::ClassSchema(std::vector<ClassInfo> classes) : classes_(std::move(classes)) {
  if (classes_.size() < 2)
    throw ValidationError("class schema needs at least one body and one part class");
  int bodies = 0;
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    const auto& c = classes_[i];
    if (c.id.value != static_cast<int>(i) + 1)
      throw ValidationError("class ids must be 1..N in order; class '" + c.name + "' has id " +
                            std::to_string(c.id.value));
    if (c.kind == ClassKind::body) {
      ++bodies;
      body_ = c.id;
    }
  }
  if (bodies != 1)
    throw ValidationError("class schema must contain exactly one body class, found " +
                          std::to_string(bodies));
}

ClassSchema ClassSchema::body_hands() {
  return ClassSchema({{ClassId{1}, "body", ClassKind::body}, {ClassId{2}, "hand", ClassKind::part}});
}

ClassSchema ClassSchema::human_parts() {
  return ClassSchema({{ClassId{1}, "person", ClassKind::body},
                      {ClassId{2}, "head", ClassKind::part},
                      {ClassId{3}, "face", ClassKind::part},
                      {ClassId{4}, "lefthand", ClassKind::part},
                      {ClassId{5}, "righthand", ClassKind::part},
                      {ClassId{6}, "leftfoot", ClassKind::part},
                      {ClassId{7}, "rightfoot", ClassKind::part}});
}

ClassSchema ClassSchema::body_face_hands() {
  return ClassSchema({{ClassId{1}, "body", ClassKind::body},
                      {ClassId{2}, "lefthand", ClassKind::part},
                      {ClassId{3}, "righthand", ClassKind::part},
                      {ClassId{4}, "face", ClassKind::part}});
}

ClassSchema ClassSchema::preset(std::string_view name) {
  if (name == "bodyhands") return body_hands();
  if (name == "humanparts") return human_parts();
  if (name == "body-face-hands") return body_face_hands();
  throw ValidationError("unknown class schema preset '" + std::string(name) + "'");
}

const ClassInfo& ClassSchema::info(ClassId id) const {
  if (!contains(id)) throw ValidationError("class id " + std::to_string(id.value) + " out of range");
  return classes_[static_cast<std::size_t>(id.value - 1)];
}

std::vector<ClassId> ClassSchema::part_classes() const {
  std::vector<ClassId> out;
  for (const auto& c : classes_)
    if (c.kind == ClassKind::part) out.push_back(c.id);
  return out;
}

ClassId ClassSchema::find(std::string_view name) const {
  for (const auto& c : classes_)
    if (c.name == name) return c.id;
  throw ValidationError("unknown class name '" + std::string(name) + "'");
}

CapacityTable CapacityTable::defaults(const ClassSchema& schema) {
  std::vector<int> caps(static_cast<std::size_t>(schema.size()) + 1, 1);
  for (const auto& c : schema.classes()) {
    const bool side_agnostic = c.name == "hand" || c.name == "hands" || c.name == "foot" ||
                               c.name == "feet";
    caps[static_cast<std::size_t>(c.id.value)] = side_agnostic ? 2 : 1;
  }
  caps[0] = 0;
  return CapacityTable(std::move(caps));
}

int CapacityTable::operator[](ClassId id) const {
  if (id.value < 0 || static_cast<std::size_t>(id.value) >= per_class_.size()) return 1;
  return per_class_[static_cast<std::size_t>(id.value)];
}

void CapacityTable::set(ClassId id, int capacity) {
  if (capacity < 0) throw ValidationError("capacity must be non-negative");
  if (id.value < 1) throw ValidationError("capacity class id must be >= 1");
  if (static_cast<std::size_t>(id.value) >= per_class_.size())
    per_class_.resize(static_cast<std::size_t>(id.value) + 1, 1);
  per_class_[static_cast<std::size_t>(id.value)] = capacity;
}

}  // namespace bodylink
