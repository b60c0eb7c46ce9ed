// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace bodylink {

/// Object class index in {1, ..., N}. Dense class planes use channel id - 1.
struct ClassId {
  int value = 0;

  constexpr int channel() const noexcept { return value - 1; }
  static constexpr ClassId from_channel(int ch) noexcept { return ClassId{ch + 1}; }

  friend constexpr auto operator<=>(const ClassId&, const ClassId&) = default;
};

enum class ClassKind { body, part };

std::string_view to_string(ClassKind kind) noexcept;
ClassKind parse_class_kind(std::string_view text);

struct ClassInfo {
  ClassId id;
  std::string name;
  ClassKind kind = ClassKind::part;
};

/// Class table with exactly one body class and at least one part class.
class ClassSchema {
 public:
  /// Classes must carry ids 1..N in order. Throws ValidationError otherwise.
  explicit ClassSchema(std::vector<ClassInfo> classes);

  /// body + hand (hands are not side-specific).
  static ClassSchema body_hands();
  /// body + head, face, left/right hand, left/right foot.
  static ClassSchema human_parts();
  /// body + left hand, right hand, face.
  static ClassSchema body_face_hands();
  /// Looks up a preset by name: "bodyhands", "humanparts", "body-face-hands".
  static ClassSchema preset(std::string_view name);

  int size() const noexcept { return static_cast<int>(classes_.size()); }
  const std::vector<ClassInfo>& classes() const noexcept { return classes_; }
  const ClassInfo& info(ClassId id) const;
  ClassKind kind(ClassId id) const { return info(id).kind; }
  bool is_part(ClassId id) const { return kind(id) == ClassKind::part; }
  bool contains(ClassId id) const noexcept { return id.value >= 1 && id.value <= size(); }
  ClassId body_class() const noexcept { return body_; }
  std::vector<ClassId> part_classes() const;
  ClassId find(std::string_view name) const;

 private:
  std::vector<ClassInfo> classes_;
  ClassId body_;
};

/// How many parts of each class may attach to one body during matching.
/// Indexed by class id; the body entry is unused.
class CapacityTable {
 public:
  CapacityTable() = default;
  explicit CapacityTable(std::vector<int> per_class) : per_class_(std::move(per_class)) {}

  /// Side-agnostic classes (hand, foot) get 2, everything else 1.
  static CapacityTable defaults(const ClassSchema& schema);

  int operator[](ClassId id) const;
  void set(ClassId id, int capacity);
  std::size_t size() const noexcept { return per_class_.size(); }

 private:
  std::vector<int> per_class_;
};

}  // namespace bodylink
