#pragma once

#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace construe {

/// Grammatical feature set, one value per category (Case=Par, Number=Plur...).
/// Equality is set equality; iteration order is by category name.
class FeatureBundle {
 public:
  using Map = std::map<std::string, std::string, std::less<>>;

  FeatureBundle() = default;
  FeatureBundle(std::initializer_list<std::pair<const std::string, std::string>> init)
      : entries_(init) {}

  /// Parses "Case=Par|Number=Plur". An empty string or "_" yields an empty bundle.
  /// Throws Error(InvalidFeatures) on malformed input or duplicate categories.
  static FeatureBundle parse(std::string_view text);

  std::optional<std::string_view> get(std::string_view category) const;
  bool has(std::string_view category) const { return entries_.find(category) != entries_.end(); }
  void set(std::string category, std::string value) { entries_[std::move(category)] = std::move(value); }
  void erase(std::string_view category);

  /// True when every entry of `other` is present here with the same value.
  bool includes(const FeatureBundle& other) const;

  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }
  const Map& entries() const noexcept { return entries_; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  std::string to_string() const;

  friend bool operator==(const FeatureBundle&, const FeatureBundle&) = default;
  friend auto operator<=>(const FeatureBundle& a, const FeatureBundle& b) {
    return a.entries_ <=> b.entries_;
  }

 private:
  Map entries_;
};

/// Category/value inventory and part-of-speech list for one language.
struct FeatureSchema {
  std::vector<std::string> parts_of_speech;
  std::map<std::string, std::vector<std::string>, std::less<>> categories;

  bool has_pos(std::string_view pos) const;
  bool has_category(std::string_view category) const;
  bool has_value(std::string_view category, std::string_view value) const;

  /// Empty when valid, otherwise the first offending "Category=Value".
  std::optional<std::string> first_violation(const FeatureBundle& bundle) const;
};

/// Matcher-side feature constraint: each category maps to a set of accepted values.
class FeatureConstraint {
 public:
  FeatureConstraint() = default;

  /// Parses "Case=Par,Gen|Number=Sing".
  static FeatureConstraint parse(std::string_view text);

  bool accepts(const FeatureBundle& features) const;
  bool empty() const noexcept { return allowed_.empty(); }
  const std::map<std::string, std::set<std::string>, std::less<>>& allowed() const noexcept {
    return allowed_;
  }
  std::string to_string() const;

 private:
  std::map<std::string, std::set<std::string>, std::less<>> allowed_;
};

}  // namespace construe
