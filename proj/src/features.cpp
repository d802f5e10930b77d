#include "construe/features.hpp"

#include <algorithm>

#include "construe/error.hpp"

namespace construe {

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

FeatureBundle FeatureBundle::parse(std::string_view text) {
  FeatureBundle bundle;
  text = trim(text);
  if (text.empty() || text == "_") return bundle;
  for (auto part : split(text, '|')) {
    part = trim(part);
    const auto eq = part.find('=');
    if (eq == std::string_view::npos || eq == 0 || eq + 1 == part.size())
      fail(ErrorCode::InvalidFeatures, "malformed feature '" + std::string(part) + "'");
    std::string category(trim(part.substr(0, eq)));
    std::string value(trim(part.substr(eq + 1)));
    if (bundle.has(category))
      fail(ErrorCode::InvalidFeatures, "duplicate feature category '" + category + "'");
    bundle.entries_.emplace(std::move(category), std::move(value));
  }
  return bundle;
}

std::optional<std::string_view> FeatureBundle::get(std::string_view category) const {
  const auto it = entries_.find(category);
  if (it == entries_.end()) return std::nullopt;
  return std::string_view(it->second);
}

void FeatureBundle::erase(std::string_view category) {
  const auto it = entries_.find(category);
  if (it != entries_.end()) entries_.erase(it);
}

bool FeatureBundle::includes(const FeatureBundle& other) const {
  return std::all_of(other.begin(), other.end(), [&](const auto& kv) {
    const auto v = get(kv.first);
    return v && *v == kv.second;
  });
}

std::string FeatureBundle::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    if (!out.empty()) out += '|';
    out += k;
    out += '=';
    out += v;
  }
  return out;
}

bool FeatureSchema::has_pos(std::string_view pos) const {
  return std::find(parts_of_speech.begin(), parts_of_speech.end(), pos) != parts_of_speech.end();
}

bool FeatureSchema::has_category(std::string_view category) const {
  return categories.find(category) != categories.end();
}

bool FeatureSchema::has_value(std::string_view category, std::string_view value) const {
  const auto it = categories.find(category);
  if (it == categories.end()) return false;
  return std::find(it->second.begin(), it->second.end(), value) != it->second.end();
}

std::optional<std::string> FeatureSchema::first_violation(const FeatureBundle& bundle) const {
  for (const auto& [k, v] : bundle) {
    if (!has_value(k, v)) return k + "=" + v;
  }
  return std::nullopt;
}

FeatureConstraint FeatureConstraint::parse(std::string_view text) {
  FeatureConstraint c;
  text = trim(text);
  if (text.empty() || text == "_") return c;
  for (auto part : split(text, '|')) {
    part = trim(part);
    const auto eq = part.find('=');
    if (eq == std::string_view::npos || eq == 0 || eq + 1 == part.size())
      fail(ErrorCode::InvalidFeatures, "malformed feature constraint '" + std::string(part) + "'");
    std::string category(trim(part.substr(0, eq)));
    if (c.allowed_.count(category))
      fail(ErrorCode::InvalidFeatures, "duplicate constraint category '" + category + "'");
    auto& values = c.allowed_[category];
    for (auto v : split(part.substr(eq + 1), ',')) {
      v = trim(v);
      if (v.empty()) fail(ErrorCode::InvalidFeatures, "empty value in '" + std::string(part) + "'");
      values.emplace(v);
    }
  }
  return c;
}

bool FeatureConstraint::accepts(const FeatureBundle& features) const {
  for (const auto& [category, values] : allowed_) {
    const auto v = features.get(category);
    if (!v || values.find(std::string(*v)) == values.end()) return false;
  }
  return true;
}

std::string FeatureConstraint::to_string() const {
  std::string out;
  for (const auto& [k, vs] : allowed_) {
    if (!out.empty()) out += '|';
    out += k;
    out += '=';
    bool first = true;
    for (const auto& v : vs) {
      if (!first) out += ',';
      out += v;
      first = false;
    }
  }
  return out;
}

}  // namespace construe
