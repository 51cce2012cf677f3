#include "gramsteer/types.hpp"

namespace gramsteer {

namespace {
constexpr std::array<std::string_view, 3> kTense{"past", "present", "future"};
constexpr std::array<std::string_view, 4> kAspect{"simple", "progressive", "perfect",
                                                  "perfect_progressive"};
constexpr std::array<std::string_view, 3> kSource{"treebank", "synthetic", "benchmark"};
constexpr std::array<std::string_view, 2> kSplit{"train", "test"};
constexpr std::array<std::string_view, 3> kKind{"tense", "aspect", "tense_aspect"};

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::string_view, N>& names, std::string_view s) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == s) return static_cast<E>(i);
  return std::nullopt;
}
}  // namespace

std::string_view to_string(Tense t) { return kTense[static_cast<std::size_t>(t)]; }
std::string_view to_string(Aspect a) { return kAspect[static_cast<std::size_t>(a)]; }
std::string_view to_string(Source s) { return kSource[static_cast<std::size_t>(s)]; }
std::string_view to_string(Split s) { return kSplit[static_cast<std::size_t>(s)]; }
std::string_view to_string(LabelKind k) { return kKind[static_cast<std::size_t>(k)]; }

std::optional<Tense> parse_tense(std::string_view s) { return lookup<Tense>(kTense, s); }
std::optional<Aspect> parse_aspect(std::string_view s) { return lookup<Aspect>(kAspect, s); }
std::optional<Source> parse_source(std::string_view s) { return lookup<Source>(kSource, s); }
std::optional<Split> parse_split(std::string_view s) { return lookup<Split>(kSplit, s); }
std::optional<LabelKind> parse_label_kind(std::string_view s) {
  return lookup<LabelKind>(kKind, s);
}

std::string tense_aspect_name(Tense t, Aspect a) {
  return std::string(to_string(t)) + "_" + std::string(to_string(a));
}

std::vector<std::string> class_names(LabelKind kind) {
  std::vector<std::string> out;
  switch (kind) {
    case LabelKind::tense:
      for (auto t : all_tenses) out.emplace_back(to_string(t));
      break;
    case LabelKind::aspect:
      for (auto a : all_aspects) out.emplace_back(to_string(a));
      break;
    case LabelKind::tense_aspect:
      for (auto t : all_tenses)
        for (auto a : all_aspects) out.push_back(tense_aspect_name(t, a));
      break;
  }
  return out;
}

std::optional<LabelKind> other_kind(LabelKind kind) {
  if (kind == LabelKind::tense) return LabelKind::aspect;
  if (kind == LabelKind::aspect) return LabelKind::tense;
  return std::nullopt;
}

}  // namespace gramsteer
