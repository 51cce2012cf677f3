#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace gramsteer {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Tense { past, present, future };
enum class Aspect { simple, progressive, perfect, perfect_progressive };
enum class Source { treebank, synthetic, benchmark };
enum class Split { train, test };

// Which grammatical property a probe, direction or steering run is about.
enum class LabelKind { tense, aspect, tense_aspect };

inline constexpr std::array<Tense, 3> all_tenses{Tense::past, Tense::present, Tense::future};
inline constexpr std::array<Aspect, 4> all_aspects{Aspect::simple, Aspect::progressive,
                                                   Aspect::perfect, Aspect::perfect_progressive};

std::string_view to_string(Tense t);
std::string_view to_string(Aspect a);
std::string_view to_string(Source s);
std::string_view to_string(Split s);
std::string_view to_string(LabelKind k);

std::optional<Tense> parse_tense(std::string_view s);
std::optional<Aspect> parse_aspect(std::string_view s);
std::optional<Source> parse_source(std::string_view s);
std::optional<Split> parse_split(std::string_view s);
std::optional<LabelKind> parse_label_kind(std::string_view s);

// "past_simple", "future_perfect_progressive", ...
std::string tense_aspect_name(Tense t, Aspect a);

// Ordered class names for a label kind (3, 4 or 12 entries).
std::vector<std::string> class_names(LabelKind kind);

// The other property; tense_aspect has none.
std::optional<LabelKind> other_kind(LabelKind kind);

}  // namespace gramsteer
