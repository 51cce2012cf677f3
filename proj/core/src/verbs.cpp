#include "gramsteer/verbs.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <set>

namespace gramsteer {

namespace {

struct Irregular {
  const char* base;
  const char* past;
  const char* participle;
};

constexpr Irregular kIrregular[] = {
    {"arise", "arose", "arisen"},    {"bear", "bore", "borne"},
    {"become", "became", "become"},  {"begin", "began", "begun"},
    {"bend", "bent", "bent"},        {"bite", "bit", "bitten"},
    {"bleed", "bled", "bled"},       {"blow", "blew", "blown"},
    {"break", "broke", "broken"},    {"bring", "brought", "brought"},
    {"build", "built", "built"},     {"buy", "bought", "bought"},
    {"catch", "caught", "caught"},   {"choose", "chose", "chosen"},
    {"come", "came", "come"},        {"cost", "cost", "cost"},
    {"cut", "cut", "cut"},           {"deal", "dealt", "dealt"},
    {"dig", "dug", "dug"},           {"do", "did", "done"},
    {"draw", "drew", "drawn"},       {"drink", "drank", "drunk"},
    {"drive", "drove", "driven"},    {"eat", "ate", "eaten"},
    {"fall", "fell", "fallen"},      {"feed", "fed", "fed"},
    {"feel", "felt", "felt"},        {"fight", "fought", "fought"},
    {"find", "found", "found"},      {"fly", "flew", "flown"},
    {"forget", "forgot", "forgotten"}, {"forgive", "forgave", "forgiven"},
    {"freeze", "froze", "frozen"},   {"get", "got", "gotten"},
    {"give", "gave", "given"},       {"go", "went", "gone"},
    {"grow", "grew", "grown"},       {"hang", "hung", "hung"},
    {"have", "had", "had"},          {"hear", "heard", "heard"},
    {"hide", "hid", "hidden"},       {"hit", "hit", "hit"},
    {"hold", "held", "held"},        {"hurt", "hurt", "hurt"},
    {"keep", "kept", "kept"},        {"know", "knew", "known"},
    {"lay", "laid", "laid"},         {"lead", "led", "led"},
    {"leave", "left", "left"},       {"lend", "lent", "lent"},
    {"let", "let", "let"},           {"light", "lit", "lit"},
    {"lose", "lost", "lost"},        {"make", "made", "made"},
    {"mean", "meant", "meant"},      {"meet", "met", "met"},
    {"pay", "paid", "paid"},         {"put", "put", "put"},
    {"quit", "quit", "quit"},        {"read", "read", "read"},
    {"ride", "rode", "ridden"},      {"ring", "rang", "rung"},
    {"rise", "rose", "risen"},       {"run", "ran", "run"},
    {"say", "said", "said"},         {"see", "saw", "seen"},
    {"seek", "sought", "sought"},    {"sell", "sold", "sold"},
    {"send", "sent", "sent"},        {"set", "set", "set"},
    {"shake", "shook", "shaken"},    {"shine", "shone", "shone"},
    {"shoot", "shot", "shot"},       {"shut", "shut", "shut"},
    {"sing", "sang", "sung"},        {"sink", "sank", "sunk"},
    {"sit", "sat", "sat"},           {"sleep", "slept", "slept"},
    {"slide", "slid", "slid"},       {"speak", "spoke", "spoken"},
    {"spend", "spent", "spent"},     {"spin", "spun", "spun"},
    {"stand", "stood", "stood"},     {"steal", "stole", "stolen"},
    {"stick", "stuck", "stuck"},     {"strike", "struck", "struck"},
    {"sweep", "swept", "swept"},     {"swim", "swam", "swum"},
    {"swing", "swung", "swung"},     {"take", "took", "taken"},
    {"teach", "taught", "taught"},   {"tear", "tore", "torn"},
    {"tell", "told", "told"},        {"think", "thought", "thought"},
    {"throw", "threw", "thrown"},    {"understand", "understood", "understood"},
    {"wake", "woke", "woken"},       {"wear", "wore", "worn"},
    {"weep", "wept", "wept"},        {"win", "won", "won"},
    {"write", "wrote", "written"},
};

constexpr const char* kRegular[] = {
    "accept",  "add",      "agree",    "allow",    "answer",   "appear",   "arrive",
    "ask",     "attend",   "avoid",    "bake",     "believe",  "borrow",   "brush",
    "call",    "carry",    "change",   "chat",     "check",    "clean",    "climb",
    "close",   "collect",  "complete", "cook",     "count",    "cover",    "craft",
    "create",  "cry",      "dance",    "decide",   "deliver",  "describe", "design",
    "develop", "discover", "dream",    "drop",     "earn",     "enjoy",    "enter",
    "escape",  "explain",  "explore",  "fail",     "fill",     "finish",   "fix",
    "follow",  "form",     "formulate", "gather",  "generate", "guess",    "handle",
    "happen",  "hate",     "help",     "hope",     "hug",      "hunt",     "hurry",
    "imagine", "improve",  "include",  "invite",   "jog",      "join",     "jump",
    "kick",    "kiss",     "knock",    "land",     "laugh",    "learn",    "like",
    "listen",  "live",     "look",     "love",     "manage",   "marry",    "measure",
    "miss",    "mix",      "move",     "need",     "notice",   "offer",    "open",
    "order",   "pack",     "paint",    "park",     "pass",     "pick",     "plan",
    "plant",   "play",     "pray",     "prefer",   "prepare",  "print",    "produce",
    "promise", "protect",  "provide",  "pull",     "push",     "race",     "rain",
    "reach",   "record",   "relax",    "remember", "repair",   "repeat",   "reply",
    "report",  "rest",     "return",   "save",     "share",    "shop",     "shout",
    "sign",    "smell",    "smile",    "snow",     "solve",    "stare",    "start",
    "stay",    "step",     "stop",     "study",    "suggest",  "support",  "surprise",
    "talk",    "taste",    "thank",    "touch",    "train",    "travel",   "try",
    "turn",    "use",      "visit",    "vote",     "wait",     "walk",     "wander",
    "want",    "warn",     "wash",     "watch",    "wish",     "wonder",   "work",
    "worry",   "construct", "output",
};

// Short verbs whose final consonant doubles before -ing/-ed.
const std::set<std::string> kDoubling = {
    "admit", "beg", "begin", "chat", "clap", "commit", "cut", "dig", "drop", "forget",
    "get", "grab", "hit", "hug", "jog", "let", "nod", "occur", "plan", "prefer",
    "put", "quit", "refer", "rob", "rub", "run", "set", "shop", "shut", "sit",
    "skip", "slip", "spin", "step", "stop", "swim", "tap", "trip", "win"};

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string third_of(const std::string& b) {
  if (b == "have") return "has";
  if (b == "be") return "is";
  if (ends_with(b, "s") || ends_with(b, "x") || ends_with(b, "z") || ends_with(b, "ch") ||
      ends_with(b, "sh") || ends_with(b, "o"))
    return b + "es";
  if (b.size() > 1 && b.back() == 'y' && !is_vowel(b[b.size() - 2]))
    return b.substr(0, b.size() - 1) + "ies";
  return b + "s";
}

std::string gerund_of(const std::string& b) {
  if (b == "be" || b == "see" || b == "flee" || b == "agree") return b + "ing";
  if (ends_with(b, "ie")) return b.substr(0, b.size() - 2) + "ying";
  if (kDoubling.count(b)) return b + b.back() + "ing";
  if (b.size() > 2 && b.back() == 'e' && !ends_with(b, "ee") && !ends_with(b, "ye") &&
      !ends_with(b, "oe"))
    return b.substr(0, b.size() - 1) + "ing";
  return b + "ing";
}

std::string regular_past(const std::string& b) {
  if (kDoubling.count(b)) return b + b.back() + "ed";
  if (b.back() == 'e') return b + "d";
  if (b.size() > 1 && b.back() == 'y' && !is_vowel(b[b.size() - 2]))
    return b.substr(0, b.size() - 1) + "ied";
  return b + "ed";
}

struct Lexicon {
  std::map<std::string, VerbEntry> by_lemma;
  std::multimap<std::string, std::pair<std::string, VerbForm>> by_form;

  Lexicon() {
    for (const auto& ir : kIrregular) {
      std::string b = ir.base;
      by_lemma[b] = VerbEntry{b, third_of(b), ir.past, ir.participle, gerund_of(b)};
    }
    by_lemma["be"] = VerbEntry{"be", "is", "was", "been", "being"};
    for (const char* r : kRegular) {
      std::string b = r;
      if (!by_lemma.count(b)) by_lemma[b] = regular_entry(b);
    }
    for (const auto& [lemma, e] : by_lemma) {
      by_form.emplace(e.base, std::make_pair(lemma, VerbForm::base));
      by_form.emplace(e.third, std::make_pair(lemma, VerbForm::third));
      by_form.emplace(e.past, std::make_pair(lemma, VerbForm::past));
      by_form.emplace(e.participle, std::make_pair(lemma, VerbForm::participle));
      by_form.emplace(e.gerund, std::make_pair(lemma, VerbForm::gerund));
    }
  }
};

const Lexicon& lexicon() {
  static const Lexicon lex;
  return lex;
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

VerbEntry regular_entry(std::string_view base) {
  std::string b(base);
  std::string past = regular_past(b);
  return VerbEntry{b, third_of(b), past, past, gerund_of(b)};
}

std::optional<VerbEntry> find_lemma(std::string_view base) {
  const auto& lex = lexicon();
  auto it = lex.by_lemma.find(to_lower(base));
  if (it == lex.by_lemma.end()) return std::nullopt;
  return it->second;
}

std::vector<FormMatch> lookup_form(std::string_view word) {
  const auto& lex = lexicon();
  std::vector<FormMatch> out;
  auto [lo, hi] = lex.by_form.equal_range(to_lower(word));
  for (auto it = lo; it != hi; ++it) {
    const auto& [lemma, form] = it->second;
    auto found = std::find_if(out.begin(), out.end(),
                              [&](const FormMatch& m) { return m.entry.base == lemma; });
    if (found == out.end()) {
      out.push_back(FormMatch{lex.by_lemma.at(lemma), {form}});
    } else if (std::find(found->forms.begin(), found->forms.end(), form) ==
               found->forms.end()) {
      found->forms.push_back(form);
    }
  }
  return out;
}

namespace {
bool has_form(std::string_view word, VerbForm f) {
  for (const auto& m : lookup_form(word))
    if (std::find(m.forms.begin(), m.forms.end(), f) != m.forms.end()) return true;
  return false;
}
}  // namespace

bool is_participle(std::string_view word) { return has_form(word, VerbForm::participle); }
bool is_base_form(std::string_view word) { return has_form(word, VerbForm::base); }
bool is_known_verb_form(std::string_view word) { return !lookup_form(word).empty(); }

Agreement agreement_of(std::string_view subject) {
  std::string s = to_lower(subject);
  if (s == "i") return Agreement::first_singular;
  if (s == "you" || s == "we" || s == "they") return Agreement::other;
  // Coordinated subjects ("Tom and Anna") and common plural heads.
  if (s.find(" and ") != std::string::npos) return Agreement::other;
  auto last_space = s.find_last_of(' ');
  std::string head = last_space == std::string::npos ? s : s.substr(last_space + 1);
  if (head.size() > 3 && head.back() == 's' && !ends_with(head, "ss") &&
      head != "bus" && head != "this")
    return Agreement::other;
  return Agreement::third_singular;
}

std::string conjugate(const VerbEntry& v, Tense tense, Aspect aspect, Agreement agr) {
  auto be_form = [&](Tense t) -> std::string {
    if (t == Tense::past) return agr == Agreement::other ? "were" : "was";
    if (agr == Agreement::first_singular) return "am";
    return agr == Agreement::third_singular ? "is" : "are";
  };
  auto have_form = [&](Tense t) -> std::string {
    if (t == Tense::past) return "had";
    return agr == Agreement::third_singular ? "has" : "have";
  };
  switch (aspect) {
    case Aspect::simple:
      if (tense == Tense::past) return v.past;
      if (tense == Tense::future) return "will " + v.base;
      return agr == Agreement::third_singular ? v.third : v.base;
    case Aspect::progressive:
      if (tense == Tense::future) return "will be " + v.gerund;
      return be_form(tense) + " " + v.gerund;
    case Aspect::perfect:
      if (tense == Tense::future) return "will have " + v.participle;
      return have_form(tense) + " " + v.participle;
    case Aspect::perfect_progressive:
      if (tense == Tense::future) return "will have been " + v.gerund;
      return have_form(tense) + " been " + v.gerund;
  }
  return v.base;
}

std::optional<VerbGroupParse> parse_verb_group(const std::vector<std::string>& raw) {
  std::vector<std::string> w;
  for (const auto& x : raw) w.push_back(to_lower(x));
  if (w.empty()) return std::nullopt;
  auto main_with = [&](const std::string& word, VerbForm f) -> std::optional<VerbEntry> {
    for (const auto& m : lookup_form(word))
      if (std::find(m.forms.begin(), m.forms.end(), f) != m.forms.end()) return m.entry;
    return std::nullopt;
  };
  const std::set<std::string> be_present{"am", "is", "are"};
  const std::set<std::string> be_past{"was", "were"};
  const std::set<std::string> have_present{"have", "has"};

  if (w.size() == 1) {
    if (auto e = main_with(w[0], VerbForm::past)) return VerbGroupParse{*e, Tense::past, Aspect::simple};
    if (auto e = main_with(w[0], VerbForm::third)) return VerbGroupParse{*e, Tense::present, Aspect::simple};
    if (auto e = main_with(w[0], VerbForm::base)) return VerbGroupParse{*e, Tense::present, Aspect::simple};
    return std::nullopt;
  }
  Tense tense;
  std::size_t i = 0;
  if (w[0] == "will") {
    tense = Tense::future;
    i = 1;
    if (w.size() == 2) {
      if (auto e = main_with(w[1], VerbForm::base)) return VerbGroupParse{*e, tense, Aspect::simple};
      return std::nullopt;
    }
    if (w[1] == "be" && w.size() == 3) {
      if (auto e = main_with(w[2], VerbForm::gerund)) return VerbGroupParse{*e, tense, Aspect::progressive};
      return std::nullopt;
    }
    if (w[1] != "have") return std::nullopt;
    i = 2;
  } else if (be_present.count(w[0]) || be_past.count(w[0])) {
    tense = be_past.count(w[0]) ? Tense::past : Tense::present;
    if (w.size() != 2) return std::nullopt;
    if (auto e = main_with(w[1], VerbForm::gerund)) return VerbGroupParse{*e, tense, Aspect::progressive};
    return std::nullopt;
  } else if (have_present.count(w[0]) || w[0] == "had") {
    tense = w[0] == "had" ? Tense::past : Tense::present;
    i = 1;
  } else {
    return std::nullopt;
  }
  // w[i..] follows a perfect auxiliary.
  if (w.size() == i + 1) {
    if (auto e = main_with(w[i], VerbForm::participle)) return VerbGroupParse{*e, tense, Aspect::perfect};
    return std::nullopt;
  }
  if (w.size() == i + 2 && w[i] == "been") {
    if (auto e = main_with(w[i + 1], VerbForm::gerund))
      return VerbGroupParse{*e, tense, Aspect::perfect_progressive};
    if (auto e = main_with(w[i + 1], VerbForm::participle))
      return std::nullopt;  // passive, not covered
  }
  return std::nullopt;
}

}  // namespace gramsteer
