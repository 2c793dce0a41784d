#pragma once

#include "inflight/core/random.hpp"
#include "inflight/generators/backend.hpp"
#include "inflight/validators/arith.hpp"
#include "inflight/validators/text.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace inflight {

/// Probability that each fault class fires on a bad (latent-wrong) trajectory.
/// On good trajectories the rate is scaled by (1 - quality_correlation).
struct FaultProbs {
  double wpe = 0.24;        // malformed problem text
  double arith = 0.96;      // visible arithmetic slip in the trace
  double marker = 0.02;     // missing or repeated final-answer line
  double leakage = 0.02;    // role marker leaking into the solution
  double magnitude = 0.02;  // unit slip inflating the final answer

  friend bool operator==(const FaultProbs&, const FaultProbs&) = default;
};

struct LengthDist {
  double mean = 400.0;
  double dispersion = 0.35;  // sigma of the underlying normal
  friend bool operator==(const LengthDist&, const LengthDist&) = default;
};

struct SimulatorConfig {
  std::uint64_t seed = 42;
  double base_quality = 0.44;  // P(latent answer correct)
  FaultProbs fault_probs;
  double quality_correlation = 0.995;
  bool adversarial = false;     // faults fire on good trajectories instead
  double benign_anomaly = 0.07; // harmless hedging phrase in the trace
  double arith_position_shape = 4.4;  // slip position ~ Beta(1, shape)
  LengthDist solution_tokens;
  bool supports_continuation = true;

  friend bool operator==(const SimulatorConfig&, const SimulatorConfig&) = default;

  static SimulatorConfig fault_free(std::uint64_t seed = 42) {
    SimulatorConfig c;
    c.seed = seed;
    c.base_quality = 1.0;
    c.fault_probs = {0, 0, 0, 0, 0};
    c.benign_anomaly = 0.0;
    return c;
  }
};

inline std::vector<std::string> validate_simulator_config(const SimulatorConfig& c) {
  std::vector<std::string> v;
  auto prob = [&](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) v.push_back(std::string(name) + " must lie in [0, 1]");
  };
  prob(c.base_quality, "simulator.base_quality");
  prob(c.fault_probs.wpe, "simulator.fault_probs.wpe");
  prob(c.fault_probs.arith, "simulator.fault_probs.arith");
  prob(c.fault_probs.marker, "simulator.fault_probs.marker");
  prob(c.fault_probs.leakage, "simulator.fault_probs.leakage");
  prob(c.fault_probs.magnitude, "simulator.fault_probs.magnitude");
  prob(c.quality_correlation, "simulator.quality_correlation");
  prob(c.benign_anomaly, "simulator.benign_anomaly");
  if (!(c.arith_position_shape > 0.0)) v.push_back("simulator.arith_position_shape must be > 0");
  if (!(c.solution_tokens.mean >= 40.0)) v.push_back("simulator.solution_tokens.mean must be >= 40");
  if (!(c.solution_tokens.dispersion >= 0.0)) v.push_back("simulator.solution_tokens.dispersion must be >= 0");
  return v;
}

/// Everything the simulator decides about one trajectory. Rebuilt from the
/// trajectory seed on every call so that calls carry no shared state.
struct SimPlan {
  bool latent_good = true;
  bool label = true;  // what full generation plus final validation decides
  std::string problem;
  std::string solution;
  std::int64_t truth = 0;
  std::int64_t stated = 0;
  bool wpe_fault = false, arith_fault = false, marker_fault = false, leakage_fault = false,
       magnitude_fault = false, benign = false;
  double arith_position = -1.0;   // fraction of the solution, when visible
  double benign_position = -1.0;
};

namespace sim {

inline constexpr std::array<std::string_view, 40> kNames{
    "Aiden", "Bella", "Carlos", "Dana", "Elif", "Farah", "Gavin", "Hana", "Ivan", "Jada",
    "Kofi", "Lena", "Mateo", "Nora", "Omar", "Priya", "Quinn", "Rosa", "Sami", "Tara",
    "Umar", "Vera", "Wes", "Ximena", "Yusuf", "Zoe", "Arjun", "Beatriz", "Chen", "Dmitri",
    "Esme", "Femi", "Greta", "Hugo", "Ines", "Jonas", "Kira", "Luca", "Maya", "Niko"};

inline constexpr std::array<std::string_view, 30> kItems{
    "apples", "pencils", "marbles", "cookies", "stickers", "books", "eggs", "cupcakes",
    "shells", "stamps", "candles", "buttons", "crayons", "muffins", "oranges", "postcards",
    "beads", "tickets", "balloons", "notebooks", "plums", "ribbons", "coins", "pebbles",
    "badges", "magnets", "lemons", "flowers", "keychains", "puzzles"};

inline constexpr std::array<std::string_view, 12> kPlaces{
    "theater", "stadium", "library hall", "school gym", "concert hall", "lecture room",
    "church", "cinema", "community center", "auditorium", "ballroom", "playhouse"};

inline constexpr std::array<std::string_view, 36> kFillers{
    "Let us read the problem carefully before doing any arithmetic.",
    "We need to keep track of how many {items} {N} has at each point.",
    "It helps to write down each quantity before combining them.",
    "{N} wants an exact count, so every step should be checked.",
    "The problem gives every number that the calculation needs.",
    "First we organize the information about the {items}.",
    "A careful plan makes the rest of the work straightforward.",
    "We should be careful not to mix up the different groups of {items}.",
    "Each quantity in the story describes a separate part of the situation.",
    "Thinking about the order of events keeps the reasoning clear.",
    "The question asks for a single number at the end.",
    "Before moving on, we restate what is already known about {N}.",
    "This part of the story only changes how the {items} are grouped.",
    "Nothing in the problem suggests that any {items} are lost or broken.",
    "We can picture the {items} laid out in neat groups on a table.",
    "The next step builds directly on the previous result.",
    "Keeping units attached to each number avoids confusion later.",
    "It is worth pausing to confirm that the setup makes sense.",
    "The wording tells us which operation to use for this step.",
    "{N} can check the work by thinking about a smaller example.",
    "A quick sanity check shows the result is in a reasonable range.",
    "Writing each intermediate result on its own line keeps things tidy.",
    "The story about {N} and the {items} is now fully described.",
    "Every step so far uses only whole numbers, which fits the story.",
    "We combine the pieces in the same order that the problem gives them.",
    "There is no extra information hidden in the question.",
    "This is a common kind of counting problem with {items}.",
    "Multiplication handles repeated groups and addition combines totals.",
    "Subtraction tells us what remains after something is taken away.",
    "The important detail is how many {items} are in each group.",
    "Now the remaining work is a short calculation.",
    "We look again at the question to make sure we answer the right thing.",
    "The previous result is the starting point for what comes next.",
    "Counting the {items} one group at a time gives the same answer.",
    "This approach works no matter how the {items} are arranged.",
    "At this point the reasoning is consistent with the problem statement."};

inline constexpr std::array<std::string_view, 14> kOpeners{
    "", "", "", "Next, ", "Here ", "At this stage ", "Note that ", "Of course ", "Clearly ",
    "Remember that ", "In short ", "Again ", "Also ", "So far "};

inline constexpr std::size_t kStyleSize = 10;

inline std::string fill(std::string_view tmpl, std::string_view name, std::string_view items);

inline std::string filler(Rng& rng, const std::vector<std::size_t>& style, std::string_view name,
                          std::string_view items) {
  const auto core = fill(kFillers[style[static_cast<std::size_t>(uniform_int(rng, 0, style.size() - 1))]], name, items);
  const auto opener = kOpeners[static_cast<std::size_t>(uniform_int(rng, 0, kOpeners.size() - 1))];
  if (opener.empty()) return core;
  std::string out(opener);
  // Keep names capitalized; lowercase an ordinary leading word.
  const bool proper = std::any_of(kNames.begin(), kNames.end(),
                                  [&](std::string_view n) { return core.rfind(n, 0) == 0; });
  out += proper ? core : std::string(1, static_cast<char>(std::tolower(static_cast<unsigned char>(core[0])))) + core.substr(1);
  return out;
}

inline constexpr std::array<std::string_view, 6> kBenign{
    "Hypothetically, changing the order of these steps would not change the result.",
    "Hypothetically, {N} could also count the {items} in pairs and get the same total.",
    "As an AI helper would say, it is good to double check each line.",
    "I cannot see any missing information, so we can continue.",
    "Hypothetically, a picture of the {items} might make this even clearer.",
    "I cannot think of a simpler way to organize these {items}."};

inline std::string fill(std::string_view tmpl, std::string_view name, std::string_view items) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size();) {
    if (tmpl.substr(i, 3) == "{N}") { out += name; i += 3; }
    else if (tmpl.substr(i, 7) == "{items}") { out += items; i += 7; }
    else out += tmpl[i++];
  }
  return out;
}

struct Step {
  std::int64_t a = 0, b = 0;
  char op = '+';
  std::int64_t result() const {
    switch (op) {
      case '+': return a + b;
      case '-': return a - b;
      case '*': return a * b;
      default: return b == 0 ? 0 : a / b;
    }
  }
};

inline const char* op_text(char op) {
  switch (op) {
    case '+': return "+";
    case '-': return "-";
    case '*': return "\xC3\x97";  // ×
    default: return "\xC3\xB7";   // ÷
  }
}

inline std::string claim(std::int64_t a, char op, std::int64_t b, std::int64_t r) {
  return std::to_string(a) + " " + op_text(op) + " " + std::to_string(b) + " = " + std::to_string(r);
}

struct Story {
  std::string problem;
  std::vector<Step> steps;      // chain: steps[i+1] consumes steps[i].result() where noted
  std::vector<int> chain_slot;  // which operand (0 = a, 1 = b) takes the previous result; -1 none
  std::vector<std::string> step_phrases;  // sentence with "{claim}" placeholder
  std::int64_t slip = 1;  // operand error that keeps every claim exact
};

inline Story make_story(Rng& rng, std::string_view name, std::string_view other,
                        std::string_view items, std::string_view place) {
  Story s;
  const std::string N(name), M(other), I(items), P(place);
  const int kind = static_cast<int>(uniform_int(rng, 0, 7));
  auto n = [&](std::int64_t lo, std::int64_t hi) { return uniform_int(rng, lo, hi); };
  switch (kind) {
    case 0: {
      auto a = n(2, 12), b = n(6, 60);
      auto c = n(1, (a - 1) * b - 1);
      s.problem = N + " buys " + std::to_string(a) + " boxes of " + I + ". Each box holds " +
                  std::to_string(b) + " " + I + ". " + N + " gives " + std::to_string(c) + " " + I +
                  " to a neighbor. How many " + I + " does " + N + " have now?";
      s.steps = {{a, b, '*'}, {0, c, '-'}};
      s.chain_slot = {-1, 0};
      s.step_phrases = {"The boxes hold {claim} " + I + " in total.",
                        "After giving some away, " + N + " has {claim} " + I + "."};
      break;
    }
    case 1: {
      auto a = n(8, 40), b = n(2, 8), c = n(2, 12);
      s.problem = N + " earns $" + std::to_string(a) + " per hour and works " + std::to_string(b) +
                  " hours a day. How much money does " + N + " earn in " + std::to_string(c) +
                  " days?";
      s.steps = {{a, b, '*'}, {0, c, '*'}};
      s.chain_slot = {-1, 0};
      s.step_phrases = {"In one day " + N + " earns {claim} dollars.",
                        "Over all the days " + N + " earns {claim} dollars."};
      break;
    }
    case 2: {
      auto a = n(5, 40), b = n(8, 50);
      auto c = n(1, (a - 1) * b - 1);
      s.problem = "A " + P + " has " + std::to_string(a) + " rows of seats with " + std::to_string(b) +
                  " seats in each row. If " + std::to_string(c) +
                  " seats are filled, how many seats are empty?";
      s.steps = {{a, b, '*'}, {0, c, '-'}};
      s.chain_slot = {-1, 0};
      s.step_phrases = {"The " + P + " has {claim} seats altogether.",
                        "The number of empty seats is {claim}."};
      break;
    }
    case 3: {
      auto c = n(2, 6);
      auto a = n(5, 80);
      auto b = n(5, 80);
      b += (c - (a + b) % c) % c;
      s.problem = N + " collects " + std::to_string(a) + " " + I + " on Monday and " +
                  std::to_string(b) + " " + I + " on Tuesday. " + N + " shares them equally among " +
                  std::to_string(c) + " friends. How many " + I + " does each friend get?";
      s.steps = {{a, b, '+'}, {0, c, '/'}};
      s.chain_slot = {-1, 0};
      s.slip = c;
      s.step_phrases = {"Over the two days " + N + " collects {claim} " + I + ".",
                        "Each friend receives {claim} " + I + "."};
      break;
    }
    case 4: {
      auto a = n(5, 90), b = n(2, 40);
      s.problem = N + " has " + std::to_string(a) + " " + I + ". " + M + " has " + std::to_string(b) +
                  " more " + I + " than " + N + ". How many " + I + " do " + N + " and " + M +
                  " have together?";
      s.steps = {{a, b, '+'}, {a, 0, '+'}};
      s.chain_slot = {-1, 1};
      s.step_phrases = {M + " has {claim} " + I + ".", "Together they have {claim} " + I + "."};
      break;
    }
    case 5: {
      auto a = n(5, 50), b = n(3, 30), c = n(5, 90);
      s.problem = N + " reads " + std::to_string(a) + " pages every day for " + std::to_string(b) +
                  " days and then reads " + std::to_string(c) +
                  " more pages on the weekend. How many pages does " + N + " read in total?";
      s.steps = {{a, b, '*'}, {0, c, '+'}};
      s.chain_slot = {-1, 0};
      s.step_phrases = {"During the week " + N + " reads {claim} pages.",
                        "Including the weekend, " + N + " reads {claim} pages."};
      break;
    }
    case 6: {
      auto a = n(4, 20), b = n(6, 36);
      auto c = n(1, a - 2);
      s.problem = "A baker makes " + std::to_string(a) + " trays of " + I + " with " + std::to_string(b) +
                  " on each tray. The baker sells " + std::to_string(c) + " trays. How many " + I +
                  " are left?";
      s.steps = {{a, b, '*'}, {c, b, '*'}, {0, 0, '-'}};
      s.chain_slot = {-1, -1, 2};
      s.step_phrases = {"The baker makes {claim} " + I + ".", "The sold trays hold {claim} " + I + ".",
                        "So {claim} " + I + " are left."};
      break;
    }
    default: {
      auto a = n(5, 60), b = n(3, 20);
      auto c = n(1, (a - 1) * b - 1);
      s.problem = N + " saves $" + std::to_string(a) + " each week for " + std::to_string(b) +
                  " weeks and then spends $" + std::to_string(c) + " on a gift for " + M +
                  ". How much money does " + N + " have left?";
      s.steps = {{a, b, '*'}, {0, c, '-'}};
      s.chain_slot = {-1, 0};
      s.step_phrases = {N + " saves {claim} dollars.", "After buying the gift, " + N + " has {claim} dollars."};
      break;
    }
  }
  return s;
}

/// Final value of a step chain. slot 0/1: previous result feeds operand
/// a/b; slot 2: a - b over the previous two results.
inline std::int64_t chain_result(const std::vector<Step>& steps, const std::vector<int>& slots) {
  std::vector<std::int64_t> results;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    Step st = steps[i];
    if (slots[i] == 0) st.a = results.back();
    else if (slots[i] == 1) st.b = results.back();
    else if (slots[i] == 2) { st.a = results[results.size() - 2]; st.b = results.back(); }
    results.push_back(st.result());
  }
  return results.back();
}

inline double normal(Rng& rng) {
  const double u1 = std::max(uniform01(rng), 1e-300), u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline std::string corrupt_problem(Rng& rng, std::string p) {
  switch (uniform_int(rng, 0, 4)) {
    case 0: {  // lowercase start
      p[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(p[0])));
      return p;
    }
    case 1: {  // doubled question mark
      return p + "?";
    }
    case 2: {  // question mark lost
      p.back() = '.';
      return p;
    }
    case 3: {  // stray foreign-script word
      auto pos = p.find(' ', p.size() / 2);
      if (pos == std::string::npos) pos = p.size() / 2;
      return p.substr(0, pos) + " \xE6\x95\xB0\xE9\x87\x8F" + p.substr(pos);  // 数量
    }
    default: {  // truncated mid-sentence
      auto words = text::split_words(p);
      const auto keep = static_cast<std::size_t>(uniform_int(rng, 4, static_cast<std::int64_t>(words.size()) - 2));
      const auto w = words[keep];
      return p.substr(0, static_cast<std::size_t>(w.data() + w.size() - p.data())) + "...";
    }
  }
}

}  // namespace sim

/// Builds the plan for one trajectory. Pure function of (config, seed).
inline SimPlan make_sim_plan(const SimulatorConfig& cfg, std::uint64_t trajectory_seed) {
  using namespace sim;
  Rng rng(derive_seed(cfg.seed, {trajectory_seed, 0x51A7ULL}));
  SimPlan plan;
  plan.latent_good = bernoulli(rng, cfg.base_quality);

  // Fault rates depend on the latent quality. The adversarial config swaps
  // which side receives the full rate.
  const bool full_rate = cfg.adversarial ? plan.latent_good : !plan.latent_good;
  const double scale = full_rate ? 1.0 : 1.0 - cfg.quality_correlation;
  const auto& fp = cfg.fault_probs;
  plan.wpe_fault = bernoulli(rng, fp.wpe * scale);
  plan.arith_fault = bernoulli(rng, fp.arith * scale);
  plan.marker_fault = bernoulli(rng, fp.marker * scale);
  plan.leakage_fault = bernoulli(rng, fp.leakage * scale);
  plan.magnitude_fault = bernoulli(rng, fp.magnitude * scale);
  plan.benign = bernoulli(rng, cfg.benign_anomaly);

  const auto name_idx = static_cast<std::size_t>(uniform_int(rng, 0, kNames.size() - 1));
  auto other_idx = static_cast<std::size_t>(uniform_int(rng, 0, kNames.size() - 2));
  if (other_idx >= name_idx) ++other_idx;
  const auto name = kNames[name_idx];
  const auto items = kItems[static_cast<std::size_t>(uniform_int(rng, 0, kItems.size() - 1))];
  const auto place = kPlaces[static_cast<std::size_t>(uniform_int(rng, 0, kPlaces.size() - 1))];

  Story story = make_story(rng, name, kNames[other_idx], items, place);
  plan.problem = story.problem;
  if (plan.wpe_fault) plan.problem = corrupt_problem(rng, plan.problem);
  plan.truth = chain_result(story.steps, story.chain_slot);

  // A wrong answer comes from a slipped operand in the first step. When the
  // slip is visible the claim keeps the true operand ("4 × 60 = 180");
  // otherwise the operand itself is wrong and every claim checks out.
  std::vector<Step> shown = story.steps;
  std::int64_t first_result = story.steps.front().result();
  if (!plan.latent_good) {
    Step slipped = story.steps.front();
    slipped.a = slipped.a > story.slip ? slipped.a - story.slip : slipped.a + story.slip;
    first_result = slipped.result();
    if (!plan.arith_fault) shown.front() = slipped;
  }
  std::vector<std::int64_t> results{first_result};
  for (std::size_t i = 1; i < shown.size(); ++i) {
    Step& st = shown[i];
    if (story.chain_slot[i] == 0) st.a = results[i - 1];
    else if (story.chain_slot[i] == 1) st.b = results[i - 1];
    else if (story.chain_slot[i] == 2) { st.a = results[i - 2]; st.b = results[i - 1]; }
    results.push_back(st.result());
  }
  plan.stated = results.back();
  if (plan.stated == plan.truth) plan.latent_good = true;  // slip cancelled out

  std::vector<std::string> step_sentences;
  for (std::size_t i = 0; i < shown.size(); ++i) {
    const auto c = claim(shown[i].a, shown[i].op, shown[i].b, results[i]);
    auto ph = story.step_phrases[i];
    ph.replace(ph.find("{claim}"), 7, c);
    step_sentences.push_back(ph);
  }

  std::int64_t final_value = plan.stated;
  std::string magnitude_sentence;
  if (plan.magnitude_fault) {
    const std::int64_t scaled = plan.stated * 100'000'000;
    magnitude_sentence = "Converting to the smallest unit gives " + claim(plan.stated, '*', 100'000'000, scaled) + ".";
    final_value = scaled;
  }

  // Target length in whitespace tokens.
  const double sigma = cfg.solution_tokens.dispersion;
  const double mu = std::log(cfg.solution_tokens.mean) - 0.5 * sigma * sigma;
  const auto target = static_cast<std::int64_t>(
      std::clamp(std::exp(mu + sigma * normal(rng)), 60.0, 6.0 * cfg.solution_tokens.mean));

  // Place sentences at word offsets. Step one sits at `first_pos`, the last
  // step closes the body and any middle steps fall in between.
  const double slip_pos = 1.0 - std::pow(1.0 - uniform01(rng), 1.0 / cfg.arith_position_shape);
  const bool visible_slip = plan.arith_fault && !plan.latent_good;
  const double first_pos = visible_slip ? slip_pos : 0.05 + 0.45 * uniform01(rng);
  if (plan.arith_fault) plan.arith_position = slip_pos;

  struct Placed {
    double pos;
    std::string sentence;
  };
  std::vector<Placed> anchored;
  anchored.push_back({first_pos, step_sentences.front()});
  for (std::size_t i = 1; i + 1 < step_sentences.size(); ++i)
    anchored.push_back({first_pos + (1.0 - first_pos) * uniform01(rng), step_sentences[i]});
  anchored.push_back({1.0, step_sentences.back()});
  if (!magnitude_sentence.empty()) anchored.push_back({1.0, magnitude_sentence});
  if (plan.arith_fault && plan.latent_good) {
    // Harmless slip unrelated to the answer.
    const auto x = uniform_int(rng, 3, 9), y = uniform_int(rng, 3, 9);
    anchored.push_back({std::min(slip_pos, 0.99), "As a side note, " + claim(x, '+', y, x + y + 1) + " is not needed here."});
  }
  if (plan.benign) {
    plan.benign_position = std::sqrt(uniform01(rng));
    auto tmpl = kBenign[static_cast<std::size_t>(uniform_int(rng, 0, kBenign.size() - 1))];
    anchored.push_back({plan.benign_position, fill(tmpl, name, items)});
  }
  if (plan.leakage_fault)
    anchored.push_back({0.85 + 0.14 * uniform01(rng), "User: please also show the answer in words."});
  std::stable_sort(anchored.begin(), anchored.end(), [](const Placed& a, const Placed& b) { return a.pos < b.pos; });

  // Each trajectory draws its filler sentences from its own small subset of
  // the pool, which keeps unrelated solutions far apart for dedup.
  std::array<std::size_t, kFillers.size()> pool{};
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  for (std::size_t i = 0; i < kStyleSize; ++i)
    std::swap(pool[i], pool[static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(i), pool.size() - 1))]);
  const std::vector<std::size_t> style(pool.begin(), pool.begin() + kStyleSize);

  std::string body;
  std::int64_t words = 0;
  int since_break = 0;
  auto append = [&](const std::string& sentence) {
    if (!body.empty()) body += (since_break >= 4 ? "\n" : " ");
    since_break = since_break >= 4 ? 0 : since_break + 1;
    body += sentence;
    words += static_cast<std::int64_t>(text::word_count(sentence));
  };
  const std::int64_t tail_words = 7;
  const double body_target = static_cast<double>(std::max<std::int64_t>(target - tail_words, 20));
  std::size_t next = 0;
  while (next < anchored.size() || static_cast<double>(words) < body_target) {
    if (next < anchored.size() && static_cast<double>(words) >= anchored[next].pos * body_target) {
      append(anchored[next++].sentence);
      continue;
    }
    append(filler(rng, style, name, items));
  }

  std::string solution = body + "\nSo the answer is " + std::to_string(final_value) + ".";
  if (plan.marker_fault) {
    if (bernoulli(rng, 0.5)) solution += "\n#### " + std::to_string(final_value) + "\n#### " + std::to_string(final_value);
    // else: no final-answer line at all
  } else {
    solution += "\n#### " + std::to_string(final_value);
  }
  plan.solution = std::move(solution);

  plan.label = plan.latent_good && !plan.marker_fault && !plan.leakage_fault && !plan.magnitude_fault;
  return plan;
}

/// Seeded stochastic backend. Whitespace-separated words count as tokens.
class SimulatedBackend final : public GeneratorBackend {
 public:
  explicit SimulatedBackend(SimulatorConfig cfg = {}) : cfg_(std::move(cfg)) {}

  const SimulatorConfig& config() const { return cfg_; }

  Capabilities capabilities() const override { return {cfg_.supports_continuation, true}; }

  SimPlan plan(std::uint64_t trajectory_seed) const { return make_sim_plan(cfg_, trajectory_seed); }

  std::optional<bool> ground_truth(std::uint64_t trajectory_seed) const override {
    return plan(trajectory_seed).label;
  }

  Generation generate(const GenerationRequest& req) override {
    const SimPlan p = plan(req.trajectory_seed);
    switch (req.stage) {
      case Stage::Problem: return whole(p.problem);
      case Stage::MidSolution:
      case Stage::FullSolution: return solution_part(p, req);
      case Stage::Evaluation: return judge(p, req);
    }
    throw BackendError("unknown stage");
  }

 private:
  static Generation whole(const std::string& s) {
    return {s, static_cast<std::int64_t>(text::word_count(s)), 0, true};
  }

  Generation solution_part(const SimPlan& p, const GenerationRequest& req) const {
    const auto words = text::split_words(p.solution);
    const auto total = static_cast<std::int64_t>(words.size());
    std::int64_t start = 0;
    if (!req.assistant_prefix.empty()) {
      if (!cfg_.supports_continuation) throw BackendError("continuation not supported");
      if (p.solution.compare(0, req.assistant_prefix.size(), req.assistant_prefix) != 0)
        throw BackendError("prefix does not match this trajectory");
      start = static_cast<std::int64_t>(text::word_count(req.assistant_prefix));
    }
    const std::int64_t budget = std::max<std::int64_t>(req.params.max_tokens, 1);
    const std::int64_t end = std::min(total, start + budget);
    if (end <= start) throw BackendError("nothing left to generate");
    auto offset = [&](std::int64_t w) {
      return static_cast<std::size_t>(words[static_cast<std::size_t>(w)].data() - p.solution.data());
    };
    const std::size_t from = start == 0 ? 0 : offset(start - 1) + words[static_cast<std::size_t>(start - 1)].size();
    const std::size_t to = end == total ? p.solution.size() : offset(end - 1) + words[static_cast<std::size_t>(end - 1)].size();
    return {p.solution.substr(from, to - from), end - start, 0, end == total};
  }

  Generation judge(const SimPlan& p, const GenerationRequest& req) const {
    Rng rng(derive_seed(cfg_.seed, {req.trajectory_seed, 0x7E57ULL}));
    const auto answer = extract_final_answer(req.user);
    const bool correct = answer && answer->value() == Rational(p.truth) && p.label;
    const int score = correct ? static_cast<int>(uniform_int(rng, 4, 5)) : static_cast<int>(uniform_int(rng, 1, 2));
    Generation g{"Rating: " + std::to_string(score), 2, static_cast<std::int64_t>(text::word_count(req.user)), true};
    return g;
  }

  SimulatorConfig cfg_;
};

}  // namespace inflight
