#include "shepherd/simulator/trace.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "shepherd/core/errors.hpp"
#include "shepherd/core/parallel.hpp"
#include "shepherd/predictor/model.hpp"

namespace shepherd::simulator {

namespace {

using predictor::Rng;
using predictor::uniform01;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t lognormal(Rng& rng, double median, double sigma, std::size_t lo, std::size_t hi) {
  const double v = median * std::exp(sigma * normal(rng));
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(v)), lo, hi);
}

std::size_t uniform_int(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + std::min(hi - lo, static_cast<std::size_t>(uniform01(rng) * double(hi - lo + 1)));
}

constexpr std::array<const char*, 8> kEasySyllables{"ba", "ko", "mi", "lu", "te", "sa", "no", "ri"};
constexpr std::array<const char*, 8> kHardSyllables{"zex", "quor", "vyth", "grim", "plax", "dros", "kwi", "thul"};

std::string word(Rng& rng, bool hard) {
  std::string w;
  const std::size_t syllables = uniform_int(rng, 2, 3);
  for (std::size_t i = 0; i < syllables; ++i) {
    w += hard ? kHardSyllables[uniform_int(rng, 0, 7)] : kEasySyllables[uniform_int(rng, 0, 7)];
  }
  return w;
}

std::string tag(std::size_t index) {
  std::string s = "item";
  do {
    s += static_cast<char>('a' + index % 26);
    index /= 26;
  } while (index > 0);
  return s;
}

// `tokens` builtin tokens: tokens - 1 words and the final answer.
std::string response_text(Rng& rng, std::size_t tokens, const std::string& answer) {
  std::string text;
  for (std::size_t i = 0; i + 1 < tokens; ++i) {
    if (!text.empty()) text += ' ';
    text += word(rng, false);
  }
  if (!text.empty()) text += ' ';
  return text + answer;
}

std::string wrong_answer(Rng& rng, const std::string& right) {
  return std::to_string(std::stoll(right) + 1 + static_cast<long long>(uniform_int(rng, 0, 96)));
}

SyntheticQuery make_query(const labeling::TraceProfile& profile, std::size_t index, std::uint64_t seed,
                          const TraceOptions& opt) {
  Rng rng(splitmix64(seed ^ splitmix64(index)));
  SyntheticQuery sq;

  // 0: no hint, 1..9: bucket, 10: unsolvable
  int category = 10;
  double u = uniform01(rng);
  if (u < profile.p_zero) {
    category = 0;
  } else {
    u -= profile.p_zero;
    for (int b = 0; b < 9; ++b) {
      if (u < profile.bucket_masses[b]) {
        category = b + 1;
        break;
      }
      u -= profile.bucket_masses[b];
    }
  }
  if (category == 10 && profile.p_unsolvable == 0.0) category = 0;
  const bool needs_hint = category != 0;

  const auto& ll = profile.llm_len;
  sq.llm_len = lognormal(rng, ll.median, ll.sigma, std::max<std::size_t>(ll.min, 20), std::max<std::size_t>(ll.max, 20));
  const std::size_t L = sq.llm_len;
  if (category == 10) {
    sq.unsolvable = true;
    sq.n_star = L;
  } else if (category > 0) {
    const std::size_t hi = static_cast<std::size_t>(category) * 10 * L / 100;
    const std::size_t lo = static_cast<std::size_t>(category - 1) * 10 * L / 100;
    sq.n_star = opt.off_grid ? uniform_int(rng, lo + 1, hi) : hi;
  }

  if (needs_hint && !sq.unsolvable && uniform01(rng) < opt.failure_window_prob) {
    std::vector<std::size_t> levels;
    for (std::size_t j = 1; j <= 9; ++j) {
      if (j * 10 * L / 100 > sq.n_star) levels.push_back(j);
    }
    if (!levels.empty()) {
      const std::size_t j = levels[uniform_int(rng, 0, levels.size() - 1)];
      const std::size_t g = j * 10 * L / 100;
      const std::size_t next = j == 9 ? L : (j + 1) * 10 * L / 100;
      sq.window = FailureWindow{g, g + (next - g - 1) / 2};
    }
  }

  sq.llm_correct = uniform01(rng) < (sq.unsolvable ? opt.unsolvable_llm_correct : opt.llm_correct);

  const auto& ql = profile.query_len;
  const std::size_t q_len = lognormal(rng, ql.median * (needs_hint ? opt.length_signal : 1.0), ql.sigma,
                                      std::max<std::size_t>(ql.min, 2), std::max<std::size_t>(ql.max, 2));
  std::string text = tag(index);
  const double hard_share = needs_hint ? opt.hard_vocab_hard : opt.hard_vocab_easy;
  for (std::size_t i = 1; i < q_len; ++i) text += ' ' + word(rng, uniform01(rng) < hard_share);

  const std::string answer = std::to_string(uniform_int(rng, 10, 99999));
  sq.query = Query::make("q" + std::to_string(index), text, TaskKind::math_numeric, answer);
  sq.slm_out_len = lognormal(rng, opt.slm_out_median, 0.3, 10, 1024);

  const bool easy = !needs_hint;
  const bool agree = uniform01(rng) < (easy ? opt.consensus_prob_easy : opt.consensus_prob_hard);
  const std::string shared_wrong = wrong_answer(rng, answer);
  for (std::size_t s = 0; s < opt.samples; ++s) {
    if (agree) {
      sq.sample_answers.push_back(easy ? answer : shared_wrong);
    } else {
      // Pairwise distinct, so no quorum of two forms.
      const std::string base = easy && s == 0 ? answer : std::to_string(std::stoll(answer) + 100 * (s + 1));
      sq.sample_answers.push_back(base);
    }
  }
  const double level = easy ? opt.entropy_easy : opt.entropy_hard;
  sq.entropy = std::max(0.0, level + opt.entropy_noise * (2.0 * uniform01(rng) - 1.0));
  return sq;
}

}  // namespace

std::vector<SyntheticQuery> generate_trace(const labeling::TraceProfile& profile, std::size_t n, std::uint64_t seed,
                                           const TraceOptions& options) {
  profile.validate();
  std::vector<SyntheticQuery> trace(n);
  parallel_for(n, options.worker_threads,
               [&](std::size_t i) { trace[i] = make_query(profile, i, seed, options); });
  return trace;
}

bool synth_quality(const SyntheticQuery& sq, std::size_t n) {
  if (sq.unsolvable || n < sq.n_star) return false;
  return !(sq.window && n >= sq.window->lo && n <= sq.window->hi);
}

std::size_t brute_force_n_star(const SyntheticQuery& sq, int step_pct) {
  for (std::size_t n : labeling::grid_sizes(sq.llm_len, step_pct)) {
    if (synth_quality(sq, n)) return n;
  }
  return sq.llm_len;
}

MockScripts build_mock_scripts(std::span<const SyntheticQuery> trace) {
  MockScripts scripts;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& sq = trace[i];
    Rng rng(splitmix64(0x5eed ^ splitmix64(i)) ^ fnv1a64(sq.query.text()));
    const std::string& answer = *sq.query.ground_truth;
    const std::string wrong = wrong_answer(rng, answer);

    backends::MockEntry llm;
    llm.question = sq.query.text();
    llm.response = response_text(rng, sq.llm_len, sq.llm_correct ? answer : wrong);
    scripts.llm.add(std::move(llm));

    backends::MockEntry slm;
    slm.question = sq.query.text();
    const std::string right_text = response_text(rng, sq.slm_out_len, answer);
    const std::string wrong_text = response_text(rng, sq.slm_out_len, wrong);
    slm.response = synth_quality(sq, 0) ? right_text : wrong_text;
    if (!sq.unsolvable && sq.n_star > 0) {
      slm.hinted.push_back({sq.n_star, std::nullopt, right_text});
      if (sq.window) slm.hinted.push_back({sq.window->lo, sq.window->hi, wrong_text});
    }
    for (const auto& a : sq.sample_answers) slm.samples.push_back(response_text(rng, sq.slm_out_len, a));
    slm.entropy = {sq.entropy};
    scripts.slm.add(std::move(slm));
  }
  return scripts;
}

labeling::DatasetStats trace_stats(std::span<const SyntheticQuery> trace) {
  std::vector<labeling::LabeledExample> shadow;
  shadow.reserve(trace.size());
  for (const auto& sq : trace) {
    labeling::LabeledExample ex;
    ex.full_llm_len = sq.llm_len;
    ex.n_star = sq.n_star;
    ex.unsolvable = sq.unsolvable;
    shadow.push_back(std::move(ex));
  }
  return labeling::dataset_stats(shadow);
}

}  // namespace shepherd::simulator
