#include "shepherd/metrics/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "shepherd/core/errors.hpp"

namespace shepherd::metrics {

double ace(const PolicySummary& s) {
  if (s.llm_accuracy == s.slm_accuracy) throw ConfigError("ACE is undefined when A_l == A_s");
  if (!(s.cost > 0.0)) throw ConfigError("ACE needs a positive policy cost");
  if (!(s.llm_cost > 0.0)) throw ConfigError("ACE needs a positive LLM cost");
  return ((s.accuracy - s.slm_accuracy) / (s.llm_accuracy - s.slm_accuracy)) / (s.cost / s.llm_cost);
}

double cost_reduction(double cost, double llm_cost) {
  if (!(llm_cost > 0.0)) throw ConfigError("cost reduction needs a positive LLM cost");
  return 100.0 * (1.0 - cost / llm_cost);
}

double round_to(double x, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(x * scale) / scale;
}

std::vector<ReportRow> evaluate(std::span<const StrategyResult> strategies, const Baselines& b) {
  std::vector<ReportRow> rows;
  rows.reserve(strategies.size());
  for (const auto& s : strategies) {
    ReportRow row;
    row.strategy = s.name;
    row.cost = s.cost;
    row.accuracy = s.accuracy;
    row.cost_reduction_pct = cost_reduction(s.cost, b.llm_cost);
    const double rounded_llm = round_to(b.llm_cost, 3);
    row.cost_reduction_rounded_pct =
        rounded_llm > 0.0 ? cost_reduction(round_to(s.cost, 3), rounded_llm) : row.cost_reduction_pct;
    if (s.cost > 0.0 && b.llm_accuracy != b.slm_accuracy) {
      row.ace = ace({s.accuracy, s.cost, b.slm_accuracy, b.llm_accuracy, b.llm_cost});
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

OutcomeSummary summarize(std::span<const policy::Outcome> outcomes) {
  OutcomeSummary s;
  for (const auto& o : outcomes) {
    ++s.count;
    if (o.correct.value_or(false)) ++s.correct;
    s.total += o.dollars;
  }
  return s;
}

policy::Outcome majority_vote(std::span<const policy::Outcome> trials) {
  if (trials.empty()) throw ConfigError("majority_vote needs at least one trial");
  std::map<std::string, std::size_t> counts;
  std::size_t best = 0;
  const policy::Outcome* winner = &trials.front();
  for (const auto& t : trials) {
    if (t.extracted_answer.empty()) continue;
    ++counts[t.extracted_answer];
  }
  for (const auto& t : trials) {
    if (t.extracted_answer.empty()) continue;
    if (counts[t.extracted_answer] > best) {
      best = counts[t.extracted_answer];
      winner = &t;
    }
  }
  policy::Outcome out = *winner;
  Money total;
  for (const auto& t : trials) total += t.dollars;
  out.dollars = Money::from_pico(total.pico() / static_cast<std::int64_t>(trials.size()));
  return out;
}

namespace {

std::string fmt(double v, int decimals) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(decimals) << v;
  return os.str();
}

}  // namespace

std::string to_csv(std::span<const ReportRow> rows) {
  std::ostringstream os;
  os << "strategy,cost,accuracy,cost_reduction_pct,cost_reduction_rounded_pct,ace\n";
  os << std::setprecision(10);
  for (const auto& r : rows) {
    os << r.strategy << ',' << r.cost << ',' << r.accuracy << ',' << r.cost_reduction_pct << ','
       << r.cost_reduction_rounded_pct << ',';
    if (r.ace) os << *r.ace;
    os << '\n';
  }
  return os.str();
}

std::string to_text_table(std::span<const ReportRow> rows, const std::string& title) {
  std::size_t width = 8;
  for (const auto& r : rows) width = std::max(width, r.strategy.size());
  std::ostringstream os;
  if (!title.empty()) os << title << '\n';
  os << std::left << std::setw(int(width)) << "Strategy" << std::right << std::setw(12) << "Cost ($)"
     << std::setw(10) << "Acc." << std::setw(14) << "Cost red. (%)" << std::setw(8) << "ACE" << '\n';
  for (const auto& r : rows) {
    os << std::left << std::setw(int(width)) << r.strategy << std::right << std::setw(12) << fmt(r.cost, 6)
       << std::setw(10) << fmt(r.accuracy, 1) << std::setw(14) << fmt(r.cost_reduction_pct, 1) << std::setw(8)
       << (r.ace ? fmt(*r.ace, 2) : std::string("-")) << '\n';
  }
  return os.str();
}

nlohmann::json to_json(const ReportRow& row) {
  nlohmann::json j{{"strategy", row.strategy},
                   {"cost", row.cost},
                   {"accuracy", row.accuracy},
                   {"cost_reduction_pct", row.cost_reduction_pct},
                   {"cost_reduction_rounded_pct", row.cost_reduction_rounded_pct}};
  j["ace"] = row.ace ? nlohmann::json(*row.ace) : nlohmann::json(nullptr);
  return j;
}

void write_outcomes(std::ostream& out, const std::string& strategy, std::span<const policy::Outcome> outcomes) {
  for (const auto& o : outcomes) {
    auto j = policy::to_json(o);
    j["schema"] = kEvalSchema;
    j["strategy"] = strategy;
    out << j.dump() << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  for (auto& c : cells) {
    while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
    while (!c.empty() && c.front() == ' ') c.erase(c.begin());
  }
  return cells;
}

double number(const std::string& cell, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw SchemaError("paper table: bad " + what + " '" + cell + "'");
  }
}

}  // namespace

PaperTable read_paper_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open table: " + path);
  PaperTable t;
  t.name = std::filesystem::path(path).stem().string();
  std::string line;
  if (!std::getline(in, line) || split_csv(line).at(0) != "strategy") {
    throw SchemaError("paper table must start with a strategy,cost,accuracy,cost_reduction,ace header");
  }
  bool have_llm = false, have_slm = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_csv(line);
    if (cells.size() < 3) throw SchemaError("paper table row has too few columns: " + line);
    const double cost = number(cells[1], "cost");
    const double acc = number(cells[2], "accuracy");
    if (cells[0] == "LLM") {
      t.baselines.llm_cost = cost;
      t.baselines.llm_accuracy = acc;
      have_llm = true;
    } else if (cells[0] == "SLM") {
      t.baselines.slm_accuracy = acc;
      t.slm_cost = cost;
      have_slm = true;
    } else {
      if (cells.size() < 5) throw SchemaError("strategy row needs cost_reduction and ace: " + line);
      t.rows.push_back({cells[0], cost, acc, number(cells[3], "cost_reduction"), number(cells[4], "ace")});
    }
  }
  if (!have_llm || !have_slm) throw SchemaError("paper table needs LLM and SLM baseline rows");
  return t;
}

}  // namespace shepherd::metrics
