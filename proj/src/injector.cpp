// Copyright 2026 The ctk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ctk/injector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "ctk/random.hpp"

namespace ctk {
namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view name, const Enum (&values)[N], const char* what) {
  for (Enum v : values) {
    if (to_string(v) == name) return v;
  }
  throw Error(std::string("unknown ") + what + " '" + std::string(name) + "'");
}

const ContaminationMode kModes[] = {ContaminationMode::full_prompted, ContaminationMode::source_only,
                                    ContaminationMode::target_only, ContaminationMode::split_pair,
                                    ContaminationMode::batched_pair};
const Temporal kTemporals[] = {Temporal::early, Temporal::middle, Temporal::late, Temporal::uniform};
const Part kParts[] = {Part::whole, Part::source_half, Part::target_half};

std::uint64_t ceil_frac(double frac, std::uint64_t total) {
  return static_cast<std::uint64_t>(std::ceil(frac * static_cast<double>(total) - 1e-9));
}

// Window start for the concentrated schedules, in percent of training.
std::uint64_t start_percent(Temporal t) {
  switch (t) {
    case Temporal::early: return 30;
    case Temporal::middle: return 60;
    case Temporal::late: return 90;
    case Temporal::uniform: return 30;
  }
  return 30;
}

std::vector<Part> parts_for(ContaminationMode m) {
  switch (m) {
    case ContaminationMode::full_prompted: return {Part::whole};
    case ContaminationMode::source_only: return {Part::source_half};
    case ContaminationMode::target_only: return {Part::target_half};
    case ContaminationMode::split_pair:
    case ContaminationMode::batched_pair: return {Part::source_half, Part::target_half};
  }
  return {Part::whole};
}

std::string slot_str(std::uint64_t step, std::size_t slot) {
  return "(step " + std::to_string(step) + ", slot " + std::to_string(slot) + ")";
}

// Placement units a window offers for `mode` given per-step capacities.
struct Capacity {
  std::uint64_t slots = 0;
  std::uint64_t pairs = 0;  // floor(cap/2) summed, for batched_pair
  std::size_t max_step = 0;
};

bool fits(ContaminationMode mode, const Capacity& c, std::uint64_t units) {
  if (units == 0) return true;
  switch (mode) {
    case ContaminationMode::batched_pair: return c.pairs >= units;
    // One batch of slack guarantees two distinct open steps for every pair
    // drawn by the sequential sampler.
    case ContaminationMode::split_pair: return c.slots >= 2 * units + c.max_step;
    default: return c.slots >= units;
  }
}

}  // namespace

std::string_view to_string(ContaminationMode m) {
  switch (m) {
    case ContaminationMode::full_prompted: return "full_prompted";
    case ContaminationMode::source_only: return "source_only";
    case ContaminationMode::target_only: return "target_only";
    case ContaminationMode::split_pair: return "split_pair";
    case ContaminationMode::batched_pair: return "batched_pair";
  }
  return "full_prompted";
}

std::string_view to_string(Temporal t) {
  switch (t) {
    case Temporal::early: return "early";
    case Temporal::middle: return "middle";
    case Temporal::late: return "late";
    case Temporal::uniform: return "uniform";
  }
  return "late";
}

std::string_view to_string(Part p) {
  switch (p) {
    case Part::whole: return "whole";
    case Part::source_half: return "source_half";
    case Part::target_half: return "target_half";
  }
  return "whole";
}

ContaminationMode parse_mode(std::string_view name) { return parse_enum(name, kModes, "mode"); }
Temporal parse_temporal(std::string_view name) {
  return parse_enum(name, kTemporals, "temporal distribution");
}
Part parse_part(std::string_view name) { return parse_enum(name, kParts, "part"); }

std::size_t mode_arity(ContaminationMode m) { return parts_for(m).size(); }

void ContaminationCondition::validate() const {
  if (copies < 1) throw Error("copies must be >= 1");
}

std::string ContaminationCondition::str() const {
  return std::string(to_string(mode)) + "/" + std::string(to_string(temporal)) + "/" +
         std::to_string(copies);
}

ContaminationCondition ContaminationCondition::parse(const std::string& text) {
  const auto a = text.find('/');
  const auto b = a == std::string::npos ? a : text.find('/', a + 1);
  if (b == std::string::npos) {
    throw Error("malformed condition '" + text + "', expected mode/temporal/copies");
  }
  ContaminationCondition c;
  c.mode = parse_mode(text.substr(0, a));
  c.temporal = parse_temporal(text.substr(a + 1, b - a - 1));
  try {
    std::size_t used = 0;
    const auto copies = text.substr(b + 1);
    c.copies = std::stoul(copies, &used);
    if (used != copies.size()) throw Error("");
  } catch (const std::exception&) {
    throw Error("malformed copies in condition '" + text + "'");
  }
  c.validate();
  return c;
}

void TrainingConfig::validate() const {
  if (total_steps < 1) throw Error("total_steps must be >= 1");
  if (batch_size < 1) throw Error("batch_size must be >= 1");
  if (!(max_replace_frac > 0.0 && max_replace_frac < 1.0)) {
    throw Error("max_replace_frac must be in (0, 1)");
  }
  if (!(window_frac > 0.0 && window_frac <= 1.0)) throw Error("window_frac must be in (0, 1]");
}

std::size_t TrainingConfig::cap_per_batch() const {
  const double limit = max_replace_frac * static_cast<double>(batch_size);
  // Snap products such as 0.05 * 100 = 5.000000000000001 to the integer.
  const double nearest = std::round(limit);
  const bool integral = std::fabs(limit - nearest) < 1e-9;
  if (strict_cap) {
    return integral ? static_cast<std::size_t>(std::max(0.0, nearest - 1))
                    : static_cast<std::size_t>(std::floor(limit));
  }
  return integral ? static_cast<std::size_t>(nearest) : static_cast<std::size_t>(std::floor(limit));
}

PromptTemplate::PromptTemplate()
    : PromptTemplate({{"ace", "Acehnese"}, {"ar", "Arabic"},    {"cs", "Czech"},
                      {"de", "German"},   {"en", "English"},    {"es", "Spanish"},
                      {"fr", "French"},   {"he", "Hebrew"},     {"is", "Icelandic"},
                      {"ja", "Japanese"}, {"ru", "Russian"},    {"uk", "Ukrainian"},
                      {"wo", "Wolof"},    {"yo", "Yoruba"},     {"zh", "Chinese"}},
                     std::string(kDefaultFormat)) {}

PromptTemplate::PromptTemplate(std::map<std::string, std::string> names, std::string format)
    : names_(std::move(names)), format_(std::move(format)) {}

const std::string& PromptTemplate::name(const std::string& tag) const {
  auto it = names_.find(tag);
  if (it == names_.end()) throw Error("no English name for language tag '" + tag + "'");
  return it->second;
}

std::string PromptTemplate::render_full(const TestExample& example) const {
  const std::map<std::string_view, std::string_view> fields = {
      {"{src_name}", name(example.lang_pair.source)},
      {"{tgt_name}", name(example.lang_pair.target)},
      {"{source}", example.source_text},
      {"{target}", example.target_text}};
  std::string out;
  std::size_t i = 0;
  while (i < format_.size()) {
    bool replaced = false;
    if (format_[i] == '{') {
      for (const auto& [key, value] : fields) {
        if (format_.compare(i, key.size(), key) == 0) {
          out += value;
          i += key.size();
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out += format_[i++];
  }
  return out;
}

Tokenizer load_tokenization_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  auto table = std::make_shared<std::unordered_map<std::string, TokenSequence>>();
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      (*table)[j.at("text").get<std::string>()] = j.at("tokens").get<TokenSequence>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string(), n, "<record>", e.what());
    }
  }
  return [table](std::string_view text) -> std::optional<TokenSequence> {
    auto it = table->find(std::string(text));
    if (it == table->end()) return std::nullopt;
    return it->second;
  };
}

std::vector<RenderedDocument> render(const TestExample& example, ContaminationMode mode,
                                     const PromptTemplate& tmpl, const Tokenizer& tokenizer) {
  std::vector<RenderedDocument> out;
  for (Part part : parts_for(mode)) {
    RenderedDocument doc;
    doc.part = part;
    switch (part) {
      case Part::whole:
        doc.text = tmpl.render_full(example);
        doc.lang = example.lang_pair.str();
        if (tokenizer) {
          if (auto t = tokenizer(doc.text)) doc.tokens = std::move(*t);
        }
        break;
      case Part::source_half:
        doc.text = example.source_text;
        doc.tokens = example.source_tokens;
        doc.lang = example.lang_pair.source;
        break;
      case Part::target_half:
        doc.text = example.target_text;
        doc.tokens = example.target_tokens;
        doc.lang = example.lang_pair.target;
        break;
    }
    out.push_back(std::move(doc));
  }
  return out;
}

WindowBounds nominal_window(Temporal t, const TrainingConfig& config) {
  const std::uint64_t total = config.total_steps;
  if (t == Temporal::uniform) {
    const std::uint64_t lo = (3 * total + 9) / 10;
    const std::uint64_t hi = 9 * total / 10;
    return lo > hi ? WindowBounds{lo, lo} : WindowBounds{lo, hi + 1};
  }
  const std::uint64_t start = total * start_percent(t) / 100;
  const std::uint64_t width = std::max<std::uint64_t>(1, ceil_frac(config.window_frac, total));
  return WindowBounds{start, std::min(total, start + width)};
}

InjectionSchedule plan_schedule(const std::vector<TestExample>& examples,
                                const ContaminationCondition& condition,
                                const TrainingConfig& config, const PlanOptions& options) {
  condition.validate();
  config.validate();
  const std::size_t cap = config.cap_per_batch();
  const std::uint64_t total = config.total_steps;
  const std::size_t batch = config.batch_size;

  if (options.stream) {
    if (options.stream->batch_size != batch || options.stream->steps.size() != total) {
      throw Error("stream is " + std::to_string(options.stream->steps.size()) + " x " +
                  std::to_string(options.stream->batch_size) + " but the plan is for " +
                  std::to_string(total) + " x " + std::to_string(batch));
    }
  }
  auto eligible_slots = [&](std::uint64_t step) {
    std::vector<std::size_t> slots;
    if (options.stream) {
      const auto& b = options.stream->steps[step];
      for (std::size_t k = 0; k < b.size(); ++k) {
        if (b[k].category == Category::parallel) slots.push_back(k);
      }
    } else {
      slots.resize(batch);
      for (std::size_t k = 0; k < batch; ++k) slots[k] = k;
    }
    return slots;
  };
  auto step_capacity = [&](std::uint64_t step) {
    return options.stream ? std::min(cap, eligible_slots(step).size()) : cap;
  };

  const std::size_t arity = mode_arity(condition.mode);
  const std::uint64_t copies_total = examples.size() * condition.copies;
  const std::uint64_t units =
      condition.mode == ContaminationMode::batched_pair || condition.mode == ContaminationMode::split_pair
          ? copies_total
          : copies_total * arity;

  // Grow concentrated windows until the plan fits; uniform is fixed.
  WindowBounds window = nominal_window(condition.temporal, config);
  Capacity capacity;
  auto add_step = [&](std::uint64_t step) {
    const std::size_t c = step_capacity(step);
    capacity.slots += c;
    capacity.pairs += c / 2;
    capacity.max_step = std::max(capacity.max_step, c);
  };
  for (std::uint64_t s = window.start; s < window.end; ++s) add_step(s);
  if (condition.temporal != Temporal::uniform) {
    while (!fits(condition.mode, capacity, units) && window.end < total) add_step(window.end++);
  }
  if (!fits(condition.mode, capacity, units)) {
    std::ostringstream msg;
    msg << "capacity exceeded: " << condition.str() << " needs " << copies_total * arity
        << " slots";
    if (condition.mode == ContaminationMode::batched_pair) msg << " (" << units << " same-batch pairs)";
    if (condition.mode == ContaminationMode::split_pair) {
      msg << " plus one batch of slack (" << capacity.max_step << ")";
    }
    msg << " but steps [" << window.start << ", " << window.end << ") offer " << capacity.slots
        << " at " << cap << " per batch";
    throw Error(msg.str());
  }

  InjectionSchedule schedule;
  auto& h = schedule.header;
  h.condition = condition;
  h.training = config;
  h.prompt_template = options.prompt.format();
  h.example_count = examples.size();
  h.cap_per_batch = cap;
  h.window_start = window.start;
  h.window_end = window.end;
  h.parallel_slots_only = options.stream != nullptr;

  const std::size_t need = condition.mode == ContaminationMode::batched_pair ? 2 : 1;
  const std::uint64_t width = window.end - window.start;
  std::vector<std::size_t> remaining(width);
  std::vector<std::size_t> position(width, kNone);
  std::vector<std::uint64_t> open;
  for (std::uint64_t i = 0; i < width; ++i) {
    remaining[i] = step_capacity(window.start + i);
    if (remaining[i] >= need) {
      position[i] = open.size();
      open.push_back(i);
    }
  }
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> free_slots;
  CounterRng rng(config.seed);

  auto close_step = [&](std::uint64_t i) {
    const std::size_t p = position[i];
    open[p] = open.back();
    position[open[p]] = p;
    open.pop_back();
    position[i] = kNone;
  };
  auto draw_step = [&]() -> std::uint64_t {
    if (open.empty()) throw Error("internal: no open step while placing contamination");
    return open[rng.below(open.size())];
  };
  auto take_slot = [&](std::uint64_t i) {
    auto [it, fresh] = free_slots.try_emplace(i);
    if (fresh) it->second = eligible_slots(window.start + i);
    auto& slots = it->second;
    const std::size_t pick = rng.below(slots.size());
    const std::size_t slot = slots[pick];
    slots[pick] = slots.back();
    slots.pop_back();
    if (--remaining[i] < need && position[i] != kNone) close_step(i);
    return slot;
  };

  schedule.entries.reserve(copies_total * arity);
  for (const auto& ex : examples) {
    const auto docs = render(ex, condition.mode, options.prompt, options.tokenizer);
    for (std::size_t c = 0; c < condition.copies; ++c) {
      std::vector<std::uint64_t> steps(docs.size());
      steps[0] = draw_step();
      if (condition.mode == ContaminationMode::batched_pair) steps.assign(docs.size(), steps[0]);
      for (std::size_t d = 0; d < docs.size(); ++d) {
        if (condition.mode == ContaminationMode::split_pair && d == 1) {
          std::uint64_t i = draw_step();
          while (i == steps[0]) {
            if (open.size() == 1) throw Error("internal: split pair has no second step");
            i = draw_step();
          }
          steps[1] = i;
        }
        ScheduleEntry e;
        e.step = window.start + steps[d];
        e.slot = take_slot(steps[d]);
        e.example_id = ex.example_id;
        e.copy_index = c;
        e.part = docs[d].part;
        e.lang = docs[d].lang;
        e.text = docs[d].text;
        e.tokens = docs[d].tokens;
        schedule.entries.push_back(std::move(e));
      }
    }
  }
  return schedule;
}

std::size_t parallel_budget(const std::vector<CorpusDocument>& batch) {
  return static_cast<std::size_t>(std::count_if(batch.begin(), batch.end(), [](const auto& d) {
    return d.category == Category::parallel || d.category == Category::contamination;
  }));
}

BatchStream apply(const BatchStream& stream, const InjectionSchedule& schedule,
                  const ApplyOptions& options) {
  stream.validate();
  const auto& t = schedule.header.training;
  if (stream.batch_size != t.batch_size || stream.steps.size() != t.total_steps) {
    throw Error("stream is " + std::to_string(stream.steps.size()) + " x " +
                std::to_string(stream.batch_size) + " but the schedule is for " +
                std::to_string(t.total_steps) + " x " + std::to_string(t.batch_size));
  }
  BatchStream out = stream;
  std::set<std::pair<std::uint64_t, std::size_t>> used;
  for (const auto& e : schedule.entries) {
    if (e.step >= out.steps.size() || e.slot >= out.batch_size) {
      throw Error("schedule entry " + slot_str(e.step, e.slot) + " is outside the stream");
    }
    if (!used.emplace(e.step, e.slot).second) {
      throw Error("schedule collision at " + slot_str(e.step, e.slot));
    }
    auto& doc = out.steps[e.step][e.slot];
    if (options.require_parallel_slots && doc.category != Category::parallel) {
      throw Error("slot " + slot_str(e.step, e.slot) + " holds a " +
                  std::string(to_string(doc.category)) +
                  " document; plan against the stream to target parallel slots");
    }
    doc = CorpusDocument{"contamination/" + e.example_id + "/" + std::to_string(e.copy_index) +
                             "/" + std::string(to_string(e.part)),
                         e.tokens, Category::contamination, e.lang};
  }
  return out;
}

std::size_t VerifyReport::count(std::string_view kind) const {
  return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                [&](const Violation& v) { return v.kind == kind; }));
}

std::string VerifyReport::render() const {
  if (ok()) return "ok, 0 violations\n";
  std::ostringstream out;
  out << violations.size() << " violation(s)\n";
  for (const auto& v : violations) out << "  [" << v.kind << "] " << v.detail << "\n";
  return out.str();
}

VerifyReport verify_schedule(const InjectionSchedule& schedule, const TrainingConfig& config) {
  VerifyReport report;
  auto add = [&](std::string kind, std::string detail) {
    report.violations.push_back(Violation{std::move(kind), std::move(detail)});
  };
  const auto& h = schedule.header;
  const auto& cond = h.condition;

  if (!(h.training == config)) add("config", "schedule header training config differs from the one given");
  if (cond.copies < 1) add("config", "copies < 1");
  if (h.cap_per_batch != config.cap_per_batch()) {
    add("config", "header cap " + std::to_string(h.cap_per_batch) + " != " +
                      std::to_string(config.cap_per_batch()));
  }

  // Window placement relative to the named fractions of training.
  const WindowBounds nominal = nominal_window(cond.temporal, config);
  if (cond.temporal == Temporal::uniform) {
    if (h.window_start != nominal.start || h.window_end != nominal.end) {
      add("window", "uniform range must be [" + std::to_string(nominal.start) + ", " +
                        std::to_string(nominal.end) + ")");
    }
  } else if (h.window_start != nominal.start || h.window_end < nominal.end ||
             h.window_end > config.total_steps) {
    add("window", "header window [" + std::to_string(h.window_start) + ", " +
                      std::to_string(h.window_end) + ") does not start at " +
                      std::to_string(nominal.start) + " with width >= " +
                      std::to_string(nominal.end - nominal.start));
  }

  const std::size_t cap = config.cap_per_batch();
  std::map<std::uint64_t, std::size_t> per_step;
  std::set<std::pair<std::uint64_t, std::size_t>> used;
  std::map<std::pair<std::string, std::size_t>, std::vector<const ScheduleEntry*>> groups;
  for (const auto& e : schedule.entries) {
    if (e.step >= config.total_steps || e.slot >= config.batch_size) {
      add("bounds", "entry " + slot_str(e.step, e.slot) + " outside " +
                        std::to_string(config.total_steps) + " x " + std::to_string(config.batch_size));
    }
    if (!used.emplace(e.step, e.slot).second) add("collision", "duplicate " + slot_str(e.step, e.slot));
    if (e.step < h.window_start || e.step >= h.window_end ||
        (cond.temporal == Temporal::uniform && (e.step < nominal.start || e.step >= nominal.end))) {
      add("window", e.example_id + " copy " + std::to_string(e.copy_index) + " at step " +
                        std::to_string(e.step) + " outside [" + std::to_string(h.window_start) +
                        ", " + std::to_string(h.window_end) + ")");
    }
    ++per_step[e.step];
    if (e.copy_index >= cond.copies) {
      add("count", e.example_id + " copy index " + std::to_string(e.copy_index) + " >= copies");
    }
    groups[{e.example_id, e.copy_index}].push_back(&e);
  }
  for (const auto& [step, n] : per_step) {
    if (n > cap) {
      add("cap", "step " + std::to_string(step) + " has " + std::to_string(n) +
                     " contamination documents, cap is " + std::to_string(cap));
    }
  }

  const std::size_t arity = mode_arity(cond.mode);
  const std::uint64_t expected = static_cast<std::uint64_t>(h.example_count) * cond.copies * arity;
  if (schedule.entries.size() != expected) {
    add("count", std::to_string(schedule.entries.size()) + " entries, expected " +
                     std::to_string(h.example_count) + " x " + std::to_string(cond.copies) +
                     " x " + std::to_string(arity) + " = " + std::to_string(expected));
  }
  std::set<std::string> example_ids;
  const auto parts = parts_for(cond.mode);
  for (const auto& [key, entries] : groups) {
    example_ids.insert(key.first);
    std::vector<Part> got;
    for (const auto* e : entries) got.push_back(e->part);
    std::sort(got.begin(), got.end());
    if (got != parts) {
      add("pairing", key.first + " copy " + std::to_string(key.second) +
                         " does not have exactly the parts of mode " + std::string(to_string(cond.mode)));
      continue;
    }
    if (cond.mode == ContaminationMode::batched_pair && entries[0]->step != entries[1]->step) {
      add("pairing", key.first + " copy " + std::to_string(key.second) +
                         " halves are in different batches");
    }
    if (cond.mode == ContaminationMode::split_pair && entries[0]->step == entries[1]->step) {
      add("pairing", key.first + " copy " + std::to_string(key.second) +
                         " halves share batch " + std::to_string(entries[0]->step));
    }
  }
  if (example_ids.size() != h.example_count) {
    add("count", std::to_string(example_ids.size()) + " distinct examples, header says " +
                     std::to_string(h.example_count));
  }
  return report;
}

nlohmann::json training_to_json(const TrainingConfig& c) {
  return nlohmann::json{{"total_steps", c.total_steps},   {"batch_size", c.batch_size},
                        {"max_replace_frac", c.max_replace_frac},
                        {"window_frac", c.window_frac},   {"strict_cap", c.strict_cap},
                        {"seed", c.seed}};
}

TrainingConfig training_from_json(const nlohmann::json& j) {
  TrainingConfig c;
  c.total_steps = j.at("total_steps").get<std::uint64_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.max_replace_frac = j.at("max_replace_frac").get<double>();
  c.window_frac = j.at("window_frac").get<double>();
  c.strict_cap = j.at("strict_cap").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

std::string serialize_schedule(const InjectionSchedule& schedule) {
  const auto& h = schedule.header;
  nlohmann::json header{
      {"generator_version", h.generator_version},
      {"rng", ScheduleHeader::kRng},
      {"condition",
       {{"mode", to_string(h.condition.mode)},
        {"temporal", to_string(h.condition.temporal)},
        {"copies", h.condition.copies}}},
      {"training", training_to_json(h.training)},
      {"seed", h.training.seed},
      {"prompt_template", h.prompt_template},
      {"example_count", h.example_count},
      {"cap_per_batch", h.cap_per_batch},
      {"window", {{"start", h.window_start}, {"end", h.window_end}}},
      {"branch_step", h.window_start},
      {"parallel_slots_only", h.parallel_slots_only},
      {"entry_count", schedule.entries.size()}};
  std::string out = header.dump() + "\n";
  for (const auto& e : schedule.entries) {
    nlohmann::json j{{"step", e.step},
                     {"slot", e.slot},
                     {"example_id", e.example_id},
                     {"copy_index", e.copy_index},
                     {"part", to_string(e.part)},
                     {"lang", e.lang},
                     {"rendered_text", e.text},
                     {"tokens", e.tokens}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_schedule(const InjectionSchedule& schedule, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << serialize_schedule(schedule);
  if (!out) throw Error("write failed on '" + path.string() + "'");
}

InjectionSchedule read_schedule(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  const std::string file = path.string();
  InjectionSchedule s;
  std::string line;
  std::size_t n = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!have_header) {
        auto& h = s.header;
        h.generator_version = j.at("generator_version").get<std::string>();
        const auto& c = j.at("condition");
        h.condition.mode = parse_mode(c.at("mode").get<std::string>());
        h.condition.temporal = parse_temporal(c.at("temporal").get<std::string>());
        h.condition.copies = c.at("copies").get<std::size_t>();
        h.training = training_from_json(j.at("training"));
        h.prompt_template = j.at("prompt_template").get<std::string>();
        h.example_count = j.at("example_count").get<std::size_t>();
        h.cap_per_batch = j.at("cap_per_batch").get<std::size_t>();
        h.window_start = j.at("window").at("start").get<std::uint64_t>();
        h.window_end = j.at("window").at("end").get<std::uint64_t>();
        h.parallel_slots_only = j.at("parallel_slots_only").get<bool>();
        have_header = true;
        continue;
      }
      ScheduleEntry e;
      e.step = j.at("step").get<std::uint64_t>();
      e.slot = j.at("slot").get<std::size_t>();
      e.example_id = j.at("example_id").get<std::string>();
      e.copy_index = j.at("copy_index").get<std::size_t>();
      e.part = parse_part(j.at("part").get<std::string>());
      e.lang = j.at("lang").get<std::string>();
      e.text = j.at("rendered_text").get<std::string>();
      e.tokens = j.at("tokens").get<TokenSequence>();
      s.entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(file, n, have_header ? "<entry>" : "<header>", e.what());
    } catch (const Error& e) {
      throw FormatError(file, n, have_header ? "<entry>" : "<header>", e.what());
    }
  }
  if (!have_header) throw FormatError(file, n, "<header>", "missing schedule header");
  return s;
}

}  // namespace ctk
