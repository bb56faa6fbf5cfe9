// SPDX-License-Identifier: Apache-2.0

#include "ggrpo/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "ggrpo/metrics_io.hpp"

namespace ggrpo {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// A '#' at the start of the line or preceded by whitespace begins a comment.
std::string strip_comment(const std::string& line) {
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '#' &&
        (i == 0 || std::isspace(static_cast<unsigned char>(line[i - 1]))))
      return line.substr(0, i);
  }
  return line;
}

double parse_double(const std::string& value, int line, const std::string& key) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw ConfigError(line, "key '" + key + "': expected a number, got '" + value + "'");
  }
  if (pos != value.size())
    throw ConfigError(line, "key '" + key + "': trailing characters in '" + value + "'");
  return v;
}

long long parse_int(const std::string& value, int line, const std::string& key) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &pos);
  } catch (const std::exception&) {
    throw ConfigError(line, "key '" + key + "': expected an integer, got '" + value + "'");
  }
  if (pos != value.size())
    throw ConfigError(line, "key '" + key + "': trailing characters in '" + value + "'");
  return v;
}

bool parse_bool(const std::string& value, int line, const std::string& key) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ConfigError(line, "key '" + key + "': expected true or false, got '" + value + "'");
}

std::vector<std::string> split_csv(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(value);
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::vector<int> parse_int_list(const std::string& value, int line, const std::string& key) {
  std::vector<int> out;
  for (const std::string& item : split_csv(value))
    out.push_back(int(parse_int(item, line, key)));
  return out;
}

// Per-task keys that default from the trainer section are staged and
// materialized after the whole file is read.
struct TaskDraft {
  TaskSpec spec;
  std::optional<LengthEnvelope> envelope;
  std::optional<std::pair<double, double>> entropy_band;
  bool has_target = false;
  int line = 0;
};

struct ParseState {
  ExperimentConfig config;
  std::vector<TaskDraft> drafts;
  double lambda_ent = 0.01;
  bool has_output_dir = false;
  enum class Scope { Top, Trainer, Task } scope = Scope::Top;
  std::set<std::string> seen_keys;  // reset at each section header
};

void apply_top_key(ParseState& st, const std::string& key, const std::string& value,
                   int line) {
  if (key == "mode") {
    if (value == "train")
      st.config.mode = ExperimentConfig::Mode::Train;
    else if (value == "compare")
      st.config.mode = ExperimentConfig::Mode::Compare;
    else
      throw ConfigError(line, "key 'mode': expected train or compare, got '" + value + "'");
  } else if (key == "output_dir") {
    st.config.output_dir = value;
    st.has_output_dir = true;
  } else if (key == "emit_plots_data") {
    st.config.emit_plots_data = parse_bool(value, line, key);
  } else {
    throw ConfigError(line, "unknown key '" + key + "' at top level");
  }
}

void apply_trainer_key(ParseState& st, const std::string& key, const std::string& value,
                       int line) {
  TrainerConfig& t = st.config.trainer;
  if (key == "group_size") t.group_size = int(parse_int(value, line, key));
  else if (key == "batch_groups") t.batch_groups = int(parse_int(value, line, key));
  else if (key == "steps") t.steps = int(parse_int(value, line, key));
  else if (key == "learning_rate") t.learning_rate = parse_double(value, line, key);
  else if (key == "clip_epsilon") t.clip_epsilon = parse_double(value, line, key);
  else if (key == "ema_alpha") t.ema_alpha = parse_double(value, line, key);
  else if (key == "stability_epsilon") t.stability_epsilon = parse_double(value, line, key);
  else if (key == "estimator") {
    try {
      t.estimator = parse_estimator(value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(line, e.what());
    }
  } else if (key == "dynamic_filter") t.dynamic_filter = parse_bool(value, line, key);
  else if (key == "seed") t.seed = std::uint64_t(parse_int(value, line, key));
  else if (key == "max_len") t.max_len = int(parse_int(value, line, key));
  else if (key == "vocab_size") t.vocab_size = int(parse_int(value, line, key));
  else if (key == "context_order") t.context_order = int(parse_int(value, line, key));
  else if (key == "inner_steps") t.inner_steps = int(parse_int(value, line, key));
  else if (key == "pool_per_task") t.pool_per_task = parse_bool(value, line, key);
  else if (key == "init_logit_noise") t.init_logit_noise = parse_double(value, line, key);
  else if (key == "lambda_ent") st.lambda_ent = parse_double(value, line, key);
  else if (key == "accuracy_weight") t.reward_weights.accuracy_w = parse_double(value, line, key);
  else if (key == "length_weight") t.reward_weights.length_w = parse_double(value, line, key);
  else if (key == "format_weight") t.reward_weights.format_w = parse_double(value, line, key);
  else if (key == "structure_weight") t.reward_weights.structure_w = parse_double(value, line, key);
  else throw ConfigError(line, "unknown key '" + key + "' in [trainer]");
}

void apply_task_key(ParseState& st, const std::string& key, const std::string& value,
                    int line) {
  TaskDraft& d = st.drafts.back();
  if (key == "id") d.spec.task_id = value;
  else if (key == "topology") {
    try {
      d.spec.topology = parse_topology(value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(line, e.what());
    }
  } else if (key == "target") {
    d.spec.target = parse_int_list(value, line, key);
    d.has_target = true;
  } else if (key == "reward_scale") d.spec.reward_scale = parse_double(value, line, key);
  else if (key == "outlier_prob") d.spec.outlier_prob = parse_double(value, line, key);
  else if (key == "outlier_magnitude") d.spec.outlier_magnitude = parse_double(value, line, key);
  else if (key == "envelope") {
    const auto vals = parse_int_list(value, line, key);
    if (vals.size() != 4)
      throw ConfigError(line, "key 'envelope': expected l_min,l_low,l_high,l_max");
    d.envelope = LengthEnvelope{vals[0], vals[1], vals[2], vals[3]};
  } else if (key == "entropy_band") {
    const auto parts = split_csv(value);
    if (parts.size() != 2)
      throw ConfigError(line, "key 'entropy_band': expected h_min,h_max");
    d.entropy_band = {parse_double(parts[0], line, key), parse_double(parts[1], line, key)};
  } else {
    throw ConfigError(line, "unknown key '" + key + "' in [task]");
  }
}

ExperimentConfig finish(ParseState st) {
  if (st.drafts.empty())
    throw ConfigError(0, "config defines no [task] section; at least one task is required");

  const TrainerConfig& t = st.config.trainer;
  for (TaskDraft& d : st.drafts) {
    if (d.spec.task_id.empty())
      throw ConfigError(d.line, "[task] section is missing the 'id' key");
    if (!d.has_target) d.spec.target = {1};
    if (d.envelope) {
      d.spec.envelope = *d.envelope;
    } else {
      // Plateau scaled to the generation cap, mirroring the configured-tasks
      // shape at desk scale.
      d.spec.envelope = LengthEnvelope{1, 2, std::max(3, t.max_len - 2), t.max_len + 2};
    }
    d.spec.entropy_bounds.lambda_ent = st.lambda_ent;
    if (d.entropy_band) {
      d.spec.entropy_bounds.h_min = d.entropy_band->first;
      d.spec.entropy_bounds.h_max = d.entropy_band->second;
    }
    st.config.tasks.push_back(std::move(d.spec));
  }

  if (!st.has_output_dir) {
    if (const char* env = std::getenv("GGRPO_OUTPUT_DIR"))
      st.config.output_dir = env;
    else
      st.config.output_dir = "ggrpo_out";
  }

  try {
    validate(st.config.trainer, st.config.tasks);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, e.what());
  }
  return std::move(st.config);
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ParseState st;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(line_no, "malformed section header '" + line + "'");
      const std::string section = trim(line.substr(1, line.size() - 2));
      if (section == "trainer") {
        st.scope = ParseState::Scope::Trainer;
      } else if (section == "task") {
        st.scope = ParseState::Scope::Task;
        st.drafts.push_back(TaskDraft{});
        st.drafts.back().line = line_no;
      } else {
        throw ConfigError(line_no, "unknown section [" + section + "]");
      }
      st.seen_keys.clear();
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(line_no, "expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(line_no, "empty key");
    if (value.empty()) throw ConfigError(line_no, "key '" + key + "' has no value");
    if (!st.seen_keys.insert(key).second)
      throw ConfigError(line_no, "duplicate key '" + key + "' in this section");

    switch (st.scope) {
      case ParseState::Scope::Top:
        apply_top_key(st, key, value, line_no);
        break;
      case ParseState::Scope::Trainer:
        apply_trainer_key(st, key, value, line_no);
        break;
      case ParseState::Scope::Task:
        apply_task_key(st, key, value, line_no);
        break;
    }
  }
  return finish(std::move(st));
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open config file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

void write_effective_config(std::ostream& out, const ExperimentConfig& config) {
  const TrainerConfig& t = config.trainer;
  out << "mode = " << (config.mode == ExperimentConfig::Mode::Train ? "train" : "compare")
      << "\n";
  out << "output_dir = " << config.output_dir.string() << "\n";
  out << "emit_plots_data = " << (config.emit_plots_data ? "true" : "false") << "\n";
  out << "\n[trainer]\n";
  out << "group_size = " << t.group_size << "\n";
  out << "batch_groups = " << t.batch_groups << "\n";
  out << "steps = " << t.steps << "\n";
  out << "learning_rate = " << format_double(t.learning_rate) << "\n";
  out << "clip_epsilon = " << format_double(t.clip_epsilon) << "\n";
  out << "ema_alpha = " << format_double(t.ema_alpha) << "\n";
  out << "stability_epsilon = " << format_double(t.stability_epsilon) << "\n";
  out << "estimator = " << estimator_name(t.estimator) << "\n";
  out << "dynamic_filter = " << (t.dynamic_filter ? "true" : "false") << "\n";
  out << "seed = " << t.seed << "\n";
  out << "max_len = " << t.max_len << "\n";
  out << "vocab_size = " << t.vocab_size << "\n";
  out << "context_order = " << t.context_order << "\n";
  out << "inner_steps = " << t.inner_steps << "\n";
  out << "pool_per_task = " << (t.pool_per_task ? "true" : "false") << "\n";
  out << "init_logit_noise = " << format_double(t.init_logit_noise) << "\n";
  // lambda_ent is global; every task carries the same weight by construction.
  out << "lambda_ent = "
      << format_double(config.tasks.empty() ? 0.01
                                            : config.tasks.front().entropy_bounds.lambda_ent)
      << "\n";
  out << "accuracy_weight = " << format_double(t.reward_weights.accuracy_w) << "\n";
  out << "length_weight = " << format_double(t.reward_weights.length_w) << "\n";
  out << "format_weight = " << format_double(t.reward_weights.format_w) << "\n";
  out << "structure_weight = " << format_double(t.reward_weights.structure_w) << "\n";
  for (const TaskSpec& task : config.tasks) {
    out << "\n[task]\n";
    out << "id = " << task.task_id << "\n";
    out << "topology = " << topology_name(task.topology) << "\n";
    out << "target = ";
    for (std::size_t i = 0; i < task.target.size(); ++i)
      out << (i ? "," : "") << task.target[i];
    out << "\n";
    out << "reward_scale = " << format_double(task.reward_scale) << "\n";
    out << "outlier_prob = " << format_double(task.outlier_prob) << "\n";
    out << "outlier_magnitude = " << format_double(task.outlier_magnitude) << "\n";
    out << "envelope = " << task.envelope.l_min << "," << task.envelope.l_low << ","
        << task.envelope.l_high << "," << task.envelope.l_max << "\n";
    out << "entropy_band = " << format_double(task.entropy_bounds.h_min) << ","
        << format_double(task.entropy_bounds.h_max) << "\n";
  }
}

}  // namespace ggrpo
