#include "ltd/bench/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ltd/util/text_io.hpp"

namespace ltd {

AppConfig::AppConfig() = default;

void AppConfig::validate() const {
  corpus.validate();
  env.validate();
  train.validate();
  baselines.validate();
  if (iterate_rounds < 0) throw ConfigError("train.iterate_rounds must be >= 0");
  if (eval.split != "val" && eval.split != "test") {
    throw ConfigError("eval.split must be val or test");
  }
  if (ablation.reward_size_steps == 0 || ablation.obs_depth_steps == 0) {
    throw ConfigError("ablation budgets must be positive");
  }
}

namespace {

struct Field {
  std::string section;
  std::string key;
  std::function<std::string()> get;
  std::function<void(std::string_view)> set;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_int(std::string_view s) {
  const std::string t = trim(s);
  T v{};
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("not an integer: '" + t + "'");
  }
  return v;
}

double parse_real(std::string_view s) {
  try {
    return parse_double(trim(s));
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + trim(s) + "'");
  }
}

bool parse_bool(std::string_view s) {
  const std::string t = trim(s);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  throw ConfigError("not a boolean: '" + t + "'");
}

template <typename T>
std::vector<T> parse_list(std::string_view s) {
  std::vector<T> out;
  std::string item;
  std::istringstream is{std::string(s)};
  while (std::getline(is, item, ',')) out.push_back(parse_int<T>(item));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

template <typename Enum>
Enum parse_enum(std::string_view s, Enum (*parse)(std::string_view)) {
  try {
    return parse(trim(s));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

class Binder {
 public:
  explicit Binder(std::vector<Field>& out) : out_(out) {}
  void section(std::string s) { section_ = std::move(s); }

  void count(const std::string& key, std::size_t& x) {
    add(key, [&x] { return std::to_string(x); },
        [&x](std::string_view v) { x = parse_int<std::size_t>(v); });
  }
  void integer(const std::string& key, int& x) {
    add(key, [&x] { return std::to_string(x); }, [&x](std::string_view v) { x = parse_int<int>(v); });
  }
  void real(const std::string& key, double& x) {
    add(key, [&x] { return format_double(x); }, [&x](std::string_view v) { x = parse_real(v); });
  }
  void flag(const std::string& key, bool& x) {
    add(key, [&x] { return std::string(x ? "true" : "false"); },
        [&x](std::string_view v) { x = parse_bool(v); });
  }
  void text(const std::string& key, std::string& x) {
    add(key, [&x] { return x; }, [&x](std::string_view v) { x = trim(v); });
  }
  void int_list(const std::string& key, std::vector<int>& x) {
    add(key, [&x] { return join(x); }, [&x](std::string_view v) { x = parse_list<int>(v); });
  }
  void count_list(const std::string& key, std::vector<std::size_t>& x) {
    add(key, [&x] { return join(x); },
        [&x](std::string_view v) { x = parse_list<std::size_t>(v); });
  }
  void ppo(const std::string& prefix, PpoHyperparams& hp) {
    real(prefix + "clip", hp.clip);
    real(prefix + "gamma", hp.gamma);
    real(prefix + "gae_lambda", hp.gae_lambda);
    count(prefix + "epochs", hp.epochs);
    count(prefix + "rollout_steps", hp.rollout_steps);
    count(prefix + "minibatch", hp.minibatch);
    real(prefix + "entropy_coef", hp.entropy_coef);
    real(prefix + "value_coef", hp.value_coef);
    real(prefix + "max_grad_norm", hp.max_grad_norm);
    real(prefix + "lr_peak", hp.lr_peak);
    real(prefix + "warmup_frac", hp.warmup_frac);
    count(prefix + "steps", hp.total_steps);
    flag(prefix + "continuing", hp.continuing);
    flag(prefix + "center_rewards", hp.center_rewards);
  }

  void add(const std::string& key, std::function<std::string()> get,
           std::function<void(std::string_view)> set) {
    out_.push_back({section_, key, std::move(get), std::move(set)});
  }

 private:
  std::vector<Field>& out_;
  std::string section_;
};

std::vector<Field> fields(AppConfig& c) {
  std::vector<Field> f;
  Binder b(f);
  b.section("corpus");
  b.text("path", c.corpus.path);
  b.count("vocab_size", c.corpus.vocab_size);
  b.integer("target_order", c.corpus.target_order);
  b.real("alpha", c.corpus.alpha);
  b.integer("draft_order_delta", c.corpus.draft.order_delta);
  b.real("draft_extra_smoothing", c.corpus.draft.extra_smoothing);
  b.real("draft_temperature", c.corpus.draft.temperature);
  b.count("split_mod", c.corpus.split_mod);
  b.count("val_slot", c.corpus.val_slot);
  b.count("test_slot", c.corpus.test_slot);
  b.count("first_offset", c.corpus.first_offset);
  b.count("stride", c.corpus.stride);
  b.count("min_tail", c.corpus.min_tail);
  b.count("max_prompt_len", c.corpus.max_prompt_len);
  b.count("max_train_prompts", c.corpus.max_train_prompts);
  b.count("max_val_prompts", c.corpus.max_val_prompts);
  b.count("max_test_prompts", c.corpus.max_test_prompts);

  b.section("draft");
  b.count("beam_width", c.env.draft.beam_width);
  b.integer("max_depth", c.env.draft.max_depth);
  b.real("temperature", c.env.draft.temperature);

  b.section("cost_model");
  b.real("draft_fixed", c.env.cost.draft_fixed);
  b.real("draft_per_pass", c.env.cost.draft_per_pass);
  b.real("verify_base", c.env.cost.verify_base);
  b.real("verify_per_chunk", c.env.cost.verify_per_chunk);
  b.count("chunk", c.env.cost.chunk);
  b.real("ctx_coeff", c.env.cost.ctx_coeff);
  b.real("ctx_ref", c.env.cost.ctx_ref);
  b.real("policy_overhead", c.env.cost.policy_overhead);

  b.section("env");
  b.count("max_new_tokens", c.env.max_new_tokens);
  b.count("v_min", c.env.v_min);
  b.count("v_max", c.env.v_max);
  b.count("v_steps", c.env.v_steps);
  b.real("reward_scale", c.env.reward_scale);
  b.count("l_cap", c.env.l_cap);
  b.add("mode", [&c] { return std::string(to_string(c.env.mode)); },
        [&c](std::string_view v) { c.env.mode = parse_enum(v, parse_decode_mode); });
  b.real("temperature", c.env.temperature);
  b.add("reward_mode", [&c] { return std::string(to_string(c.env.reward_mode)); },
        [&c](std::string_view v) { c.env.reward_mode = parse_enum(v, parse_reward_mode); });
  b.add("obs", [&c] { return to_string(c.env.obs); },
        [&c](std::string_view v) { c.env.obs = parse_enum(v, parse_obs_features); });
  b.flag("wall_clock", c.env.wall_clock);

  b.section("ppo");
  b.ppo("size_", c.train.size_hp);
  b.ppo("depth_", c.train.depth_hp);

  b.section("train");
  b.integer("iterate_rounds", c.iterate_rounds);
  b.count("iter_size_steps", c.train.iter_size_steps);
  b.count("iter_depth_steps", c.train.iter_depth_steps);
  b.integer("init_depth_min", c.train.init_depth_min);
  b.integer("init_depth_max", c.train.init_depth_max);
  b.count("init_v", c.train.init_v);
  b.integer("val_depth", c.train.val_depth);
  b.count("val_v", c.train.val_v);
  b.count_list("size_policy_hidden", c.train.arch.size_policy_hidden);
  b.count_list("size_value_hidden", c.train.arch.size_value_hidden);
  b.count_list("depth_policy_hidden", c.train.arch.depth_policy_hidden);
  b.count_list("depth_value_hidden", c.train.arch.depth_value_hidden);

  b.section("baselines");
  b.int_list("ddd_checkpoints", c.baselines.ddd_checkpoints);
  b.real("ddd_threshold", c.baselines.ddd_threshold);
  b.real("svip_entropy_factor", c.baselines.svip_entropy_factor);
  b.real("svip_min_entropy", c.baselines.svip_min_entropy);
  b.integer("gt_gamma_min", c.baselines.gt_gamma_min);
  b.integer("gt_gamma_max", c.baselines.gt_gamma_max);
  b.real("gt_eta", c.baselines.gt_eta);
  b.integer("default_depth", c.baselines.default_depth);
  b.count("default_v", c.baselines.default_v);
  b.integer("grid_depth_min", c.baselines.grid_depth_min);
  b.integer("grid_depth_max", c.baselines.grid_depth_max);
  b.count("grid_v_min", c.baselines.grid_v_min);
  b.count("grid_v_max", c.baselines.grid_v_max);
  b.count("grid_v_step", c.baselines.grid_v_step);

  b.section("eval");
  b.text("split", c.eval.split);
  b.count("max_prompts", c.eval.max_prompts);

  b.section("ablation");
  b.count("reward_size_steps", c.ablation.reward_size_steps);
  b.count("obs_depth_steps", c.ablation.obs_depth_steps);
  return f;
}

}  // namespace

void set_value(AppConfig& cfg, std::string_view section, std::string_view key,
               std::string_view value) {
  for (Field& f : fields(cfg)) {
    if (f.section == section && f.key == key) {
      try {
        f.set(value);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string(section) + "." + std::string(key) + ": " + e.what());
      }
      return;
    }
  }
  throw ConfigError("unknown config key " + std::string(section) + "." + std::string(key));
}

void apply_override(AppConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq) {
    throw ConfigError("override must look like section.key=value: " + std::string(assignment));
  }
  set_value(cfg, trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
            assignment.substr(eq + 1));
}

AppConfig parse_config(std::string_view ini_text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream is{std::string(ini_text)};
  try {
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  AppConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config: key outside a section: " + section);
    for (const auto& [key, node] : body) set_value(cfg, section, key, node.data());
  }
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception&) {
    throw ConfigError("cannot read config " + path.string());
  }
  return parse_config(text);
}

std::string dump_config(const AppConfig& cfg) {
  AppConfig copy = cfg;
  std::string out, section;
  for (const Field& f : fields(copy)) {
    if (f.section != section) {
      if (!section.empty()) out += '\n';
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += f.key + " = " + f.get() + "\n";
  }
  return out;
}

std::string config_hash(const AppConfig& cfg) { return hex64(fnv1a64(dump_config(cfg))); }

}  // namespace ltd
