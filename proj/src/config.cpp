#include "smartfl/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "smartfl/errors.hpp"

namespace smartfl {

using nlohmann::json;

namespace {

// Reads fields out of one JSON object, remembering which keys were consumed
// so leftovers can be reported.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  ~Section() = default;

  bool has(const std::string& key) const { return node_.contains(key); }

  Section child(const std::string& key) {
    used_.insert(key);
    if (!node_.contains(key)) return Section(empty_object(), field(key));
    return Section(node_.at(key), field(key));
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    used_.insert(key);
    if (!node_.contains(key)) return;
    const json& v = node_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(field(key) + ": expected true/false");
      out = v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(field(key) + ": expected a string");
      out = v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(field(key) + ": expected a number");
      out = v.get<T>();
      if (!std::isfinite(out)) throw ConfigError(field(key) + ": must be finite");
    } else {
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0)) {
        throw ConfigError(field(key) + ": expected a non-negative integer");
      }
      out = v.get<T>();
    }
  }

  void finish() const {
    for (const auto& [key, _] : node_.items()) {
      if (!used_.count(key)) throw ConfigError(field(key) + ": unknown field");
    }
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }
  static const json& empty_object() {
    static const json kEmpty = json::object();
    return kEmpty;
  }

  const json& node_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename Enum>
Enum pick(const std::string& field, const std::string& value,
          std::initializer_list<std::pair<const char*, Enum>> options) {
  std::string names;
  for (const auto& [name, e] : options) {
    if (value == name) return e;
    names += names.empty() ? name : std::string(", ") + name;
  }
  throw ConfigError(field + ": '" + value + "' is not one of {" + names + "}");
}

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

std::size_t ExperimentConfig::clients_per_round() const {
  return static_cast<std::size_t>(
      std::ceil(participation * static_cast<double>(clients) - 1e-9));
}

void ExperimentConfig::validate() const {
  if (clients == 0) throw ConfigError("federation.clients must be positive");
  if (!(participation > 0.0 && participation <= 1.0)) {
    throw ConfigError("federation.participation must lie in (0, 1]");
  }
  if (clients_per_round() < 1) throw ConfigError("federation: participation * clients < 1");
  if (!(alpha > 0.0)) throw ConfigError("federation.alpha must be positive");
  if (eval_every == 0) throw ConfigError("federation.eval_every must be positive");
  if (threads == 0) throw ConfigError("threads must be positive");
  if (model.kind == ModelKind::kMlp && model.hidden_dim == 0) {
    throw ConfigError("model.hidden_dim must be positive for an mlp");
  }
  if (model.kind == ModelKind::kLogistic && model.hidden_dim != 0) {
    throw ConfigError("model.hidden_dim must be 0 for logistic regression");
  }
  local.validate();
  aggregation.validate();
  if (!(attack.rate >= 0.0 && attack.rate < 1.0)) throw ConfigError("attack.rate must lie in [0, 1)");
  if (!(attack.scale >= 0.0 && std::isfinite(attack.scale))) {
    throw ConfigError("attack.scale must be finite and non-negative");
  }
  if (needs_proxy(aggregation.strategy) && proxy.imbalance.size == 0) {
    throw ConfigError("strategy " + to_string(aggregation.strategy) + " needs proxy.size > 0");
  }
  if (needs_labeled_proxy(aggregation.strategy) && !proxy.labeled) {
    throw ConfigError("strategy " + to_string(aggregation.strategy) +
                      " needs a labeled proxy (proxy.labeled = true)");
  }
  if (proxy.imbalance.size > 0 && !(proxy.imbalance.degree >= 1.0)) {
    throw ConfigError("proxy.degree must be >= 1");
  }
  if (data.source == DataSourceKind::kSynthetic) {
    const auto& s = data.synthetic;
    if (s.num_classes < 2) throw ConfigError("data.num_classes must be >= 2");
    if (s.input_dim == 0 || s.train_per_class == 0 || s.test_per_class == 0) {
      throw ConfigError("data: input_dim, train_per_class and test_per_class must be positive");
    }
    if (!(s.separation >= 0.0)) throw ConfigError("data.separation must be >= 0");
  } else if (data.idx.train_images.empty() || data.idx.train_labels.empty() ||
             data.idx.test_images.empty() || data.idx.test_labels.empty()) {
    throw ConfigError("data: idx source needs train_images, train_labels, test_images, test_labels");
  }
}

ExperimentConfig config_from_json(const json& doc) {
  ExperimentConfig cfg;
  Section root(doc, "");

  {
    Section m = root.child("model");
    std::string kind = "logistic";
    std::string act = "relu";
    m.read("kind", kind);
    m.read("hidden_dim", cfg.model.hidden_dim);
    m.read("activation", act);
    m.finish();
    cfg.model.kind = pick<ModelKind>(m.field("kind"), kind,
                          {{"logistic", ModelKind::kLogistic}, {"mlp", ModelKind::kMlp}});
    cfg.model.activation = pick<Activation>(m.field("activation"), act,
                                {{"relu", Activation::kRelu}, {"tanh", Activation::kTanh}});
  }
  {
    Section d = root.child("data");
    std::string source = "synthetic";
    d.read("source", source);
    cfg.data.source = pick<DataSourceKind>(d.field("source"), source,
                           {{"synthetic", DataSourceKind::kSynthetic}, {"idx", DataSourceKind::kIdx}});
    if (cfg.data.source == DataSourceKind::kSynthetic) {
      auto& s = cfg.data.synthetic;
      d.read("num_classes", s.num_classes);
      d.read("input_dim", s.input_dim);
      d.read("train_per_class", s.train_per_class);
      d.read("test_per_class", s.test_per_class);
      d.read("separation", s.separation);
    } else {
      auto& i = cfg.data.idx;
      d.read("train_images", i.train_images);
      d.read("train_labels", i.train_labels);
      d.read("test_images", i.test_images);
      d.read("test_labels", i.test_labels);
      d.read("train_limit", i.train_limit);
      d.read("test_limit", i.test_limit);
    }
    d.finish();
  }
  {
    Section f = root.child("federation");
    f.read("clients", cfg.clients);
    f.read("participation", cfg.participation);
    f.read("alpha", cfg.alpha);
    f.read("rounds", cfg.rounds);
    f.read("eval_every", cfg.eval_every);
    f.finish();
  }
  {
    Section p = root.child("proxy");
    p.read("size", cfg.proxy.imbalance.size);
    p.read("degree", cfg.proxy.imbalance.degree);
    p.read("labeled", cfg.proxy.labeled);
    p.finish();
  }
  {
    Section l = root.child("local");
    std::string opt = "adam";
    l.read("epochs", cfg.local.epochs);
    l.read("batch_size", cfg.local.batch_size);
    l.read("optimizer", opt);
    l.read("lr", cfg.local.optimizer.lr);
    l.read("adam_beta1", cfg.local.optimizer.beta1);
    l.read("adam_beta2", cfg.local.optimizer.beta2);
    l.read("adam_eps", cfg.local.optimizer.eps);
    l.read("prox_mu", cfg.local.prox_mu);
    l.finish();
    cfg.local.optimizer.kind =
        pick<OptimizerKind>(l.field("optimizer"), opt, {{"adam", OptimizerKind::kAdam}, {"sgd", OptimizerKind::kSgd}});
  }
  {
    Section a = root.child("aggregation");
    std::string strategy = "fedavg";
    std::string opt = "adam";
    a.read("strategy", strategy);
    a.read("server_epochs", cfg.aggregation.server_epochs);
    a.read("server_lr", cfg.aggregation.server_lr);
    a.read("server_batch", cfg.aggregation.server_batch);
    a.read("server_optimizer", opt);
    a.read("kl_temperature", cfg.aggregation.kl_temperature);
    a.read("finetune_epochs", cfg.aggregation.finetune_epochs);
    a.read("finetune_lr", cfg.aggregation.finetune_lr);
    a.read("trim_beta", cfg.aggregation.trim_beta);
    a.read("krum_f", cfg.aggregation.krum_f);
    a.finish();
    try {
      cfg.aggregation.strategy = strategy_from_string(strategy);
    } catch (const ConfigError& e) {
      throw ConfigError(a.field("strategy") + ": " + e.what());
    }
    cfg.aggregation.server_optimizer = pick<OptimizerKind>(a.field("server_optimizer"), opt,
                                            {{"adam", OptimizerKind::kAdam}, {"sgd", OptimizerKind::kSgd}});
  }
  {
    Section at = root.child("attack");
    std::string kind = "none";
    at.read("kind", kind);
    at.read("rate", cfg.attack.rate);
    at.read("scale", cfg.attack.scale);
    at.finish();
    cfg.attack.kind = pick<AttackKind>(at.field("kind"), kind,
                           {{"none", AttackKind::kNone},
                            {"label_flip", AttackKind::kLabelFlip},
                            {"omniscient", AttackKind::kOmniscient}});
  }
  std::string format = "csv";
  root.read("seed", cfg.seed);
  root.read("output", cfg.output);
  root.read("format", format);
  root.read("threads", cfg.threads);
  root.finish();
  cfg.format = pick<MetricsFormat>("format", format, {{"csv", MetricsFormat::kCsv}, {"json", MetricsFormat::kJson}});

  cfg.validate();
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json doc;
  doc["model"] = {{"kind", to_string(cfg.model.kind)},
                  {"hidden_dim", cfg.model.hidden_dim},
                  {"activation", to_string(cfg.model.activation)}};
  if (cfg.data.source == DataSourceKind::kSynthetic) {
    const auto& s = cfg.data.synthetic;
    doc["data"] = {{"source", "synthetic"},
                   {"num_classes", s.num_classes},
                   {"input_dim", s.input_dim},
                   {"train_per_class", s.train_per_class},
                   {"test_per_class", s.test_per_class},
                   {"separation", s.separation}};
  } else {
    const auto& i = cfg.data.idx;
    doc["data"] = {{"source", "idx"},
                   {"train_images", i.train_images},
                   {"train_labels", i.train_labels},
                   {"test_images", i.test_images},
                   {"test_labels", i.test_labels},
                   {"train_limit", i.train_limit},
                   {"test_limit", i.test_limit}};
  }
  doc["federation"] = {{"clients", cfg.clients},
                       {"participation", cfg.participation},
                       {"alpha", cfg.alpha},
                       {"rounds", cfg.rounds},
                       {"eval_every", cfg.eval_every}};
  doc["proxy"] = {{"size", cfg.proxy.imbalance.size},
                  {"degree", cfg.proxy.imbalance.degree},
                  {"labeled", cfg.proxy.labeled}};
  doc["local"] = {{"epochs", cfg.local.epochs},
                  {"batch_size", cfg.local.batch_size},
                  {"optimizer", cfg.local.optimizer.kind == OptimizerKind::kAdam ? "adam" : "sgd"},
                  {"lr", cfg.local.optimizer.lr},
                  {"adam_beta1", cfg.local.optimizer.beta1},
                  {"adam_beta2", cfg.local.optimizer.beta2},
                  {"adam_eps", cfg.local.optimizer.eps},
                  {"prox_mu", cfg.local.prox_mu}};
  const auto& a = cfg.aggregation;
  doc["aggregation"] = {{"strategy", to_string(a.strategy)},
                        {"server_epochs", a.server_epochs},
                        {"server_lr", a.server_lr},
                        {"server_batch", a.server_batch},
                        {"server_optimizer", a.server_optimizer == OptimizerKind::kAdam ? "adam" : "sgd"},
                        {"kl_temperature", a.kl_temperature},
                        {"finetune_epochs", a.finetune_epochs},
                        {"finetune_lr", a.finetune_lr},
                        {"trim_beta", a.trim_beta},
                        {"krum_f", a.krum_f}};
  doc["attack"] = {{"kind", to_string(cfg.attack.kind)}, {"rate", cfg.attack.rate},
                    {"scale", cfg.attack.scale}};
  doc["seed"] = cfg.seed;
  doc["output"] = cfg.output;
  doc["format"] = cfg.format == MetricsFormat::kCsv ? "csv" : "json";
  doc["threads"] = cfg.threads;
  return doc;
}

json parse_config_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": syntax error at " + line_col(text, e.byte > 0 ? e.byte - 1 : 0) +
                      ": " + e.what());
  }
}

json read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  const json doc = read_config_file(path);
  try {
    return config_from_json(doc);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void apply_override(json& doc, const std::string& dotted_key, const std::string& value) {
  if (dotted_key.empty()) throw ConfigError("override: empty key");
  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = dotted_key.find('.', start);
    const std::string part = dotted_key.substr(start, dot - start);
    if (part.empty()) throw ConfigError("override: malformed key '" + dotted_key + "'");
    if (!node->is_object()) throw ConfigError("override: '" + dotted_key + "' is not inside an object");
    if (dot == std::string::npos) {
      json parsed;
      try {
        parsed = json::parse(value);
      } catch (const json::parse_error&) {
        parsed = value;
      }
      (*node)[part] = parsed;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

}  // namespace smartfl
