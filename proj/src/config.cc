#include "parsel/config.h"

#include <set>
#include <sstream>

#include "parsel/io_util.h"

namespace parsel {

namespace {

std::string dirname_of(const std::string& path) {
  const auto pos = path.find_last_of('/');
  return pos == std::string::npos ? std::string(".") : path.substr(0, pos);
}

std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty() || path.front() == '/') return path;
  return base + "/" + path;
}

// Pulls typed values out of the kv map, collecting every problem instead of
// stopping at the first one.
class Reader {
 public:
  Reader(const std::map<std::string, std::string>& kv,
         std::vector<std::string>& errors)
      : kv_(kv), errors_(errors) {}

  const std::string* raw(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }

  void get(const std::string& key, std::string& out) {
    if (const std::string* v = raw(key)) out = *v;
  }

  void get(const std::string& key, bool& out) {
    const std::string* v = raw(key);
    if (!v) return;
    if (*v == "true") out = true;
    else if (*v == "false") out = false;
    else fail(key, *v, "expected true or false");
  }

  void get(const std::string& key, int& out, int lo, int hi) {
    const std::string* v = raw(key);
    if (!v) return;
    try {
      size_t pos = 0;
      const long long parsed = std::stoll(*v, &pos);
      if (pos != v->size()) throw std::invalid_argument("trailing characters");
      if (parsed < lo || parsed > hi) {
        fail(key, *v, "must be in [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
        return;
      }
      out = static_cast<int>(parsed);
    } catch (const std::exception&) {
      fail(key, *v, "expected an integer");
    }
  }

  void get(const std::string& key, uint64_t& out) {
    const std::string* v = raw(key);
    if (!v) return;
    try {
      size_t pos = 0;
      const unsigned long long parsed = std::stoull(*v, &pos);
      if (pos != v->size()) throw std::invalid_argument("trailing characters");
      out = parsed;
    } catch (const std::exception&) {
      fail(key, *v, "expected a non-negative integer");
    }
  }

  void get(const std::string& key, double& out, double lo, double hi) {
    const std::string* v = raw(key);
    if (!v) return;
    try {
      size_t pos = 0;
      const double parsed = std::stod(*v, &pos);
      if (pos != v->size()) throw std::invalid_argument("trailing characters");
      if (!(parsed >= lo && parsed <= hi)) {
        fail(key, *v, "must be in [" + format_double(lo) + ", " +
                          format_double(hi) + "]");
        return;
      }
      out = parsed;
    } catch (const std::exception&) {
      fail(key, *v, "expected a number");
    }
  }

  std::vector<std::string> languages(const std::string& key) {
    std::vector<std::string> out;
    const std::string* v = raw(key);
    if (!v) {
      errors_.push_back(key + ": required key is missing");
      return out;
    }
    for (const auto& part : split(*v, ',')) {
      const std::string lang = trim(part);
      if (lang.empty())
        errors_.push_back(key + ": empty language code in '" + *v + "'");
      else
        out.push_back(lang);
    }
    if (out.empty()) errors_.push_back(key + ": needs at least one language");
    return out;
  }

  void check_unknown() {
    for (const auto& [key, value] : kv_) {
      (void)value;
      if (!used_.count(key)) errors_.push_back(key + ": unknown key");
    }
  }

 private:
  void fail(const std::string& key, const std::string& value,
            const std::string& why) {
    errors_.push_back(key + ": bad value '" + value + "', " + why);
  }

  const std::map<std::string, std::string>& kv_;
  std::vector<std::string>& errors_;
  std::set<std::string> used_;
};

}  // namespace

uint64_t ExperimentConfig::seed_for(const std::string& stage) const {
  return mix_seed(seed, stage);
}

std::vector<std::string> ExperimentConfig::all_languages() const {
  std::vector<std::string> langs = source_languages;
  langs.insert(langs.end(), target_languages.begin(), target_languages.end());
  return langs;
}

std::string ExperimentConfig::treebank_path(const std::string& language) const {
  auto it = treebank_paths.find(language);
  if (it == treebank_paths.end())
    throw io_error("no treebank path configured for language '" + language + "'");
  return it->second;
}

std::string ExperimentConfig::echo() const {
  std::ostringstream os;
  os << artifact_header("config", 1) << "\n";
  os << "source_languages = " << join(source_languages, ",") << "\n";
  os << "target_languages = " << join(target_languages, ",") << "\n";
  for (const auto& [lang, path] : treebank_paths)
    os << "treebank." << lang << " = " << path << "\n";
  os << "lang_vectors = " << lang_vectors_path << "\n";
  os << "out_dir = " << out_dir << "\n";
  os << "seed = " << seed << "\n";
  os << "jobs = " << jobs << "\n";
  os << "parser_epochs = " << parser_epochs << "\n";
  os << "resample = " << (resample ? "true" : "false") << "\n";
  os << "dev_fraction = " << format_double(dev_fraction) << "\n";
  os << "embed_dim = " << ilps.embed_dim << "\n";
  os << "ffn_dim = " << ilps.ffn_dim << "\n";
  os << "layers = " << ilps.layers << "\n";
  os << "heads = " << ilps.heads << "\n";
  os << "mlp_hidden = " << ilps.mlp_hidden << "\n";
  os << "max_len = " << ilps.max_len << "\n";
  os << "learning_rate = " << format_double(ilps.lr) << "\n";
  os << "beta1 = " << format_double(ilps.beta1) << "\n";
  os << "beta2 = " << format_double(ilps.beta2) << "\n";
  os << "adam_eps = " << format_double(ilps.adam_eps) << "\n";
  os << "batch_size = " << ilps.batch_size << "\n";
  os << "mlm_batch_size = " << ilps.mlm_batch_size << "\n";
  os << "eval_every = " << ilps.eval_every << "\n";
  os << "patience = " << ilps.patience << "\n";
  os << "mlm_steps = " << mlm_steps << "\n";
  os << "max_epochs = " << max_epochs << "\n";
  os << "tau = " << format_double(tau) << "\n";
  os << "kl_alpha = " << format_double(kl_alpha) << "\n";
  os << "include_punct = " << (include_punct ? "true" : "false") << "\n";
  os << "reference_system = " << reference_system << "\n";
  os << "significance_alpha = " << format_double(significance_alpha) << "\n";
  return os.str();
}

ExperimentConfig load_config(const std::string& path) {
  return parse_config(read_kv_file(path), dirname_of(path));
}

ExperimentConfig parse_config(const std::map<std::string, std::string>& kv,
                              const std::string& base_dir) {
  ExperimentConfig cfg;
  std::vector<std::string> errors;
  Reader r(kv, errors);

  cfg.source_languages = r.languages("source_languages");
  cfg.target_languages = r.languages("target_languages");
  if (cfg.source_languages.size() < 2)
    errors.push_back("source_languages: need at least two source languages");

  std::set<std::string> seen;
  for (const auto& lang : cfg.all_languages()) {
    if (!seen.insert(lang).second)
      errors.push_back("language '" + lang + "' listed more than once");
    const std::string key = "treebank." + lang;
    if (const std::string* path = r.raw(key)) {
      const std::string full = resolve(base_dir, *path);
      if (!file_exists(full))
        errors.push_back(key + ": file not found: " + full);
      cfg.treebank_paths[lang] = full;
    } else {
      errors.push_back(key + ": required key is missing");
    }
  }

  if (const std::string* path = r.raw("lang_vectors")) {
    cfg.lang_vectors_path = resolve(base_dir, *path);
    if (!file_exists(cfg.lang_vectors_path))
      errors.push_back("lang_vectors: file not found: " + cfg.lang_vectors_path);
  } else {
    errors.push_back("lang_vectors: required key is missing");
  }

  r.get("out_dir", cfg.out_dir);
  cfg.out_dir = resolve(base_dir, cfg.out_dir);
  r.get("seed", cfg.seed);
  r.get("jobs", cfg.jobs, 1, 1024);
  r.get("parser_epochs", cfg.parser_epochs, 1, 1000);
  r.get("resample", cfg.resample);
  r.get("dev_fraction", cfg.dev_fraction, 1e-6, 0.999999);
  r.get("embed_dim", cfg.ilps.embed_dim, 2, 4096);
  r.get("ffn_dim", cfg.ilps.ffn_dim, 1, 16384);
  r.get("layers", cfg.ilps.layers, 1, 64);
  r.get("heads", cfg.ilps.heads, 1, 64);
  r.get("mlp_hidden", cfg.ilps.mlp_hidden, 1, 16384);
  r.get("max_len", cfg.ilps.max_len, 2, 8192);
  r.get("learning_rate", cfg.ilps.lr, 1e-12, 10.0);
  r.get("beta1", cfg.ilps.beta1, 0.0, 0.999999);
  r.get("beta2", cfg.ilps.beta2, 0.0, 0.999999);
  r.get("adam_eps", cfg.ilps.adam_eps, 1e-16, 1.0);
  r.get("batch_size", cfg.ilps.batch_size, 1, 65536);
  r.get("mlm_batch_size", cfg.ilps.mlm_batch_size, 1, 65536);
  r.get("eval_every", cfg.ilps.eval_every, 1, 1000000);
  r.get("patience", cfg.ilps.patience, 1, 1000);
  r.get("mlm_steps", cfg.mlm_steps, 0, 10000000);
  r.get("max_epochs", cfg.max_epochs, 1, 100000);
  r.get("tau", cfg.tau, 0.0, 1.0);
  r.get("kl_alpha", cfg.kl_alpha, 1e-12, 1000.0);
  r.get("include_punct", cfg.include_punct);
  r.get("reference_system", cfg.reference_system);
  r.get("significance_alpha", cfg.significance_alpha, 1e-12, 0.999999);

  if (cfg.ilps.embed_dim % cfg.ilps.heads != 0)
    errors.push_back("embed_dim must be divisible by heads");

  r.check_unknown();

  if (!errors.empty())
    throw io_error("configuration invalid:\n  " + join(errors, "\n  "));
  return cfg;
}

}  // namespace parsel
