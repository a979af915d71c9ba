#include "parsel/parser.h"

#include <algorithm>
#include <fstream>
#include <random>

#include "parsel/arborescence.h"
#include "parsel/io_util.h"

namespace parsel {

namespace {

const char* kModelMagic = "PARSELSP";
constexpr uint32_t kModelVersion = 1;

std::string distance_bin(int head, int dep) {
  int delta = dep - head;
  int mag = delta < 0 ? -delta : delta;
  std::string bin;
  if (mag <= 5) {
    bin = std::to_string(mag);
  } else if (mag <= 10) {
    bin = "6:10";
  } else {
    bin = ">10";
  }
  return (delta < 0 ? "-" : "+") + bin;
}

const std::string& tag_at(const Sentence& s, int pos, const std::string& root,
                          const std::string& boundary) {
  if (pos == 0) return root;
  if (pos < 1 || pos > static_cast<int>(s.tokens.size())) return boundary;
  return s.tokens[static_cast<size_t>(pos - 1)].upos;
}

}  // namespace

bool ArcFeatureVector::contains(uint64_t id) const {
  for (const auto& it : items) {
    if (it.first == id) return true;
  }
  return false;
}

uint64_t feature_id(const std::string& feature) { return fnv1a64(feature); }

ArcFeatureVector extract_arc_features(const Sentence& s, int head, int dep) {
  const int n = static_cast<int>(s.tokens.size());
  require(n > 0, "extract_arc_features: empty sentence");
  require(dep >= 1 && dep <= n, "extract_arc_features: dep out of range");
  require(head >= 0 && head <= n, "extract_arc_features: head out of range");
  require(head != dep, "extract_arc_features: self-arc");

  static const std::string kRoot = "ROOT";
  static const std::string kBoundary = "_B_";

  const std::string& hp = tag_at(s, head, kRoot, kBoundary);
  const std::string& dp = tag_at(s, dep, kRoot, kBoundary);
  const std::string& hprev = tag_at(s, head - 1, kRoot, kBoundary);
  const std::string& hnext = tag_at(s, head + 1, kRoot, kBoundary);
  const std::string& dprev = tag_at(s, dep - 1, kRoot, kBoundary);
  const std::string& dnext = tag_at(s, dep + 1, kRoot, kBoundary);
  const std::string dist = distance_bin(head, dep);
  const std::string pair = hp + "|" + dp;

  std::vector<uint64_t> ids;
  ids.reserve(12);
  ids.push_back(fnv1a64("hpos=" + hp));
  ids.push_back(fnv1a64("dpos=" + dp));
  ids.push_back(fnv1a64("hpos|dpos=" + pair));
  ids.push_back(fnv1a64("dist=" + dist));
  ids.push_back(fnv1a64("hpos-1=" + hprev));
  ids.push_back(fnv1a64("hpos+1=" + hnext));
  ids.push_back(fnv1a64("dpos-1=" + dprev));
  ids.push_back(fnv1a64("dpos+1=" + dnext));
  ids.push_back(fnv1a64("hpos|dpos|dist=" + pair + "|" + dist));
  ids.push_back(fnv1a64("hpos|dpos|hpos-1=" + pair + "|" + hprev));
  ids.push_back(fnv1a64("hpos|dpos|dnext=" + pair + "|" + dnext));
  ids.push_back(fnv1a64("dpos|dist=" + dp + "|" + dist));

  std::sort(ids.begin(), ids.end());
  ArcFeatureVector fv;
  fv.items.reserve(ids.size());
  for (uint64_t id : ids) {
    if (!fv.items.empty() && fv.items.back().first == id) {
      fv.items.back().second += 1;
    } else {
      fv.items.emplace_back(id, 1);
    }
  }
  return fv;
}

namespace {

double dot(const std::unordered_map<uint64_t, double>& w,
           const ArcFeatureVector& fv) {
  double s = 0.0;
  for (const auto& it : fv.items) {
    auto found = w.find(it.first);
    if (found != w.end()) s += found->second * it.second;
  }
  return s;
}

// All arc feature vectors of one sentence, indexed [head][dep].
struct SentenceFeatures {
  int n = 0;
  std::vector<ArcFeatureVector> arcs;  // (n+1) * (n+1), dep 0 unused

  const ArcFeatureVector& at(int head, int dep) const {
    return arcs[static_cast<size_t>(head) * (n + 1) + dep];
  }
};

SentenceFeatures featurize(const Sentence& s) {
  SentenceFeatures sf;
  sf.n = static_cast<int>(s.tokens.size());
  sf.arcs.resize(static_cast<size_t>(sf.n + 1) * (sf.n + 1));
  for (int h = 0; h <= sf.n; ++h) {
    for (int d = 1; d <= sf.n; ++d) {
      if (h == d) continue;
      sf.arcs[static_cast<size_t>(h) * (sf.n + 1) + d] =
          extract_arc_features(s, h, d);
    }
  }
  return sf;
}

std::vector<int> decode(const std::unordered_map<uint64_t, double>& w,
                        const SentenceFeatures& sf) {
  const int n = sf.n;
  std::vector<std::vector<double>> score(
      static_cast<size_t>(n + 1), std::vector<double>(n + 1, kNoArc));
  for (int h = 0; h <= n; ++h) {
    for (int d = 1; d <= n; ++d) {
      if (h == d) continue;
      score[h][d] = dot(w, sf.at(h, d));
    }
  }
  return max_arborescence(score);
}

void bump(std::unordered_map<uint64_t, double>& w,
          std::unordered_map<uint64_t, double>& u, const ArcFeatureVector& fv,
          double delta, double c) {
  for (const auto& it : fv.items) {
    w[it.first] += delta * it.second;
    u[it.first] += c * delta * it.second;
  }
}

}  // namespace

SourceParserModel train_parser(const Treebank& tb, int epochs, uint64_t seed) {
  require(!tb.sentences.empty(), "train_parser: empty treebank");
  require(epochs >= 1, "train_parser: epochs must be >= 1");

  std::vector<SentenceFeatures> features;
  features.reserve(tb.sentences.size());
  for (const auto& s : tb.sentences) features.push_back(featurize(s));

  SourceParserModel model;
  model.language = tb.language;
  model.epochs_trained = epochs;

  std::unordered_map<uint64_t, double> w;
  std::unordered_map<uint64_t, double> u;  // c-weighted update sum
  double c = 1.0;

  std::vector<size_t> order(tb.sentences.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);

  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t idx : order) {
      const Sentence& sent = tb.sentences[idx];
      const SentenceFeatures& sf = features[idx];
      std::vector<int> pred = decode(w, sf);
      const std::vector<int> gold = sent.heads();
      for (int d = 1; d <= sf.n; ++d) {
        if (pred[d - 1] == gold[d - 1]) continue;
        bump(w, u, sf.at(gold[d - 1], d), +1.0, c);
        bump(w, u, sf.at(pred[d - 1], d), -1.0, c);
      }
      c += 1.0;
    }
  }

  model.weights = w;
  model.averaged_weights = w;
  for (auto& it : model.averaged_weights) {
    auto found = u.find(it.first);
    if (found != u.end()) it.second -= found->second / c;
  }
  return model;
}

std::vector<std::vector<double>> score_arcs(
    const std::unordered_map<uint64_t, double>& weights, const Sentence& s) {
  const int n = static_cast<int>(s.tokens.size());
  require(n > 0, "score_arcs: empty sentence");
  std::vector<std::vector<double>> score(
      static_cast<size_t>(n + 1), std::vector<double>(n + 1, kNoArc));
  for (int h = 0; h <= n; ++h) {
    for (int d = 1; d <= n; ++d) {
      if (h == d) continue;
      score[h][d] = dot(weights, extract_arc_features(s, h, d));
    }
  }
  return score;
}

std::vector<int> parse(const SourceParserModel& model, const Sentence& s) {
  return max_arborescence(score_arcs(model.averaged_weights, s));
}

void save_parser_model(const SourceParserModel& model,
                       const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  out.write(kModelMagic, 8);
  write_u32(out, kModelVersion);
  write_string(out, model.language);
  write_u32(out, static_cast<uint32_t>(model.epochs_trained));

  std::vector<uint64_t> ids;
  ids.reserve(model.weights.size() + model.averaged_weights.size());
  for (const auto& it : model.weights) ids.push_back(it.first);
  for (const auto& it : model.averaged_weights) ids.push_back(it.first);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  write_u64(out, ids.size());
  for (uint64_t id : ids) {
    auto wv = model.weights.find(id);
    auto av = model.averaged_weights.find(id);
    write_u64(out, id);
    write_f64(out, wv == model.weights.end() ? 0.0 : wv->second);
    write_f64(out, av == model.averaged_weights.end() ? 0.0 : av->second);
  }
  if (!out) throw io_error("short write to " + path);
}

SourceParserModel load_parser_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot read " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string(magic, 8) != kModelMagic) {
    throw io_error(path + ": not a parser model file");
  }
  uint32_t version = read_u32(in);
  if (version != kModelVersion) {
    throw io_error(path + ": unsupported model version " +
                   std::to_string(version));
  }
  SourceParserModel model;
  model.language = read_string(in);
  model.epochs_trained = static_cast<int>(read_u32(in));
  uint64_t count = read_u64(in);
  model.weights.reserve(count);
  model.averaged_weights.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    uint64_t id = read_u64(in);
    double wv = read_f64(in);
    double av = read_f64(in);
    model.weights[id] = wv;
    model.averaged_weights[id] = av;
  }
  if (!in) throw io_error(path + ": truncated model file");
  return model;
}

}  // namespace parsel
